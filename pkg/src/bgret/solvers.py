"""Iterative reconstruction methods.

Five methods share one loop skeleton:

* PGD      z^p = P_B(z^{p-1} - lam*(z^{p-1} - P_A(z^{p-1}))); lam=1 is P_B.P_A.
* BDR      with ztilde = P_A(z^{p-1}): keep ztilde on the support, and update
           the background coordinates as z - ztilde + y. For beta=1 this is
           the operator (R_B R_A + I)/2 applied to z^{p-1}.
* BDR1     the beta-damped background update z - beta*(ztilde - y); noise
           mode, background-consistent fixed points for every beta.
* CBDR     same coordinate update with the convex ball projection replacing
           the magnitude equality; a two-branch driver pins the DC sign for
           real signals and keeps the branch with the smaller measurement
           error.
* HIO      classic hybrid input-output on a bare support (no background
           values): inside the support take the magnitude-projection output,
           outside z - beta*P_A(z).

Every run starts from the deterministic spectral initializer
z0 = P_B((1/prod m) * DFT(b^{1/2})) unless an explicit start is supplied, and
stops when the iterate moves by at most eps in l2 norm or the iteration cap is
reached. Non-finite iterates abort with a diagnostic rather than being
clamped, so traces stay honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .metrics import measurement_error, relative_error
from .model import (IntensityMeasurements, Method, SolverConfig, SolverRun,
                    SupportMask, _readonly)
from .projections import (MagnitudeTarget, project_background,
                          project_magnitude, project_magnitude_ball)


class DivergenceError(RuntimeError):
    """Iterate turned non-finite: divergence or corrupt input data."""


@dataclass(frozen=True)
class IterationState:
    """One solver iterate z^p with its step number and last step norm."""

    z: np.ndarray
    iter: int
    last_step_norm: float

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise DivergenceError(f"non-finite iterate at step {self.iter}")
        if not (self.last_step_norm >= 0 or math.isinf(self.last_step_norm)):
            raise ValueError("last_step_norm must be nonnegative")
        object.__setattr__(self, "z", _readonly(z, float))


def _advance(state: IterationState, z_new: np.ndarray) -> IterationState:
    step = float(np.linalg.norm((z_new - state.z).reshape(-1)))
    return IterationState(z_new, state.iter + 1, step)


def _crop(a: np.ndarray, shape) -> np.ndarray:
    if a.shape == tuple(shape):
        return a
    return a[tuple(slice(0, s) for s in shape)].copy()


def _init_from_root(root: np.ndarray, background: np.ndarray,
                    mask: SupportMask) -> IterationState:
    z_full = np.fft.fftn(root).real / root.size
    z0 = project_background(_crop(z_full, mask.shape), background, mask)
    return IterationState(z0, 0, math.inf)


def init_spectral(b: IntensityMeasurements, background: np.ndarray,
                  mask: SupportMask) -> IterationState:
    """Deterministic start z0 = P_B((1/prod m) * DFT(b^{1/2}))."""
    return _init_from_root(b.root, background, mask)


def pgd_step(state: IterationState, target: MagnitudeTarget, background: np.ndarray,
             mask: SupportMask, lam: float = 1.0) -> IterationState:
    """Projected gradient step; the subgradient of the magnitude objective is
    z - P_A(z), so lam=1 reduces to the alternating projection P_B(P_A(z))."""
    if not lam > 0:
        raise ValueError("learning rate must be positive")
    z = state.z
    ztilde = project_magnitude(z, target)
    if lam == 1.0:
        z_new = project_background(ztilde, background, mask)
    else:
        z_new = project_background(z - lam * (z - ztilde), background, mask)
    return _advance(state, z_new)


def _dr_update(z: np.ndarray, ztilde: np.ndarray, background: np.ndarray,
               mask: SupportMask, beta: float) -> np.ndarray:
    # beta damps the background correction; fixed points keep ztilde = y off
    # the support for every beta in (0, 1], and beta = 1 is z - ztilde + y.
    return np.where(mask.inside, ztilde, z - beta * (ztilde - background))


def bdr_step(state: IterationState, target: MagnitudeTarget, background: np.ndarray,
             mask: SupportMask, beta: float = 1.0) -> IterationState:
    """Background Douglas-Rachford step (beta=1); beta<1 is the relaxed BDR1."""
    if not (0.0 < beta <= 1.0):
        raise ValueError("beta must lie in (0, 1]")
    ztilde = project_magnitude(state.z, target)
    return _advance(state, _dr_update(state.z, ztilde, background, mask, beta))


def cbdr_step(state: IterationState, target: MagnitudeTarget, background: np.ndarray,
              mask: SupportMask) -> IterationState:
    """BDR coordinate update with the convex ball projection."""
    ztilde = project_magnitude_ball(state.z, target)
    return _advance(state, _dr_update(state.z, ztilde, background, mask, 1.0))


def hio_step(state: IterationState, target: MagnitudeTarget, mask: SupportMask,
             beta: float = 0.9) -> IterationState:
    ztilde = project_magnitude(state.z, target)
    z_new = np.where(mask.inside, ztilde, state.z - beta * ztilde)
    return _advance(state, z_new)


def magnitude_objective(z, target: MagnitudeTarget) -> float:
    """(1/(2m)) * sum_i (|DFT(z)_i| - b_i^{1/2})^2, the PGD objective."""
    z = np.asarray(z, dtype=float)
    zhat = np.fft.fftn(z, s=target.shape, axes=tuple(range(z.ndim)))
    diff = np.abs(zhat) - target.root_intensity
    return 0.5 * float(np.sum(diff * diff)) / target.root_intensity.size


def _trace_row(z: np.ndarray, mask: SupportMask, background: np.ndarray,
               b: IntensityMeasurements, x_true) -> tuple[float, float]:
    x_hat = z[mask.inside]
    rel = math.nan if x_true is None else relative_error(x_hat, x_true)
    return rel, measurement_error(x_hat, background, mask, b)


def _iterate(b: IntensityMeasurements, target: MagnitudeTarget, background: np.ndarray,
             mask: SupportMask, config: SolverConfig, step: Callable,
             final_projector: Optional[Callable], x_true=None, z0=None) -> SolverRun:
    if z0 is not None:
        state = IterationState(np.asarray(z0, dtype=float), 0, math.inf)
    else:
        state = _init_from_root(target.root_intensity, background, mask)
    xt = None if x_true is None else np.asarray(x_true, dtype=float).reshape(-1)

    trace = []
    converged = False
    for _ in range(config.max_iter):
        state = step(state)
        trace.append(_trace_row(state.z, mask, background, b, xt))
        if state.last_step_norm <= config.eps:
            converged = True
            break

    if final_projector is None:
        final = state.z[mask.inside]
    else:
        final = final_projector(state.z)[mask.inside]
    return SolverRun(final, len(trace), np.asarray(trace, dtype=float).reshape(-1, 2),
                     converged)


def run(b: IntensityMeasurements, background: np.ndarray, mask: SupportMask,
        config: SolverConfig, x_true=None, z0=None) -> SolverRun:
    """Run config.method to the stopping rule ||z^p - z^{p-1}|| <= eps or the
    iteration cap; the returned estimate is the support part of the final
    magnitude-projection output (constraint-feasible at fixed points), except
    for PGD whose iterate is already background-feasible."""
    method = config.method
    if method is Method.HIO:
        return hio_run(b, mask, config, x_true=x_true, z0=z0)

    if method is Method.CBDR:
        target = MagnitudeTarget.ball(b)
        step = lambda s: cbdr_step(s, target, background, mask)
        final = lambda z: project_magnitude_ball(z, target)
    elif method is Method.PGD:
        target = MagnitudeTarget.equality(b)
        step = lambda s: pgd_step(s, target, background, mask, config.lam)
        final = None
    elif method in (Method.BDR, Method.BDR1):
        target = MagnitudeTarget.equality(b)
        beta = 1.0 if method is Method.BDR else config.beta
        step = lambda s: bdr_step(s, target, background, mask, beta)
        final = lambda z: project_magnitude(z, target)
    else:  # pragma: no cover - Method is exhaustive
        raise ValueError(f"unhandled method {method}")
    return _iterate(b, target, background, mask, config, step, final,
                    x_true=x_true, z0=z0)


def cbdr_parallel_real(b: IntensityMeasurements, background: np.ndarray,
                       mask: SupportMask, config: SolverConfig,
                       x_true=None, z0=None) -> SolverRun:
    """Run CBDR twice with the DC coefficient pinned to +sqrt(b_1) and
    -sqrt(b_1); return the branch with the smaller measurement error (ties go
    to the + branch)."""
    branches = []
    errors = []
    for sign in (1, -1):
        target = MagnitudeTarget.ball(b, dc_sign=sign)
        step = lambda s, t=target: cbdr_step(s, t, background, mask)
        final = lambda z, t=target: project_magnitude_ball(z, t)
        result = _iterate(b, target, background, mask, config, step, final,
                          x_true=x_true, z0=z0)
        branches.append(result)
        errors.append(measurement_error(result.final_estimate, background, mask, b))
    return branches[0] if errors[0] <= errors[1] else branches[1]


def hio_run(b: IntensityMeasurements, mask: SupportMask, config: SolverConfig,
            x_true=None, z0=None) -> SolverRun:
    """Fienup HIO on a bare support constraint (no background values)."""
    target = MagnitudeTarget.equality(b)
    zeros = np.zeros(mask.shape)
    step = lambda s: hio_step(s, target, mask, config.beta)
    final = lambda z: project_magnitude(z, target)
    if z0 is None:
        z0 = _crop(np.fft.fftn(target.root_intensity).real / target.root_intensity.size,
                   mask.shape)
    return _iterate(b, target, zeros, mask, config, step, final,
                    x_true=x_true, z0=z0)
