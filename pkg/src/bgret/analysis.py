"""Executable theory: non-overlap shift enumeration, the linear system
M vec(X) = R3 extracted from the autocorrelation, least-squares recovery and
uniqueness certificates, stability/robustness constants, the partial
circulant L/L1 machinery and empirical checks of its restricted-isometry
expectation identity.

Shift bookkeeping
-----------------
A shift l is usable when the support and its circular translate by l do not
overlap; then R[l] carries only sample-background cross terms (linear in the
sample) plus known background-background products. R[l] = R[-l] exactly, so
mirrored shifts duplicate each other; the lexicographically smaller one is
retained, carrying the summed pair of equations (rows and right-hand sides
doubled), while self-mirrored shifts (2l = 0 mod m) are kept single.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .model import SupportMask, _readonly
from .spectral import Autocorrelation

#: Singular values below this fraction of the largest are treated as zero.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class LinearSystem:
    """Coefficient matrix M (rows x |Omega|), right-hand side R3, and the
    retained shift per row; grid_shape is the measurement grid."""

    M: np.ndarray
    rhs: np.ndarray
    shifts: tuple[tuple[int, ...], ...]
    grid_shape: tuple[int, ...]

    def __post_init__(self):
        M = np.asarray(self.M, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        if M.ndim != 2 or M.shape[0] != rhs.size or M.shape[0] != len(self.shifts):
            raise ValueError("rows of M, rhs and shifts must correspond one-to-one")
        object.__setattr__(self, "M", _readonly(M, float))
        object.__setattr__(self, "rhs", _readonly(rhs, float))

    @property
    def rows(self) -> int:
        return self.M.shape[0]

    @property
    def unknowns(self) -> int:
        return self.M.shape[1]

    @property
    def grid_size(self) -> int:
        return int(np.prod(self.grid_shape))


@dataclass(frozen=True)
class StabilityConstants:
    """delta1 = sigma_max((M^T M)^{-1}), delta2 = sigma_max(M), and the
    stability certificate factor delta1*delta2/(m1*m2)."""

    delta1: float
    delta2: float
    bound_factor: float

    def __post_init__(self):
        if not (self.delta1 > 0 and self.delta2 > 0):
            raise ValueError("stability constants require a full-column-rank M")


@dataclass(frozen=True)
class CirculantPair:
    """L with L[r, c] = z[(r + c) mod m] (column c is the circular shift of z
    by c, L e1 = z) and L1, its last k rows."""

    L: np.ndarray
    L1: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        m = L.shape[0]
        if L.shape != (m, m):
            raise ValueError("L must be square")
        z = L[:, 0]
        idx = (np.arange(m)[:, None] + np.arange(m)[None, :]) % m
        if not np.array_equal(L, z[idx]):
            raise ValueError("L rows are not circular permutations of z")
        k = np.asarray(self.L1).shape[0]
        if not np.array_equal(np.asarray(self.L1), L[m - k:, :]):
            raise ValueError("L1 must be the last k rows of L")
        object.__setattr__(self, "L", _readonly(L, float))
        object.__setattr__(self, "L1", _readonly(self.L1, float))

    @property
    def z(self) -> np.ndarray:
        return self.L[:, 0]


def mirror_shift(shift: Sequence[int], shape: Sequence[int]) -> tuple[int, ...]:
    return tuple((-s) % m for s, m in zip(shift, shape))


def enumerate_nonoverlap_shifts(mask: SupportMask) -> list[tuple[int, ...]]:
    """All nonzero circular shifts l with (Omega + l) disjoint from Omega,
    deduplicated under l <-> -l (the lexicographically smaller is kept)."""
    inside = mask.inside
    shape = inside.shape
    axes = tuple(range(inside.ndim))
    kept = []
    for shift in product(*(range(s) for s in shape)):
        if all(s == 0 for s in shift):
            continue
        if shift > mirror_shift(shift, shape):
            continue
        translated = np.roll(inside, shift, axis=axes)
        if not np.any(inside & translated):
            kept.append(shift)
    return kept


def _cross_coefficients(background: np.ndarray, mask: SupportMask,
                        shift: tuple[int, ...]) -> np.ndarray:
    """Row of X-coefficients for one shift: Y[(q+l) mod m] + Y[(q-l) mod m]."""
    axes = tuple(range(background.ndim))
    forward = np.roll(background, tuple(-s for s in shift), axis=axes)
    backward = np.roll(background, shift, axis=axes)
    return (forward + backward)[mask.inside]


def _background_autocorrelation(background: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(np.abs(np.fft.fftn(background)) ** 2).real


def coefficient_matrix(background: np.ndarray, mask: SupportMask
                       ) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """M alone (no right-hand side); used by the uniqueness certificate."""
    shifts = enumerate_nonoverlap_shifts(mask)
    rows = np.empty((len(shifts), mask.sample_count))
    for i, shift in enumerate(shifts):
        factor = 1.0 if mirror_shift(shift, mask.shape) == shift else 2.0
        rows[i] = factor * _cross_coefficients(background, mask, shift)
    return rows, shifts


def build_linear_system(background: np.ndarray, mask: SupportMask,
                        autocorr: Autocorrelation) -> LinearSystem:
    """Assemble M vec(X) = R3 from the non-overlap shifts.

    Each retained shift (merged with its mirror) contributes the row of
    cross-term coefficients and the right-hand side R[l] + R[-l] minus all
    background-background products, which equal the circular autocorrelation
    of Y at the same lags.
    """
    background = np.asarray(background, dtype=float)
    if background.shape != mask.shape:
        raise ValueError("background shape does not match mask")
    if autocorr.values.shape != mask.shape:
        raise ValueError("autocorrelation shape does not match the object grid")
    M, shifts = coefficient_matrix(background, mask)
    cy = _background_autocorrelation(background)
    rhs = np.empty(len(shifts))
    for i, shift in enumerate(shifts):
        factor = 1.0 if mirror_shift(shift, mask.shape) == shift else 2.0
        rhs[i] = factor * (autocorr.values[shift] - cy[shift])
    return LinearSystem(M, rhs, tuple(shifts), mask.shape)


@dataclass(frozen=True)
class LeastSquaresSolution:
    values: np.ndarray
    rank: int
    unique: bool

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values, float))


def least_squares_recover(system: LinearSystem) -> LeastSquaresSolution:
    """Minimizer of ||M vec(X) - R3||_2 via SVD; a rank-deficient M is not an
    error, the minimum-norm solution is returned flagged as non-unique."""
    if system.rows < system.unknowns:
        raise ValueError(f"need at least {system.unknowns} rows, got {system.rows}")
    solution, _, rank, _ = np.linalg.lstsq(system.M, system.rhs, rcond=RANK_RTOL)
    return LeastSquaresSolution(solution, int(rank), bool(rank == system.unknowns))


@dataclass(frozen=True)
class UniquenessCertificate:
    unique: bool
    rank: int
    required_rank: int


def uniqueness_certificate(background: np.ndarray, mask: SupportMask) -> UniquenessCertificate:
    """Numerical-rank certificate: unique iff rank(M) = |Omega|."""
    M, _ = coefficient_matrix(np.asarray(background, dtype=float), mask)
    required = mask.sample_count
    if M.size == 0:
        return UniquenessCertificate(False, 0, required)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    return UniquenessCertificate(rank == required, rank, required)


@dataclass(frozen=True)
class DimensionBound:
    satisfied: bool
    lhs: int
    rhs: int
    symmetric_factor: float


def dimension_bound(sizes: Sequence[int], backgrounds: Sequence[int]) -> DimensionBound:
    """d-dimensional counting bound prod(n_i+k_i) >= 2 prod(n_i) + prod(2n_i - 1),
    with the symmetric-case threshold factor 2^{(d+1)/d} - 1."""
    n = [int(v) for v in sizes]
    k = [int(v) for v in backgrounds]
    if len(n) != len(k) or not n:
        raise ValueError("sizes and backgrounds must be equal-length and nonempty")
    if any(v < 1 for v in n) or any(v < 0 for v in k):
        raise ValueError("need positive sample sizes and nonnegative backgrounds")
    d = len(n)
    lhs = int(np.prod([ni + ki for ni, ki in zip(n, k)]))
    rhs = int(2 * np.prod(n) + np.prod([2 * ni - 1 for ni in n]))
    return DimensionBound(lhs >= rhs, lhs, rhs, 2.0 ** ((d + 1) / d) - 1.0)


def uniqueness_count_2d(n1: int, n2: int, k1: int, k2: int) -> DimensionBound:
    """The sharper 2-D counting variant (n1+k1)(n2+k2) >= (2n1-1)(3n2-1)+n2."""
    if min(n1, n2) < 1 or min(k1, k2) < 0:
        raise ValueError("need positive sample sizes and nonnegative backgrounds")
    lhs = (n1 + k1) * (n2 + k2)
    rhs = (2 * n1 - 1) * (3 * n2 - 1) + n2
    return DimensionBound(lhs >= rhs, lhs, rhs, math.sqrt(6) - 1.0)


def stability_constants(system: LinearSystem) -> StabilityConstants:
    s = np.linalg.svd(system.M, compute_uv=False)
    if system.rows < system.unknowns or s[-1] <= RANK_RTOL * s[0]:
        raise ValueError("M is rank deficient; stability constants undefined")
    sigma_min = float(s[system.unknowns - 1])
    delta1 = 1.0 / (sigma_min * sigma_min)
    delta2 = float(s[0])
    return StabilityConstants(delta1, delta2, delta1 * delta2 / system.grid_size)


def robustness_bound(system_corrupted: LinearSystem, c1: float, c2: float,
                     intensity_tilde, background_tilde) -> float:
    """Upper-bound certificate for ||X* - X||_F under bounded noise
    |eps_1| <= c1 on the intensities and |eps_2| <= c2 on the background.

    Evaluated from the proof chain: delta1*delta2 times the sum of the
    right-hand-side perturbation bound c1 + c2*(2||vec(Y~)||_1 + c2*m1*m2)
    and the coupling term ||M - M~|| * ||vec(X)||, which works out to
    2*c2*sqrt(n1*n2*(||vec(I~)||_1 + c1*m1*m2)). With c2 = 0 the bound
    collapses to c1*delta1*delta2.
    """
    if c1 < 0 or c2 < 0:
        raise ValueError("noise levels must be nonnegative")
    consts = stability_constants(system_corrupted)
    i_values = getattr(intensity_tilde, "values", intensity_tilde)
    i_l1 = float(np.sum(np.abs(np.asarray(i_values, dtype=float))))
    y_l1 = float(np.sum(np.abs(np.asarray(background_tilde, dtype=float))))
    grid = system_corrupted.grid_size
    unknowns = system_corrupted.unknowns
    rhs_term = c1 + c2 * (2.0 * y_l1 + c2 * grid)
    coupling = 2.0 * c2 * math.sqrt(unknowns * (i_l1 + c1 * grid))
    return consts.delta1 * consts.delta2 * (rhs_term + coupling)


def build_circulant(z, num_sample: int) -> CirculantPair:
    """The (n+k)x(n+k) matrix of circular shifts of z as displayed in the
    convex analysis, and its last-k-rows partial circulant L1."""
    z = np.asarray(z, dtype=float).reshape(-1)
    m = z.size
    if not (1 <= num_sample < m):
        raise ValueError("need 1 <= n < n + k")
    idx = (np.arange(m)[:, None] + np.arange(m)[None, :]) % m
    L = z[idx]
    return CirculantPair(L, L[num_sample:, :])


def circulant_apply(z, h) -> np.ndarray:
    """FFT fast path for L @ h: the circular correlation
    IDFT(DFT(z) * conj(DFT(h))), exact for the row convention of L."""
    z = np.asarray(z, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    if z.shape != h.shape:
        raise ValueError("z and h must share length")
    return np.fft.ifft(np.fft.fft(z) * np.conj(np.fft.fft(h))).real


def l_nonsingular_check(x, y_draws: Iterable, cond_limit: float = 1e12) -> float:
    """Fraction of background draws for which L = circ([x; y]) is numerically
    nonsingular (2-norm condition below cond_limit)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    total = 0
    good = 0
    for y in y_draws:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size < 1:
            raise ValueError("background draws must be nonempty")
        pair = build_circulant(np.concatenate([x, y]), x.size)
        total += 1
        if np.linalg.cond(pair.L) < cond_limit:
            good += 1
    if total == 0:
        raise ValueError("no background draws supplied")
    return good / total


C2_RADIUS = 2.0


def in_c2(h, tol: float = 1e-9) -> bool:
    """Membership in C2 = {h : |DFT(h)_i| <= 2 for all i}."""
    h = np.asarray(h, dtype=float).reshape(-1)
    return bool(np.max(np.abs(np.fft.fft(h))) <= C2_RADIUS + tol)


def sample_c2(size: int, seed: int) -> np.ndarray:
    """Draw a random real vector and clamp its spectrum radially to magnitude
    at most 2 (conjugate symmetry is preserved by the radial clamp)."""
    rng = np.random.default_rng(seed)
    h0 = rng.standard_normal(size) * (C2_RADIUS / math.sqrt(size))
    hhat = np.fft.fft(h0)
    mag = np.abs(hhat)
    scale = np.divide(C2_RADIUS, mag, out=np.ones_like(mag), where=mag > 0)
    return np.fft.ifft(hhat * np.minimum(1.0, scale)).real


@dataclass(frozen=True)
class FripReport:
    empirical_mean: float
    predicted: float
    stderr: float
    c1: float
    phi_term: float
    num_draws: int

    @property
    def deviation(self) -> float:
        return abs(self.empirical_mean - self.predicted)

    @property
    def within(self) -> bool:
        return self.deviation <= 3.0 * self.stderr


def frip_partial_rows(x, h) -> tuple[np.ndarray, np.ndarray]:
    """Split L1 @ h into its deterministic part a (from the sample) and the
    matrix G with L1 @ h = a + G @ y for any background y."""
    x = np.asarray(x, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    m = h.size
    n = x.size
    if not (1 <= n < m):
        raise ValueError("need 1 <= n < n + k")
    rows = np.arange(n, m)
    a = h[(np.arange(n)[None, :] - rows[:, None]) % m] @ x
    G = h[((np.arange(n, m)[None, :]) - rows[:, None]) % m]
    return a, G


def frip_expectation_check(x, h, num_draws: int, seed: int) -> FripReport:
    """Monte Carlo check of the expectation identity
    E[(1/k) ||L1 h||^2] = c1(h) ||h||^2 + ||Phi h||^2 over Gaussian backgrounds.

    c1(h) is the direct double sum (1/(k||h||^2)) sum_{l,i in bg} |h_{l-i}|^2
    with circular indexing, and Phi h is the deterministic block of
    (1/sqrt(k)) L1, i.e. the sample-only circular correlation restricted to
    the background rows.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    h = np.asarray(h, dtype=float).reshape(-1)
    if not in_c2(h):
        raise ValueError("h is not in C2 (spectral magnitude exceeds 2)")
    if num_draws < 2:
        raise ValueError("need at least two draws for a standard error")
    m = h.size
    n = x.size
    k = m - n

    bg = np.arange(n, m)
    h_sq = h * h
    double_sum = float(np.sum(h_sq[(bg[:, None] - bg[None, :]) % m]))
    h_norm_sq = float(np.sum(h_sq))
    c1 = double_sum / (k * h_norm_sq) if h_norm_sq > 0 else math.nan

    a, G = frip_partial_rows(x, h)
    phi_term = float(np.sum(a * a)) / k
    predicted = double_sum / k + phi_term

    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((k, num_draws))
    values = a[:, None] + G @ draws
    samples = np.sum(values * values, axis=0) / k
    empirical = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1)) / math.sqrt(num_draws)
    return FripReport(empirical, predicted, stderr, c1, phi_term, num_draws)
