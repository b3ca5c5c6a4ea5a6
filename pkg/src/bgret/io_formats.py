"""Deterministic serialization: signal CSVs, ASCII PGM / CSV images,
experiment configs, result tables and run manifests.

All writers are deterministic given identical inputs: fixed field order and
17-significant-digit float text (binary64 round-trip). Every result file gets
a sidecar manifest recording the config echo, software version, seed and
input digests; re-running with an identical manifest reproduces the result
files byte-for-byte apart from timestamps.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .model import Method


class DataFormatError(ValueError):
    """Malformed input file or configuration."""


def format_float(x: float) -> str:
    """17 significant digits; exact binary64 round-trip."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


# -- signals ----------------------------------------------------------------

def read_signal_csv(path) -> np.ndarray:
    """One numeric value per line; '#' comment lines and blanks ignored."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise DataFormatError(f"{path}: malformed numeric value at line {lineno}: {line!r}")
    if not values:
        raise DataFormatError(f"{path}: no numeric values found")
    return np.asarray(values, dtype=float)


def write_signal_csv(path, values) -> None:
    values = np.asarray(values, dtype=float).reshape(-1)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in values:
            fh.write(format_float(v) + "\n")


# -- images ------------------------------------------------------------------

def _read_pgm(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        tokens = []
        for raw in fh:
            line = raw.split("#", 1)[0]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P2":
        raise DataFormatError(f"{path}: not an ASCII PGM (P2) file")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
        pixels = [int(t) for t in tokens[4:]]
    except ValueError:
        raise DataFormatError(f"{path}: bad PGM header or pixel data")
    if maxval <= 0 or width <= 0 or height <= 0:
        raise DataFormatError(f"{path}: bad PGM header")
    if len(pixels) != width * height:
        raise DataFormatError(f"{path}: expected {width * height} pixels, got {len(pixels)}")
    img = np.asarray(pixels, dtype=float).reshape(height, width)
    return img / maxval


def _read_csv_matrix(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError:
                raise DataFormatError(f"{path}: malformed numeric value at row {lineno}")
            if rows and len(row) != len(rows[0]):
                raise DataFormatError(f"{path}: ragged row {lineno} "
                                      f"({len(row)} values, expected {len(rows[0])})")
            rows.append(row)
    if not rows:
        raise DataFormatError(f"{path}: empty matrix")
    return np.asarray(rows, dtype=float)


def read_image(path) -> np.ndarray:
    """ASCII PGM (values normalized to [0,1]) or CSV matrix (read verbatim),
    dispatched on extension."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".csv":
        return _read_csv_matrix(path)
    raise DataFormatError(f"{path}: unsupported image extension {suffix!r} (use .pgm or .csv)")


def write_image(path, img) -> None:
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise DataFormatError("images must be 2-D")
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        quantized = np.clip(np.rint(np.clip(img, 0.0, 1.0) * 255), 0, 255).astype(int)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(f"P2\n{img.shape[1]} {img.shape[0]}\n255\n")
            for row in quantized:
                fh.write(" ".join(str(v) for v in row) + "\n")
    elif suffix == ".csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in img:
                fh.write(",".join(format_float(v) for v in row) + "\n")
    else:
        raise DataFormatError(f"{path}: unsupported image extension {suffix!r}")


# -- experiment configuration -------------------------------------------------

_CONFIG_DEFAULTS = {
    "eps": 1e-12,
    "max_iter": 300,
    "beta": 0.9,
    "lambda": 1.0,
    "noise_sigma": 0.0,
    "signal_type": 1,
}

_CONFIG_KEYS = {"method", "n", "n1", "n2", "k_ratio", "k1", "k2", "trials", "seed",
                "eps", "max_iter", "beta", "lambda", "noise_sigma", "signal_type",
                "paths"}


@dataclass(frozen=True)
class ExperimentConfig:
    method: Method
    n: tuple[int, ...]
    trials: int
    seed: int
    k_ratio: Optional[float] = None
    k: Optional[tuple[int, ...]] = None
    eps: float = 1e-12
    max_iter: int = 300
    beta: float = 0.9
    lam: float = 1.0
    noise_sigma: float = 0.0
    signal_type: int = 1
    paths: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k_ratio is None and self.k is None:
            raise DataFormatError("config needs k_ratio or explicit k1/k2")
        if self.trials < 1:
            raise DataFormatError("trials must be at least 1")
        if self.noise_sigma < 0:
            raise DataFormatError("noise_sigma must be nonnegative")
        if self.signal_type not in (1, 2, 3):
            raise DataFormatError("signal_type must be 1, 2 or 3")

    def background_sizes(self, ratio: Optional[float] = None) -> tuple[int, ...]:
        if ratio is None:
            if self.k is not None:
                return self.k
            ratio = self.k_ratio
        return tuple(max(0, int(round(ratio * ni))) for ni in self.n)

    def echo(self) -> dict:
        return {
            "method": self.method.value,
            "n": list(self.n),
            "k_ratio": self.k_ratio,
            "k": None if self.k is None else list(self.k),
            "trials": self.trials,
            "seed": self.seed,
            "eps": self.eps,
            "max_iter": self.max_iter,
            "beta": self.beta,
            "lambda": self.lam,
            "noise_sigma": self.noise_sigma,
            "signal_type": self.signal_type,
            "paths": dict(sorted(self.paths.items())),
        }


def _require(raw: dict, key: str, types, caster=None):
    value = raw[key]
    if not isinstance(value, types):
        raise DataFormatError(f"config key {key!r}: expected {types}, got {type(value).__name__}")
    return caster(value) if caster else value


def parse_config(raw: dict) -> ExperimentConfig:
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise DataFormatError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("method", "trials", "seed"):
        if key not in raw:
            raise DataFormatError(f"missing required config key {key!r}")

    if "n" in raw and ("n1" in raw or "n2" in raw):
        raise DataFormatError("give either n or n1/n2, not both")
    if "n" in raw:
        n = (_require(raw, "n", (int,)),)
    elif "n1" in raw and "n2" in raw:
        n = (_require(raw, "n1", (int,)), _require(raw, "n2", (int,)))
    else:
        raise DataFormatError("missing required config key 'n' (or 'n1'/'n2')")

    k = None
    if "k1" in raw or "k2" in raw:
        if len(n) == 2:
            if not ("k1" in raw and "k2" in raw):
                raise DataFormatError("2-D configs need both k1 and k2")
            k = (_require(raw, "k1", (int,)), _require(raw, "k2", (int,)))
        else:
            if "k2" in raw:
                raise DataFormatError("k2 given for a 1-D config")
            k = (_require(raw, "k1", (int,)),)
    k_ratio = None
    if "k_ratio" in raw:
        k_ratio = float(_require(raw, "k_ratio", (int, float)))

    merged = dict(_CONFIG_DEFAULTS)
    for key in _CONFIG_DEFAULTS:
        if key in raw:
            merged[key] = raw[key]
    for key in ("eps", "beta", "lambda", "noise_sigma"):
        if not isinstance(merged[key], (int, float)):
            raise DataFormatError(f"config key {key!r}: expected a number")
    for key in ("max_iter", "signal_type"):
        if not isinstance(merged[key], int):
            raise DataFormatError(f"config key {key!r}: expected an integer")
    paths = raw.get("paths", {})
    if not isinstance(paths, dict):
        raise DataFormatError("config key 'paths': expected an object")

    try:
        method = Method.parse(_require(raw, "method", (str,)))
    except ValueError as exc:
        raise DataFormatError(str(exc))
    return ExperimentConfig(
        method=method, n=n, trials=_require(raw, "trials", (int,)),
        seed=_require(raw, "seed", (int,)), k_ratio=k_ratio, k=k,
        eps=float(merged["eps"]), max_iter=int(merged["max_iter"]),
        beta=float(merged["beta"]), lam=float(merged["lambda"]),
        noise_sigma=float(merged["noise_sigma"]),
        signal_type=int(merged["signal_type"]), paths=dict(paths))


def read_config(path) -> ExperimentConfig:
    """JSON key/value document; unknown keys are rejected."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})")
    if not isinstance(raw, dict):
        raise DataFormatError(f"{path}: config must be a JSON object")
    return parse_config(raw)


# -- results ------------------------------------------------------------------

RESULT_COLUMNS = ("trial", "seed", "method", "n", "k", "iterations",
                  "relative_error", "measurement_error", "psnr", "ssim",
                  "success", "wall_ms")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a result file (timestamps excepted)."""

    version: str
    seed: int
    config: dict
    input_digests: dict = field(default_factory=dict)
    created_utc: str = ""
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
            "input_digests": dict(sorted(self.input_digests.items())),
            "created_utc": self.created_utc,
            "extra": self.extra,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def manifest_now(version: str, seed: int, config: dict, input_digests=None,
                 extra=None) -> RunManifest:
    stamp = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    return RunManifest(version, seed, config, dict(input_digests or {}),
                       stamp.isoformat(), dict(extra or {}))


def _format_cell(key: str, value) -> str:
    if key in ("trial", "seed", "iterations"):
        return str(int(value))
    if key == "success":
        return "1" if value else "0"
    if key in ("method", "n", "k"):
        return str(value)
    return format_float(value)


def shape_token(shape: Sequence[int]) -> str:
    return "x".join(str(int(v)) for v in shape)


def write_results(path, rows: Sequence[dict], manifest: RunManifest) -> None:
    """Fixed-header CSV plus the sidecar manifest at <path>.manifest.json."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            missing = [c for c in RESULT_COLUMNS if c not in row]
            if missing:
                raise DataFormatError(f"result row missing columns: {missing}")
            writer.writerow([_format_cell(c, row[c]) for c in RESULT_COLUMNS])
    with open(path.with_suffix(path.suffix + ".manifest.json"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_json())


def read_results(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_COLUMNS:
            raise DataFormatError(f"{path}: unexpected results header {header}")
        out = []
        for line in reader:
            row = dict(zip(RESULT_COLUMNS, line))
            for key in ("trial", "seed", "iterations"):
                row[key] = int(row[key])
            for key in ("relative_error", "measurement_error", "psnr", "ssim", "wall_ms"):
                row[key] = float(row[key])
            row["success"] = row["success"] == "1"
            out.append(row)
    return out
