"""Standard scaling and the three quantization operators.

Every operator is a fit/apply pair: ``fit_*`` reads training rows only and
returns an immutable params object; ``apply_*`` maps any matrix with the same
column count. All statistics are per column. Inputs outside the fitted range
are clamped so outputs stay bounded (the downstream I32 cast relies on it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import serial
from .core import Matrix, Precision, column_min_max
from .errors import (
    ConfigError,
    DataError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)

DEFAULT_N_QUANTILES = 100
DEFAULT_N_BINS = 10
DEFAULT_DECIMALS = 4
DEFAULT_N_LEVELS = 2**12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


def _values(m: Matrix, expected_cols: int | None = None) -> np.ndarray:
    if expected_cols is not None and m.cols != expected_cols:
        raise ShapeError(f"matrix has {m.cols} columns, params were fitted on {expected_cols}")
    x = m.data.astype(np.float64)
    if np.isnan(x).any():
        raise DataError("input contains NaN")
    return x


def _require_rows(m: Matrix, n: int):
    if m.rows < n or m.cols == 0:
        raise InsufficientDataError(f"need at least {n} rows to fit, got {m.rows}")


# -- standard scaling --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray  # population std (ddof=0)

    kind = "scaler"

    @property
    def cols(self) -> int:
        return self.mean.shape[0]

    def to_dict(self) -> dict:
        return serial.envelope(self.kind, {
            "mean": serial.enc_list(self.mean),
            "std": serial.enc_list(self.std),
        })

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalerParams":
        doc = serial.open_envelope(doc, cls.kind)
        return cls(_frozen(serial.dec_array(doc["mean"])),
                   _frozen(serial.dec_array(doc["std"])))


def fit_scaler(x_train: Matrix) -> ScalerParams:
    _require_rows(x_train, 1)
    x = _values(x_train)
    return ScalerParams(_frozen(x.mean(axis=0)), _frozen(x.std(axis=0)))


def apply_scaler(params: ScalerParams, x: Matrix) -> Matrix:
    v = _values(x, params.cols)
    std = params.std
    safe = np.where(std > 0, std, 1.0)
    out = np.where(std > 0, (v - params.mean) / safe, 0.0)
    return Matrix(out, Precision.F64)


# -- quantile transform ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuantileParams:
    n_quantiles: int
    quantiles: np.ndarray  # shape (cols, n_quantiles), rows non-decreasing
    p_min: np.ndarray
    p_max: np.ndarray

    kind = "quantile"

    @property
    def cols(self) -> int:
        return self.quantiles.shape[0]

    @property
    def references(self) -> np.ndarray:
        """Probability level attached to each stored quantile."""
        n = self.n_quantiles
        return np.arange(n, dtype=np.float64) / (n - 1)

    def to_dict(self) -> dict:
        return serial.envelope(self.kind, {
            "n_quantiles": self.n_quantiles,
            "quantiles": [serial.enc_list(row) for row in self.quantiles],
            "p_min": serial.enc_list(self.p_min),
            "p_max": serial.enc_list(self.p_max),
        })

    @classmethod
    def from_dict(cls, doc: dict) -> "QuantileParams":
        doc = serial.open_envelope(doc, cls.kind)
        q = np.array([serial.dec_array(r) for r in doc["quantiles"]], dtype=np.float64)
        return cls(int(doc["n_quantiles"]), _frozen(q.reshape(-1, int(doc["n_quantiles"]))),
                   _frozen(serial.dec_array(doc["p_min"])),
                   _frozen(serial.dec_array(doc["p_max"])))


def empirical_quantiles(sorted_col: np.ndarray, n_quantiles: int) -> np.ndarray:
    """Quantiles of an ascending column at ``n_quantiles`` evenly spaced levels.

    Level i sits at order-statistic position i*(n-1)/(n_quantiles-1); values
    between order statistics are linearly interpolated.
    """
    n = sorted_col.shape[0]
    i = np.arange(n_quantiles, dtype=np.float64)
    pos = i * (n - 1) / (n_quantiles - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    q = sorted_col[lo] + frac * (sorted_col[hi] - sorted_col[lo])
    q[-1] = sorted_col[-1]
    return np.maximum.accumulate(q)


def fit_quantile(x_train: Matrix, n_quantiles: int = DEFAULT_N_QUANTILES) -> QuantileParams:
    if n_quantiles < 2:
        raise ParameterError(f"n_quantiles must be >= 2, got {n_quantiles}")
    _require_rows(x_train, 2)
    x = _values(x_train)
    n_q = min(int(n_quantiles), x.shape[0])
    cols = np.sort(x, axis=0).T
    q = np.stack([empirical_quantiles(c, n_q) for c in cols])
    return QuantileParams(n_q, _frozen(q), _frozen(q[:, 0]), _frozen(q[:, -1]))


def _cdf_column(q: np.ndarray, refs: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = q.shape[0]
    lo = np.searchsorted(q, x, side="left")
    hi = np.searchsorted(q, x, side="right")
    out = np.empty_like(x)

    tied = lo < hi  # x equals q[lo:hi]; take the middle of that probability span
    out[tied] = 0.5 * (refs[lo[tied]] + refs[hi[tied] - 1])

    gap = ~tied
    k = lo[gap]
    below, above = k == 0, k == n
    inner = ~(below | above)
    vals = np.empty(k.shape[0])
    vals[below] = 0.0
    vals[above] = 1.0
    ki = k[inner]
    x0, x1 = q[ki - 1], q[ki]
    y0, y1 = refs[ki - 1], refs[ki]
    interp = y0 + (x[gap][inner] - x0) * (y1 - y0) / (x1 - x0)
    # rounding can overshoot a knot by an ulp; stay inside the bracket to keep the map monotone
    vals[inner] = np.minimum(np.maximum(interp, y0), y1)
    out[gap] = vals
    return np.clip(out, 0.0, 1.0)


def apply_quantile(params: QuantileParams, x: Matrix) -> Matrix:
    """Map each value through its column's empirical CDF onto [0, 1].

    Constant training columns map to 0.
    """
    v = _values(x, params.cols)
    refs = params.references
    out = np.zeros_like(v)
    for j in range(params.cols):
        if params.p_max[j] > params.p_min[j]:
            out[:, j] = _cdf_column(params.quantiles[j], refs, v[:, j])
    return Matrix(out, Precision.F64)


# -- rounding / level quantization ------------------------------------------


@dataclass(frozen=True, eq=False)
class RoundParams:
    decimals: int
    n_levels: int
    p_min: np.ndarray
    p_max: np.ndarray

    kind = "round"

    def __post_init__(self):
        if self.decimals < 0:
            raise ParameterError(f"decimals must be >= 0, got {self.decimals}")
        if self.n_levels < 2:
            raise ParameterError(f"n_levels must be >= 2, got {self.n_levels}")

    @property
    def cols(self) -> int:
        return self.p_min.shape[0]

    def to_dict(self) -> dict:
        return serial.envelope(self.kind, {
            "decimals": self.decimals,
            "n_levels": self.n_levels,
            "p_min": serial.enc_list(self.p_min),
            "p_max": serial.enc_list(self.p_max),
        })

    @classmethod
    def from_dict(cls, doc: dict) -> "RoundParams":
        doc = serial.open_envelope(doc, cls.kind)
        return cls(int(doc["decimals"]), int(doc["n_levels"]),
                   _frozen(serial.dec_array(doc["p_min"])),
                   _frozen(serial.dec_array(doc["p_max"])))


def fit_round(x_train: Matrix, decimals: int = DEFAULT_DECIMALS,
              n_levels: int = DEFAULT_N_LEVELS) -> RoundParams:
    _require_rows(x_train, 1)
    p_min, p_max = column_min_max(x_train)
    return RoundParams(int(decimals), int(n_levels), _frozen(p_min), _frozen(p_max))


def round_quantize(x: Matrix, decimals: int = DEFAULT_DECIMALS) -> Matrix:
    """Round to ``decimals`` places, ties to even, keeping the precision.

    Rounding acts on the value scaled by 10**decimals (numpy ``round``
    semantics), so 0.12345 -> 0.1234.
    """
    if not x.precision.is_float:
        raise ParameterError("round_quantize needs a floating-point matrix")
    if decimals < 0:
        raise ParameterError(f"decimals must be >= 0, got {decimals}")
    return Matrix(np.round(x.data, int(decimals)), x.precision)


def level_quantize(params: RoundParams, x: Matrix) -> Matrix:
    """Snap each value to the nearest of ``n_levels`` evenly spaced levels.

    Output holds integral level indices in [0, n_levels - 1]; constant
    training columns map to level 0.
    """
    v = _values(x, params.cols)
    top = params.n_levels - 1
    span = params.p_max - params.p_min
    live = span > 0
    safe = np.where(live, span, 1.0)
    levels = np.rint((v - params.p_min) * top / safe)
    out = np.where(live, np.clip(levels, 0, top), 0.0)
    return Matrix(out, Precision.F64)


# -- uniform k-bins ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BinsParams:
    n_bins: int
    p_min: np.ndarray
    p_max: np.ndarray

    kind = "bins"

    def __post_init__(self):
        if self.n_bins < 2:
            raise ParameterError(f"n_bins must be >= 2, got {self.n_bins}")

    @property
    def cols(self) -> int:
        return self.p_min.shape[0]

    def bin_edges(self) -> np.ndarray:
        """Edges per column, shape (cols, n_bins + 1)."""
        t = np.arange(self.n_bins + 1) / self.n_bins
        return self.p_min[:, None] + t[None, :] * (self.p_max - self.p_min)[:, None]

    def to_dict(self) -> dict:
        return serial.envelope(self.kind, {
            "n_bins": self.n_bins,
            "p_min": serial.enc_list(self.p_min),
            "p_max": serial.enc_list(self.p_max),
        })

    @classmethod
    def from_dict(cls, doc: dict) -> "BinsParams":
        doc = serial.open_envelope(doc, cls.kind)
        return cls(int(doc["n_bins"]), _frozen(serial.dec_array(doc["p_min"])),
                   _frozen(serial.dec_array(doc["p_max"])))


def fit_bins(x_train: Matrix, n_bins: int = DEFAULT_N_BINS) -> BinsParams:
    if n_bins < 2:
        raise ParameterError(f"n_bins must be >= 2, got {n_bins}")
    _require_rows(x_train, 1)
    p_min, p_max = column_min_max(x_train)
    return BinsParams(int(n_bins), _frozen(p_min), _frozen(p_max))


def apply_bins(params: BinsParams, x: Matrix) -> Matrix:
    """Uniform-width bin index per value; the top edge closes the last bin."""
    v = _values(x, params.cols)
    span = params.p_max - params.p_min
    live = span > 0
    safe = np.where(live, span, 1.0)
    idx = np.floor(params.n_bins * (v - params.p_min) / safe)
    out = np.where(live, np.clip(idx, 0, params.n_bins - 1), 0.0)
    return Matrix(out, Precision.F64)


_PARAM_TYPES = {cls.kind: cls for cls in (ScalerParams, QuantileParams, RoundParams, BinsParams)}


def params_from_dict(doc: dict):
    """Rebuild any fitted params object from its JSON document."""
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind not in _PARAM_TYPES:
        raise ConfigError(f"unknown params kind {kind!r}", key="kind")
    return _PARAM_TYPES[kind].from_dict(doc)
