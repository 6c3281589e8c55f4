"""Precision-tagged matrices and the bit-depth cast operator."""

from __future__ import annotations

import enum

import numpy as np

from .errors import CastRangeError, DataError, LabelError, ShapeError

I32_MIN = -(2**31)
I32_MAX = 2**31 - 1


class Precision(enum.Enum):
    F64 = "F64"
    F32 = "F32"
    I32 = "I32"

    @property
    def dtype(self) -> np.dtype:
        return _DTYPES[self]

    @property
    def nbytes(self) -> int:
        return self.dtype.itemsize

    @property
    def is_float(self) -> bool:
        return self is not Precision.I32

    @classmethod
    def parse(cls, value) -> "Precision":
        """Accept a Precision, its name, or a numpy-style dtype name."""
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"FLOAT64": "F64", "FLOAT32": "F32", "INT32": "I32"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValueError(f"unknown precision {value!r}") from None

    @classmethod
    def from_dtype(cls, dtype) -> "Precision":
        dtype = np.dtype(dtype)
        for p, dt in _DTYPES.items():
            if dt == dtype:
                return p
        raise ValueError(f"no precision tag for dtype {dtype}")

    def __str__(self):
        return self.value


_DTYPES = {
    Precision.F64: np.dtype(np.float64),
    Precision.F32: np.dtype(np.float32),
    Precision.I32: np.dtype(np.int32),
}


class Matrix:
    """Immutable 2-D table of numbers stored in exactly one precision.

    The backing buffer is a C-contiguous, read-only numpy array whose dtype
    is the precision's dtype. Constructing an ``I32`` matrix from values that
    are not integral (or out of range) fails; use :func:`cast` to convert.
    """

    __slots__ = ("_data",)

    def __init__(self, data, precision: Precision | str | None = None):
        arr = np.asarray(data)
        if arr.ndim == 1 and arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ShapeError(f"matrix data must be 2-D, got {arr.ndim}-D")
        if precision is None:
            try:
                precision = Precision.from_dtype(arr.dtype)
            except ValueError:
                precision = Precision.F64
        precision = Precision.parse(precision)
        if precision is Precision.I32 and arr.dtype != np.int32:
            arr = _exact_int32(arr)
        out = np.array(arr, dtype=precision.dtype, order="C", copy=True)
        out.flags.writeable = False
        self._data = out

    @property
    def data(self) -> np.ndarray:
        """Read-only view of the element buffer."""
        return self._data

    @property
    def precision(self) -> Precision:
        return Precision.from_dtype(self._data.dtype)

    @property
    def rows(self) -> int:
        return self._data.shape[0]

    @property
    def cols(self) -> int:
        return self._data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._data.shape

    @property
    def nbytes(self) -> int:
        return self._data.nbytes

    def to_numpy(self, dtype=None) -> np.ndarray:
        """Writable copy, optionally converted with numpy semantics."""
        return np.array(self._data, dtype=dtype, copy=True)

    def take_rows(self, index) -> "Matrix":
        return Matrix(self._data[np.asarray(index, dtype=np.intp)], self.precision)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.precision is other.precision and np.array_equal(
            self._data, other._data
        )

    def __hash__(self):
        return hash((self.precision, self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"Matrix({self.rows}x{self.cols}, {self.precision})"


def _exact_int32(arr: np.ndarray) -> np.ndarray:
    if arr.dtype.kind in "iub":
        wide = arr.astype(np.int64)
        bad = (wide < I32_MIN) | (wide > I32_MAX)
    else:
        wide = arr.astype(np.float64)
        with np.errstate(invalid="ignore"):
            bad = ~np.isfinite(wide) | (wide != np.trunc(wide))
            bad |= (wide < I32_MIN) | (wide > I32_MAX)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise CastRangeError(
            f"value {arr[r, c]!r} at row {r}, col {c} is not a 32-bit integer",
            row=int(r), col=int(c),
        )
    return wide.astype(np.int32)


def cast(m: Matrix, target: Precision | str) -> Matrix:
    """Convert ``m`` to ``target`` precision.

    Float to I32 truncates toward zero; float narrowing and I32 to F32 round
    to nearest-even. NaN, infinities and out-of-range values raise
    :class:`CastRangeError` naming the first offending element.
    """
    target = Precision.parse(target)
    src = m.precision
    if src is target:
        return m
    data = m.data
    if target is Precision.I32:
        with np.errstate(invalid="ignore"):
            truncated = np.trunc(data.astype(np.float64))
            bad = ~np.isfinite(truncated)
            bad |= (truncated < I32_MIN) | (truncated > I32_MAX)
        if bad.any():
            r, c = np.argwhere(bad)[0]
            raise CastRangeError(
                f"cannot cast {data[r, c]!r} at row {r}, col {c} to I32",
                row=int(r), col=int(c),
            )
        return Matrix(truncated.astype(np.int32), Precision.I32)
    if target is Precision.F32 and src is Precision.F64:
        with np.errstate(over="ignore"):
            out = data.astype(np.float32)
        overflow = np.isinf(out) & np.isfinite(data)
        if overflow.any():
            r, c = np.argwhere(overflow)[0]
            raise CastRangeError(
                f"{data[r, c]!r} at row {r}, col {c} overflows F32",
                row=int(r), col=int(c),
            )
        return Matrix(out, Precision.F32)
    return Matrix(data.astype(target.dtype), target)


def column_min_max(m: Matrix) -> tuple[np.ndarray, np.ndarray]:
    """Per-column (min, max) as float64 arrays."""
    if m.rows == 0 or m.cols == 0:
        raise ShapeError(f"column_min_max needs a nonempty matrix, got {m.shape}")
    data = m.data
    if m.precision.is_float and np.isnan(data).any():
        raise DataError("column_min_max: matrix contains NaN")
    return data.min(axis=0).astype(np.float64), data.max(axis=0).astype(np.float64)


def as_labels(values, length: int | None = None) -> np.ndarray:
    """Validate binary labels; returns a read-only int64 vector of 0/1.

    ``length``, when given, must equal the vector length (the row count of
    the paired matrix).
    """
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ShapeError(f"{arr.shape[0]} labels for {length} rows")
    if arr.dtype.kind not in "iubf":
        raise LabelError(f"labels must be numeric 0/1, got dtype {arr.dtype}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        bad = sorted(set(np.unique(arr).tolist()) - {0, 1})
        raise LabelError(f"labels must be 0 or 1, found {bad[:5]}")
    out = arr.astype(np.int64)
    out.flags.writeable = False
    return out
