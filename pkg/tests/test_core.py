import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from quantbench.core import Matrix, Precision, as_labels, cast, column_min_max
from quantbench.errors import CastRangeError, LabelError, ShapeError


def test_precision_widths():
    assert [p.nbytes for p in (Precision.F64, Precision.F32, Precision.I32)] == [8, 4, 4]
    assert Precision.parse("float32") is Precision.F32
    assert Precision.parse("i32") is Precision.I32
    with pytest.raises(ValueError):
        Precision.parse("F16")


def test_matrix_is_immutable():
    m = Matrix([[1.0, 2.0], [3.0, 4.0]])
    assert (m.rows, m.cols, m.precision) == (2, 2, Precision.F64)
    with pytest.raises(ValueError):
        m.data[0, 0] = 9.0


def test_matrix_rejects_bad_shapes_and_non_integral_i32():
    with pytest.raises(ShapeError):
        Matrix([1.0, 2.0])
    with pytest.raises(CastRangeError):
        Matrix([[0.5]], Precision.I32)
    with pytest.raises(CastRangeError):
        Matrix([[2**31]], Precision.I32)
    assert Matrix([[3.0]], "I32").data.dtype == np.int32


def test_cast_truncates_toward_zero():
    assert cast(Matrix([[0.75]]), Precision.I32).data.tolist() == [[0]]
    assert cast(Matrix([[-1.9]]), Precision.I32).data.tolist() == [[-1]]
    assert cast(Matrix([[2.999, -0.999, 7.0]]), "I32").data.tolist() == [[2, 0, 7]]


def test_exact_values_survive_f32_round_trip():
    m = Matrix([[0.5, 2.0], [-0.25, 1024.0], [3.0, -7.5]])
    back = cast(cast(m, Precision.F32), Precision.F64)
    assert back.data.tobytes() == m.data.tobytes()


def test_point_one_in_f32_matches_reference_conversion():
    # reference: IEEE single bit pattern 0x3DCCCCCD, via the C-level struct packer
    ref = struct.unpack(">f", bytes.fromhex("3dcccccd"))[0]
    assert struct.unpack(">f", struct.pack(">f", 0.1))[0] == ref
    out = cast(Matrix([[0.1]]), Precision.F32)
    assert out.data.tobytes() == struct.pack("<f", 0.1)
    assert float(out.data[0, 0]) == ref != 0.1


def test_i32_to_float_casts():
    m = Matrix([[2**31 - 1, -(2**31)], [16777217, 3]], Precision.I32)
    assert cast(m, Precision.F64).data.tolist() == [[2**31 - 1, -(2**31)], [16777217, 3]]
    # 2**24 + 1 is the first integer F32 cannot hold; ties go to even
    assert cast(m, Precision.F32).data[1, 0] == np.float32(16777216)


def test_identity_cast_returns_equal_matrix():
    m = Matrix(np.arange(6.0).reshape(3, 2))
    assert cast(m, Precision.F64) == m


@pytest.mark.parametrize("bad, row, col", [
    ([[1.0, np.nan]], 0, 1),
    ([[0.0], [np.inf]], 1, 0),
    ([[3e9]], 0, 0),
    ([[-2147483649.0]], 0, 0),
])
def test_cast_to_i32_range_errors_name_the_element(bad, row, col):
    with pytest.raises(CastRangeError) as info:
        cast(Matrix(bad), Precision.I32)
    assert (info.value.row, info.value.col) == (row, col)
    assert f"row {row}, col {col}" in str(info.value)


def test_cast_boundary_values_that_truncate_into_range():
    out = cast(Matrix([[2147483647.9, -2147483648.9]]), Precision.I32)
    assert out.data.tolist() == [[2147483647, -2147483648]]


def test_f32_overflow_is_a_range_error():
    with pytest.raises(CastRangeError):
        cast(Matrix([[1e300]]), Precision.F32)


def test_column_min_max_examples():
    lo, hi = column_min_max(Matrix([[1.0], [5.0], [3.0]]))
    assert lo.tolist() == [1.0] and hi.tolist() == [5.0]
    lo, hi = column_min_max(Matrix([[4.0], [4.0]]))
    assert lo.tolist() == [4.0] and hi.tolist() == [4.0]
    with pytest.raises(ShapeError):
        column_min_max(Matrix(np.empty((0, 3))))


def test_column_min_max_matches_scan():
    rng = np.random.default_rng(7)
    data = rng.normal(size=(50, 4))
    lo, hi = column_min_max(Matrix(data))
    ref_lo, ref_hi = oracles.scan_min_max(data.tolist())
    assert lo.tolist() == ref_lo and hi.tolist() == ref_hi


def test_labels_validation():
    assert as_labels([0, 1, 1]).tolist() == [0, 1, 1]
    with pytest.raises(LabelError):
        as_labels([0, 2])
    with pytest.raises(ShapeError):
        as_labels([0, 1], length=3)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
float_mats = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)), elements=finite)


@settings(max_examples=200, deadline=None)
@given(float_mats, st.sampled_from(list(Precision)))
def test_cast_idempotent(data, p):
    once = cast(Matrix(data), p)
    assert cast(once, p) == once


@settings(max_examples=200, deadline=None)
@given(float_mats)
def test_f32_round_trip_within_one_ulp(data):
    back = cast(cast(Matrix(data), "F32"), "F64").data
    ulp = np.spacing(np.abs(data).astype(np.float32)).astype(np.float64)
    assert np.all(np.abs(back - data) <= ulp)


@settings(max_examples=200, deadline=None)
@given(float_mats)
def test_i32_cast_sign_and_small_values(data):
    out = cast(Matrix(data), "I32").data
    assert np.all(out[np.abs(data) < 1] == 0)
    nz = out != 0
    assert np.all(np.sign(out[nz]) == np.sign(data[nz]))


@settings(max_examples=200, deadline=None)
@given(float_mats)
def test_min_max_bracket_every_column(data):
    lo, hi = column_min_max(Matrix(data))
    assert np.all(lo <= data) and np.all(data <= hi)
