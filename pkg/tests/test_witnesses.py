import math

import numpy as np
import pytest

from opspace.matcore import op_norm, schatten_norm, svd_values
from opspace.opmatrix import compress, flatten
from opspace.pnorm import compression_value
from opspace.witnesses import (
    cb_transpose_witness,
    family,
    make_A,
    make_B,
    matrix_unit,
    paper_witness_ab,
)

P_GRID = [1, 1.5, 2, 3, 4, 10, math.inf]


def test_matrix_unit():
    assert np.array_equal(matrix_unit(1, 1, 2), [[1, 0], [0, 0]])
    assert np.array_equal(matrix_unit(1, 2, 2), [[0, 1], [0, 0]])
    assert matrix_unit(3, 1, 3, cols=1).shape == (3, 1)
    for bad in [(0, 1), (1, 3), (3, 1)]:
        with pytest.raises(ValueError):
            matrix_unit(*bad, 2)


def test_make_A_B_structure():
    assert make_A(1).allclose(make_B(1), atol=0)
    assert np.array_equal(make_A(1).block(1, 1), matrix_unit(1, 1, 1))
    n = 4
    a, b = make_A(n), make_B(n)
    for j in range(1, n + 1):
        assert np.array_equal(a.block(1, j), matrix_unit(1, j, n))
        assert np.array_equal(b.block(1, j), matrix_unit(j, 1, n))
    assert not np.any(a.data[1:]) and not np.any(b.data[1:])


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_full_spectra(n):
    sa = svd_values(flatten(make_A(n)))
    sb = svd_values(flatten(make_B(n)))
    assert np.allclose(sa, [math.sqrt(n)] + [0] * (n * n - 1), atol=1e-14)
    assert np.allclose(sb, [1] * n + [0] * (n * n - n), atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 4, 7])
@pytest.mark.parametrize("p", P_GRID)
def test_block_schatten_norms(n, p):
    assert schatten_norm(flatten(make_A(n)), p) == pytest.approx(math.sqrt(n), abs=1e-12)
    expect_b = 1.0 if math.isinf(p) else n ** (1 / p)
    assert schatten_norm(flatten(make_B(n)), p) == pytest.approx(expect_b, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5])
@pytest.mark.parametrize("p", [1, 1.5, 3, 4])
def test_witness_ab_feasible(n, p):
    a, b = paper_witness_ab(n, p)
    assert np.array_equal(a, matrix_unit(1, 1, n))
    assert schatten_norm(a, 2 * p) == pytest.approx(1)
    assert schatten_norm(b, 2 * p) == pytest.approx(1, abs=1e-14)


def test_witness_ab_rejects_inf():
    with pytest.raises(ValueError):
        paper_witness_ab(3, math.inf)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_witness_ab_values(n):
    for p in [2.5, 3, 4, 8]:
        a, b = paper_witness_ab(n, p)
        assert compression_value(make_A(n), a, b, p) == pytest.approx(n ** (0.5 - 0.5 / p), abs=1e-12)
        pc = p / (p - 1)
        assert n ** (0.5 - 0.5 / p) == pytest.approx(n ** (1 / (2 * pc)))
        # the compression is a rescaling of A_n
        assert compress(a, make_A(n), b).allclose(n ** (-1 / (2 * p)) * make_A(n), atol=1e-15)
    for p in [1, 1.25, 1.5, 1.9]:
        a, b = paper_witness_ab(n, p)
        assert compression_value(make_B(n), a, b, p) == pytest.approx(n ** (1 / (2 * p)), abs=1e-12)


def test_cb_witness_small_cases():
    assert cb_transpose_witness(1).ratio == pytest.approx(1.0)
    w = cb_transpose_witness(2)
    flat = flatten(w.v)
    assert flat.shape == (4, 2)
    assert np.array_equal(flat[:2], np.eye(2)) and not np.any(flat[2:])
    assert op_norm(flat) == pytest.approx(1.0)
    assert w.ratio == pytest.approx(math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("n", [3, 8, 9])
def test_cb_witness_ratio(n):
    assert abs(cb_transpose_witness(n).ratio - math.sqrt(n)) <= 1e-9


def test_family_lookup():
    assert family("A", 3).payload.allclose(make_A(3), atol=0)
    assert family("B", 2).payload.allclose(make_B(2), atol=0)
    cbt = family("cbt", 3)
    assert cbt.name == "cb-transpose" and cbt.payload.inner_shape == (3, 1)
    with pytest.raises(ValueError):
        family("C", 2)
