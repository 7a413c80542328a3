import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opspace.matcore import PExponent, schatten_norm
from opspace.ohnorm import oh_matrix_norm
from opspace.opmatrix import BlockMatrix, block_transpose, compress, flatten
from opspace.pnorm import (
    NormEstimate,
    OptimizerConfig,
    _Ascent,
    _flat,
    compression_value,
    dual_pairing_value,
    interpolation_upper,
    m1_norm_dual,
    maximize_compression,
    mn_schatten_norm,
    schatten_gradient,
)
from opspace.witnesses import make_A, make_B, matrix_unit, paper_witness_ab

from conftest import random_block, random_complex

FAST = OptimizerConfig(restarts=8, max_iters=300)


def central_difference(f, M, H, h=1e-5):
    return (f(M + h * H) - f(M - h * H)) / (2 * h)


def directional(G, H):
    return float(np.real(np.vdot(G, H)))


def test_gradient_examples():
    g = schatten_gradient(np.diag([3.0, 4.0]), 2)
    assert np.allclose(g, np.diag([0.6, 0.8]))
    assert np.allclose(schatten_gradient(np.diag([3.0, 4.0]), "inf"), np.diag([0, 1]))
    assert np.allclose(schatten_gradient(np.diag([2.0, 5.0, 0.0]), 1), np.diag([1, 1, 0]))
    with pytest.raises(ValueError):
        schatten_gradient(np.zeros((2, 2)), 3)


@pytest.mark.parametrize("p", [1.5, 3, 4])
def test_gradient_against_finite_differences(p):
    rng = np.random.default_rng(7)
    for _ in range(50):
        M = random_complex(rng, (3, 3))
        H = random_complex(rng, (3, 3))
        fd = central_difference(lambda z: schatten_norm(z, p), M, H)
        an = directional(schatten_gradient(M, p), H)
        assert abs(fd - an) <= 1e-5 * max(1.0, abs(fd))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(1.2, 10.0))
def test_gradient_dual_norm_is_one(seed, p):
    # Euler identity for a 1-homogeneous function and ||G||_{p'} = 1
    M = random_complex(np.random.default_rng(seed), (3, 4))
    G = schatten_gradient(M, p)
    assert directional(G, M) == pytest.approx(schatten_norm(M, p), rel=1e-10)
    assert schatten_norm(G, p / (p - 1)) == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_ascent_chain_rule_gradients(p):
    rng = np.random.default_rng(3)
    x = random_block(rng, 2, 2, 2)
    asc = _Ascent(x, PExponent(p), FAST)
    a, b = random_complex(rng, (2, 2)), random_complex(rng, (2, 2))
    ha, hb = random_complex(rng, (2, 2)), random_complex(rng, (2, 2))

    def f(a_, b_):
        return compression_value(x, a_, b_, p)

    y4 = np.einsum("kjrs,jl->klrs", x.data, b)
    m4 = np.einsum("ik,klrs->ilrs", a, y4)
    ga = np.einsum("ijrs,kjrs->ik", asc._gradient(m4), y4.conj())
    assert directional(ga, ha) == pytest.approx(central_difference(lambda z: f(z, b), a, ha), rel=1e-6)
    z4 = np.einsum("ik,kjrs->ijrs", a, x.data)
    gb = np.einsum("ilrs,ijrs->lj", z4.conj(), asc._gradient(m4))
    assert directional(gb, hb) == pytest.approx(central_difference(lambda z: f(a, z), b, hb), rel=1e-6)
    assert _flat(m4) == pytest.approx(flatten(compress(a, x, b)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.01, 100.0))
def test_objective_homogeneity(seed, c):
    rng = np.random.default_rng(seed)
    x = random_block(rng, 2, 2, 2)
    a, b = random_complex(rng, (2, 2)), random_complex(rng, (2, 2))
    base = compression_value(x, a, b, 3)
    assert compression_value(c * x, a, b, 3) == pytest.approx(c * base, rel=1e-10)
    assert compression_value(x, c * a, b, 3) == pytest.approx(c * base, rel=1e-10)


def test_exact_endpoints():
    unit = BlockMatrix.from_blocks({(1, 1): matrix_unit(1, 1, 2)})
    est = mn_schatten_norm(unit, "inf")
    assert est.lower == est.upper == 1.0 and est.method == {"exact-svd"}
    est = mn_schatten_norm(block_transpose(make_A(4)), 2)
    assert est.lower == pytest.approx(4 ** 0.25) and est.method == {"exact-oh"}


@pytest.mark.parametrize("n", [2, 3])
def test_optimizer_at_p2_matches_oh(n):
    rng = np.random.default_rng(11 + n)
    x = random_block(rng, n, n, 2)
    value, a, b = maximize_compression(x, 2, OptimizerConfig(restarts=64))
    oh = oh_matrix_norm(x)
    assert value <= oh + 1e-8
    assert value >= oh - 1e-4


@pytest.mark.parametrize("n", [2, 3, 4])
def test_A_at_p4_reaches_closed_form(n):
    est = mn_schatten_norm(make_A(n), 4, FAST)
    assert est.lower >= n ** 0.375 - 1e-6
    assert est.upper == pytest.approx(n ** 0.375, abs=1e-9)
    assert "interpolation" in est.method


@pytest.mark.parametrize("n", [2, 3])
def test_A_at_p1_with_contraction_bound(n):
    est = mn_schatten_norm(make_A(n), 1, FAST, n1_upper=1.0)
    assert 1 - 1e-4 <= est.lower <= 1 + 1e-6
    assert est.upper == pytest.approx(1.0)


@pytest.mark.parametrize("p", [1.5, 3])
def test_B_beats_witness(p):
    n = 3
    a, b = paper_witness_ab(n, p)
    witness = compression_value(make_B(n), a, b, p)
    est = mn_schatten_norm(make_B(n), p, FAST)
    assert est.lower >= witness - 1e-9


def test_witness_is_certified():
    x = random_block(np.random.default_rng(5), 3, 3, 2)
    est = mn_schatten_norm(x, 3, FAST)
    a, b = est.witness["a"], est.witness["b"]
    assert schatten_norm(a, 6) <= 1 + 1e-12 and schatten_norm(b, 6) <= 1 + 1e-12
    assert compression_value(x, a, b, 3) == est.lower
    assert est.lower <= est.upper


def test_cb_bound_used_for_rows_and_columns():
    est = mn_schatten_norm(block_transpose(make_A(3)), 4, FAST)
    assert est.upper is not None and est.lower <= est.upper
    assert est.lower == pytest.approx(3 ** (1 / 8), abs=1e-6)


def test_monotone_in_restarts():
    x = random_block(np.random.default_rng(9), 2, 2, 2)
    vals = [maximize_compression(x, 3, OptimizerConfig(restarts=k, max_iters=50))[0]
            for k in (1, 2, 4, 8)]
    assert vals == sorted(vals)


def test_deterministic_across_thread_counts(monkeypatch):
    x = random_block(np.random.default_rng(2), 2, 2, 2)
    out = []
    for threads in ("1", "3"):
        monkeypatch.setenv("OPSPACE_THREADS", threads)
        v, a, b = maximize_compression(x, 3, FAST)
        out.append((v, a.tobytes(), b.tobytes()))
    assert out[0] == out[1]


def test_gradient_step_rule():
    n = 3
    est = mn_schatten_norm(make_A(n), 4, OptimizerConfig(restarts=8, step_rule="gradient"))
    assert est.lower >= n ** 0.375 - 1e-5


def test_maximize_rejects_inf():
    with pytest.raises(ValueError):
        maximize_compression(make_A(2), "inf")


def test_dual_estimator_examples():
    assert m1_norm_dual(make_A(3), FAST).lower == pytest.approx(1.0, abs=1e-6)
    unit = BlockMatrix.from_blocks({(1, 1): matrix_unit(2, 1, 2)})
    est = m1_norm_dual(unit, FAST)
    assert est.lower == pytest.approx(1.0, abs=1e-9) and est.upper is None
    with pytest.raises(ValueError):
        m1_norm_dual(BlockMatrix(np.ones((2, 2, 2, 3))))


def test_dual_witness_is_certified():
    x = random_block(np.random.default_rng(4), 2, 2, 2)
    est = m1_norm_dual(x, FAST)
    a, b, y = est.witness["a"], est.witness["b"], BlockMatrix(est.witness["y"])
    assert np.linalg.norm(a) <= 1 + 1e-12 and np.linalg.norm(b) <= 1 + 1e-12
    assert schatten_norm(flatten(y), "inf") <= 1 + 1e-12
    assert dual_pairing_value(x, a, b, y) == est.lower


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dual_and_direct_agree(seed):
    x = random_block(np.random.default_rng(100 + seed), 2, 2, 2)
    cfg = OptimizerConfig(restarts=32)
    dual = m1_norm_dual(x, cfg).lower
    direct = mn_schatten_norm(x, 1, cfg).lower
    assert abs(dual - direct) <= 1e-4


def test_interpolation_examples():
    for n in (2, 3, 5):
        assert interpolation_upper(make_A(n), 4) == pytest.approx(n ** 0.375)
        assert interpolation_upper(block_transpose(make_A(n)), 4) == pytest.approx(n ** 0.125)
        assert interpolation_upper(block_transpose(make_B(n)), 1.5, n1_upper=1.0) == pytest.approx(n ** (1 / 6))
    x = make_A(3)
    assert interpolation_upper(x, "inf") == pytest.approx(math.sqrt(3))
    assert interpolation_upper(x, 2) == pytest.approx(oh_matrix_norm(x))
    with pytest.raises(ValueError):
        interpolation_upper(x, 1.5)


def test_norm_estimate_validation():
    with pytest.raises(ValueError):
        NormEstimate(2.0, 1.0)
    with pytest.raises(ValueError):
        NormEstimate(1.0, None, {"guess"})
    with pytest.raises(ValueError):
        NormEstimate(-1.0, None)
    est = NormEstimate(1.0, 1.5, {"witness"}, {"a": np.eye(2)})
    assert est.gap == 0.5
    assert est.to_json()["witness"]["a"]["rows"] == 2
    assert "witness" not in est.to_json(with_witness=False)


@pytest.mark.parametrize("kwargs", [dict(restarts=0), dict(max_iters=0), dict(tol=0.0),
                                    dict(step_rule="newton"), dict(seed=2**70)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        OptimizerConfig(**kwargs)
