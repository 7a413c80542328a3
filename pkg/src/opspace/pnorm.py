"""Norm estimates for block matrices over ``S_p^m``.

The norm of ``x`` in ``M_n(S_p^m)`` is the supremum of
``||a x b||_{S_p}`` over ``a``, ``b`` in the unit ball of ``S_2p^n``. This
objective is convex in each of ``a`` and ``b``, so its supremum is only
reached from below. Estimates therefore carry a certified lower bound (the
objective evaluated at a stored feasible witness) and, separately, an upper
bound from interpolation between the exactly computable ``S_inf`` and
``S_2`` endpoints.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .matcore import PExponent, as_exponent, as_matrix, op_norm, schatten_norm, trace_pairing
from .ohnorm import oh_matrix_norm
from .opmatrix import BlockMatrix, block_transpose, compress, flatten, matrix_to_json, pad_square

__all__ = [
    "METHODS",
    "STEP_RULES",
    "OptimizerConfig",
    "NormEstimate",
    "compression_value",
    "dual_pairing_value",
    "schatten_gradient",
    "maximize_compression",
    "mn_schatten_norm",
    "m1_norm_dual",
    "interpolation_upper",
]

METHODS = frozenset({"exact-svd", "exact-oh", "witness", "optimizer", "dual-pairing",
                     "interpolation", "cb-bound"})
STEP_RULES = ("dual", "gradient")

# gradient exponent used in place of p = 1, where the norm is not differentiable
P1_SMOOTHING = 1.0 + 1e-6
FEASIBILITY_SLACK = 1e-12
_MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the alternating ascent.

    ``step_rule`` is ``"dual"`` (step towards the sphere point maximising the
    linearised objective) or ``"gradient"`` (step along the gradient projected
    on the tangent space of the sphere); both retract onto the sphere and
    backtrack until the objective increases.
    """

    restarts: int = 64
    max_iters: int = 500
    step_rule: str = "dual"
    tol: float = 1e-10
    seed: int = 42

    def __post_init__(self):
        if int(self.restarts) < 1:
            raise ValueError("restarts must be at least 1")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step rule {self.step_rule!r}; expected one of {STEP_RULES}")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def to_json(self) -> dict:
        return {"restarts": self.restarts, "max_iters": self.max_iters,
                "step_rule": self.step_rule, "tol": self.tol, "seed": self.seed}


@dataclass(frozen=True)
class NormEstimate:
    """An interval ``[lower, upper]`` for a norm; ``upper=None`` means unknown."""

    lower: float
    upper: float | None
    method: frozenset = field(default_factory=frozenset)
    witness: dict | None = None
    p: PExponent | None = None
    n: int | None = None
    m: int | None = None
    restarts: int | None = None
    seed: int | None = None

    def __post_init__(self):
        method = frozenset(self.method)
        if not method <= METHODS:
            raise ValueError(f"unknown method labels {sorted(method - METHODS)}")
        object.__setattr__(self, "method", method)
        if self.lower < 0 or math.isnan(self.lower):
            raise ValueError(f"lower bound must be non-negative, got {self.lower}")
        if self.upper is not None and self.lower > self.upper * (1 + 1e-12) + 1e-12:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def gap(self) -> float | None:
        return None if self.upper is None else self.upper - self.lower

    def to_json(self, with_witness: bool = True) -> dict:
        out = {
            "lower": self.lower,
            "upper": self.upper,
            "method": sorted(self.method),
            "p": None if self.p is None else str(self.p),
            "n": self.n,
            "m": self.m,
            "restarts": self.restarts,
            "seed": self.seed,
        }
        if with_witness and self.witness is not None:
            out["witness"] = {k: matrix_to_json(v) if v.ndim == 2 else BlockMatrix(v).to_json()
                              for k, v in self.witness.items()}
        return out


def _threads() -> int:
    try:
        k = int(os.environ.get("OPSPACE_THREADS", "0"))
    except ValueError:
        k = 0
    return k if k > 0 else (os.cpu_count() or 1)


def _ordered_map(fn, items):
    items = list(items)
    k = min(_threads(), len(items))
    if k <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) % 2**64, index]))


def _gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def compression_value(x: BlockMatrix, a, b, p) -> float:
    """The objective ``||a x b||_{S_p}`` computed on the flattened product."""
    return schatten_norm(flatten(compress(a, x, b)), p)


def dual_pairing_value(x: BlockMatrix, a, b, y: BlockMatrix) -> float:
    """``|sum_{ijkl} a_jk <x_ij, y_kl> b_li|`` with the trace pairing, entry by entry."""
    a, b = as_matrix(a), as_matrix(b)
    n = x.outer_shape[0]
    total = 0j
    for i in range(n):
        for j in range(n):
            xij = x.data[i, j]
            if not np.any(xij):
                continue
            for k in range(n):
                for l in range(n):
                    total += a[j, k] * trace_pairing(xij, y.data[k, l]) * b[l, i]
    return abs(total)


def schatten_gradient(M, p) -> np.ndarray:
    """Derivative of ``||M||_p``: ``U diag(s^(p-1)) V^* / ||M||_p^(p-1)``.

    The directional derivative along ``H`` is ``Re tr(G^* H)``. At ``p = 1``
    the subgradient ``U_r V_r^*`` over the nonzero singular values is
    returned, at ``p = inf`` the top singular pair ``u_1 v_1^*``.
    """
    M = as_matrix(M)
    p = as_exponent(p)
    u, s, vh = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        raise ValueError("the Schatten norm is not differentiable at the zero matrix")
    if p.is_inf:
        return np.outer(u[:, 0], vh[0])
    if p.p == 1.0:
        keep = s > s[0] * max(M.shape) * np.finfo(float).eps
        return (u[:, keep]) @ vh[keep]
    w = (s / s[0]) ** (p.p - 1.0)
    scale = float(np.sum((s / s[0]) ** p.p)) ** ((p.p - 1.0) / p.p)
    return (u * (w / scale)) @ vh


def _normalize(z: np.ndarray, r: float) -> np.ndarray | None:
    nz = schatten_norm(z, r)
    if not nz > 0 or not math.isfinite(nz):
        return None
    return z / nz


def _dual_target(g: np.ndarray, r: float) -> np.ndarray | None:
    """Maximiser of ``Re tr(g^* z)`` over the unit ball of ``S_r``."""
    u, s, vh = np.linalg.svd(g, full_matrices=False)
    if not s[0] > 0:
        return None
    rc = r / (r - 1.0)
    w = (s / s[0]) ** (rc - 1.0)
    w /= np.sum(w ** r) ** (1.0 / r)
    return (u * w) @ vh


def _flat(m4: np.ndarray) -> np.ndarray:
    n, q, m, mp = m4.shape
    return m4.transpose(0, 2, 1, 3).reshape(n * m, q * mp)


def _unflat(M: np.ndarray, shape) -> np.ndarray:
    n, q, m, mp = shape
    return M.reshape(n, m, q, mp).transpose(0, 2, 1, 3)


class _Ascent:
    """Alternating ascent for ``||a x b||_p`` over the ``S_2p`` unit spheres."""

    def __init__(self, x: BlockMatrix, p: PExponent, cfg: OptimizerConfig):
        self.x4 = x.data
        self.n = x.outer_shape[0]
        self.p = p.p
        self.p_grad = P1_SMOOTHING if p.p == 1.0 else p.p
        self.r = 2.0 * p.p
        self.cfg = cfg

    def _value(self, m4: np.ndarray) -> float:
        return schatten_norm(_flat(m4), self.p)

    def _gradient(self, m4: np.ndarray) -> np.ndarray:
        return _unflat(schatten_gradient(_flat(m4), self.p_grad), m4.shape)

    def _half_step(self, z, val, value_of, grad):
        """Move ``z`` along ``grad`` on the sphere; keep it if nothing improves."""
        if self.cfg.step_rule == "dual":
            target = _dual_target(grad, self.r)
            if target is None:
                return z, val
            direction = target - z
        else:
            # drop the component along the sphere normal, else a gradient
            # parallel to z is cancelled by the retraction
            normal = schatten_gradient(z, self.r)
            tangent = grad - (np.real(np.vdot(normal, grad)) / np.real(np.vdot(normal, normal))) * normal
            gn = schatten_norm(tangent, self.r)
            if not gn > FEASIBILITY_SLACK * schatten_norm(grad, self.r):
                return z, val
            direction = tangent / gn
        t = 1.0
        for _ in range(_MAX_BACKTRACKS):
            cand = _normalize(z + t * direction, self.r)
            if cand is not None:
                v = value_of(cand)
                if v > val:
                    return cand, v
            t *= 0.5
        return z, val

    def run(self, index: int):
        rng = _rng(self.cfg.seed, index)
        n = self.n
        a = _normalize(_gaussian(rng, (n, n)), self.r)
        b = _normalize(_gaussian(rng, (n, n)), self.r)
        x4 = self.x4
        val = self._value(np.einsum("ik,kjrs,jl->ilrs", a, x4, b))
        for _ in range(self.cfg.max_iters):
            prev = val
            y4 = np.einsum("kjrs,jl->klrs", x4, b)
            m4 = np.einsum("ik,klrs->ilrs", a, y4)
            if val > 0:
                ga = np.einsum("ijrs,kjrs->ik", self._gradient(m4), y4.conj())
                a, val = self._half_step(
                    a, val, lambda c: self._value(np.einsum("ik,klrs->ilrs", c, y4)), ga)
            z4 = np.einsum("ik,kjrs->ijrs", a, x4)
            m4 = np.einsum("ijrs,jl->ilrs", z4, b)
            if val > 0:
                gb = np.einsum("ilrs,ijrs->lj", z4.conj(), self._gradient(m4))
                b, val = self._half_step(
                    b, val, lambda c: self._value(np.einsum("ijrs,jl->ilrs", z4, c)), gb)
            if not math.isfinite(val):
                return None
            if val - prev <= self.cfg.tol * prev:
                break
        return val, a, b


def _certified_pair(x, p, a, b, r) -> float | None:
    if schatten_norm(a, r) > 1 + FEASIBILITY_SLACK or schatten_norm(b, r) > 1 + FEASIBILITY_SLACK:
        return None
    v = compression_value(x, a, b, p)
    return v if math.isfinite(v) else None


def maximize_compression(x: BlockMatrix, p, cfg: OptimizerConfig | None = None):
    """Best certified ``(value, a, b)`` over ``cfg.restarts`` ascent runs.

    Runs the generic optimiser for every finite ``p`` (no exact shortcut).
    Restart ``k`` draws from a stream derived from ``(cfg.seed, k)``, so the
    result is independent of scheduling, and growing ``restarts`` can only
    raise the returned value.
    """
    cfg = cfg or OptimizerConfig()
    p = as_exponent(p)
    if p.is_inf:
        raise ValueError("the ascent needs finite p; p = inf has an exact path")
    x = pad_square(x)
    ascent = _Ascent(x, p, cfg)

    def one(k):
        try:
            with np.errstate(over="raise", invalid="raise"):
                out = ascent.run(k)
        except (FloatingPointError, np.linalg.LinAlgError):
            return None
        if out is None:
            return None
        _, a, b = out
        v = _certified_pair(x, p, a, b, 2.0 * p.p)
        return None if v is None else (v, a, b)

    best = None
    for res in _ordered_map(one, range(cfg.restarts)):
        if res is not None and (best is None or res[0] > best[0]):
            best = res
    if best is None:
        raise FloatingPointError("every restart hit a non-finite value")
    return best


def interpolation_upper(x: BlockMatrix, p, n1_upper: float | None = None) -> float:
    """Upper bound ``N_0^(1-theta) N_2^theta`` for the ``M_n(S_p)`` norm.

    For p >= 2 both endpoints are exact: ``N_0`` is the ``S_inf`` norm
    (operator norm of the flattening) and ``N_2`` the operator Hilbert space
    norm. For p < 2, ``N_0`` is an ``M_n(S_1)`` bound that the caller must
    certify and pass as ``n1_upper``.
    """
    p = as_exponent(p)
    x = pad_square(x)
    theta = p.theta
    n2 = oh_matrix_norm(x)
    if p.p >= 2.0:
        n0 = op_norm(flatten(x))
    else:
        if n1_upper is None:
            raise ValueError("p < 2 needs a certified M_n(S_1) bound (n1_upper)")
        n0 = float(n1_upper)
    return n0 ** (1.0 - theta) * n2 ** theta


def _upper_bounds(x: BlockMatrix, p: PExponent, n1_upper) -> dict:
    bounds = {}
    if p.p > 2.0 or n1_upper is not None:
        bounds["interpolation"] = interpolation_upper(x, p, n1_upper)
    if p.p > 2.0 and (x.is_row() or x.is_column()):
        # the column/row transpose has cb-norm sqrt(n)
        n = x.outer_shape[0]
        bounds["cb-bound"] = math.sqrt(n) * interpolation_upper(block_transpose(x), p)
    return bounds


def mn_schatten_norm(x: BlockMatrix, p, cfg: OptimizerConfig | None = None,
                     n1_upper: float | None = None) -> NormEstimate:
    """Estimate ``||x||_{M_n(S_p^m)}``.

    Exact at ``p = inf`` (operator norm of the flattening, attained at
    ``a = b = I``) and ``p = 2`` (operator Hilbert space norm). Otherwise the
    lower bound is the best certified ascent value and the upper bound the
    smallest available analytic bound, or ``None``.
    """
    cfg = cfg or OptimizerConfig()
    p = as_exponent(p)
    x = pad_square(x)
    n, _, m, _ = x.shape
    meta = dict(p=p, n=n, m=m, restarts=cfg.restarts, seed=cfg.seed)
    if p.is_inf:
        eye = np.eye(n, dtype=np.complex128)
        v = op_norm(flatten(x))
        return NormEstimate(v, v, {"exact-svd"}, {"a": eye, "b": eye}, **meta)
    if p.p == 2.0:
        v = oh_matrix_norm(x)
        return NormEstimate(v, v, {"exact-oh"}, None, **meta)
    value, a, b = maximize_compression(x, p, cfg)
    bounds = _upper_bounds(x, p, n1_upper)
    method = {"optimizer"}
    upper = None
    if bounds:
        label = min(bounds, key=bounds.get)
        upper = bounds[label]
        method.add(label)
    return NormEstimate(value, upper, method, {"a": a, "b": b}, **meta)


class _DualAscent:
    """Alternating exact maximisation of the trilinear ``M_n(S_1)`` dual form.

    Each of ``a``, ``b`` (unit ``S_2`` balls) and ``y`` (unit ball of
    ``M_n(S_inf)``) has a closed-form best response, so every sweep is
    monotone.
    """

    def __init__(self, x: BlockMatrix, cfg: OptimizerConfig):
        self.x4 = x.data
        self.n, _, self.m, _ = x.shape
        self.cfg = cfg

    def run(self, index: int):
        rng = _rng(self.cfg.seed, index)
        n, m, x4 = self.n, self.m, self.x4
        a = _gaussian(rng, (n, n))
        a /= np.linalg.norm(a)
        b = _gaussian(rng, (n, n))
        b /= np.linalg.norm(b)
        y4 = _gaussian(rng, (n, n, m, m))
        y4 /= op_norm(_flat(y4))
        val = 0.0
        for _ in range(self.cfg.max_iters):
            prev = val
            t = np.einsum("ijrs,klsr->ijkl", x4, y4)
            ca = np.einsum("ijkl,li->jk", t, b)
            if np.any(ca):
                a = ca.conj() / np.linalg.norm(ca)
            cb = np.einsum("ijkl,jk->li", t, a)
            if np.any(cb):
                b = cb.conj() / np.linalg.norm(cb)
            k = _flat(np.einsum("li,ijrs,jk->lkrs", b, x4, a))
            u, s, vh = np.linalg.svd(k, full_matrices=False)
            y4 = _unflat(vh.conj().T @ u.conj().T, (n, n, m, m))
            val = float(np.sum(s))
            if not math.isfinite(val):
                return None
            if val - prev <= self.cfg.tol * prev:
                break
        return val, a, b, y4


def m1_norm_dual(x: BlockMatrix, cfg: OptimizerConfig | None = None) -> NormEstimate:
    """Lower bound for ``||x||_{M_n(S_1^m)}`` through the ``S_1[S_inf]`` duality.

    The value is ``sup |sum a_jk <x_ij, y_kl> b_li|`` over ``||a||_2, ||b||_2
    <= 1`` and ``||y||_{M_n(S_inf)} <= 1``; the stored witness is the triple
    ``(a, b, y)``.
    """
    cfg = cfg or OptimizerConfig()
    x = pad_square(x)
    n, _, m, mp = x.shape
    if m != mp:
        raise ValueError("the dual estimator needs square inner blocks")
    ascent = _DualAscent(x, cfg)

    def one(k):
        try:
            with np.errstate(over="raise", invalid="raise"):
                out = ascent.run(k)
        except (FloatingPointError, np.linalg.LinAlgError):
            return None
        if out is None:
            return None
        _, a, b, y4 = out
        try:
            y = BlockMatrix(y4)
            if (np.linalg.norm(a) > 1 + FEASIBILITY_SLACK or np.linalg.norm(b) > 1 + FEASIBILITY_SLACK
                    or op_norm(flatten(y)) > 1 + FEASIBILITY_SLACK):
                return None
            with np.errstate(over="raise", invalid="raise"):
                v = dual_pairing_value(x, a, b, y)
        except (FloatingPointError, ValueError):
            return None
        return (v, a, b, y4) if math.isfinite(v) else None

    best = None
    for res in _ordered_map(one, range(cfg.restarts)):
        if res is not None and (best is None or res[0] > best[0]):
            best = res
    if best is None:
        raise FloatingPointError("every restart hit a non-finite value")
    value, a, b, y4 = best
    return NormEstimate(value, None, {"dual-pairing"}, {"a": a, "b": b, "y": y4},
                        p=PExponent(1.0), n=n, m=m, restarts=cfg.restarts, seed=cfg.seed)
