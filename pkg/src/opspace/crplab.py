"""Verification campaigns for the column-row estimates on ``S_p^n``.

Each check returns plain records (:class:`LemmaOutcome`, :class:`CrpReport`,
...) that serialise to JSON; nothing here raises on a failed check.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .matcore import PExponent, as_exponent, op_norm, schatten_norm
from .ohnorm import cmp_check_oh, oh_column_norm, oh_matrix_norm
from .opmatrix import BlockMatrix, block_transpose, flatten
from .pnorm import (
    NormEstimate,
    OptimizerConfig,
    _ordered_map,
    _rng,
    compression_value,
    interpolation_upper,
    maximize_compression,
    mn_schatten_norm,
)
from .witnesses import cb_transpose_witness, make_A, make_B, paper_witness_ab

__all__ = [
    "LemmaOutcome",
    "verify_block_norms",
    "verify_oh_transpose",
    "verify_oh_column_lemma",
    "s1_contraction_lhs",
    "S1Contraction",
    "verify_s1_contraction",
    "verify_cb_transpose",
    "target_exponent",
    "sandwich_exponents",
    "fit_exponent",
    "CrpRow",
    "CrpReport",
    "crp_ratio_campaign",
    "SandwichResult",
    "sandwich_probe",
    "CmpReport",
    "cmp_campaign",
    "verify_lemmas",
]

EXACT_TOL = 1e-9


@dataclass(frozen=True)
class LemmaOutcome:
    """``relation`` is ``"eq"`` (two-sided) or ``"le"`` (observed <= expected + tol)."""

    lemma: str
    n: int | None
    p: str | None
    expected: float
    observed: float
    tolerance: float
    relation: str = "eq"

    @property
    def passed(self) -> bool:
        if self.relation == "le":
            return self.observed <= self.expected + self.tolerance
        return abs(self.observed - self.expected) <= self.tolerance

    def to_json(self) -> dict:
        return {"lemma": self.lemma, "n": self.n, "p": self.p, "expected": self.expected,
                "observed": self.observed, "tolerance": self.tolerance,
                "relation": self.relation, "pass": self.passed}


def verify_block_norms(n: int, p, tol: float = EXACT_TOL) -> tuple[LemmaOutcome, LemmaOutcome]:
    """Schatten norms of the flattened ``A_n`` and ``B_n``: sqrt(n) and n^(1/p)."""
    p = as_exponent(p)
    exp_b = 1.0 if p.is_inf else n ** (1.0 / p.p)
    obs_a = schatten_norm(flatten(make_A(n)), p)
    obs_b = schatten_norm(flatten(make_B(n)), p)
    return (LemmaOutcome("block-norm-A", n, str(p), math.sqrt(n), obs_a, tol),
            LemmaOutcome("block-norm-B", n, str(p), exp_b, obs_b, tol))


def verify_oh_transpose(n: int, tol: float = EXACT_TOL) -> LemmaOutcome:
    observed = oh_matrix_norm(block_transpose(make_A(n)))
    return LemmaOutcome("oh-transpose", n, "2", n ** 0.25, observed, tol)


def verify_oh_column_lemma(n: int, tol: float = EXACT_TOL) -> LemmaOutcome:
    """Gram-arrangement norm of ``t(A_n)`` against the closed-form column value."""
    col = block_transpose(make_A(n))
    expected = oh_column_norm([col.block(i, 1) for i in range(1, n + 1)])
    return LemmaOutcome("oh-column-lemma", n, "2", expected, oh_matrix_norm(col), tol)


def s1_contraction_lhs(a, y: BlockMatrix) -> float:
    """``sum_l |sum_jk a_jk y^{kl}_{j1}|^2`` where ``y_kl = [y^{kl}_ij]``."""
    inner = np.einsum("jk,klj->l", np.asarray(a), y.data[:, :, :, 0])
    return float(np.sum(np.abs(inner) ** 2))


def _s1_worst_lhs(y: BlockMatrix) -> float:
    """Maximum of the contraction sum over the unit ball of ``S_2`` for fixed ``y``."""
    n = y.outer_shape[0]
    rows = y.data[:, :, :, 0].transpose(1, 2, 0).reshape(n, -1)  # row l holds y^{kl}_{j1} at (j, k)
    return op_norm(rows) ** 2


@dataclass(frozen=True)
class S1Contraction:
    n: int
    trials: int
    max_lhs: float
    passed: bool

    def to_outcome(self) -> LemmaOutcome:
        return LemmaOutcome("s1-contraction", self.n, "1", 1.0, self.max_lhs, EXACT_TOL, "le")


def _random_contraction(rng: np.random.Generator, n: int) -> tuple[np.ndarray, BlockMatrix]:
    g = rng.standard_normal((n, n, n, n)) + 1j * rng.standard_normal((n, n, n, n))
    y = g / op_norm(flatten(BlockMatrix(g)))
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a /= np.linalg.norm(a)
    # half of the draws stay on the boundary of each unit ball
    if rng.random() < 0.5:
        y = y * rng.random()
    if rng.random() < 0.5:
        a = a * rng.random()
    return a, BlockMatrix(y)


def verify_s1_contraction(n: int, trials: int = 1000, seed: int = 42,
                          adversarial=()) -> S1Contraction:
    """Sample contractions ``y`` and ``S_2`` balls points ``a``; track the largest sum.

    Every trial also evaluates the worst ``a`` for its ``y``. ``adversarial``
    takes extra ``(a, y)`` pairs, e.g. a maximiser from :func:`m1_norm_dual`.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be positive")
    worst = 0.0
    for t in range(trials):
        a, y = _random_contraction(_rng(seed, t), n)
        worst = max(worst, s1_contraction_lhs(a, y), _s1_worst_lhs(y))
    for a, y in adversarial:
        y = y if isinstance(y, BlockMatrix) else BlockMatrix(y)
        worst = max(worst, s1_contraction_lhs(a, y), _s1_worst_lhs(y))
    return S1Contraction(n, trials, worst, worst <= 1.0 + EXACT_TOL)


def verify_cb_transpose(n: int, tol: float = EXACT_TOL) -> LemmaOutcome:
    return LemmaOutcome("cb-transpose", n, None, math.sqrt(n), cb_transpose_witness(n).ratio, tol)


def target_exponent(p) -> float:
    """Growth exponent ``|p - 2| / (2p)`` of the column-to-row ratio (1/2 at p = inf)."""
    p = as_exponent(p)
    return 0.5 if p.is_inf else abs(p.p - 2.0) / (2.0 * p.p)


def sandwich_exponents(p) -> tuple[float, float]:
    lo = target_exponent(p)
    return lo, 2.0 * lo


def fit_exponent(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(set(ns.tolist())) < 2:
        raise ValueError("need at least two distinct n to fit a growth exponent")
    if np.any(values <= 0) or np.any(ns <= 0):
        raise ValueError("log-log fit needs positive values")
    slope, _ = np.polyfit(np.log(ns), np.log(values), 1)
    return float(slope)


@dataclass(frozen=True)
class CrpRow:
    """One ``n`` of a campaign: the row (numerator) and its transpose column."""

    n: int
    row_norm: NormEstimate
    col_norm: NormEstimate
    ratio_lower: float
    target: float
    certified: bool

    def to_json(self) -> dict:
        return {"n": self.n, "row_norm": self.row_norm.to_json(with_witness=False),
                "col_norm": self.col_norm.to_json(with_witness=False),
                "ratio_lower": self.ratio_lower, "target": self.target,
                "certified": self.certified}


@dataclass(frozen=True)
class CrpReport:
    p: PExponent
    rows: list = field(default_factory=list)
    fitted_exponent: float = math.nan
    target_exponent: float = math.nan

    def to_json(self) -> dict:
        return {"p": str(self.p), "rows": [r.to_json() for r in self.rows],
                "fitted_exponent": self.fitted_exponent,
                "target_exponent": self.target_exponent}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "row_lower", "col_upper", "ratio_lower", "target"])
        for r in self.rows:
            w.writerow([r.n, str(self.p), repr(r.row_norm.lower), repr(r.col_norm.upper),
                        repr(r.ratio_lower), repr(r.target)])
        return buf.getvalue()


def _largest_block(x: BlockMatrix, p: PExponent) -> float:
    # a = E_ii, b = E_jj isolates block (i, j) and is feasible for every p
    return max(schatten_norm(b, p) for b in x.entries())


def _crp_row(p: PExponent, n: int, cfg: OptimizerConfig, probe: bool) -> CrpRow:
    num = make_A(n) if p.p > 2.0 else make_B(n)
    den = block_transpose(num)
    target = n ** target_exponent(p)
    meta = dict(p=p, n=n, m=n, restarts=cfg.restarts, seed=cfg.seed)
    if p.is_inf:
        row = mn_schatten_norm(num, p, cfg)
        col = mn_schatten_norm(den, p, cfg)
        return CrpRow(n, row, col, row.lower / col.upper, target, True)
    a, b = paper_witness_ab(n, p)
    row_upper = interpolation_upper(num, p) if p.p > 2.0 else None
    row = NormEstimate(compression_value(num, a, b, p), row_upper,
                       {"witness", "interpolation"} if row_upper is not None else {"witness"},
                       {"a": a, "b": b}, **meta)
    # the M_n(S_1) endpoint of t(B_n) is at most 1 by the S_1 contraction estimate
    col_upper = interpolation_upper(den, p, None if p.p > 2.0 else 1.0)
    col_lower, method, witness = _largest_block(den, p), {"witness"}, None
    if probe:
        value, ca, cb = maximize_compression(den, p, cfg)
        if value > col_lower:
            col_lower, method, witness = value, {"optimizer"}, {"a": ca, "b": cb}
    col = NormEstimate(col_lower, col_upper, method | {"interpolation"}, witness, **meta)
    return CrpRow(n, row, col, row.lower / col.upper, target, True)


def crp_ratio_campaign(p, n_range, cfg: OptimizerConfig | None = None,
                       probe: bool = False) -> CrpReport:
    """Certified lower bounds for ``||t_n (x) id_{S_p^n}||`` on the witness family.

    The numerator is the first-row matrix (``A_n`` for p > 2, ``B_n`` for
    p < 2) bounded below by the compression witness; the denominator is its
    transpose column bounded above by interpolation. ``probe`` additionally
    runs the ascent on the column as an internal consistency check.
    """
    p = as_exponent(p)
    if p.p == 2.0:
        raise ValueError("p = 2 has no column-row gap to measure")
    cfg = cfg or OptimizerConfig()
    ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise ValueError("n_range must contain positive integers")
    rows = _ordered_map(lambda n: _crp_row(p, n, cfg, probe), ns)
    fitted = fit_exponent(ns, [r.ratio_lower for r in rows])
    return CrpReport(p, rows, fitted, target_exponent(p))


@dataclass(frozen=True)
class SandwichResult:
    p: PExponent
    n: int
    lower: float
    upper: float
    optimizer_best: float
    within: bool
    best_candidate: str

    def to_json(self) -> dict:
        return {"p": str(self.p), "n": self.n, "lower": self.lower, "upper": self.upper,
                "optimizer_best": self.optimizer_best, "within": self.within,
                "best_candidate": self.best_candidate}


def _column_ratio(col: BlockMatrix, p: PExponent, cfg: OptimizerConfig,
                  n1_upper: float | None, row_floor: float = 0.0) -> float:
    """Certified ``lower(||t(col)||) / upper(||col||)``."""
    row = block_transpose(col)
    if p.is_inf:
        return op_norm(flatten(row)) / op_norm(flatten(col))
    num = max(row_floor, maximize_compression(row, p, cfg)[0])
    den = interpolation_upper(col, p, None if p.p >= 2.0 else n1_upper)
    return num / den


def sandwich_probe(p, n: int, cfg: OptimizerConfig | None = None,
                   candidates: int = 4) -> SandwichResult:
    """Search columns in ``M_{n,1}(S_p^n)`` for the largest certified transpose ratio.

    Candidates are the transposed witness row and ``candidates`` Gaussian
    columns. The result is compared with the window
    ``[n^(|p-2|/2p), n^(|p-2|/p)]``; it is reported, not asserted.
    """
    p = as_exponent(p)
    if p.p == 2.0:
        raise ValueError("p = 2 has no column-row gap to measure")
    cfg = cfg or OptimizerConfig()
    lo_exp, hi_exp = sandwich_exponents(p)
    lower, upper = n ** lo_exp, n ** hi_exp

    witness_row = make_A(n) if p.p > 2.0 else make_B(n)
    witness_col = block_transpose(witness_row)
    floor = 0.0
    if not p.is_inf:
        floor = compression_value(witness_row, *paper_witness_ab(n, p), p)
    n1 = min(1.0, schatten_norm(flatten(witness_col), 1))
    scored = [("witness-column", _column_ratio(witness_col, p, cfg, n1, floor))]

    rng = _rng(cfg.seed, 2**32)
    for k in range(candidates):
        arr = np.zeros((n, n, n, n), dtype=np.complex128)
        arr[:, 0] = rng.standard_normal((n, n, n)) + 1j * rng.standard_normal((n, n, n))
        col = BlockMatrix(arr)
        # ||x||_{M_n(S_1)} <= ||flatten(x)||_{S_1} since the compressions are contractive
        scored.append((f"gaussian-{k}", _column_ratio(col, p, cfg, schatten_norm(flatten(col), 1))))

    label, best = max(scored, key=lambda t: t[1])
    within = lower - 1e-6 <= best <= upper + 1e-6
    return SandwichResult(p, n, lower, upper, best, within, label)


@dataclass(frozen=True)
class CmpReport:
    samples: int
    n: int
    m: int
    max_excess: float
    all_ok: bool

    def to_json(self) -> dict:
        return {"samples": self.samples, "n": self.n, "m": self.m,
                "max_excess": self.max_excess, "all_ok": self.all_ok}


def cmp_campaign(samples: int = 500, n: int = 3, m: int = 3, seed: int = 42,
                 tol: float = EXACT_TOL) -> CmpReport:
    """Random ``M_n(S_2^m)`` elements against the column of all their entries."""
    worst = -math.inf
    ok = True
    for t in range(samples):
        rng = _rng(seed, t)
        x = BlockMatrix(rng.standard_normal((n, n, m, m)) + 1j * rng.standard_normal((n, n, m, m)))
        res = cmp_check_oh(x, tol)
        worst = max(worst, res.matrix_norm - res.column_norm)
        ok &= res.ok
    return CmpReport(samples, n, m, worst, ok)


def verify_lemmas(n_max: int, p_grid, trials: int = 1000, seed: int = 42) -> list[LemmaOutcome]:
    """All exact checks for ``n = 1..n_max``, in a fixed order."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    grid = [as_exponent(p) for p in p_grid]
    out: list[LemmaOutcome] = []
    for n in range(1, n_max + 1):
        for p in grid:
            out.extend(verify_block_norms(n, p))
    for n in range(1, n_max + 1):
        out.append(verify_oh_transpose(n))
        out.append(verify_oh_column_lemma(n))
    for n in range(1, n_max + 1):
        out.append(verify_s1_contraction(n, trials, seed).to_outcome())
    for n in range(1, n_max + 1):
        out.append(verify_cb_transpose(n))
    return out
