"""Dense complex matrix primitives: SVD, Schatten norms, Kronecker products,
trace pairings.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every public
function validates its input through :func:`as_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PExponent",
    "as_exponent",
    "as_matrix",
    "svd_values",
    "schatten_norm",
    "op_norm",
    "kron",
    "trace_pairing",
    "hs_inner",
]


@dataclass(frozen=True)
class PExponent:
    """A Schatten exponent ``p`` in ``[1, inf]``.

    ``p = inf`` is stored as ``math.inf`` and every consumer branches on it
    explicitly; it is never used as a large float.
    """

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise ValueError(f"Schatten exponent must lie in [1, inf], got {self.p!r}")
        object.__setattr__(self, "p", p)

    @classmethod
    def parse(cls, text: str | float) -> "PExponent":
        if isinstance(text, str) and text.strip().lower() in ("inf", "infinity", "oo"):
            return cls(math.inf)
        return cls(float(text))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    @property
    def conjugate(self) -> float:
        """Hölder conjugate p' with 1/p + 1/p' = 1."""
        if self.is_inf:
            return 1.0
        if self.p == 1.0:
            return math.inf
        return self.p / (self.p - 1.0)

    @property
    def theta(self) -> float:
        """Interpolation parameter against the ``S_2`` endpoint.

        For p >= 2 this solves 1/p = theta/2 (other endpoint ``S_inf``); for
        p <= 2 it solves 1/p = (1 - theta) + theta/2 (other endpoint ``S_1``).
        """
        if self.p >= 2.0:
            return 0.0 if self.is_inf else 2.0 / self.p
        return 2.0 / self.conjugate if not math.isinf(self.conjugate) else 0.0

    def __str__(self) -> str:
        return "inf" if self.is_inf else format(self.p, "g")


def as_exponent(p) -> PExponent:
    if isinstance(p, PExponent):
        return p
    if isinstance(p, str):
        return PExponent.parse(p)
    return PExponent(p)


def as_matrix(x) -> np.ndarray:
    """Return ``x`` as a finite 2-D complex array, or raise ``ValueError``."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 2 or 0 in arr.shape:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def svd_values(x) -> np.ndarray:
    """Singular values of ``x``, descending, ``min(rows, cols)`` of them.

    Raises ``FloatingPointError`` when finite input overflows.
    """
    s = np.linalg.svd(as_matrix(x), compute_uv=False)
    if not np.all(np.isfinite(s)):
        raise FloatingPointError("singular values overflowed")
    return s


def _norm_from_values(s: np.ndarray, p: PExponent) -> float:
    if p.is_inf:
        return float(s[0]) if s.size else 0.0
    if p.p == 1.0:
        return float(np.sum(s))
    top = float(s[0]) if s.size else 0.0
    if top == 0.0:
        return 0.0
    # scale by the top value so s**p cannot overflow or underflow
    return top * float(np.sum((s / top) ** p.p)) ** (1.0 / p.p)


def schatten_norm(x, p) -> float:
    """Schatten ``p``-norm: the ``l_p`` norm of the singular values."""
    return _norm_from_values(svd_values(x), as_exponent(p))


def op_norm(x) -> float:
    return float(svd_values(x)[0])


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def trace_pairing(u, v) -> complex:
    """Bilinear pairing ``trace(u @ v)``."""
    u, v = as_matrix(u), as_matrix(v)
    if u.shape != v.shape[::-1]:
        raise ValueError(f"trace pairing needs transposed shapes, got {u.shape} and {v.shape}")
    return complex(np.einsum("rs,sr->", u, v))


def hs_inner(u, v) -> complex:
    """Hilbert-Schmidt inner product ``trace(u @ v^*)``, linear in ``u``."""
    u, v = as_matrix(u), as_matrix(v)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    return complex(np.vdot(v, u))
