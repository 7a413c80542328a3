"""Matrix norms over the operator Hilbert space, realised as ``S_2^m``.

For ``x = [x_ij]`` the norm is the square root of the operator norm of the
``n^2 x n^2`` Gram arrangement whose entry at row ``(i, k)`` and column
``(j, l)`` is ``<x_ij, x_kl>`` (Hilbert-Schmidt inner product). Writing
``x = sum_a X_a (x) T_a`` over an orthonormal basis ``T_a`` this arrangement
is ``sum_a X_a (x) conj(X_a)``.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .matcore import as_matrix, op_norm
from .opmatrix import BlockMatrix, pad_square

__all__ = [
    "gram_arrangement",
    "oh_matrix_norm",
    "oh_column_norm",
    "CmpCheck",
    "cmp_check_oh",
]


def gram_arrangement(x: BlockMatrix) -> np.ndarray:
    x = pad_square(x)
    n = x.outer_shape[0]
    g = np.einsum("ijrs,klrs->ikjl", x.data, x.data.conj(), optimize=True)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("Gram arrangement overflowed")
    return g.reshape(n * n, n * n)


def oh_matrix_norm(x: BlockMatrix) -> float:
    return float(np.sqrt(op_norm(gram_arrangement(x))))


def oh_column_norm(entries: Sequence) -> float:
    """Closed form ``(sum_ij |<a_i, a_j>|^2)^(1/4)`` for a column ``[a_1 ... a_n]^t``."""
    mats = [as_matrix(e) for e in entries]
    if not mats:
        raise ValueError("column must have at least one entry")
    if len({m.shape for m in mats}) != 1:
        raise ValueError("column entries must share one shape")
    vecs = np.array([m.ravel() for m in mats])
    gram = vecs @ vecs.conj().T
    return float(np.sqrt(np.linalg.norm(gram)))


class CmpCheck(NamedTuple):
    matrix_norm: float
    column_norm: float
    ok: bool


def cmp_check_oh(x: BlockMatrix, tol: float = 1e-9) -> CmpCheck:
    """Compare ``||x||`` with the norm of the column stacking all entries column-major."""
    x = pad_square(x)
    matrix_norm = oh_matrix_norm(x)
    column_norm = oh_column_norm(x.entries(order="F"))
    return CmpCheck(matrix_norm, column_norm, matrix_norm <= column_norm + tol)
