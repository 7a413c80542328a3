"""Explicit matrices used by the column-row estimates.

Indices in this module are 1-based, following the ``E_ij`` / ``x_ij``
notation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import as_exponent, op_norm
from .opmatrix import BlockMatrix, entry_transpose, flatten

__all__ = [
    "matrix_unit",
    "make_A",
    "make_B",
    "paper_witness_ab",
    "CbWitness",
    "cb_transpose_witness",
    "WitnessFamily",
    "family",
    "FAMILIES",
]


def matrix_unit(i: int, j: int, m: int, cols: int | None = None) -> np.ndarray:
    """``E_ij`` in ``M_m`` (or ``M_{m, cols}``)."""
    cols = m if cols is None else cols
    if not (1 <= i <= m and 1 <= j <= cols):
        raise ValueError(f"matrix unit index ({i}, {j}) out of range for shape ({m}, {cols})")
    e = np.zeros((m, cols), dtype=np.complex128)
    e[i - 1, j - 1] = 1.0
    return e


def _first_row(n: int, unit) -> BlockMatrix:
    if n < 1:
        raise ValueError("n must be positive")
    arr = np.zeros((n, n, n, n), dtype=np.complex128)
    for j in range(1, n + 1):
        arr[0, j - 1] = unit(j)
    return BlockMatrix(arr)


def make_A(n: int) -> BlockMatrix:
    """First block row ``E_11, E_12, ..., E_1n``; every other block is zero."""
    return _first_row(n, lambda j: matrix_unit(1, j, n))


def make_B(n: int) -> BlockMatrix:
    """First block row ``E_11, E_21, ..., E_n1``; every other block is zero."""
    return _first_row(n, lambda j: matrix_unit(j, 1, n))


def paper_witness_ab(n: int, p) -> tuple[np.ndarray, np.ndarray]:
    """The compression pair ``a = E_11``, ``b = n^(-1/2p) I_n``.

    Both lie on the unit sphere of ``S_2p^n``.
    """
    p = as_exponent(p)
    if p.is_inf:
        raise ValueError("the compression witness is defined for finite p only")
    if n < 1:
        raise ValueError("n must be positive")
    a = matrix_unit(1, 1, n)
    b = n ** (-1.0 / (2.0 * p.p)) * np.eye(n, dtype=np.complex128)
    return a, b


@dataclass(frozen=True)
class CbWitness:
    v: BlockMatrix
    ratio: float


def cb_transpose_witness(n: int) -> CbWitness:
    """Element of ``M_n(M_{n,1})`` on which ``id (x) t_n`` stretches the norm by sqrt(n).

    ``v`` has the standard basis column ``e_i`` in block ``(1, i)``. Its
    flattening contains ``I_n`` and has norm one; transposing each entry
    turns it into a single row of ``n`` ones.
    """
    if n < 1:
        raise ValueError("n must be positive")
    arr = np.zeros((n, n, n, 1), dtype=np.complex128)
    for i in range(n):
        arr[0, i, i, 0] = 1.0
    v = BlockMatrix(arr)
    ratio = op_norm(flatten(entry_transpose(v))) / op_norm(flatten(v))
    return CbWitness(v, ratio)


@dataclass(frozen=True)
class WitnessFamily:
    name: str
    n: int
    payload: BlockMatrix


FAMILIES = ("A", "B", "cbt")


def family(name: str, n: int) -> WitnessFamily:
    if name == "A":
        payload = make_A(n)
    elif name == "B":
        payload = make_B(n)
    elif name in ("cbt", "cb-transpose"):
        name, payload = "cb-transpose", cb_transpose_witness(n).v
    else:
        raise ValueError(f"unknown witness family {name!r}; expected one of {FAMILIES}")
    return WitnessFamily(name, n, payload)
