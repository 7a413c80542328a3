"""Block matrices ``x = [x_ij]`` with matrix-valued entries.

A :class:`BlockMatrix` of outer shape ``(n, q)`` and inner shape ``(m, m')``
is stored densely as a read-only array of shape ``(n, q, m, m')``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import as_matrix

__all__ = [
    "BlockMatrix",
    "flatten",
    "unflatten",
    "block_transpose",
    "entry_transpose",
    "compress",
    "pad_square",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.complex128)
        if arr.ndim != 4 or 0 in arr.shape:
            raise ValueError(f"block matrix needs a non-empty 4-index array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("block matrix has non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def zeros(cls, n: int, q: int, m: int, mp: int) -> "BlockMatrix":
        return cls(np.zeros((n, q, m, mp), dtype=np.complex128))

    @classmethod
    def from_blocks(cls, blocks, n: int | None = None, q: int | None = None) -> "BlockMatrix":
        """Build from a nested list ``blocks[i][j]`` or a dict ``{(i, j): block}``.

        Dict keys are 1-based, matching the usual ``x_ij`` notation; missing
        blocks are zero.
        """
        if isinstance(blocks, dict):
            shapes = {as_matrix(b).shape for b in blocks.values()}
            if len(shapes) != 1:
                raise ValueError(f"blocks must share one inner shape, got {sorted(shapes)}")
            (m, mp), = shapes
            n = n or max(i for i, _ in blocks)
            q = q or max(j for _, j in blocks)
            arr = np.zeros((n, q, m, mp), dtype=np.complex128)
            for (i, j), b in blocks.items():
                if not (1 <= i <= n and 1 <= j <= q):
                    raise ValueError(f"block index {(i, j)} outside outer shape {(n, q)}")
                arr[i - 1, j - 1] = as_matrix(b)
            return cls(arr)
        rows = [[as_matrix(b) for b in row] for row in blocks]
        shapes = {b.shape for row in rows for b in row}
        if len(shapes) != 1 or len({len(r) for r in rows}) != 1:
            raise ValueError("blocks must form a rectangular grid of equally shaped matrices")
        return cls(np.array(rows))

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    @property
    def outer_shape(self) -> tuple[int, int]:
        return self.data.shape[:2]

    @property
    def inner_shape(self) -> tuple[int, int]:
        return self.data.shape[2:]

    def block(self, i: int, j: int) -> np.ndarray:
        """Block ``x_ij`` with 1-based indices."""
        return self.data[i - 1, j - 1]

    def entries(self, order: str = "F") -> list[np.ndarray]:
        """All blocks in column-major (``"F"``) or row-major (``"C"``) order."""
        n, q = self.outer_shape
        if order == "F":
            return [self.data[i, j] for j in range(q) for i in range(n)]
        return [self.data[i, j] for i in range(n) for j in range(q)]

    def is_column(self) -> bool:
        return not np.any(self.data[:, 1:])

    def is_row(self) -> bool:
        return not np.any(self.data[1:, :])

    def conj(self) -> "BlockMatrix":
        return BlockMatrix(self.data.conj())

    def __mul__(self, c) -> "BlockMatrix":
        return BlockMatrix(self.data * c)

    __rmul__ = __mul__

    def __add__(self, other: "BlockMatrix") -> "BlockMatrix":
        return BlockMatrix(self.data + other.data)

    def allclose(self, other: "BlockMatrix", atol: float = 1e-12) -> bool:
        return self.shape == other.shape and np.allclose(self.data, other.data, rtol=0, atol=atol)

    def to_json(self) -> dict:
        n, q, m, mp = self.shape
        blocks = []
        for i in range(n):
            for j in range(q):
                b = self.data[i, j]
                if np.any(b):
                    blocks.append({"i": i + 1, "j": j + 1,
                                   "re": b.real.tolist(), "im": b.imag.tolist()})
        return {"n": n, "q": q, "m": m, "m'": mp, "blocks": blocks}

    @classmethod
    def from_json(cls, obj: dict) -> "BlockMatrix":
        try:
            n, q, m, mp = (int(obj[k]) for k in ("n", "q", "m", "m'"))
            arr = np.zeros((n, q, m, mp), dtype=np.complex128)
            for blk in obj.get("blocks", []):
                i, j = int(blk["i"]), int(blk["j"])
                if not (1 <= i <= n and 1 <= j <= q):
                    raise ValueError(f"block index {(i, j)} outside outer shape {(n, q)}")
                re = np.asarray(blk["re"], dtype=float)
                im = np.asarray(blk.get("im", np.zeros_like(re)), dtype=float)
                arr[i - 1, j - 1] = (re + 1j * im).reshape(m, mp)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed block matrix JSON: {exc}") from exc
        return cls(arr)


def flatten(x: BlockMatrix) -> np.ndarray:
    """The ``(n*m, q*m')`` scalar matrix obtained by expanding every block in place."""
    n, q, m, mp = x.shape
    return x.data.transpose(0, 2, 1, 3).reshape(n * m, q * mp)


def unflatten(X, n: int, q: int) -> BlockMatrix:
    X = as_matrix(X)
    rows, cols = X.shape
    if rows % n or cols % q:
        raise ValueError(f"shape {X.shape} does not split into {n}x{q} blocks")
    m, mp = rows // n, cols // q
    return BlockMatrix(X.reshape(n, m, q, mp).transpose(0, 2, 1, 3))


def block_transpose(x: BlockMatrix) -> BlockMatrix:
    """``[x_ij] -> [x_ji]``; the blocks themselves are left untouched."""
    return BlockMatrix(x.data.transpose(1, 0, 2, 3))


def entry_transpose(x: BlockMatrix) -> BlockMatrix:
    """``[x_ij] -> [x_ij^T]``: transpose every block in place (``id (x) t``)."""
    return BlockMatrix(x.data.transpose(0, 1, 3, 2))


def compress(a, x: BlockMatrix, b) -> BlockMatrix:
    """Two-sided scalar product ``a x b``: block ``(i, j)`` is ``sum_kl a_ik x_kl b_lj``."""
    a, b = as_matrix(a), as_matrix(b)
    n, q = x.outer_shape
    if a.shape[1] != n or b.shape[0] != q:
        raise ValueError(f"cannot compress outer shape {(n, q)} by {a.shape} and {b.shape}")
    return BlockMatrix(np.einsum("ik,klrs,lj->ijrs", a, x.data, b, optimize=True))


def pad_square(x: BlockMatrix) -> BlockMatrix:
    """Embed an ``n x q`` block matrix into the ``max(n, q)`` square one with zero blocks."""
    n, q, m, mp = x.shape
    if n == q:
        return x
    k = max(n, q)
    arr = np.zeros((k, k, m, mp), dtype=np.complex128)
    arr[:n, :q] = x.data
    return BlockMatrix(arr)


def matrix_to_json(x) -> dict:
    x = as_matrix(x)
    return {"rows": x.shape[0], "cols": x.shape[1],
            "re": x.real.ravel().tolist(), "im": x.imag.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; entries are row-major, ``im`` optional."""
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        re = np.asarray(obj["re"], dtype=float).ravel()
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float).ravel()
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {re.size} real and {im.size} imaginary")
    return as_matrix((re + 1j * im).reshape(rows, cols))
