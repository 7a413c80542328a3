"""Operator-space matrix norms over finite-dimensional Schatten classes."""

from .matcore import PExponent, hs_inner, kron, op_norm, schatten_norm, svd_values, trace_pairing
from .ohnorm import cmp_check_oh, gram_arrangement, oh_column_norm, oh_matrix_norm
from .opmatrix import BlockMatrix, block_transpose, compress, entry_transpose, flatten, pad_square
from .pnorm import (
    NormEstimate,
    OptimizerConfig,
    interpolation_upper,
    m1_norm_dual,
    maximize_compression,
    mn_schatten_norm,
    schatten_gradient,
)
from .witnesses import cb_transpose_witness, make_A, make_B, matrix_unit, paper_witness_ab

__version__ = "0.1.0"
