from src.linalg.matrices import (
    ComplexMatrix,
    Matrix,
    RealMatrix,
    as_matrix,
    dump_family,
    dump_matrix,
    hs_inner,
    hs_norm,
    load_family,
    load_matrix,
    op_norm,
    qr_decompose,
)
from src.linalg.gram import (
    GramData,
    diagonal_example_family,
    diagonal_example_gram,
    gram_matrix,
    gram_schmidt_hs,
    mix_reduction,
)
