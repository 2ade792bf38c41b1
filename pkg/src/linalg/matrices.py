# src/linalg/matrices.py
import logging
from typing import List, Tuple, Union

import numpy as np
import numpy.typing as npt
import scipy.linalg

from src.errors import ConvergenceError, DimensionError, RankError

logger = logging.getLogger(__name__)

# --- Type Aliases ---
RealMatrix = npt.NDArray[np.float64]
ComplexMatrix = npt.NDArray[np.complex128]
Matrix = Union[RealMatrix, ComplexMatrix]

# --- Numerical Constants ---
POWER_ITERATION_CAP = 10_000
POWER_ITERATION_RTOL = 1e-12
EIGENSOLVE_MAX_DIM = 64
RANK_RTOL = 1e-12
MAX_DENSE_DIM = 2048


def as_matrix(a) -> Matrix:
    """Validates a dense 2-D finite array and returns it as float64/complex128."""
    arr = np.asarray(a)
    if arr.ndim != 2:
        raise DimensionError(f"Expected a 2-D matrix, got shape {arr.shape}")
    if max(arr.shape) > MAX_DENSE_DIM:
        raise DimensionError(f"Matrix shape {arr.shape} exceeds the dense envelope n <= {MAX_DENSE_DIM}")
    arr = arr.astype(np.complex128 if np.iscomplexobj(arr) else np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise DimensionError("Matrix has non-finite entries")
    return arr


def is_complex(a: Matrix) -> bool:
    return np.iscomplexobj(a)


def hs_inner(a: Matrix, b: Matrix) -> Union[float, complex]:
    """Hilbert-Schmidt inner product Tr(A B^T), or Tr(A B^*) for complex input."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"Shape mismatch in hs_inner: {a.shape} vs {b.shape}")
    value = np.sum(a * np.conj(b))
    if np.iscomplexobj(value):
        return complex(value)
    return float(value)


def hs_norm(a: Matrix) -> float:
    return float(np.sqrt(np.real(hs_inner(a, a))))


def op_norm(a: Matrix) -> float:
    """Largest singular value.

    Small matrices go through a symmetric eigensolve of A^*A; larger ones use
    power iteration from a fixed start vector.
    """
    a = as_matrix(a)
    gram = np.conj(a.T) @ a
    if min(a.shape) <= EIGENSOLVE_MAX_DIM:
        top = scipy.linalg.eigvalsh(gram, subset_by_index=[gram.shape[0] - 1, gram.shape[0] - 1])[0]
        return float(np.sqrt(max(top, 0.0)))
    return _power_iteration_norm(gram)


def _power_iteration_norm(gram: Matrix) -> float:
    start = np.random.default_rng(0).standard_normal(gram.shape[0])
    v = start / np.linalg.norm(start)
    estimate = 0.0
    for iteration in range(1, POWER_ITERATION_CAP + 1):
        w = gram @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        new_estimate = float(np.real(np.vdot(v, w)))
        v = w / norm_w
        if iteration > 1 and abs(new_estimate - estimate) <= POWER_ITERATION_RTOL * abs(new_estimate):
            logger.debug(f"Power iteration converged after {iteration} iterations")
            return float(np.sqrt(max(new_estimate, 0.0)))
        estimate = new_estimate
    raise ConvergenceError("Power iteration did not converge", iterations=POWER_ITERATION_CAP)


def qr_decompose(a: Matrix) -> Tuple[Matrix, Matrix]:
    """QR factorization with the diagonal of R made real and strictly positive."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"qr_decompose expects a square matrix, got {a.shape}")
    q, r = scipy.linalg.qr(a)
    diag = np.diag(r)
    scale = np.max(np.abs(diag)) if diag.size else 0.0
    if scale == 0.0 or np.min(np.abs(diag)) <= RANK_RTOL * scale:
        raise RankError(f"Matrix is numerically singular (min |R_ii| = {np.min(np.abs(diag)):.3e})")
    phases = diag / np.abs(diag)
    q = q * phases[np.newaxis, :]
    r = np.conj(phases)[:, np.newaxis] * r
    return q, r


# --- Plain-text Serialization ---

def dump_matrix(a: Matrix) -> str:
    """Header "rows cols real|complex" then whitespace-separated row-major entries."""
    a = as_matrix(a)
    kind = "complex" if is_complex(a) else "real"
    lines = [f"{a.shape[0]} {a.shape[1]} {kind}"]
    for row in a:
        if kind == "complex":
            lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
        else:
            lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


def load_matrix(text: str) -> Matrix:
    tokens = text.split()
    if len(tokens) < 3:
        raise DimensionError("Matrix text is missing its 'rows cols kind' header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError as e:
        raise DimensionError(f"Bad matrix header: {' '.join(tokens[:3])}") from e
    kind = tokens[2]
    if kind not in ("real", "complex"):
        raise DimensionError(f"Unknown matrix kind '{kind}'")
    values = [float(t) for t in tokens[3:]]
    per_entry = 2 if kind == "complex" else 1
    if len(values) != rows * cols * per_entry:
        raise DimensionError(
            f"Expected {rows * cols * per_entry} numbers for a {rows}x{cols} {kind} matrix, got {len(values)}"
        )
    arr = np.asarray(values, dtype=np.float64)
    if kind == "complex":
        arr = arr[0::2] + 1j * arr[1::2]
    return as_matrix(arr.reshape(rows, cols))


def load_family(text: str) -> List[Matrix]:
    """Several matrices in one document, separated by blank lines."""
    blocks = [b for b in text.strip().split("\n\n") if b.strip()]
    return [load_matrix(b) for b in blocks]


def dump_family(family: List[Matrix]) -> str:
    return "\n".join(dump_matrix(m) for m in family)
