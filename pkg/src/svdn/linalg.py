"""Dense linear-algebra kernel used by every other module.

All operations take and return plain float64 numpy arrays.  Inputs are
validated (2-D, non-empty, finite) at every public entry point, and the
factorizations are post-processed with fixed sign conventions so that
repeated calls on the same bits return the same bits.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegeneracyError, NumericError, ValidationError


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite float64 2-D array or raise ValidationError."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValidationError(f"{name}: expected a 2-D array, got ndim={m.ndim}")
    if m.shape[0] == 0 or m.shape[1] == 0:
        raise ValidationError(f"{name}: empty matrix of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name}: contains non-finite entries")
    return m


class SvdFactors(NamedTuple):
    """Thin SVD ``w = u @ diag(s) @ vt`` with a deterministic sign choice."""

    u: np.ndarray   # (n, k), orthonormal columns
    s: np.ndarray   # (k,), non-negative, non-increasing
    vt: np.ndarray  # (k, k), orthonormal rows


def svd(w) -> SvdFactors:
    """Thin singular value decomposition of a tall matrix (rows >= cols).

    Each left singular vector is flipped, if needed, so that its
    largest-magnitude entry is non-negative (first such entry on ties);
    the matching row of ``vt`` is flipped to compensate, leaving the
    product unchanged.  This makes the factorization a pure function of
    the input bits.
    """
    w = as_matrix(w, "w")
    n, k = w.shape
    if n < k:
        raise ValidationError(f"w: thin orientation requires rows >= cols, got {n}x{k}")
    try:
        u, s, vt = np.linalg.svd(w, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed to converge: {exc}") from exc
    for j in range(k):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0.0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return SvdFactors(np.ascontiguousarray(u), s, np.ascontiguousarray(vt))


def qr(w) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization of a tall full-column-rank matrix.

    Signs are fixed so the diagonal of ``r`` is non-negative.  A pivot
    with ``|r[i, i]| <= 1e-12 * ||w||_F`` means column ``i`` is linearly
    dependent on the preceding ones and raises DegeneracyError.
    """
    w = as_matrix(w, "w")
    n, k = w.shape
    if n < k:
        raise ValidationError(f"w: thin orientation requires rows >= cols, got {n}x{k}")
    q, r = np.linalg.qr(w)
    tol = 1e-12 * float(np.linalg.norm(w))
    for i in range(k):
        if abs(r[i, i]) <= tol:
            raise DegeneracyError(
                f"w is rank-deficient at column {i}: |r[{i},{i}]| = {abs(r[i, i]):.3e} <= {tol:.3e}"
            )
        if r[i, i] < 0.0:
            q[:, i] = -q[:, i]
            r[i, :] = -r[i, :]
    return np.ascontiguousarray(q), np.ascontiguousarray(r)


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValidationError(f"matmul: inner dimensions differ, {a.shape} x {b.shape}")
    return a @ b


def transpose(a) -> np.ndarray:
    return np.ascontiguousarray(as_matrix(a, "a").T)


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(as_matrix(a, "a")))


def pairwise_sq_dist(a, b) -> np.ndarray:
    """Squared Euclidean distances between the rows of ``a`` and of ``b``.

    Uses the expansion ``(|x|^2 + |y|^2) - 2 x.y`` with every inner
    product accumulated in the same order, which makes the result exactly
    symmetric with a zero diagonal when ``a`` and ``b`` hold the same
    rows, and exactly 0 for bitwise-identical row pairs.  Tiny negatives
    from cancellation are clamped to 0.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValidationError(f"pairwise_sq_dist: row dimensions differ, {a.shape[1]} vs {b.shape[1]}")
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    g = np.einsum("ik,jk->ij", a, b)
    d = a2[:, None] + b2[None, :] - 2.0 * g
    np.maximum(d, 0.0, out=d)
    return d
