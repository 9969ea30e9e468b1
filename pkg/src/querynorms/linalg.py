"""Dense complex matrix kernel.

Everything downstream (norm SDPs, witness checks, the reflection-product
simulator) funnels through the handful of primitives here: Hermitian
eigendecomposition, spectral norms via the Hermitian dilation, Schur and
Kronecker products, Gram/PSD factorization, and orthogonal-complement bases.
All arithmetic is double precision; matrices are plain numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RANK_TOL = 1e-10


class NotPsdError(ValueError):
    """Raised when a matrix required to be PSD has a genuinely negative eigenvalue."""


def as_matrix(a, square: bool = False) -> np.ndarray:
    """Coerce to a finite 2-d complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix has non-finite entries")
    if square and m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        return False
    scale = 1.0 + float(np.max(np.abs(a))) if a.size else 1.0
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)


def spectral_norm(a) -> float:
    """Largest singular value.

    Hermitian inputs use their eigenvalues directly; everything else goes
    through the dilation [[0, A], [A^H, 0]] so a single Hermitian eigensolver
    backs all spectral computations.
    """
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    if is_hermitian(a):
        h = (a + a.conj().T) / 2
        return float(np.max(np.abs(np.linalg.eigvalsh(h))))
    r, c = a.shape
    dil = np.zeros((r + c, r + c), dtype=np.complex128)
    dil[:r, r:] = a
    dil[r:, :r] = a.conj().T
    return float(np.max(np.abs(np.linalg.eigvalsh(dil))))


@dataclass(frozen=True)
class HermitianEig:
    """Eigendecomposition a = V diag(w) V^H with w ascending and V unitary."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def hermitian_eig(a) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix with a fixed phase gauge.

    The phase of each eigenvector is normalized so its largest-magnitude
    component is real nonnegative, making outputs reproducible.
    """
    a = as_matrix(a, square=True)
    if not is_hermitian(a):
        raise ValueError("hermitian_eig requires a Hermitian matrix")
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    for k in range(v.shape[1]):
        idx = int(np.argmax(np.abs(v[:, k])))
        pivot = v[idx, k]
        if abs(pivot) > 0:
            v[:, k] *= np.conj(pivot) / abs(pivot)
    return HermitianEig(eigenvalues=w, eigenvectors=v)


def schur(a, b) -> np.ndarray:
    """Entrywise (Schur/Hadamard) product."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch in Schur product: {a.shape} vs {b.shape}")
    return a * b


def kron(a, b) -> np.ndarray:
    """Kronecker product; index (x, alpha) maps to x * rows(b) + alpha."""
    return np.kron(as_matrix(a), as_matrix(b))


def psd_factorize(g, rank_tol: float = RANK_TOL, norm_floor: float = 0.0) -> list[np.ndarray]:
    """Vectors {w_x} with <w_x|w_y> = g[x, y], Gram-factorizing a PSD matrix.

    The vector dimension is the number of eigenvalues above rank_tol * ||g||;
    slightly negative eigenvalues (above -rank_tol * ||g||) are clamped to 0.
    Raises NotPsdError below that. `norm_floor` substitutes for ||g|| in the
    threshold when g is known to be a small piece of a larger-scale problem.
    """
    g = as_matrix(g, square=True)
    if not is_hermitian(g):
        raise ValueError("psd_factorize requires a Hermitian matrix")
    eig = hermitian_eig(g)
    w, v = eig.eigenvalues, eig.eigenvectors
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    floor = rank_tol * max(norm, norm_floor)
    if w.size and float(w[0]) < -floor:
        raise NotPsdError(f"matrix is not PSD: min eigenvalue {w[0]:.3e} < {-floor:.3e}")
    keep = w > floor
    lam = w[keep]
    cols = v[:, keep]
    # w_x[k] = sqrt(lam_k) * conj(V[x, k]) so that <w_x|w_y> reproduces g.
    factors = cols.conj() * np.sqrt(lam)
    return [factors[x, :].copy() for x in range(g.shape[0])]


def complement_basis(spanning, rank_tol: float = RANK_TOL, dim: int | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the orthogonal complement of a span.

    Rank is decided by singular values above rank_tol times the largest one.
    An empty spanning set returns the full standard basis of C^dim.
    """
    vectors = [np.asarray(v, dtype=np.complex128).ravel() for v in spanning]
    if not vectors:
        if dim is None:
            raise ValueError("dim is required when the spanning set is empty")
        return np.eye(dim, dtype=np.complex128)
    d = vectors[0].size
    if any(v.size != d for v in vectors):
        raise ValueError("spanning vectors must share a common dimension")
    if dim is not None and dim != d:
        raise ValueError(f"dim={dim} does not match vector dimension {d}")
    rows = np.array([v.conj() for v in vectors])  # rows are bras; kernel = complement
    _, s, vh = np.linalg.svd(rows)
    top = float(s[0]) if s.size else 0.0
    rank = int(np.sum(s > rank_tol * top)) if top > 0 else 0
    return vh[rank:, :].conj().T.copy()


def complement_projector(spanning, rank_tol: float = RANK_TOL, dim: int | None = None) -> np.ndarray:
    """Projection onto the orthogonal complement of the span."""
    basis = complement_basis(spanning, rank_tol=rank_tol, dim=dim)
    return basis @ basis.conj().T
