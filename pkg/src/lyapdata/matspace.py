"""Rank-aware dense subspace utilities over matrix spaces.

Everything in this package shares one vectorization convention: ``vec``
stacks matrix columns (Fortran order), so the Lyapunov-type map
``P -> A P + P A^T`` becomes multiplication by the Kronecker sum
``kron(I, A) + kron(A, I)``.

Rank decisions are never made by exact comparison.  Singular values below
``rank_tol * sigma_max`` count as zero and subspace questions are settled
by projection residuals.  Basis output is canonicalized (SVD ordering, the
first nonzero coordinate of every basis vector made positive) so repeated
runs produce identical arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-9

# Orthonormality slack accepted when a basis is handed in from outside.
ORTHO_TOL = 1e-8


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array, raising on anything else."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_square(M, name: str = "matrix") -> np.ndarray:
    """Like :func:`as_matrix` but additionally requires a square shape."""
    A = as_matrix(M, name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    return A


def vec(M) -> np.ndarray:
    """Column-stacking vectorization of a matrix."""
    return np.asarray(M, dtype=float).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec` for a ``rows x cols`` matrix."""
    w = np.asarray(v, dtype=float).reshape(-1)
    if w.size != rows * cols:
        raise ValueError(f"cannot reshape length {w.size} into {rows}x{cols}")
    return w.reshape((rows, cols), order="F")


def kron_sum_operator(A) -> np.ndarray:
    """Matrix of the map ``P -> A P + P A^T`` under column stacking.

    Parameters
    ----------
    A : (n, n) array_like
        Square coefficient matrix.

    Returns
    -------
    (n*n, n*n) ndarray
        The matrix ``M`` with ``M @ vec(P) == vec(A P + P A^T)`` for every
        ``n x n`` matrix ``P``.
    """
    A = as_square(A, "A")
    n = A.shape[0]
    eye = np.eye(n)
    return np.kron(eye, A) + np.kron(A, eye)


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    """Flip column signs so the first nonzero coordinate is positive."""
    if V.size == 0:
        return V
    W = V.copy()
    for j in range(W.shape[1]):
        col = W[:, j]
        scale = np.max(np.abs(col))
        if scale == 0.0:
            continue
        idx = int(np.argmax(np.abs(col) > 1e-12 * scale))
        if col[idx] < 0.0:
            W[:, j] = -col
    return W


def kernel_basis(M, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical null space of ``M``.

    Parameters
    ----------
    M : (m, N) array_like
        Matrix whose kernel is wanted.  ``m == 0`` is allowed and yields the
        identity basis of the full space.
    rank_tol : float
        Relative singular-value threshold; values below
        ``rank_tol * sigma_max`` are treated as zero.

    Returns
    -------
    (N, k) ndarray
        Orthonormal columns spanning the kernel, sign-canonicalized and in
        SVD order.  ``k == 0`` for a full-rank ``M``.
    """
    if rank_tol <= 0.0:
        raise ValueError("rank_tol must be positive")
    M = as_matrix(M, "M")
    N = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(N)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.eye(N)
    rank = int(np.sum(s > rank_tol * smax))
    return _canonical_signs(vt[rank:].T)


def column_space_basis(M, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical column space of ``M``.

    Parameters
    ----------
    M : (m, N) array_like
    rank_tol : float
        Relative singular-value threshold, as in :func:`kernel_basis`.

    Returns
    -------
    (m, r) ndarray
        Orthonormal columns with the same image as ``M``; ``r`` is the
        numerical rank.  Columns are ordered by singular value and
        sign-canonicalized.
    """
    if rank_tol <= 0.0:
        raise ValueError("rank_tol must be positive")
    M = as_matrix(M, "M")
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return np.zeros((M.shape[0], 0))
    rank = int(np.sum(s > rank_tol * smax))
    return _canonical_signs(u[:, :rank])


@dataclass(frozen=True)
class MatrixSubspace:
    """A linear subspace of ``rows x cols`` matrices.

    The subspace is stored through ``vecs``, whose columns are the
    vectorized basis elements.  Basis columns must be orthonormal under the
    Frobenius inner product (equivalently, the Euclidean one after ``vec``).
    An empty basis (``dim == 0``) represents the zero subspace.
    """

    rows: int
    cols: int
    vecs: np.ndarray

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("ambient dimensions must be positive")
        V = np.array(self.vecs, dtype=float, copy=True)
        if V.ndim != 2 or V.shape[0] != self.rows * self.cols:
            raise ValueError(
                f"basis array must have shape ({self.rows * self.cols}, k), got {V.shape}"
            )
        if not np.all(np.isfinite(V)):
            raise ValueError("basis contains non-finite entries")
        if V.shape[1]:
            gram = V.T @ V
            if np.max(np.abs(gram - np.eye(V.shape[1]))) > ORTHO_TOL:
                raise ValueError("basis columns are not orthonormal")
        V.setflags(write=False)
        object.__setattr__(self, "vecs", V)

    @classmethod
    def zero(cls, rows: int, cols: int) -> "MatrixSubspace":
        return cls(rows, cols, np.zeros((rows * cols, 0)))

    @classmethod
    def full(cls, rows: int, cols: int) -> "MatrixSubspace":
        return cls(rows, cols, np.eye(rows * cols))

    @classmethod
    def from_matrices(cls, mats, rows: int | None = None, cols: int | None = None,
                      rank_tol: float = DEFAULT_RANK_TOL) -> "MatrixSubspace":
        """Orthonormalized span of the given matrices (may be dependent)."""
        mats = [as_matrix(M, "basis matrix") for M in mats]
        if not mats:
            if rows is None or cols is None:
                raise ValueError("empty matrix list needs explicit rows and cols")
            return cls.zero(rows, cols)
        r, c = mats[0].shape
        if rows is not None and (rows, cols) != (r, c):
            raise ValueError(f"matrices have shape {(r, c)}, expected {(rows, cols)}")
        for M in mats:
            if M.shape != (r, c):
                raise ValueError("all matrices must share one shape")
        stacked = np.column_stack([vec(M) for M in mats])
        return cls(r, c, column_space_basis(stacked, rank_tol))

    @property
    def dim(self) -> int:
        return self.vecs.shape[1]

    def matrix(self, i: int) -> np.ndarray:
        return unvec(self.vecs[:, i], self.rows, self.cols)

    def matrices(self) -> list[np.ndarray]:
        return [self.matrix(i) for i in range(self.dim)]

    def project(self, w) -> np.ndarray:
        """Orthogonal projection of a vectorized matrix onto the subspace."""
        w = np.asarray(w, dtype=float).reshape(-1)
        if self.dim == 0:
            return np.zeros_like(w)
        return self.vecs @ (self.vecs.T @ w)


@dataclass(frozen=True)
class AffineMatrixSet:
    """An affine subspace ``{base + sum_i c_i * direction_i}`` of matrices."""

    base: np.ndarray
    directions: MatrixSubspace

    def __post_init__(self):
        B = as_matrix(self.base, "base")
        if B.shape != (self.directions.rows, self.directions.cols):
            raise ValueError(
                f"base shape {B.shape} does not match ambient "
                f"({self.directions.rows}, {self.directions.cols})"
            )
        B = B.copy()
        B.setflags(write=False)
        object.__setattr__(self, "base", B)

    @classmethod
    def singleton(cls, B) -> "AffineMatrixSet":
        B = as_matrix(B, "base")
        return cls(B, MatrixSubspace.zero(*B.shape))

    @property
    def rows(self) -> int:
        return self.directions.rows

    @property
    def cols(self) -> int:
        return self.directions.cols

    @property
    def n(self) -> int:
        if self.rows != self.cols:
            raise ValueError("affine set is not over square matrices")
        return self.rows

    @property
    def dim(self) -> int:
        return self.directions.dim

    def member(self, coeffs=()) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float).reshape(-1)
        if c.size != self.dim:
            raise ValueError(f"expected {self.dim} coefficients, got {c.size}")
        if c.size == 0:
            return self.base.copy()
        return self.base + unvec(self.directions.vecs @ c, self.rows, self.cols)

    def direction_matrices(self) -> list[np.ndarray]:
        return self.directions.matrices()

    def residual_of(self, M) -> float:
        """Distance from ``M`` to the affine set (Frobenius norm)."""
        d = vec(as_matrix(M, "M") - self.base)
        return float(np.linalg.norm(d - self.directions.project(d)))

    def contains(self, M, tol: float = 1e-8) -> bool:
        M = as_matrix(M, "M")
        scale = 1.0 + float(np.linalg.norm(M - self.base))
        return self.residual_of(M) <= tol * scale

    def complement_projector(self) -> np.ndarray:
        """Projector onto the orthogonal complement of the direction span."""
        N = self.rows * self.cols
        V = self.directions.vecs
        return np.eye(N) - V @ V.T


def solve_affine_system(C, rhs, rows: int, cols: int,
                        rank_tol: float = DEFAULT_RANK_TOL,
                        rhs_slack: float = 0.0) -> AffineMatrixSet | None:
    """Solution set of ``C @ vec(X) == rhs`` as an affine set of matrices.

    Parameters
    ----------
    C : (m, rows*cols) array_like
        Stacked linear constraints in vectorized form.
    rhs : (m,) array_like
    rows, cols : int
        Ambient matrix shape.
    rank_tol : float
        Governs both the consistency decision and the kernel rank cut.
    rhs_slack : float
        Extra absolute allowance on the consistency residual, used when the
        right-hand side itself carries a disclosed error (for example
        finite-difference derivatives).

    Returns
    -------
    AffineMatrixSet or None
        ``None`` when the system is inconsistent, i.e. the least-squares
        residual exceeds ``rank_tol * (1 + ||rhs||) + rhs_slack``.  The base
        point of a consistent system is the minimum-norm solution.
    """
    C = as_matrix(C, "constraint matrix")
    b = np.asarray(rhs, dtype=float).reshape(-1)
    if C.shape[1] != rows * cols:
        raise ValueError(f"constraint matrix has {C.shape[1]} columns, expected {rows * cols}")
    if C.shape[0] != b.size:
        raise ValueError("constraint matrix and right-hand side sizes disagree")
    if C.shape[0] == 0:
        return AffineMatrixSet(np.zeros((rows, cols)), MatrixSubspace.full(rows, cols))
    x, *_ = np.linalg.lstsq(C, b, rcond=None)
    residual = float(np.linalg.norm(C @ x - b))
    if residual > rank_tol * (1.0 + float(np.linalg.norm(b))) + rhs_slack:
        return None
    K = kernel_basis(C, rank_tol)
    return AffineMatrixSet(unvec(x, rows, cols), MatrixSubspace(rows, cols, K))


def affine_intersect(s1: AffineMatrixSet, s2: AffineMatrixSet,
                     rank_tol: float = DEFAULT_RANK_TOL) -> AffineMatrixSet | None:
    """Intersection of two affine matrix sets, or ``None`` when disjoint.

    Both sets are rewritten as linear constraint systems in vectorized form
    (membership in an affine set is annihilation by the complement projector)
    and the stacked system is solved once.  Disjointness is decided by the
    relative least-squares residual against ``rank_tol``.
    """
    if (s1.rows, s1.cols) != (s2.rows, s2.cols):
        raise ValueError(
            f"ambient shapes differ: {(s1.rows, s1.cols)} vs {(s2.rows, s2.cols)}"
        )
    C1 = s1.complement_projector()
    C2 = s2.complement_projector()
    C = np.vstack([C1, C2])
    d = np.concatenate([C1 @ vec(s1.base), C2 @ vec(s2.base)])
    return solve_affine_system(C, d, s1.rows, s1.cols, rank_tol)
