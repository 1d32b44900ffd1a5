"""Joint-informativity checks for the Lyapunov equation.

A data-knowledge pair pins the unknown dynamics down to an affine candidate
set ``A0 + span{A1, ..., Ad}``.  The pair is jointly informative for
``A P + P A^T = -Q`` when every candidate with a uniquely solvable equation
yields the same solution.  Two equivalent algebraic routes decide this:

* system route: the stacked equations ``A0 P + P A0^T = -Q`` and
  ``Ai P + P Ai^T = 0`` have a common solution ``P``;
* subspace route: ``Q`` lies in the image, under ``P -> A0 P + P A0^T``, of
  the common kernel of the direction operators.

The system route is the production path because it yields the solution
directly; the subspace route doubles as an internal consistency oracle and
answers which class of ``Q`` is decidable at all.  The routes must agree.

When the candidate set contains no matrix passing the unique-solvability
test, the question quantifies over an empty set and neither answer is
meaningful; that case is reported as a violated assumption rather than as
either verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .lyapcore import DEFAULT_GAP_TOL
from .matspace import (
    DEFAULT_RANK_TOL,
    ORTHO_TOL,
    AffineMatrixSet,
    MatrixSubspace,
    as_matrix,
    as_square,
    kernel_basis,
    kron_sum_operator,
    unvec,
    vec,
)
from .solver import NoRegularMemberError, pick_regular_member


class Verdict(enum.Enum):
    INFORMATIVE = "informative"
    NOT_INFORMATIVE = "not_informative"
    ASSUMPTION_VIOLATED = "assumption_violated"


@dataclass
class InformativityVerdict:
    """Checker outcome: a tag, the solution when informative, and evidence."""

    tag: Verdict
    solution: np.ndarray | None = None
    certificate: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.tag is Verdict.INFORMATIVE and self.solution is None:
            raise ValueError("informative verdicts must carry a solution")


def common_lyapunov_kernel(directions, n: int,
                           rank_tol: float = DEFAULT_RANK_TOL) -> MatrixSubspace:
    """Matrices ``P`` with ``D P + P D^T = 0`` for every direction ``D``.

    Computed as the intersection of the kernels of the directions'
    Kronecker-sum operators.  No directions means no constraints: the full
    matrix space comes back.
    """
    dirs = [as_square(D, "direction") for D in directions]
    for D in dirs:
        if D.shape != (n, n):
            raise ValueError(f"direction shape {D.shape} does not match n={n}")
    if not dirs:
        return MatrixSubspace.full(n, n)
    stacked = np.vstack([kron_sum_operator(D) for D in dirs])
    return MatrixSubspace(n, n, kernel_basis(stacked, rank_tol))


def _guard_regular_member(S: AffineMatrixSet, gap_tol: float, seed) -> np.ndarray | None:
    try:
        return pick_regular_member(S, gap_tol, seed)
    except NoRegularMemberError:
        return None


def _assumption_violated(reason: str) -> InformativityVerdict:
    return InformativityVerdict(Verdict.ASSUMPTION_VIOLATED, None, {"reason": reason})


_NO_REGULAR_MEMBER = (
    "no candidate matrix passes the unique-solvability test; the "
    "informativity question quantifies over an empty set"
)


def check_informativity(S: AffineMatrixSet, Q,
                        rank_tol: float = DEFAULT_RANK_TOL,
                        gap_tol: float = DEFAULT_GAP_TOL,
                        seed: int = 0) -> InformativityVerdict:
    """System-route informativity check; yields the solution when it exists.

    Stacks the ``d + 1`` vectorized Lyapunov operators into one
    ``(d+1) n^2 x n^2`` least-squares problem with right-hand side
    ``(-vec(Q), 0, ..., 0)``.  The pair is informative exactly when the
    residual stays within ``rank_tol * (1 + ||Q||_F)``; the minimum-norm
    solution is returned, which is only a numerical selection rule because
    the solution value is unique on informative instances.
    """
    Q = as_square(Q, "Q")
    n = S.n
    if Q.shape[0] != n:
        raise ValueError(f"Q is {Q.shape[0]}x{Q.shape[1]} but the set is over {n}x{n}")
    if _guard_regular_member(S, gap_tol, seed) is None:
        return _assumption_violated(_NO_REGULAR_MEMBER)
    blocks = [kron_sum_operator(S.base)]
    blocks.extend(kron_sum_operator(D) for D in S.direction_matrices())
    M = np.vstack(blocks)
    rhs = np.concatenate([-vec(Q), np.zeros(S.dim * n * n)])
    p, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    residual = float(np.linalg.norm(M @ p - rhs))
    threshold = rank_tol * (1.0 + float(np.linalg.norm(Q)))
    certificate = {"route": "system", "residual": residual, "threshold": threshold,
                   "directions": S.dim}
    if residual <= threshold:
        return InformativityVerdict(Verdict.INFORMATIVE, unvec(p, n, n), certificate)
    return InformativityVerdict(Verdict.NOT_INFORMATIVE, None, certificate)


def check_informativity_subspace(S: AffineMatrixSet, Q,
                                 rank_tol: float = DEFAULT_RANK_TOL,
                                 gap_tol: float = DEFAULT_GAP_TOL,
                                 seed: int = 0) -> InformativityVerdict:
    """Subspace-route informativity check; must agree with the system route.

    Maps the common kernel of the direction operators through
    ``P -> A0 P + P A0^T`` and asks whether ``Q`` lies in the spanned
    subspace (the span is sign-symmetric, so the sign of ``Q`` is
    immaterial to the verdict).
    """
    Q = as_square(Q, "Q")
    n = S.n
    if Q.shape[0] != n:
        raise ValueError(f"Q is {Q.shape[0]}x{Q.shape[1]} but the set is over {n}x{n}")
    if _guard_regular_member(S, gap_tol, seed) is None:
        return _assumption_violated(_NO_REGULAR_MEMBER)
    kernel = common_lyapunov_kernel(S.direction_matrices(), n, rank_tol)
    A0 = S.base
    qv = vec(Q)
    threshold = rank_tol * (1.0 + float(np.linalg.norm(Q)))
    certificate: dict[str, Any] = {"route": "subspace", "threshold": threshold,
                                   "kernel_dim": kernel.dim}
    if kernel.dim == 0:
        residual = float(np.linalg.norm(qv))
        certificate["residual"] = residual
        if residual <= threshold:
            return InformativityVerdict(Verdict.INFORMATIVE, np.zeros((n, n)), certificate)
        return InformativityVerdict(Verdict.NOT_INFORMATIVE, None, certificate)
    images = np.column_stack([vec(A0 @ K + K @ A0.T) for K in kernel.matrices()])
    c, *_ = np.linalg.lstsq(images, -qv, rcond=None)
    residual = float(np.linalg.norm(images @ c + qv))
    certificate["residual"] = residual
    if residual <= threshold:
        return InformativityVerdict(
            Verdict.INFORMATIVE, unvec(kernel.vecs @ c, n, n), certificate
        )
    return InformativityVerdict(Verdict.NOT_INFORMATIVE, None, certificate)


def check_informativity_structured(Z, A0, Q,
                                   rank_tol: float = DEFAULT_RANK_TOL,
                                   gap_tol: float = DEFAULT_GAP_TOL,
                                   seed: int = 0) -> InformativityVerdict:
    """Informativity check for the structured case ``{M : (M - A0) Z = 0}``.

    With ``Z`` spanning the column space that every candidate acts on
    identically, a common solution must factor as ``P = Z W Z^T``; the check
    solves for the ``r x r`` block ``W`` directly (``r**2`` unknowns).
    Must agree with the system route applied to the same candidate set.
    """
    Z = as_matrix(Z, "Z")
    A0 = as_square(A0, "A0")
    Q = as_square(Q, "Q")
    n = A0.shape[0]
    r = Z.shape[1]
    if Z.shape[0] != n or Q.shape[0] != n:
        raise ValueError("Z, A0, and Q dimensions are inconsistent")
    if r and np.max(np.abs(Z.T @ Z - np.eye(r))) > ORTHO_TOL:
        raise ValueError("Z must have orthonormal columns")
    directions = kernel_basis(np.kron(Z.T, np.eye(n)), rank_tol)
    S = AffineMatrixSet(A0, MatrixSubspace(n, n, directions))
    if _guard_regular_member(S, gap_tol, seed) is None:
        return _assumption_violated(_NO_REGULAR_MEMBER)
    AZ = A0 @ Z
    op = np.kron(Z, AZ) + np.kron(AZ, Z)
    w, *_ = np.linalg.lstsq(op, -vec(Q), rcond=None)
    residual = float(np.linalg.norm(op @ w + vec(Q)))
    threshold = rank_tol * (1.0 + float(np.linalg.norm(Q)))
    certificate = {"route": "structured", "residual": residual, "threshold": threshold,
                   "rank": r, "unknowns": r * r}
    if residual <= threshold:
        W = unvec(w, r, r)
        return InformativityVerdict(Verdict.INFORMATIVE, Z @ W @ Z.T, certificate)
    return InformativityVerdict(Verdict.NOT_INFORMATIVE, None, certificate)
