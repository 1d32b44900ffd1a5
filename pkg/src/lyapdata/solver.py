"""Solve the Lyapunov equation directly from an informative candidate set.

When a data-knowledge pair is jointly informative, every candidate matrix
with a uniquely solvable Lyapunov equation yields the same solution, so it
suffices to pick any such member of the affine candidate set and solve once.
A cheap post-hoc solve at a second member turns that premise into a runtime
check instead of silent garbage when callers skip the informativity checker.

The reduced path exploits structured knowledge: when every candidate acts
identically on a known column space ``Z``, the solution factors as
``Z W Z^T`` and only the ``r x r`` block ``W`` has to be solved for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lyapcore import DEFAULT_GAP_TOL, is_lyapunov_regular, solve_lyapunov
from .matspace import (
    DEFAULT_RANK_TOL,
    ORTHO_TOL,
    AffineMatrixSet,
    as_matrix,
    as_square,
    unvec,
    vec,
)

# Relative disagreement accepted between solves at two independent members.
INTEGRITY_RTOL = 1e-6

MAX_PICK_ATTEMPTS = 64


class NoRegularMemberError(RuntimeError):
    """No member of the candidate set passed the unique-solvability test.

    Matrices failing the test form a measure-zero set, so this is
    overwhelmingly the signature of a degenerate candidate set.
    """


class SolutionIntegrityError(RuntimeError):
    """Two members of a supposedly informative set gave different solutions."""


class ReducedRankError(RuntimeError):
    """The reduced system is rank deficient, so its solution is not unique."""


class ReducedResidualError(RuntimeError):
    """The reduced system is inconsistent: the pair is not informative for this Q."""


@dataclass(frozen=True)
class ReducedSolution:
    """Solution of the reduced solve: ``P = Z @ W @ Z.T``."""

    W: np.ndarray
    Z: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        err = float(np.linalg.norm(self.P - self.Z @ self.W @ self.Z.T))
        if err > 1e-10 * (1.0 + float(np.linalg.norm(self.P))):
            raise ValueError("P does not factor as Z W Z^T")


def pick_regular_member(S: AffineMatrixSet, gap_tol: float = DEFAULT_GAP_TOL,
                        seed=0, max_attempts: int = MAX_PICK_ATTEMPTS,
                        skip_base: bool = False) -> np.ndarray:
    """A member of ``S`` whose Lyapunov equation is uniquely solvable.

    Tries the base point first, then base plus seeded standard-normal
    coefficient combinations of the directions with the scale doubling each
    attempt.  ``skip_base`` forces a random member, which is used to obtain
    a second, independent pick.
    """
    n = S.n
    rng = np.random.default_rng(seed)
    if not skip_base and is_lyapunov_regular(S.base, gap_tol):
        return S.base.copy()
    if S.dim == 0:
        if skip_base and is_lyapunov_regular(S.base, gap_tol):
            return S.base.copy()
        raise NoRegularMemberError(
            f"the single candidate ({n}x{n}) fails the unique-solvability test"
        )
    scale = 1.0
    for _ in range(max_attempts):
        candidate = S.member(scale * rng.standard_normal(S.dim))
        if is_lyapunov_regular(candidate, gap_tol):
            return candidate
        scale = min(2.0 * scale, 2.0 ** 40)
    raise NoRegularMemberError(
        f"no candidate passed the unique-solvability test in {max_attempts} attempts; "
        "the candidate set appears degenerate"
    )


def solve_from_data(S: AffineMatrixSet, Q, gap_tol: float = DEFAULT_GAP_TOL,
                    seed: int = 0) -> np.ndarray:
    """Lyapunov solution shared by every member of an informative set.

    The caller is responsible for establishing informativity (see the
    informativity module).  A spot check against a second, independently
    picked member raises :class:`SolutionIntegrityError` when the premise is
    violated.
    """
    Q = as_square(Q, "Q")
    member = pick_regular_member(S, gap_tol, seed)
    P = solve_lyapunov(member, Q, gap_tol)
    second = pick_regular_member(S, gap_tol, [int(seed), 1], skip_base=True)
    P2 = solve_lyapunov(second, Q, gap_tol)
    drift = float(np.linalg.norm(P2 - P))
    if drift > INTEGRITY_RTOL * (1.0 + float(np.linalg.norm(P))):
        raise SolutionIntegrityError(
            f"solutions at two members differ by {drift:.3e}; "
            "the pair is not informative for this Q"
        )
    return P


def reduced_operator(member, Z) -> np.ndarray:
    """Vectorized operator of ``W -> member (Z W Z^T) + (Z W Z^T) member^T``.

    The returned matrix has shape ``(n*n, r*r)``: the reduced solve has
    exactly ``r**2`` unknowns.
    """
    member = as_square(member, "member")
    Z = as_matrix(Z, "Z")
    if Z.shape[0] != member.shape[0]:
        raise ValueError("Z row count does not match the member dimension")
    AZ = member @ Z
    return np.kron(Z, AZ) + np.kron(AZ, Z)


def solve_reduced(member, Z, Q, rank_tol: float = DEFAULT_RANK_TOL) -> ReducedSolution:
    """Solve ``member P + P member^T = -Q`` under the factorization ``P = Z W Z^T``.

    ``member`` must belong to the candidate set and pass the
    unique-solvability test, and ``Z`` must have orthonormal columns.  Rank
    deficiency of the assembled system contradicts those premises and raises
    :class:`ReducedRankError`; an inconsistent system means the pair is not
    informative for this ``Q`` and raises :class:`ReducedResidualError`.
    """
    member = as_square(member, "member")
    Z = as_matrix(Z, "Z")
    Q = as_square(Q, "Q")
    n = member.shape[0]
    r = Z.shape[1]
    if Z.shape[0] != n or Q.shape[0] != n:
        raise ValueError("member, Z, and Q dimensions are inconsistent")
    if r and np.max(np.abs(Z.T @ Z - np.eye(r))) > ORTHO_TOL:
        raise ValueError("Z must have orthonormal columns")
    op = reduced_operator(member, Z)
    assert op.shape == (n * n, r * r)
    if r:
        s = np.linalg.svd(op, compute_uv=False)
        rank = int(np.sum(s > rank_tol * s[0])) if s[0] > 0.0 else 0
        if rank < r * r:
            raise ReducedRankError(
                f"reduced system has rank {rank} with {r * r} unknowns; "
                "the member or Z violates the reduced solve's premises"
            )
    w, *_ = np.linalg.lstsq(op, -vec(Q), rcond=None)
    residual = float(np.linalg.norm(op @ w + vec(Q)))
    if residual > rank_tol * (1.0 + float(np.linalg.norm(Q))):
        raise ReducedResidualError(
            f"reduced system residual {residual:.3e} exceeds tolerance; "
            "the pair is not informative for this Q"
        )
    W = unvec(w, r, r)
    return ReducedSolution(W=W, Z=Z, P=Z @ W @ Z.T)
