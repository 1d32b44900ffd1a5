"""Unique-solvability test and dense solver for the Lyapunov equation.

The equation ``A P + P A^T = -Q`` has exactly one solution precisely when no
two eigenvalues of ``A`` (a pair may repeat one eigenvalue) sum to zero.
``spectral_gap`` measures how far a matrix is from violating that condition
and ``solve_lyapunov`` refuses to run when the scaled gap is below tolerance.

The solver path is the dense linear solve of the vectorized n^2 x n^2 system;
the sizes handled here are small and this shares one code path with the
informativity checker.  ``Q`` is not required to be symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matspace import as_square, kron_sum_operator, unvec, vec

DEFAULT_GAP_TOL = 1e-8

# Accepted relative residual of a returned solution.
RESIDUAL_RTOL = 1e-9


class LyapunovRegularityError(ValueError):
    """Raised when an eigenvalue pair of the coefficient matrix sums to ~0."""


@dataclass(frozen=True)
class SpectralGap:
    """Eigenvalues of a matrix and its distance to Lyapunov singularity."""

    eigenvalues: np.ndarray
    min_pair_sum: float
    worst_pair: tuple[complex, complex]

    def __post_init__(self):
        if self.min_pair_sum < 0.0:
            raise ValueError("min_pair_sum cannot be negative")


def spectral_gap(A) -> SpectralGap:
    """Minimum of ``|lambda_i + lambda_j|`` over all ordered eigenvalue pairs.

    Pairs with ``i == j`` are included, so a single eigenvalue at zero
    already drives the gap to zero.
    """
    A = as_square(A, "A")
    try:
        w = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigenvalue computation failed for a {A.shape[0]}x{A.shape[1]} matrix: {exc}"
        ) from exc
    sums = np.abs(w[:, None] + w[None, :])
    flat = int(np.argmin(sums))
    i, j = divmod(flat, w.size)
    return SpectralGap(
        eigenvalues=w,
        min_pair_sum=float(sums[i, j]),
        worst_pair=(complex(w[i]), complex(w[j])),
    )


def is_lyapunov_regular(A, gap_tol: float = DEFAULT_GAP_TOL) -> bool:
    """True when every eigenvalue pair sum clears a scale-aware threshold.

    The test is ``min_pair_sum > gap_tol * (1 + ||A||_F)``; the exact
    condition is an open one, so a relative threshold is what makes it
    meaningful in floating point.
    """
    if gap_tol <= 0.0:
        raise ValueError("gap_tol must be positive")
    A = as_square(A, "A")
    gap = spectral_gap(A)
    return gap.min_pair_sum > gap_tol * (1.0 + float(np.linalg.norm(A)))


def solve_lyapunov(A, Q, gap_tol: float = DEFAULT_GAP_TOL) -> np.ndarray:
    """Unique solution ``P`` of ``A P + P A^T = -Q``.

    Raises :class:`LyapunovRegularityError`, naming the offending eigenvalue
    pair, when the equation is not uniquely solvable at the given tolerance.
    The returned solution always satisfies
    ``||A P + P A^T + Q||_F <= 1e-9 * (1 + ||Q||_F)``; a violation raises.
    """
    A = as_square(A, "A")
    Q = as_square(Q, "Q")
    n = A.shape[0]
    if Q.shape[0] != n:
        raise ValueError(f"A is {n}x{n} but Q is {Q.shape[0]}x{Q.shape[1]}")
    gap = spectral_gap(A)
    if not gap.min_pair_sum > gap_tol * (1.0 + float(np.linalg.norm(A))):
        la, lb = gap.worst_pair
        raise LyapunovRegularityError(
            "Lyapunov equation is not uniquely solvable: eigenvalue pair "
            f"({la:.6g}, {lb:.6g}) sums to {la + lb:.3g} "
            f"(gap {gap.min_pair_sum:.3e} below threshold)"
        )
    op = kron_sum_operator(A)
    P = unvec(np.linalg.solve(op, -vec(Q)), n, n)
    residual = float(np.linalg.norm(A @ P + P @ A.T + Q))
    if residual > RESIDUAL_RTOL * (1.0 + float(np.linalg.norm(Q))):
        raise np.linalg.LinAlgError(
            f"Lyapunov solve residual {residual:.3e} exceeds tolerance; "
            "the problem is too ill-conditioned at this gap tolerance"
        )
    return P
