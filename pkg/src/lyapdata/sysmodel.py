"""Datasets, prior knowledge classes, and the candidate sets they induce.

A trajectory fragment of ``xdot = A x`` pins the unknown ``A`` down to the
affine set of matrices reproducing the sampled states and derivatives.
Prior knowledge contributes a second candidate set.  All informativity
logic downstream works on the affine hulls of these sets and on their
intersection, which is what this module constructs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .matspace import (
    DEFAULT_RANK_TOL,
    AffineMatrixSet,
    MatrixSubspace,
    affine_intersect,
    as_matrix,
    as_square,
    solve_affine_system,
    vec,
)

# Rank decisions on finite-difference data are loosened by this factor.
APPROXIMATE_RANK_LOOSENING = 100.0


class InconsistentDataError(ValueError):
    """Provided information contradicts itself (data, knowledge, or both)."""


@dataclass(frozen=True)
class Dataset:
    """Time-stamped state samples, optionally with state derivatives.

    ``states`` holds one sample per row.  ``exact`` marks derivatives that
    are exact by construction (simulation); finite-difference derivatives
    are approximate and carry a truncation estimate in ``deriv_error``.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray | None = None
    exact: bool = False
    deriv_error: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        X = as_matrix(self.states, "states")
        if t.size == 0:
            raise ValueError("dataset needs at least one sample")
        if X.shape[0] != t.size:
            raise ValueError(f"{t.size} times but {X.shape[0]} state rows")
        if X.shape[1] == 0:
            raise ValueError("state dimension must be positive")
        if not np.all(np.isfinite(t)):
            raise ValueError("times contain non-finite entries")
        if t[0] < 0.0 or (t.size > 1 and np.any(np.diff(t) <= 0.0)):
            raise ValueError("times must be nonnegative and strictly increasing")
        D = self.derivs
        if D is not None:
            D = as_matrix(D, "derivs")
            if D.shape != X.shape:
                raise ValueError(f"derivs shape {D.shape} does not match states {X.shape}")
            D = D.copy()
            D.setflags(write=False)
        if self.deriv_error < 0.0:
            raise ValueError("deriv_error cannot be negative")
        t = t.copy()
        X = X.copy()
        t.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", X)
        object.__setattr__(self, "derivs", D)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def sample_count(self) -> int:
        return self.states.shape[0]

    @property
    def x0(self) -> np.ndarray:
        return self.states[0].copy()

    @property
    def state_matrix(self) -> np.ndarray:
        """States as columns, n x m."""
        return self.states.T.copy()

    @property
    def deriv_matrix(self) -> np.ndarray:
        if self.derivs is None:
            raise ValueError("dataset carries no derivatives")
        return self.derivs.T.copy()


@dataclass(frozen=True)
class BoundedAffinePrior:
    """Candidates ``base + sum_i theta_i D_i`` with each theta in an open interval.

    The direction matrices must be linearly independent.  Interval ends may
    be infinite; an exactly known entry is expressed by absorbing it into
    ``base`` and omitting the corresponding direction.
    """

    base: np.ndarray
    directions: tuple = ()
    bounds: tuple = ()

    def __post_init__(self):
        B = as_square(self.base, "base")
        dirs = tuple(as_square(D, "direction") for D in self.directions)
        for D in dirs:
            if D.shape != B.shape:
                raise ValueError("direction shape does not match base")
        bounds = []
        if len(self.bounds) != len(dirs):
            raise ValueError(f"{len(dirs)} directions but {len(self.bounds)} bounds")
        for k, (lo, hi) in enumerate(self.bounds):
            lo = float(-np.inf if lo is None else lo)
            hi = float(np.inf if hi is None else hi)
            if np.isnan(lo) or np.isnan(hi) or not lo < hi:
                raise ValueError(f"bound {k} is not a nonempty open interval: ({lo}, {hi})")
            bounds.append((lo, hi))
        if dirs:
            stacked = np.column_stack([vec(D) for D in dirs])
            rank = int(np.linalg.matrix_rank(stacked, tol=None))
            if rank != len(dirs):
                raise ValueError("direction matrices are linearly dependent")
        B = B.copy()
        B.setflags(write=False)
        object.__setattr__(self, "base", B)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "bounds", tuple(bounds))

    @property
    def n(self) -> int:
        return self.base.shape[0]


@dataclass(frozen=True)
class SubspaceActionPrior:
    """Every candidate matrix maps the columns of ``vectors`` to ``images``."""

    vectors: np.ndarray
    images: np.ndarray

    def __post_init__(self):
        Y = as_matrix(self.vectors, "vectors")
        G = as_matrix(self.images, "images")
        if Y.shape != G.shape:
            raise ValueError(f"vectors shape {Y.shape} differs from images shape {G.shape}")
        if Y.shape[1] == 0:
            raise ValueError("need at least one vector")
        Y = Y.copy()
        G = G.copy()
        Y.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "vectors", Y)
        object.__setattr__(self, "images", G)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class UnconstrainedPrior:
    """No prior knowledge: every square matrix is a candidate."""


PriorKnowledge = BoundedAffinePrior | SubspaceActionPrior | UnconstrainedPrior


class PriorValidation(enum.Enum):
    """Outcome of checking the interior-point condition on a prior."""

    VALIDATED = "validated"
    VALIDATED_GIVEN_TRUTH = "validated_given_truth"
    NOT_CHECKABLE = "not_checkable"


def effective_rank_tol(ds: Dataset, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Rank tolerance to use with this dataset.

    Finite-difference derivatives are approximate, so rank decisions made on
    such data are loosened by :data:`APPROXIMATE_RANK_LOOSENING`.
    """
    return rank_tol if ds.exact else rank_tol * APPROXIMATE_RANK_LOOSENING


def data_consistent_set(ds: Dataset, rank_tol: float = DEFAULT_RANK_TOL) -> AffineMatrixSet:
    """Affine set of all matrices reproducing the sampled states/derivatives.

    Solves ``M X0 = X1`` for the unknown dynamics ``M``, where ``X0`` stacks
    state samples as columns and ``X1`` the matching derivatives.  The base
    point is the minimum-norm particular solution and the directions span
    everything the samples do not see.  Raises
    :class:`InconsistentDataError` when no matrix fits the samples, which
    signals corrupt data (or noise beyond the disclosed estimate).
    """
    if ds.derivs is None:
        raise ValueError(
            "dataset carries no derivatives; simulate with exact derivatives "
            "or run trajgen.estimate_derivatives first"
        )
    tol = effective_rank_tol(ds, rank_tol)
    n = ds.n
    X0 = ds.state_matrix
    X1 = ds.deriv_matrix
    C = np.kron(X0.T, np.eye(n))
    rhs = vec(X1)
    slack = 10.0 * ds.deriv_error * float(np.sqrt(rhs.size))
    S = solve_affine_system(C, rhs, n, n, tol, rhs_slack=slack)
    if S is None:
        raise InconsistentDataError(
            "state and derivative samples are not consistent with any linear "
            "dynamics at the working tolerance"
        )
    return S


def prior_affine_hull(pk: PriorKnowledge, n: int,
                      rank_tol: float = DEFAULT_RANK_TOL) -> AffineMatrixSet:
    """Affine hull of a prior-knowledge set.

    Open parameter bounds do not shrink the hull, so a bounded-parameter
    prior simply contributes ``base + span(directions)``.
    """
    if isinstance(pk, UnconstrainedPrior):
        return AffineMatrixSet(np.zeros((n, n)), MatrixSubspace.full(n, n))
    if isinstance(pk, BoundedAffinePrior):
        if pk.n != n:
            raise ValueError(f"prior is over {pk.n}x{pk.n} matrices, expected {n}x{n}")
        dirs = MatrixSubspace.from_matrices(pk.directions, n, n, rank_tol)
        return AffineMatrixSet(pk.base, dirs)
    if isinstance(pk, SubspaceActionPrior):
        if pk.n != n:
            raise ValueError(f"prior is over {pk.n}x{pk.n} matrices, expected {n}x{n}")
        C = np.kron(pk.vectors.T, np.eye(n))
        S = solve_affine_system(C, vec(pk.images), n, n, rank_tol)
        if S is None:
            raise InconsistentDataError(
                "prior knowledge is self-contradictory: no matrix maps the "
                "given vectors to the given images"
            )
        return S
    raise TypeError(f"unsupported prior knowledge type: {type(pk).__name__}")


def consistent_set(ds: Dataset, pk: PriorKnowledge,
                   rank_tol: float = DEFAULT_RANK_TOL) -> AffineMatrixSet | None:
    """Intersection of the data-consistent set with the prior's affine hull.

    Returns ``None`` when data and prior contradict each other outright;
    in the noise-free setting this can only happen through modeling error
    or corrupted inputs.
    """
    S_data = data_consistent_set(ds, rank_tol)
    S_prior = prior_affine_hull(pk, ds.n, rank_tol)
    return affine_intersect(S_data, S_prior, effective_rank_tol(ds, rank_tol))


def validate_prior(pk: PriorKnowledge, truth=None,
                   rank_tol: float = DEFAULT_RANK_TOL) -> PriorValidation:
    """Check the interior-point premise the informativity theory rests on.

    All supported prior classes are convex, and each equals its own relative
    interior (open bounds, or an affine set), so asserting membership of the
    true dynamics is enough.  With ``truth`` supplied the membership is
    verified rather than assumed; a true matrix sitting outside the prior,
    or exactly on an open bound, is a hard error.  Unknown prior classes
    come back :data:`PriorValidation.NOT_CHECKABLE` instead of being
    silently accepted.
    """
    if isinstance(pk, UnconstrainedPrior):
        return (PriorValidation.VALIDATED_GIVEN_TRUTH if truth is not None
                else PriorValidation.VALIDATED)
    if isinstance(pk, BoundedAffinePrior):
        if truth is None:
            return PriorValidation.VALIDATED
        T = as_square(truth, "truth")
        if T.shape != pk.base.shape:
            raise ValueError("truth matrix shape does not match the prior")
        delta = vec(T - pk.base)
        p = len(pk.directions)
        if p:
            Dmat = np.column_stack([vec(D) for D in pk.directions])
            theta, *_ = np.linalg.lstsq(Dmat, delta, rcond=None)
            residual = float(np.linalg.norm(Dmat @ theta - delta))
        else:
            theta = np.zeros(0)
            residual = float(np.linalg.norm(delta))
        if residual > rank_tol * (1.0 + float(np.linalg.norm(delta))):
            raise InconsistentDataError(
                "true matrix is not in the prior's affine hull "
                f"(residual {residual:.3e})"
            )
        for k, (t_k, (lo, hi)) in enumerate(zip(theta, pk.bounds)):
            if not (lo < t_k < hi):
                raise InconsistentDataError(
                    f"true matrix sits on or outside the open parameter "
                    f"interval {k}: theta={t_k:.6g} not strictly inside ({lo}, {hi})"
                )
        return PriorValidation.VALIDATED_GIVEN_TRUTH
    if isinstance(pk, SubspaceActionPrior):
        if truth is None:
            return PriorValidation.VALIDATED
        T = as_square(truth, "truth")
        residual = float(np.linalg.norm(T @ pk.vectors - pk.images))
        if residual > rank_tol * (1.0 + float(np.linalg.norm(pk.images))):
            raise InconsistentDataError(
                f"true matrix violates the prior's subspace action (residual {residual:.3e})"
            )
        return PriorValidation.VALIDATED_GIVEN_TRUTH
    return PriorValidation.NOT_CHECKABLE
