"""Brute-force verification of informativity verdicts by sampling.

Informativity is a statement quantified over every candidate matrix.  The
checkers decide it algebraically; this module tests it the literal way, by
drawing candidates and comparing their Lyapunov solutions.  A disagreement
between two sampled candidates is a concrete witness of non-informativity;
agreement across the budget corroborates an informative verdict (it can
never prove it, a continuum cannot be exhausted).

Sampling is deterministic given a seed: sample ``k`` draws from its own
stream derived from ``(seed, k)``, so results do not depend on evaluation
order or parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .informativity import Verdict
from .lyapcore import DEFAULT_GAP_TOL, is_lyapunov_regular, solve_lyapunov
from .matspace import AffineMatrixSet, as_square, vec
from .sysmodel import BoundedAffinePrior, PriorKnowledge

DEFAULT_AGREE_TOL = 1e-6
DEFAULT_SAMPLE_COUNT = 32

# Per-sample rejection budget.
MAX_DRAW_ATTEMPTS = 200

# Bounded parameters are drawn from the central fraction of their interval
# so samples stay strictly inside the open bounds.
BOUNDED_DRAW_FRACTION = 0.9


class DegenerateSetError(RuntimeError):
    """The sampling budget ran out without producing a valid candidate."""


@dataclass(frozen=True)
class WitnessPair:
    """Two candidates whose Lyapunov solutions differ."""

    member_a: np.ndarray
    member_b: np.ndarray
    solution_a: np.ndarray
    solution_b: np.ndarray
    spread: float


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the sampling comparison."""

    agree: bool
    solution: np.ndarray | None
    witness: WitnessPair | None
    max_spread: float
    threshold: float
    sample_count: int


@dataclass(frozen=True)
class CrosscheckReport:
    """Checker verdict versus sampling outcome, with the retry policy applied."""

    match: bool
    checker_tag: Verdict
    oracle_outcome: str
    oracle: OracleResult | None
    retried: bool
    note: str = ""


class _BoundedSampler:
    """Coefficient sampler that respects a bounded-parameter prior.

    Draws a target in the prior's parameter coordinates (uniform over the
    central 90% of finite intervals, standard normal around a feasible
    center otherwise), maps it to set coefficients by least squares, and
    leaves infeasible draws to the rejection loop.
    """

    def __init__(self, S: AffineMatrixSet, pk: BoundedAffinePrior):
        self.bounds = pk.bounds
        p = len(pk.directions)
        N = S.n * S.n
        Dmat = (np.column_stack([vec(D) for D in pk.directions])
                if p else np.zeros((N, 0)))
        delta = vec(S.base - pk.base)
        if p:
            theta0, *_ = np.linalg.lstsq(Dmat, delta, rcond=None)
            base_res = float(np.linalg.norm(Dmat @ theta0 - delta))
        else:
            theta0 = np.zeros(0)
            base_res = float(np.linalg.norm(delta))
        if base_res > 1e-6 * (1.0 + float(np.linalg.norm(delta))):
            raise ValueError(
                "candidate set does not lie in the prior's affine hull "
                f"(base residual {base_res:.3e}); set and prior do not belong together"
            )
        if S.dim:
            T, *_ = np.linalg.lstsq(Dmat, S.directions.vecs, rcond=None)
            dir_res = float(np.linalg.norm(Dmat @ T - S.directions.vecs))
            if dir_res > 1e-6 * (1.0 + float(np.linalg.norm(S.directions.vecs))):
                raise ValueError(
                    "candidate set directions leave the prior's affine hull "
                    f"(residual {dir_res:.3e})"
                )
        else:
            T = np.zeros((p, 0))
        self.theta0 = theta0
        self.T = T
        self.centers = np.array([self._center(k) for k in range(p)])
        self.dim = S.dim

    def _center(self, k: int) -> float:
        lo, hi = self.bounds[k]
        t0 = self.theta0[k]
        if np.isfinite(lo) and np.isfinite(hi):
            return 0.5 * (lo + hi)
        if np.isfinite(lo):
            return max(t0, lo + 1.0)
        if np.isfinite(hi):
            return min(t0, hi - 1.0)
        return t0

    def draw_coeffs(self, rng: np.random.Generator) -> np.ndarray:
        target = np.empty(len(self.bounds))
        for k, (lo, hi) in enumerate(self.bounds):
            if np.isfinite(lo) and np.isfinite(hi):
                half = 0.5 * BOUNDED_DRAW_FRACTION * (hi - lo)
                target[k] = rng.uniform(self.centers[k] - half, self.centers[k] + half)
            else:
                target[k] = self.centers[k] + rng.standard_normal()
        if self.dim == 0:
            return np.zeros(0)
        c, *_ = np.linalg.lstsq(self.T, target - self.theta0, rcond=None)
        return c

    def inside_bounds(self, coeffs: np.ndarray) -> bool:
        theta = self.theta0 + (self.T @ coeffs if self.dim else 0.0)
        return all(lo < t < hi for t, (lo, hi) in zip(np.atleast_1d(theta), self.bounds))


def sample_consistent(S: AffineMatrixSet, pk: PriorKnowledge, count: int, seed: int = 0,
                      gap_tol: float = DEFAULT_GAP_TOL,
                      max_attempts: int = MAX_DRAW_ATTEMPTS) -> list[np.ndarray]:
    """Draw ``count`` candidates from the set, honoring the prior's bounds.

    Every sample is a member of ``S``, strictly inside any open parameter
    bounds of a bounded prior, and passes the unique-solvability test.
    Draws that fail are rejected and redrawn; running out of attempts raises
    :class:`DegenerateSetError`.
    """
    if count < 2:
        raise ValueError("count must be at least 2")
    bounded = isinstance(pk, BoundedAffinePrior)
    sampler = _BoundedSampler(S, pk) if bounded else None
    samples: list[np.ndarray] = []
    for k in range(count):
        rng = np.random.default_rng([int(seed), k])
        for _ in range(max_attempts):
            coeffs = sampler.draw_coeffs(rng) if bounded else rng.standard_normal(S.dim)
            if bounded and not sampler.inside_bounds(coeffs):
                continue
            candidate = S.member(coeffs)
            if is_lyapunov_regular(candidate, gap_tol):
                samples.append(candidate)
                break
        else:
            raise DegenerateSetError(
                f"could not draw sample {k} within {max_attempts} attempts; "
                "the candidate set appears degenerate"
            )
    return samples


def brute_force_informative(S: AffineMatrixSet, pk: PriorKnowledge, Q,
                            count: int = DEFAULT_SAMPLE_COUNT, seed: int = 0,
                            agree_tol: float = DEFAULT_AGREE_TOL,
                            gap_tol: float = DEFAULT_GAP_TOL) -> OracleResult:
    """Solve the Lyapunov equation at sampled candidates and compare.

    Agreement means every pairwise solution distance stays within
    ``agree_tol * (1 + ||Q||_F)``; the tolerance is deliberately looser than
    the solver tolerances since a comparison accumulates two solves' errors.
    On disagreement the maximally separated pair is returned as the witness.
    """
    Q = as_square(Q, "Q")
    samples = sample_consistent(S, pk, count, seed, gap_tol)
    solutions = [solve_lyapunov(M, Q, gap_tol) for M in samples]
    V = np.stack([vec(P) for P in solutions])
    dists = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=2)
    flat = int(np.argmax(dists))
    i, j = divmod(flat, len(samples))
    max_spread = float(dists[i, j])
    threshold = agree_tol * (1.0 + float(np.linalg.norm(Q)))
    if max_spread <= threshold:
        return OracleResult(True, solutions[0], None, max_spread, threshold, count)
    witness = WitnessPair(samples[i], samples[j], solutions[i], solutions[j], max_spread)
    return OracleResult(False, None, witness, max_spread, threshold, count)


def crosscheck_verdict(S: AffineMatrixSet, pk: PriorKnowledge, Q, tag: Verdict,
                       count: int = DEFAULT_SAMPLE_COUNT, seed: int = 0,
                       agree_tol: float = DEFAULT_AGREE_TOL,
                       gap_tol: float = DEFAULT_GAP_TOL) -> CrosscheckReport:
    """Compare a checker verdict with the sampling oracle.

    Expected pairings: informative with agreement, not-informative with a
    witness, violated assumption with a degenerate sampling run.  A sampled
    agreement against a not-informative verdict is first retried with four
    times the sample count (sampling can miss the discriminating direction);
    only a persistent agreement counts as a mismatch.
    """
    note = ""

    def run(k: int) -> tuple[OracleResult | None, str]:
        nonlocal note
        try:
            result = brute_force_informative(S, pk, Q, k, seed, agree_tol, gap_tol)
            return result, ("agree" if result.agree else "disagree")
        except DegenerateSetError as exc:
            note = str(exc)
            return None, "degenerate"

    result, status = run(count)
    retried = False
    if tag is Verdict.NOT_INFORMATIVE and status == "agree":
        retried = True
        note = f"sampling miss at {count} samples; retried with {4 * count}"
        result, status = run(4 * count)
    expected = {
        Verdict.INFORMATIVE: "agree",
        Verdict.NOT_INFORMATIVE: "disagree",
        Verdict.ASSUMPTION_VIOLATED: "degenerate",
    }[tag]
    return CrosscheckReport(match=(status == expected), checker_tag=tag,
                            oracle_outcome=status, oracle=result,
                            retried=retried, note=note)
