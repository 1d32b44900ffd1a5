"""Trajectory synthesis and derivative estimation for ingested data.

Simulation attaches exact derivatives ``A x`` so the synthetic pipeline
stays noise-free; ingested datasets without derivatives get second-order
finite differences and are flagged approximate, with a rough truncation
estimate attached that downstream tolerance decisions can disclose.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .matspace import as_square
from .sysmodel import Dataset

DERIVATIVE_SCHEMES = ("central", "forward-backward-ends")


def matrix_exponential(A, t: float) -> np.ndarray:
    """``exp(A t)`` via scaling and squaring (scipy's expm)."""
    A = as_square(A, "A")
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    E = scipy.linalg.expm(A * t)
    if not np.all(np.isfinite(E)):
        raise OverflowError(
            f"matrix exponential overflowed (||A t||_F = {np.linalg.norm(A) * abs(t):.3e})"
        )
    return E


def simulate_trajectory(A, x0, times) -> Dataset:
    """Sample ``x(t) = exp(A t) x0`` at the given times, with exact derivatives."""
    A = as_square(A, "A")
    n = A.shape[0]
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != n:
        raise ValueError(f"x0 has length {x0.size}, expected {n}")
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise ValueError("times must be nonempty")
    if t[0] < 0.0 or (t.size > 1 and np.any(np.diff(t) <= 0.0)):
        raise ValueError("times must be nonnegative and strictly increasing")
    states = np.stack([matrix_exponential(A, tk) @ x0 for tk in t])
    derivs = states @ A.T
    return Dataset(times=t, states=states, derivs=derivs, exact=True, deriv_error=0.0)


def estimate_derivatives(ds: Dataset, scheme: str = "forward-backward-ends") -> Dataset:
    """Attach finite-difference derivatives to a dataset that has none.

    Both schemes use the second-order central formula on the (possibly
    nonuniform) interior grid.  ``"forward-backward-ends"`` keeps the first
    and last samples using one-sided second-order formulas;
    ``"central"`` drops them instead.  The result is flagged approximate and
    carries a rough maximum local truncation estimate.
    """
    if scheme not in DERIVATIVE_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {DERIVATIVE_SCHEMES}")
    if ds.derivs is not None:
        raise ValueError("dataset already carries derivatives")
    if ds.sample_count < 3:
        raise ValueError("second-order differencing needs at least 3 samples")
    t = ds.times
    x = ds.states
    dx = np.gradient(x, t, axis=0, edge_order=2)
    # Truncation is O(h^2 x'''); estimate x''' by differencing twice more.
    d3 = np.gradient(np.gradient(dx, t, axis=0, edge_order=2), t, axis=0, edge_order=2)
    hmax = float(np.max(np.diff(t)))
    est = float(hmax ** 2 * np.max(np.abs(d3)) / 3.0)
    if scheme == "central":
        return Dataset(times=t[1:-1], states=x[1:-1], derivs=dx[1:-1],
                       exact=False, deriv_error=est)
    return Dataset(times=t, states=x, derivs=dx, exact=False, deriv_error=est)
