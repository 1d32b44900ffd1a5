"""Shared fixtures-by-hand: reference values and randomized instance factories."""

import numpy as np

from lyapdata.informativity import common_lyapunov_kernel
from lyapdata.lyapcore import is_lyapunov_regular
from lyapdata.matspace import (
    AffineMatrixSet,
    MatrixSubspace,
    column_space_basis,
    kernel_basis,
    vec,
)
from lyapdata.sysmodel import (
    BoundedAffinePrior,
    SubspaceActionPrior,
    UnconstrainedPrior,
    consistent_set,
)
from lyapdata.trajgen import simulate_trajectory

# Running 2x2 reference problem used throughout: known dynamics, a
# nonsymmetric right-hand side, and the unique solution.
A_REF = np.array([[-1.0, 1.0], [0.0, -2.0]])
Q_REF = np.array([[2.0, 3.0], [-3.0, 0.0]])
P_REF = np.array([[1.0, 1.0], [-1.0, 0.0]])

E11 = np.array([[1.0, 0.0], [0.0, 0.0]])
E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
E21 = np.array([[0.0, 0.0], [1.0, 0.0]])
E22 = np.array([[0.0, 0.0], [0.0, 1.0]])


def reference_dataset(samples=8, t_end=2.0):
    times = np.linspace(0.0, t_end, samples, endpoint=False)
    return simulate_trajectory(A_REF, [1.0, 0.0], times)


def reference_prior():
    """Entry (1,2) known to sit in (0, 2), entry (2,2) known exactly."""
    return BoundedAffinePrior(
        base=np.array([[0.0, 1.0], [0.0, -2.0]]),
        directions=(E11, E21, E12),
        bounds=((None, None), (None, None), (-1.0, 1.0)),
    )


def reference_consistent_set():
    return consistent_set(reference_dataset(), reference_prior())


def reference_instance_dict(prior="bounded"):
    doc = {
        "n": 2,
        "Q": Q_REF.tolist(),
        "generator": {
            "A": A_REF.tolist(),
            "x0": [1.0, 0.0],
            "times": np.linspace(0.0, 2.0, 8, endpoint=False).tolist(),
        },
        "seed": 0,
    }
    if prior == "bounded":
        doc["prior"] = {
            "type": "bounded_affine",
            "base": [[0.0, 1.0], [0.0, -2.0]],
            "directions": [E11.tolist(), E21.tolist(), E12.tolist()],
            "bounds": [[None, None], [None, None], [-1.0, 1.0]],
        }
    elif prior == "unconstrained":
        doc["prior"] = {"type": "unconstrained"}
    else:
        doc["prior"] = prior
    return doc


def rng_for(*key):
    return np.random.default_rng(list(key))


def random_regular(rng, n, gap_tol=1e-6):
    while True:
        A = rng.standard_normal((n, n))
        if is_lyapunov_regular(A, gap_tol):
            return A


def random_orthogonal(rng, k):
    M = rng.standard_normal((k, k))
    Q, R = np.linalg.qr(M)
    return Q * np.sign(np.diag(R))


def commutation_matrix(n):
    """K with K @ vec(X) == vec(X.T) under column stacking."""
    K = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            K[j + i * n, i + j * n] = 1.0
    return K


def annihilator_directions(P0, rank_tol=1e-9):
    """Orthonormal basis (vectorized) of {X : X P0 + P0 X^T = 0}."""
    n = P0.shape[0]
    op = np.kron(P0.T, np.eye(n)) + np.kron(np.eye(n), P0) @ commutation_matrix(n)
    return kernel_basis(op, rank_tol)


def random_informative_instance(rng, n, d=None):
    """Affine set plus Q constructed to be jointly informative.

    Directions are drawn from the annihilator of a random symmetric matrix,
    which guarantees a nontrivial common kernel; the wanted solution is a
    random kernel element and Q is back-substituted from it.  Returns
    (S, Q, P_expected).
    """
    M = rng.standard_normal((n, n))
    P0 = M @ M.T + 0.1 * np.eye(n)
    ann = annihilator_directions(P0)
    max_d = ann.shape[1]
    if d is None:
        d = int(rng.integers(0, max_d + 1))
    d = min(d, max_d)
    if d:
        rot = random_orthogonal(rng, max_d)[:, :d]
        dirs = MatrixSubspace(n, n, ann @ rot)
    else:
        dirs = MatrixSubspace.zero(n, n)
    A0 = random_regular(rng, n)
    S = AffineMatrixSet(A0, dirs)
    kernel = common_lyapunov_kernel(S.direction_matrices(), n)
    while True:
        c = rng.standard_normal(kernel.dim)
        P_sol = np.reshape(kernel.vecs @ c, (n, n), order="F")
        norm = np.linalg.norm(P_sol)
        if norm > 1e-6:
            P_sol = P_sol / norm
            break
    Q = -(A0 @ P_sol + P_sol @ A0.T)
    return S, Q, P_sol


def random_noninformative_instance(rng, n, d=None):
    """Affine set with generic directions; a random Q is then undecidable.

    The construction rejects the measure-zero accident of Q landing in the
    decidable subspace, keeping a wide margin so verdicts are unambiguous.
    Returns (S, Q).
    """
    if d is None:
        d = int(rng.integers(1, n * n + 1))
    mats = [rng.standard_normal((n, n)) for _ in range(d)]
    dirs = MatrixSubspace.from_matrices(mats)
    A0 = random_regular(rng, n)
    S = AffineMatrixSet(A0, dirs)
    kernel = common_lyapunov_kernel(S.direction_matrices(), n)
    if kernel.dim:
        images = np.column_stack(
            [vec(A0 @ K + K @ A0.T) for K in kernel.matrices()]
        )
    else:
        images = np.zeros((n * n, 0))
    while True:
        Q = rng.standard_normal((n, n))
        qv = vec(Q)
        if images.shape[1]:
            c, *_ = np.linalg.lstsq(images, qv, rcond=None)
            residual = np.linalg.norm(images @ c - qv)
        else:
            residual = np.linalg.norm(qv)
        if residual > 1e-2 * (1.0 + np.linalg.norm(Q)):
            return S, Q


def random_subspace_action_instance(rng, n, informative):
    """Dataset + subspace-action prior; Q chosen per the wanted verdict.

    Returns a dict with the ground truth, dataset, prior, Q, the combined
    column-space basis Z, and the consistent set.
    """
    A = random_regular(rng, n)
    if informative:
        k = int(rng.integers(1, n + 2))
        m = int(rng.integers(1, n + 1))
        Y0 = rng.standard_normal((n, m))
    else:
        k = int(rng.integers(1, n)) if n > 1 else 1
        m = int(rng.integers(1, k + 1))
    x0 = rng.standard_normal(n)
    times = np.concatenate([[rng.uniform(0.0, 0.1)],
                            rng.uniform(0.05, 0.4, size=k - 1)]).cumsum()
    ds = simulate_trajectory(A, x0, times)
    if not informative:
        # Y0 inside the sampled span keeps the combined rank r below n,
        # so the decidable subspace is proper and a generic Q escapes it.
        Y0 = ds.state_matrix @ rng.standard_normal((k, m))
    G = A @ Y0
    pk = SubspaceActionPrior(vectors=Y0, images=G)
    S = consistent_set(ds, pk)
    assert S is not None
    Z = column_space_basis(np.hstack([ds.state_matrix, Y0]))
    r = Z.shape[1]
    if informative:
        W0 = rng.standard_normal((r, r))
        P0 = Z @ W0 @ Z.T
        scale = np.linalg.norm(P0)
        if scale > 1e-9:
            P0 = P0 / scale
        Q = -(A @ P0 + P0 @ A.T)
    else:
        assert r < n
        AZ = S.base @ Z
        op = np.kron(Z, AZ) + np.kron(AZ, Z)
        while True:
            Q = rng.standard_normal((n, n))
            w, *_ = np.linalg.lstsq(op, vec(Q), rcond=None)
            if np.linalg.norm(op @ w - vec(Q)) > 1e-2 * (1.0 + np.linalg.norm(Q)):
                break
    return {"A": A, "ds": ds, "pk": pk, "Q": Q, "Z": Z, "S": S, "r": r}


def random_bounded_dataset_instance(rng, n):
    """Dataset + bounded prior centered strictly around the truth.

    The informativity tag of these instances is not controlled; they
    exercise the bounded sampling path and checker-oracle agreement.
    """
    A = random_regular(rng, n)
    k = int(rng.integers(1, n + 1))
    x0 = rng.standard_normal(n)
    times = np.concatenate([[rng.uniform(0.0, 0.1)],
                            rng.uniform(0.05, 0.4, size=k - 1)]).cumsum()
    ds = simulate_trajectory(A, x0, times)
    p = int(rng.integers(1, n * n + 1))
    dirs = MatrixSubspace.from_matrices(
        [rng.standard_normal((n, n)) for _ in range(p)]
    )
    theta = rng.standard_normal(dirs.dim)
    base = A - np.reshape(dirs.vecs @ theta, (n, n), order="F")
    bounds = []
    for t in theta:
        lo = t - rng.uniform(0.5, 2.0) if rng.random() < 0.8 else None
        hi = t + rng.uniform(0.5, 2.0) if rng.random() < 0.8 else None
        bounds.append((lo, hi))
    pk = BoundedAffinePrior(base=base, directions=tuple(dirs.matrices()),
                            bounds=tuple(bounds))
    S = consistent_set(ds, pk)
    assert S is not None
    return {"A": A, "ds": ds, "pk": pk, "S": S}


def unconstrained():
    return UnconstrainedPrior()
