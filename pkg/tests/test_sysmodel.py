import numpy as np
import pytest

from lyapdata.matspace import MatrixSubspace, vec
from lyapdata.sysmodel import (
    BoundedAffinePrior,
    Dataset,
    InconsistentDataError,
    PriorValidation,
    SubspaceActionPrior,
    UnconstrainedPrior,
    consistent_set,
    data_consistent_set,
    effective_rank_tol,
    prior_affine_hull,
    validate_prior,
)
from lyapdata.trajgen import simulate_trajectory
from support import (
    A_REF,
    E11,
    E12,
    E21,
    E22,
    random_regular,
    reference_dataset,
    reference_prior,
    rng_for,
)


class TestDataset:
    def test_x0_is_first_sample(self):
        ds = reference_dataset()
        assert np.allclose(ds.x0, [1.0, 0.0])
        assert ds.n == 2
        assert ds.sample_count == 8

    def test_rejects_decreasing_times(self):
        with pytest.raises(ValueError):
            Dataset(times=[0.0, 0.0], states=np.zeros((2, 2)))

    def test_rejects_negative_start(self):
        with pytest.raises(ValueError):
            Dataset(times=[-1.0, 0.0], states=np.zeros((2, 2)))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(times=[], states=np.zeros((0, 2)))

    def test_deriv_shape_must_match(self):
        with pytest.raises(ValueError):
            Dataset(times=[0.0], states=np.zeros((1, 2)), derivs=np.zeros((1, 3)))


class TestPriorTypes:
    def test_bounded_rejects_dependent_directions(self):
        with pytest.raises(ValueError):
            BoundedAffinePrior(base=np.zeros((2, 2)),
                               directions=(E11, 2.0 * E11),
                               bounds=((None, None), (None, None)))

    def test_bounded_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            BoundedAffinePrior(base=np.zeros((2, 2)), directions=(E11,),
                               bounds=((1.0, 1.0),))

    def test_subspace_action_shape_check(self):
        with pytest.raises(ValueError):
            SubspaceActionPrior(vectors=np.zeros((2, 1)), images=np.zeros((2, 2)))


class TestDataConsistentSet:
    def test_reference_trajectory_pins_first_column(self):
        # x(t) = [exp(-t), 0] reveals only the action on e1.
        S = data_consistent_set(reference_dataset())
        assert S.dim == 2
        assert np.allclose(S.base, [[-1.0, 0.0], [0.0, 0.0]], atol=1e-9)
        for D in S.direction_matrices():
            assert np.allclose(D[:, 0], 0.0, atol=1e-9)

    def test_zero_trajectory_constrains_nothing(self):
        ds = simulate_trajectory(A_REF, [0.0, 0.0], [0.0, 0.5, 1.0])
        S = data_consistent_set(ds)
        assert S.dim == 4
        assert np.allclose(S.base, 0.0)

    def test_spanning_samples_identify_the_matrix(self):
        rng = rng_for(20)
        for trial in range(10):
            n = int(rng.integers(2, 5))
            A = random_regular(rng, n)
            x0 = rng.standard_normal(n)
            ds = simulate_trajectory(A, x0, np.linspace(0.0, 1.0, n + 2))
            S = data_consistent_set(ds)
            assert S.dim == 0
            assert np.allclose(S.base, A, atol=1e-7)

    def test_requires_derivatives(self):
        ds = Dataset(times=[0.0, 1.0], states=np.ones((2, 2)))
        with pytest.raises(ValueError, match="derivatives"):
            data_consistent_set(ds)

    def test_corrupt_data_detected(self):
        # Derivatives incompatible with any linear map on these states.
        ds = Dataset(times=[0.0, 1.0],
                     states=np.array([[1.0, 0.0], [2.0, 0.0]]),
                     derivs=np.array([[1.0, 0.0], [5.0, 0.0]]),
                     exact=True)
        with pytest.raises(InconsistentDataError):
            data_consistent_set(ds)

    def test_truth_always_contained(self):
        rng = rng_for(21)
        for trial in range(20):
            n = int(rng.integers(2, 5))
            A = random_regular(rng, n)
            x0 = rng.standard_normal(n)
            k = int(rng.integers(1, n + 3))
            times = np.linspace(0.0, 1.5, k)
            S = data_consistent_set(simulate_trajectory(A, x0, times))
            assert S.residual_of(A) <= 1e-8

    def test_monotone_in_data(self):
        rng = rng_for(22)
        A = random_regular(rng, 3)
        x0 = rng.standard_normal(3)
        grid = np.linspace(0.0, 2.0, 8)
        dims = []
        for k in (1, 2, 3, 5, 8):
            ds = simulate_trajectory(A, x0, grid[:k])
            dims.append(data_consistent_set(ds).dim)
        assert all(a >= b for a, b in zip(dims, dims[1:]))


class TestPriorAffineHull:
    def test_reference_prior_hull_drops_bounds(self):
        hull = prior_affine_hull(reference_prior(), 2)
        assert hull.dim == 3
        # Entry (2,2) stays pinned at -2 across the hull.
        for D in hull.direction_matrices():
            assert abs(D[1, 1]) <= 1e-12
        assert hull.base[1, 1] == pytest.approx(-2.0)

    def test_unconstrained_full_space(self):
        hull = prior_affine_hull(UnconstrainedPrior(), 2)
        assert hull.dim == 4
        assert np.allclose(hull.base, 0.0)

    def test_subspace_action_pins_column(self):
        pk = SubspaceActionPrior(vectors=np.array([[0.0], [1.0]]),
                                 images=np.array([[1.0], [-2.0]]))
        hull = prior_affine_hull(pk, 2)
        assert hull.dim == 2
        member = hull.member(np.zeros(2))
        assert np.allclose(member[:, 1], [1.0, -2.0], atol=1e-10)
        for D in hull.direction_matrices():
            assert np.allclose(D[:, 1], 0.0, atol=1e-10)

    def test_inconsistent_subspace_action(self):
        # Same vector cannot map to two different images.
        pk = SubspaceActionPrior(vectors=np.array([[1.0, 1.0], [0.0, 0.0]]),
                                 images=np.array([[1.0, 2.0], [0.0, 0.0]]))
        with pytest.raises(InconsistentDataError):
            prior_affine_hull(pk, 2)


class TestConsistentSet:
    def test_reference_pair_leaves_one_direction(self):
        S = consistent_set(reference_dataset(), reference_prior())
        assert S is not None
        assert S.dim == 1
        assert np.allclose(S.base, [[-1.0, 0.0], [0.0, -2.0]], atol=1e-9)
        assert np.allclose(np.abs(S.directions.matrix(0)), E12, atol=1e-9)

    def test_unconstrained_prior_returns_data_set(self):
        ds = reference_dataset()
        S = consistent_set(ds, UnconstrainedPrior())
        S_data = data_consistent_set(ds)
        assert S is not None
        assert S.dim == S_data.dim
        assert S.residual_of(S_data.base) <= 1e-9

    def test_contradiction_is_empty(self):
        # Data pin entry (1,1) to -1; the prior pins it to 0.
        prior = BoundedAffinePrior(base=np.zeros((2, 2)),
                                   directions=(E12, E21, E22),
                                   bounds=((None, None),) * 3)
        assert consistent_set(reference_dataset(), prior) is None

    def test_truth_contained_on_synthetic_pairs(self):
        rng = rng_for(23)
        for trial in range(20):
            n = int(rng.integers(2, 4))
            A = random_regular(rng, n)
            ds = simulate_trajectory(A, rng.standard_normal(n),
                                     np.linspace(0.0, 1.0, int(rng.integers(1, n + 2))))
            Y0 = rng.standard_normal((n, 1))
            pk = SubspaceActionPrior(vectors=Y0, images=A @ Y0)
            S = consistent_set(ds, pk)
            assert S is not None
            assert S.residual_of(A) <= 1e-8

    def test_monotone_in_knowledge(self):
        # Removing a prior direction (pinning its parameter) cannot enlarge
        # the remaining freedom.
        ds = reference_dataset()
        full = BoundedAffinePrior(base=np.array([[0.0, 1.0], [0.0, -2.0]]),
                                  directions=(E11, E21, E12),
                                  bounds=((None, None),) * 3)
        pinned = BoundedAffinePrior(base=np.array([[0.0, 1.0], [0.0, -2.0]]),
                                    directions=(E11, E21),
                                    bounds=((None, None),) * 2)
        d_full = consistent_set(ds, full).dim
        d_pinned = consistent_set(ds, pinned).dim
        assert d_pinned <= d_full


class TestEffectiveRankTol:
    def test_exact_data_unchanged(self):
        assert effective_rank_tol(reference_dataset(), 1e-9) == 1e-9

    def test_approximate_data_loosened(self):
        ds = Dataset(times=[0.0, 1.0], states=np.ones((2, 2)),
                     derivs=np.zeros((2, 2)), exact=False)
        assert effective_rank_tol(ds, 1e-9) == pytest.approx(1e-7)


class TestValidatePrior:
    def test_reference_prior_with_truth(self):
        # Entry (1,2) of the truth is 1, strictly inside (0, 2).
        outcome = validate_prior(reference_prior(), truth=A_REF)
        assert outcome is PriorValidation.VALIDATED_GIVEN_TRUTH

    def test_truth_on_bound_endpoint_is_hard_error(self):
        prior = BoundedAffinePrior(base=np.zeros((2, 2)), directions=(E11,),
                                   bounds=((0.0, 1.0),))
        with pytest.raises(InconsistentDataError, match="interval"):
            validate_prior(prior, truth=E11)  # theta = 1.0 == upper end

    def test_truth_outside_hull_is_hard_error(self):
        prior = BoundedAffinePrior(base=np.zeros((2, 2)), directions=(E11,),
                                   bounds=((None, None),))
        with pytest.raises(InconsistentDataError, match="hull"):
            validate_prior(prior, truth=E22)

    def test_unconstrained_always_validated(self):
        assert validate_prior(UnconstrainedPrior()) is PriorValidation.VALIDATED

    def test_declared_convex_classes_validated_without_truth(self):
        assert validate_prior(reference_prior()) is PriorValidation.VALIDATED
        pk = SubspaceActionPrior(vectors=np.eye(2), images=A_REF)
        assert validate_prior(pk) is PriorValidation.VALIDATED

    def test_subspace_action_truth_checked(self):
        pk = SubspaceActionPrior(vectors=np.eye(2), images=A_REF)
        assert validate_prior(pk, truth=A_REF) is PriorValidation.VALIDATED_GIVEN_TRUTH
        with pytest.raises(InconsistentDataError):
            validate_prior(pk, truth=np.zeros((2, 2)))

    def test_unknown_class_not_checkable(self):
        class OddPrior:
            pass

        assert validate_prior(OddPrior()) is PriorValidation.NOT_CHECKABLE
