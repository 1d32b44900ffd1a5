import numpy as np
import pytest

from lyapdata.lyapcore import is_lyapunov_regular, solve_lyapunov
from lyapdata.matspace import AffineMatrixSet, MatrixSubspace, column_space_basis
from lyapdata.solver import (
    NoRegularMemberError,
    ReducedRankError,
    ReducedResidualError,
    SolutionIntegrityError,
    pick_regular_member,
    reduced_operator,
    solve_from_data,
    solve_reduced,
)
from support import (
    E12,
    E22,
    P_REF,
    Q_REF,
    random_informative_instance,
    random_regular,
    random_subspace_action_instance,
    reference_consistent_set,
    rng_for,
)


class TestPickRegularMember:
    def test_base_preferred_when_usable(self):
        S = reference_consistent_set()
        member = pick_regular_member(S, seed=0)
        assert np.allclose(member, [[-1.0, 0.0], [0.0, -2.0]], atol=1e-9)

    def test_all_nilpotent_set_fails(self):
        S = AffineMatrixSet(np.zeros((2, 2)), MatrixSubspace.from_matrices([E12]))
        with pytest.raises(NoRegularMemberError):
            pick_regular_member(S, seed=0, max_attempts=16)

    def test_perturbation_escapes_irregular_base(self):
        # Base diag(1, -1) fails; moving along diag(0, 1) recovers a member.
        S = AffineMatrixSet(np.diag([1.0, -1.0]), MatrixSubspace.from_matrices([E22]))
        member = pick_regular_member(S, seed=3)
        assert is_lyapunov_regular(member)
        assert member[0, 0] == pytest.approx(1.0)
        assert S.residual_of(member) <= 1e-10

    def test_skip_base_returns_a_different_member(self):
        S = reference_consistent_set()
        member = pick_regular_member(S, seed=5, skip_base=True)
        assert S.residual_of(member) <= 1e-10
        assert not np.allclose(member, S.base)

    def test_deterministic_given_seed(self):
        S = reference_consistent_set()
        a = pick_regular_member(S, seed=9, skip_base=True)
        b = pick_regular_member(S, seed=9, skip_base=True)
        assert np.array_equal(a, b)


class TestSolveFromData:
    def test_reference_pair(self):
        P = solve_from_data(reference_consistent_set(), Q_REF, seed=0)
        assert np.allclose(P, P_REF, atol=1e-9)

    def test_explicit_offdiagonal_member_gives_same_solution(self):
        # Any usable member works; this one has a large free entry.
        S = reference_consistent_set()
        member = np.array([[-1.0, 5.0], [0.0, -2.0]])
        assert S.residual_of(member) <= 1e-9
        assert np.allclose(solve_lyapunov(member, Q_REF), P_REF, atol=1e-9)

    def test_singleton(self):
        S = AffineMatrixSet.singleton(-np.eye(2))
        assert np.allclose(solve_from_data(S, np.eye(2)), 0.5 * np.eye(2))

    def test_integrity_check_trips_on_uninformative_set(self):
        # Skipping the checker on a non-informative pair must not yield
        # silent garbage.
        S = AffineMatrixSet(np.array([[-1.0, 0.0], [0.0, 0.0]]),
                            MatrixSubspace.from_matrices([E12, E22]))
        with pytest.raises(SolutionIntegrityError):
            solve_from_data(S, Q_REF, seed=0)

    def test_member_independence_on_informative_instances(self):
        rng = rng_for(50)
        for trial in range(10):
            n = int(rng.integers(2, 5))
            S, Q, P_expected = random_informative_instance(rng, n)
            results = [solve_from_data(S, Q, seed=s) for s in range(10)]
            for P in results:
                drift = np.linalg.norm(P - results[0])
                assert drift <= 1e-7 * (1.0 + np.linalg.norm(results[0]))
                assert np.linalg.norm(P - P_expected) <= 1e-7 * (
                    1.0 + np.linalg.norm(P_expected))

    def test_matches_ground_truth_member(self):
        rng = rng_for(51)
        for trial in range(10):
            n = int(rng.integers(2, 5))
            S, Q, _ = random_informative_instance(rng, n)
            truth = pick_regular_member(S, seed=trial + 100, skip_base=True)
            P = solve_from_data(S, Q, seed=trial)
            P_truth = solve_lyapunov(truth, Q)
            assert np.linalg.norm(P - P_truth) <= 1e-7 * (1.0 + np.linalg.norm(P_truth))


class TestSolveReduced:
    def test_identity_basis_reduces_to_plain_solve(self):
        member = np.array([[-1.0, 5.0], [0.0, -2.0]])
        result = solve_reduced(member, np.eye(2), Q_REF)
        assert np.allclose(result.W, P_REF, atol=1e-9)
        assert np.allclose(result.P, P_REF, atol=1e-9)

    def test_single_column_scalar_equation(self):
        Z = np.array([[1.0], [0.0]])
        member = np.diag([-1.0, -2.0])
        Q = np.array([[2.0, 0.0], [0.0, 0.0]])
        result = solve_reduced(member, Z, Q)
        assert result.W.shape == (1, 1)
        assert result.W[0, 0] == pytest.approx(1.0)
        assert np.allclose(result.P, [[1.0, 0.0], [0.0, 0.0]], atol=1e-10)

    def test_residual_failure_signals_not_informative(self):
        Z = np.array([[1.0], [0.0]])
        member = np.diag([-1.0, -2.0])
        with pytest.raises(ReducedResidualError):
            solve_reduced(member, Z, np.eye(2))

    def test_rank_deficiency_detected(self):
        # A member with mirrored eigenvalues makes the reduced operator
        # singular even on the full basis.
        with pytest.raises(ReducedRankError):
            solve_reduced(np.diag([1.0, -1.0]), np.eye(2), np.eye(2))

    def test_orthonormal_columns_required(self):
        with pytest.raises(ValueError, match="orthonormal"):
            solve_reduced(-np.eye(2), 2.0 * np.eye(2), np.eye(2))

    def test_operator_has_rank_squared_unknowns(self):
        rng = rng_for(52)
        for trial in range(10):
            n = int(rng.integers(2, 5))
            r = int(rng.integers(1, n + 1))
            member = random_regular(rng, n)
            Z = column_space_basis(rng.standard_normal((n, r)))
            op = reduced_operator(member, Z)
            assert op.shape == (n * n, Z.shape[1] ** 2)

    def test_agrees_with_general_path(self):
        rng = rng_for(53)
        for trial in range(10):
            n = int(rng.integers(2, 5))
            inst = random_subspace_action_instance(rng, n, informative=True)
            member = pick_regular_member(inst["S"], seed=trial)
            reduced = solve_reduced(member, inst["Z"], inst["Q"])
            general = solve_from_data(inst["S"], inst["Q"], seed=trial)
            drift = np.linalg.norm(reduced.P - general)
            assert drift <= 1e-7 * (1.0 + np.linalg.norm(general))
