import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extreme_effect.core import (
    Decomposition,
    MixtureMatrix,
    SourceDistributions,
    Support,
    apply_permutation,
    basis_from_matrix,
    canonicalize,
    decompose,
    is_feasible,
    linear_independence_report,
    permutation_matrix,
    reconstruct,
    trivial_decomposition,
    validate_distribution,
)
from extreme_effect.errors import (
    BadPermutationError,
    BadTotalError,
    InfeasibleMatrixError,
    LengthMismatchError,
    NegativeMassError,
    SingularMatrixError,
)

FIX2 = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
FIX3 = SourceDistributions.from_rows([[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]])
P27 = np.array([[2 / 7, 5 / 7], [3 / 7, 4 / 7]])


def stochastic(rng, K):
    return rng.dirichlet(np.ones(K), size=K)


@st.composite
def stochastic_matrices(draw, K=None):
    K = K or draw(st.integers(2, 5))
    seed = draw(st.integers(0, 2**32 - 1))
    return stochastic(np.random.default_rng(seed), K)


@st.composite
def sources(draw):
    K = draw(st.integers(2, 4))
    N = draw(st.integers(K, 12))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return SourceDistributions.from_rows(rng.dirichlet(np.ones(N), size=K))


class TestValidation:
    def test_valid_pass_through(self):
        s = Support(("x1", "x2", "x3"))
        d = validate_distribution([0.2, 0.3, 0.5], s)
        assert np.array_equal(d.probs, [0.2, 0.3, 0.5])
        assert not d.renormalized

    def test_bad_total(self):
        with pytest.raises(BadTotalError):
            validate_distribution([0.5, 0.6], Support.range(2))

    def test_negative_mass(self):
        with pytest.raises(NegativeMassError):
            validate_distribution([1.1, -0.1], Support.range(2))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            validate_distribution([1.0], Support.range(2))

    def test_tiny_drift_renormalized(self):
        d = validate_distribution([0.5, 0.5 + 5e-10], Support.range(2))
        assert d.renormalized
        assert abs(d.probs.sum() - 1) <= 1e-15

    def test_tiny_negative_clipped(self):
        d = validate_distribution([1.0, -1e-13], Support.range(2))
        assert d.probs.min() == 0.0

    def test_support_rules(self):
        with pytest.raises(ValueError):
            Support(("a", "a"))
        with pytest.raises(ValueError):
            Support(("a",))

    def test_values_are_read_only(self):
        with pytest.raises(ValueError):
            FIX2.probs[0, 0] = 1.0


class TestIndependence:
    def test_examples(self):
        assert linear_independence_report(FIX2) == {"rank": 2, "independent": True}
        assert linear_independence_report(FIX3) == {"rank": 2, "independent": True}
        same = SourceDistributions.from_rows([[0.5, 0.5], [0.5, 0.5]])
        assert linear_independence_report(same) == {"rank": 1, "independent": False}


class TestBasis:
    def test_identity(self):
        assert np.allclose(basis_from_matrix(np.eye(2), FIX3), FIX3.probs)

    def test_two_sevenths(self):
        F = basis_from_matrix(P27, FIX3)
        assert np.allclose(F, [[0.7, 0.3, 0.0], [0.0, 0.3, 0.7]], atol=1e-12)

    def test_swap_fixture(self):
        F = basis_from_matrix([[0.5, 0.5], [0.75, 0.25]], FIX2)
        assert np.allclose(F, [[0, 1], [1, 0]], atol=1e-12)

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            basis_from_matrix([[0.5, 0.5], [0.5, 0.5]], FIX2)

    @given(stochastic_matrices(), st.integers(0, 2**32 - 1))
    def test_rows_sum_to_one(self, P, seed):
        # P^-1 maps the all-ones vector to itself, so basis rows keep unit mass
        if abs(np.linalg.det(P)) < 1e-6:
            return
        K = P.shape[0]
        D = np.random.default_rng(seed).dirichlet(np.ones(K + 3), size=K)
        F = basis_from_matrix(P, SourceDistributions.from_rows(D))
        assert np.allclose(F.sum(axis=1), 1.0, atol=1e-9)
        assert np.max(np.abs(P @ F - D)) <= 1e-10


class TestFeasibility:
    def test_identity_always_feasible(self):
        r = is_feasible(np.eye(3), SourceDistributions.from_rows(np.eye(3)[[0, 1, 2]] * 0.5 + 0.5 / 3), 0)
        assert r["feasible"]

    def test_identity_slack_is_min_entry(self):
        r = is_feasible(np.eye(2), FIX3)
        assert r["feasible"] and r["worst_slack"] == pytest.approx(0.2)

    def test_two_sevenths_on_boundary(self):
        r = is_feasible(P27, FIX3)
        assert r["feasible"] and abs(r["worst_slack"]) <= 1e-12

    def test_near_singular_infeasible(self):
        r = is_feasible([[0.5, 0.5], [0.5001, 0.4999]], FIX2)
        assert not r["feasible"] and r["worst_slack"] < -100

    def test_decompose_rejects(self):
        with pytest.raises(InfeasibleMatrixError):
            decompose(MixtureMatrix([[0.5, 0.5], [0.5001, 0.4999]]), FIX2)

    @given(sources())
    def test_identity_feasible_property(self, src):
        assert is_feasible(np.eye(src.K), src, 0)["feasible"]


class TestMixtureMatrix:
    def test_rejects_bad_rows(self):
        with pytest.raises(BadTotalError):
            MixtureMatrix([[0.5, 0.6], [0.5, 0.5]])
        with pytest.raises(NegativeMassError):
            MixtureMatrix([[1.1, -0.1], [0.5, 0.5]])

    @settings(max_examples=200)
    @given(stochastic_matrices())
    def test_det_at_most_one(self, P):
        assert abs(MixtureMatrix(P).det) <= 1 + 1e-10

    def test_det_bound_bulk(self):
        rng = np.random.default_rng(0)
        for K in (2, 3, 4, 5):
            P = rng.dirichlet(np.ones(K), size=(2500, K))
            assert np.abs(np.linalg.det(P)).max() <= 1 + 1e-10

    def test_near_unit_det_is_near_permutation(self):
        rng = np.random.default_rng(1)
        hits = 0
        for K in (2, 3, 4):
            for perm in itertools.permutations(range(K)):
                Q = permutation_matrix(perm).T
                for eps in np.logspace(-14, -2, 25):
                    P = MixtureMatrix.sanitized((1 - eps) * Q + eps * stochastic(rng, K)).entries
                    if abs(abs(np.linalg.det(P)) - 1) <= 1e-10:
                        hits += 1
                        assert np.max(np.abs(P - Q)) <= 1e-8
        assert hits > 0


class TestReconstructAndPermute:
    def test_trivial_reconstruct(self):
        assert np.array_equal(reconstruct(trivial_decomposition(FIX3)), FIX3.probs)

    def test_two_sevenths_reconstruct(self):
        dec = decompose(MixtureMatrix(P27), FIX3)
        assert np.allclose(reconstruct(dec), FIX3.probs, atol=1e-15)

    def test_swap(self):
        dec = decompose(MixtureMatrix(P27), FIX3)
        sw = apply_permutation(dec, [1, 0])
        assert np.allclose(sw.P, [[5 / 7, 2 / 7], [4 / 7, 3 / 7]])
        assert np.allclose(sw.basis, dec.basis[::-1])
        assert np.allclose(reconstruct(sw), FIX3.probs, atol=1e-15)

    def test_identity_perm(self):
        dec = decompose(MixtureMatrix(P27), FIX3)
        same = apply_permutation(dec, [0, 1])
        assert np.array_equal(same.P, dec.P) and np.array_equal(same.basis, dec.basis)

    def test_bad_perm(self):
        with pytest.raises(BadPermutationError):
            apply_permutation(trivial_decomposition(FIX3), [0, 0])

    def test_permutation_matrix_convention(self):
        P = np.arange(9.0).reshape(3, 3)
        assert np.array_equal(P @ permutation_matrix([2, 0, 1]), P[:, [2, 0, 1]])


def _random_feasible(rng, K, N):
    P = MixtureMatrix(stochastic(rng, K))
    F = rng.dirichlet(np.ones(N), size=K)
    src = SourceDistributions.from_rows(P.entries @ F)
    return decompose(P, src)


class TestPermutationProperties:
    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.data())
    def test_det_and_feasibility_preserved(self, seed, K, data):
        rng = np.random.default_rng(seed)
        dec = _random_feasible(rng, K, K + 3)
        if dec.det_abs < 1e-6:
            return
        perm = data.draw(st.permutations(range(K)))
        out = apply_permutation(dec, perm)
        assert abs(abs(np.linalg.det(out.P)) - abs(np.linalg.det(dec.P))) <= 1e-12
        assert out.basis.min() >= 0
        assert np.allclose(reconstruct(out), reconstruct(dec), atol=1e-12)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.data())
    def test_canonicalize_invariant(self, seed, K, data):
        dec = _random_feasible(np.random.default_rng(seed), K, K + 2)
        perm = data.draw(st.permutations(range(K)))
        a, b = canonicalize(dec), canonicalize(apply_permutation(dec, perm))
        assert np.array_equal(a.P, b.P) and np.array_equal(a.basis, b.basis)

    @given(st.integers(0, 2**32 - 1))
    def test_canonicalize_idempotent(self, seed):
        c = canonicalize(_random_feasible(np.random.default_rng(seed), 3, 5))
        cc = canonicalize(c)
        assert np.array_equal(c.P, cc.P) and np.array_equal(c.basis, cc.basis)

    def test_canonical_order_example(self):
        src = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
        dec = decompose(MixtureMatrix([[0.5, 0.5], [0.75, 0.25]]), src)
        assert np.allclose(dec.basis, [[0, 1], [1, 0]])
        c = canonicalize(dec)
        assert np.allclose(c.basis, [[1, 0], [0, 1]])
        assert np.allclose(c.P, [[0.5, 0.5], [0.25, 0.75]])

    def test_decomposition_is_frozen(self):
        dec = trivial_decomposition(FIX2)
        assert isinstance(dec, Decomposition)
        with pytest.raises(Exception):
            dec.det_abs = 0.0
