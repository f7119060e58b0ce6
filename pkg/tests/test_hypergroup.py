"""Tests for the convolution structure, kernels, and walk laws."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gegwalk.errors import StateCapError
from gegwalk.gegenbauer import HypergroupIndex, eval_poly
from gegwalk.hypergroup import (
    GegenbauerKernel,
    SparseMeasure,
    classify,
    convolve,
    drift_constant,
    fourier,
    inverse_fourier,
    is_gegenbauer_walk,
    kernel_row,
    n_step,
    n_step_by_convolution,
    n_step_sequence,
    transition_matrix,
)

from _oracles import reflected_return_probability, reflected_walk_law

CHEB = HypergroupIndex(-0.5)
QUARTER = HypergroupIndex(-0.25)

DELTA1 = SparseMeasure({1: 1.0})
MIX = SparseMeasure({1: 0.5, 2: 0.5})


@st.composite
def prob_measures(draw, max_state=12, max_atoms=4):
    states = draw(
        st.lists(st.integers(0, max_state), min_size=1, max_size=max_atoms, unique=True)
    )
    weights = [draw(st.integers(1, 20)) for _ in states]
    tot = sum(weights)
    return SparseMeasure({s: w / tot for s, w in zip(states, weights)})


alphas = st.sampled_from([-0.5, -0.25, 0.0, 0.7, 2.0])


def tv_distance(a: SparseMeasure, b: SparseMeasure) -> float:
    states = set(a.support) | set(b.support)
    return 0.5 * sum(abs(a[s] - b[s]) for s in states)


class TestSparseMeasure:
    def test_point_mass(self):
        m = SparseMeasure.point(3)
        assert m.support == (3,)
        assert m[3] == 1.0
        assert m[0] == 0.0
        assert m.total == 1.0

    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError):
            SparseMeasure({0: 1.5, 1: -0.5})

    def test_rejects_bad_total(self):
        with pytest.raises(ValueError):
            SparseMeasure({0: 0.5, 1: 0.4})

    def test_rejects_negative_state(self):
        with pytest.raises(ValueError):
            SparseMeasure({-1: 1.0})

    def test_rejects_fractional_state(self):
        with pytest.raises((ValueError, TypeError)):
            SparseMeasure({1.5: 1.0})

    def test_signed_allows_negative_mass(self):
        m = SparseMeasure({0: 1.5, 1: -0.5}, signed=True)
        assert m[1] == -0.5
        assert m.total == 1.0

    def test_zero_mass_dropped(self):
        m = SparseMeasure({0: 1.0, 5: 0.0})
        assert m.support == (0,)

    def test_duplicate_pairs_accumulate(self):
        m = SparseMeasure([(2, 0.5), (2, 0.5)])
        assert m.support == (2,)
        assert m[2] == 1.0

    def test_total_tolerance_respected(self):
        SparseMeasure({0: 0.5, 1: 0.5 + 5e-11}, total_tol=1e-10)
        with pytest.raises(ValueError):
            SparseMeasure({0: 0.5, 1: 0.5 + 5e-11}, total_tol=1e-12)

    def test_dense_and_sparse_storage_agree(self):
        # contiguous support triggers the dense path; a far-out atom stays sparse
        dense = SparseMeasure({0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25})
        sparse = SparseMeasure({0: 0.25, 100: 0.75})
        for m in (dense, sparse):
            assert m.total == pytest.approx(1.0, abs=1e-12)
            arr = m.as_array()
            assert arr.shape == (m.max_state + 1,)
            for s in m.support:
                assert arr[s] == m[s]
        assert dense[7] == 0.0
        assert sparse[50] == 0.0

    def test_equality_across_storage(self):
        a = SparseMeasure({0: 0.5, 1: 0.5})
        b = SparseMeasure([(1, 0.5), (0, 0.5)])
        assert a == b
        assert a != SparseMeasure({0: 0.5, 2: 0.5})

    def test_from_array(self):
        m = SparseMeasure.from_array(np.array([0.25, 0.0, 0.75]))
        assert m.support == (0, 2)
        assert m[2] == 0.75

    @given(prob_measures())
    def test_masses_sum_to_one(self, m):
        assert abs(math.fsum(v for _, v in m.items()) - 1.0) < 1e-9


class TestSerialization:
    def test_csv_round_trip_exact(self):
        m = SparseMeasure({0: 1 / 3, 3: 1 / 3, 7: 1 / 3})
        back = SparseMeasure.from_csv(m.to_csv())
        assert back == m  # repr round trip keeps every bit

    def test_csv_header(self):
        assert SparseMeasure.point(0).to_csv().splitlines()[0] == "state,mass"

    def test_csv_rejects_garbage(self):
        with pytest.raises(ValueError):
            SparseMeasure.from_csv("state,mass\n1,not-a-number\n")
        with pytest.raises(ValueError):
            SparseMeasure.from_csv("wrong,header\n1,0.5\n")

    def test_json_round_trip_with_alpha(self):
        m = SparseMeasure({1: 0.5, 2: 0.5})
        back, alpha = SparseMeasure.from_json(m.to_json(alpha=-0.25))
        assert back == m
        assert alpha == -0.25

    def test_json_round_trip_no_alpha(self):
        back, alpha = SparseMeasure.from_json(DELTA1.to_json())
        assert back == DELTA1
        assert alpha is None

    def test_json_signed_round_trip(self):
        m = SparseMeasure({0: 1.25, 2: -0.25}, signed=True)
        back, _ = SparseMeasure.from_json(m.to_json())
        assert back == m

    def test_walk_law_round_trip(self):
        law = n_step(GegenbauerKernel(QUARTER, MIX), 0, 6)
        assert SparseMeasure.from_csv(law.to_csv()) == law


class TestKernelConstruction:
    def test_aperiodic_flag(self):
        assert GegenbauerKernel(QUARTER, MIX).aperiodic
        assert GegenbauerKernel(QUARTER, SparseMeasure({1: 0.3, 3: 0.7})).aperiodic
        assert not GegenbauerKernel(QUARTER, SparseMeasure({2: 1.0})).aperiodic
        # support on the odd integers only: flag is still True even though the
        # walk alternates between the two parity classes
        assert GegenbauerKernel(QUARTER, DELTA1).aperiodic

    def test_rejects_signed_step_law(self):
        bad = SparseMeasure({0: 1.5, 1: -0.5}, signed=True)
        with pytest.raises(ValueError):
            GegenbauerKernel(QUARTER, bad)


class TestConvolve:
    def test_identity_element(self):
        delta0 = SparseMeasure.point(0)
        m = SparseMeasure({1: 0.5, 4: 0.5})
        assert convolve(QUARTER, delta0, m) == m
        assert convolve(QUARTER, m, delta0) == m

    def test_delta1_squared(self):
        out = convolve(QUARTER, DELTA1, DELTA1)
        # delta_1 * delta_1 splits over {0, 2} with the degree-1 Jacobi weights
        a = QUARTER.alpha
        expected0 = 1.0 / (2 * a + 3)
        assert out.support == (0, 2)
        assert out[0] == pytest.approx(expected0, abs=1e-15)
        assert out[2] == pytest.approx(1 - expected0, abs=1e-15)

    def test_chebyshev_case_is_arithmetic_mean(self):
        out = convolve(CHEB, SparseMeasure.point(2), SparseMeasure.point(5))
        assert out[3] == pytest.approx(0.5, abs=1e-15)
        assert out[7] == pytest.approx(0.5, abs=1e-15)

    @given(alphas, prob_measures(), prob_measures())
    @settings(max_examples=60, deadline=None)
    def test_commutative_bit_exact(self, a, mu, nu):
        idx = HypergroupIndex(a)
        left = convolve(idx, mu, nu)
        right = convolve(idx, nu, mu)
        assert left.support == right.support
        for s in left.support:
            assert left[s] == right[s]

    @given(alphas, prob_measures(max_state=6), prob_measures(max_state=6))
    @settings(max_examples=40, deadline=None)
    def test_result_is_probability(self, a, mu, nu):
        out = convolve(HypergroupIndex(a), mu, nu)
        assert all(v >= 0.0 for _, v in out.items())
        assert abs(math.fsum(v for _, v in out.items()) - 1.0) < 1e-10

    def test_rejects_signed_input(self):
        s = SparseMeasure({0: 1.5, 1: -0.5}, signed=True)
        with pytest.raises(ValueError):
            convolve(QUARTER, s, DELTA1)


class TestKernelRow:
    def test_row_from_origin_is_step_law(self):
        k = GegenbauerKernel(QUARTER, MIX)
        assert kernel_row(k, 0) == MIX

    def test_unit_step_rows_are_birth_death(self):
        k = GegenbauerKernel(QUARTER, DELTA1)
        a = QUARTER.alpha
        row0 = kernel_row(k, 0)
        assert row0.support == (1,) and row0[1] == 1.0
        for x in (1, 2, 5, 17):
            row = kernel_row(k, x)
            down = x / (2 * x + 2 * a + 1)
            assert row.support == (x - 1, x + 1)
            assert row[x - 1] == pytest.approx(down, abs=1e-15)
            assert row[x + 1] == pytest.approx(1 - down, abs=1e-15)

    def test_chebyshev_rows_are_exact_halves(self):
        k = GegenbauerKernel(CHEB, DELTA1)
        row = kernel_row(k, 4)
        assert row[3] == 0.5 and row[5] == 0.5

    @given(alphas, prob_measures(max_state=5), st.integers(0, 8))
    @settings(max_examples=60, deadline=None)
    def test_rows_are_stochastic(self, a, mu, x):
        row = kernel_row(GegenbauerKernel(HypergroupIndex(a), mu), x)
        assert all(v >= 0.0 for _, v in row.items())
        assert abs(math.fsum(v for _, v in row.items()) - 1.0) < 1e-10


class TestNStep:
    def test_zero_steps(self):
        k = GegenbauerKernel(QUARTER, MIX)
        assert n_step(k, 3, 0) == SparseMeasure.point(3)

    def test_one_step_matches_row(self):
        k = GegenbauerKernel(QUARTER, MIX)
        for x in (0, 1, 4, 9):
            row, one = kernel_row(k, x), n_step(k, x, 1)
            assert row.support == one.support
            assert tv_distance(one, row) < 1e-14

    def test_reflected_two_and_four_steps(self):
        k = GegenbauerKernel(CHEB, DELTA1)
        law2 = n_step(k, 0, 2)
        assert law2.support == (0, 2)
        assert law2[0] == 0.5 and law2[2] == 0.5
        law4 = n_step(k, 0, 4)
        assert law4[0] == 0.375 and law4[2] == 0.5 and law4[4] == 0.125

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 13, 20])
    def test_reflected_law_matches_exact_enumeration(self, n):
        k = GegenbauerKernel(CHEB, DELTA1)
        law = n_step(k, 0, n)
        oracle = reflected_walk_law(n)
        assert set(law.support) == set(oracle)
        for s, frac in oracle.items():
            assert law[s] == float(frac)  # dyadic arithmetic, bit exact

    @pytest.mark.parametrize("m", range(1, 11))
    def test_reflected_return_probability(self, m):
        k = GegenbauerKernel(CHEB, DELTA1)
        assert n_step(k, 0, 2 * m)[0] == reflected_return_probability(m)

    @pytest.mark.parametrize(
        "alpha,mu,x,n",
        [
            (-0.25, MIX, 0, 16),
            (-0.25, MIX, 3, 9),
            (-0.5, DELTA1, 0, 32),
            (0.7, SparseMeasure({0: 0.2, 1: 0.3, 4: 0.5}), 2, 12),
            (2.0, MIX, 1, 64),
        ],
    )
    def test_agrees_with_repeated_convolution(self, alpha, mu, x, n):
        idx = HypergroupIndex(alpha)
        k = GegenbauerKernel(idx, mu)
        direct = n_step(k, x, n)
        oracle = n_step_by_convolution(k, x, n)
        assert tv_distance(direct, oracle) < 1e-11

    def test_convolution_route_caps_n(self):
        k = GegenbauerKernel(QUARTER, MIX)
        with pytest.raises(ValueError):
            n_step_by_convolution(k, 0, 65)

    def test_mass_conserved_long_run(self):
        k = GegenbauerKernel(QUARTER, MIX)
        law = n_step(k, 0, 4096)
        assert abs(math.fsum(v for _, v in law.items()) - 1.0) < 1e-10
        assert all(v >= 0.0 for _, v in law.items())

    def test_unit_step_parity_is_exact(self):
        k = GegenbauerKernel(QUARTER, DELTA1)
        law = n_step(k, 0, 17)
        assert all(s % 2 == 1 for s in law.support)
        arr = law.as_array()
        assert all(arr[s] == 0.0 for s in range(0, 18, 2))

    def test_state_cap(self):
        k = GegenbauerKernel(QUARTER, MIX)
        with pytest.raises(StateCapError) as exc:
            n_step(k, 0, 600, state_cap=1000)
        assert exc.value.required > 1000
        n_step(k, 0, 400, state_cap=1000)  # under the cap: fine

    def test_sequence_matches_single_calls(self):
        k = GegenbauerKernel(QUARTER, MIX)
        laws = n_step_sequence(k, 0, [1, 4, 16, 64])
        assert sorted(laws) == [1, 4, 16, 64]
        for n, law in laws.items():
            assert tv_distance(law, n_step(k, 0, n)) == 0.0


class TestFourier:
    @given(prob_measures())
    @settings(max_examples=40, deadline=None)
    def test_value_at_zero(self, mu):
        assert fourier(QUARTER, mu, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_transform(self):
        for n in (0, 1, 3, 6):
            for theta in (0.1, 1.0, 2.5):
                assert fourier(QUARTER, SparseMeasure.point(n), theta) == pytest.approx(
                    eval_poly(QUARTER, n, math.cos(theta)), abs=1e-14
                )

    @given(alphas, prob_measures(max_state=8), prob_measures(max_state=8),
           st.floats(0.0, math.pi))
    @settings(max_examples=60, deadline=None)
    def test_multiplicative_under_convolution(self, a, mu, nu, theta):
        idx = HypergroupIndex(a)
        lhs = fourier(idx, convolve(idx, mu, nu), theta)
        rhs = fourier(idx, mu, theta) * fourier(idx, nu, theta)
        assert lhs == pytest.approx(rhs, abs=1e-10)

    @given(alphas, prob_measures(), st.floats(0.0, math.pi))
    @settings(max_examples=60, deadline=None)
    def test_bounded_by_one(self, a, mu, theta):
        assert abs(fourier(HypergroupIndex(a), mu, theta)) <= 1.0 + 1e-12

    def test_domain_check(self):
        with pytest.raises(ValueError):
            fourier(QUARTER, MIX, -0.1)
        with pytest.raises(ValueError):
            fourier(QUARTER, MIX, math.pi + 0.1)


class TestInverseFourier:
    def test_point_mass_round_trip(self):
        f = lambda theta: fourier(QUARTER, SparseMeasure.point(2), theta)
        assert inverse_fourier(QUARTER, f, 2) == pytest.approx(1.0, abs=1e-8)
        assert inverse_fourier(QUARTER, f, 3) == pytest.approx(0.0, abs=1e-8)
        assert inverse_fourier(QUARTER, f, 4) == pytest.approx(0.0, abs=1e-8)

    def test_mixture_round_trip(self):
        f = lambda theta: fourier(QUARTER, MIX, theta)
        assert inverse_fourier(QUARTER, f, 1) == pytest.approx(0.5, abs=1e-8)
        assert inverse_fourier(QUARTER, f, 2) == pytest.approx(0.5, abs=1e-8)

    def test_transform_power_recovers_walk_law(self):
        # spectral route vs direct iteration, two ways through the theory
        k = GegenbauerKernel(QUARTER, MIX)
        n = 100
        law = n_step(k, 0, n)
        f = lambda theta: fourier(QUARTER, MIX, theta) ** n
        for state in range(21):
            assert inverse_fourier(QUARTER, f, state) == pytest.approx(
                law[state], abs=1e-7
            )


class TestClassification:
    def test_classify(self):
        assert classify(CHEB) == "recurrent"
        assert classify(HypergroupIndex(0.0)) == "recurrent"
        assert classify(HypergroupIndex(0.3)) == "transient"

    def test_drift_constant_unit_step(self):
        for a in (-0.5, -0.25, 0.0, 1.5):
            assert drift_constant(HypergroupIndex(a), DELTA1) == pytest.approx(
                0.5, abs=1e-14
            )

    def test_drift_constant_mixture(self):
        assert drift_constant(QUARTER, MIX) == pytest.approx(13.0 / 12.0, abs=1e-13)

    def test_drift_constant_lazy_origin(self):
        assert drift_constant(QUARTER, SparseMeasure.point(0)) == 0.0


class TestMembership:
    def test_unit_step_kernel_is_member(self):
        k = GegenbauerKernel(QUARTER, DELTA1)
        P = transition_matrix(k, 40)
        res = is_gegenbauer_walk(P, lam=0.25)
        assert res.is_member
        assert res.max_residual < 1e-12
        assert res.recovered_step == DELTA1

    def test_mixture_kernel_is_member(self):
        k = GegenbauerKernel(QUARTER, MIX)
        P = transition_matrix(k, 40)
        res = is_gegenbauer_walk(P, lam=0.25)
        assert res.is_member
        assert res.recovered_step == MIX

    def test_chebyshev_kernel_at_lambda_zero(self):
        # lam = 0 exercises the removable singularity in the column-one weight
        k = GegenbauerKernel(CHEB, DELTA1)
        P = transition_matrix(k, 30)
        res = is_gegenbauer_walk(P, lam=0.0)
        assert res.is_member
        assert res.max_residual < 1e-12

    def test_perturbed_kernel_rejected(self):
        k = GegenbauerKernel(QUARTER, DELTA1)
        P = transition_matrix(k, 40)
        P = P.copy()
        P[3, 4] += 1e-3
        P[3, 2] -= 1e-3
        res = is_gegenbauer_walk(P, lam=0.25)
        assert not res.is_member
        assert res.max_residual > 1e-5

    def test_wrong_lambda_rejected(self):
        k = GegenbauerKernel(QUARTER, DELTA1)
        P = transition_matrix(k, 40)
        assert not is_gegenbauer_walk(P, lam=0.4).is_member

    def test_lambda_range_enforced(self):
        P = transition_matrix(GegenbauerKernel(QUARTER, DELTA1), 10)
        for lam in (-0.1, 0.6):
            with pytest.raises(ValueError):
                is_gegenbauer_walk(P, lam=lam)

    def test_malformed_matrix_rejected(self):
        with pytest.raises(ValueError):
            is_gegenbauer_walk(np.ones((3, 4)), lam=0.25)
        with pytest.raises(ValueError):
            is_gegenbauer_walk(np.eye(3), lam=0.25)  # too small to test
        bad = np.zeros((10, 10))
        bad[0, 1] = 0.7  # rows do not sum to one
        with pytest.raises(ValueError):
            is_gegenbauer_walk(bad, lam=0.25)
