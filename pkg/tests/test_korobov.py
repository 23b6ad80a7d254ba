import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from randlattice.korobov import (
    AlgorithmParams,
    BudgetExceeded,
    SpaceParams,
    Weights,
    brute_box_sum,
    count_small_r,
    r_array,
    r_value,
    r_vector,
    sum_inverse_r_oracle,
    v_d,
    zeta,
)

from oracles import r_ref

weights_st = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=4).map(
    lambda xs: Weights(tuple(sorted(xs, reverse=True))))


class TestWeights:
    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            Weights((0.5, 1.0))

    @pytest.mark.parametrize("bad", [(0.0,), (1.5,), (-0.1,), ()])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            Weights(bad)

    def test_index_past_end_is_an_error(self):
        with pytest.raises(IndexError):
            Weights((1.0, 0.5)).first(3)

    def test_parse_forms(self):
        assert Weights.parse("1,0.5").gammas == (1.0, 0.5)
        assert Weights.parse("const:0.3", 3).gammas == (0.3, 0.3, 0.3)
        assert Weights.parse("pow:2", 3).gammas == pytest.approx((1.0, 0.25, 1 / 9))
        with pytest.raises(ValueError):
            Weights.parse("pow:2")

    def test_space_needs_enough_weights(self):
        with pytest.raises(ValueError):
            SpaceParams(3, 1.0, Weights((1.0, 0.5)))


class TestAlgorithmParams:
    def test_default_lambda(self):
        sp = SpaceParams(2, 1.0, Weights((1.0, 0.5)))
        alg = AlgorithmParams.default(sp)
        assert alg.lam == pytest.approx(0.95)
        assert alg.tau == 0.5
        alg.validate(sp)

    def test_unshifted_constraints(self):
        sp = SpaceParams(1, 1.0, Weights((1.0,)))
        with pytest.raises(ValueError):
            AlgorithmParams(lam=0.5).validate(sp)
        with pytest.raises(ValueError):
            AlgorithmParams(lam=0.7, delta=0.3).validate(sp)
        AlgorithmParams(lam=0.4).validate(sp, shifted=True)

    def test_alpha_zero_has_no_lambda(self):
        sp = SpaceParams(1, 0.0, Weights((1.0,)))
        assert AlgorithmParams.default(sp, shifted=True).lam is None
        with pytest.raises(ValueError):
            AlgorithmParams(lam=0.1).validate(sp, shifted=True)

    def test_shifted_default_below_half(self):
        sp = SpaceParams(2, 0.75, Weights((1.0, 0.5)))
        alg = AlgorithmParams.default(sp, shifted=True)
        assert alg.lam == pytest.approx(0.70)
        alg.validate(sp, shifted=True)


class TestR:
    @pytest.mark.parametrize("alpha,gamma,h,want", [(1, 0.5, 3, 6.0), (2, 1, 0, 1.0), (0, 1, 7, 1.0)])
    def test_examples(self, alpha, gamma, h, want):
        assert r_value(alpha, gamma, h) == want

    def test_vector_examples(self):
        assert r_vector(SpaceParams(2, 1, Weights((1, 1))), (1, 2)) == 2.0
        assert r_vector(SpaceParams(2, 1, Weights((1, 1))), (0, 0)) == 1.0
        assert r_vector(SpaceParams(2, 2, Weights((1, 0.25))), (3, 2)) == 144.0

    def test_vector_length_checked(self):
        with pytest.raises(ValueError):
            r_vector(SpaceParams(2, 1, Weights((1, 1))), (1,))

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=4), weights_st, st.floats(0, 3))
    def test_at_least_one_and_matches_reference(self, h, w, alpha):
        d = min(len(h), len(w))
        h = h[:d]
        sp = SpaceParams(d, alpha, w)
        r = r_vector(sp, h)
        assert r >= 1.0
        assert r == pytest.approx(r_ref(alpha, w.gammas[:d], h), rel=1e-13)
        assert r_array(alpha, w.gammas[:d], [h])[0] == pytest.approx(r, rel=1e-13)
        unit = all(abs(a) ** alpha <= g for a, g in zip(h, w.gammas) if a != 0)
        assert (r == 1.0) == unit

    @given(st.lists(st.integers(-40, 40), min_size=1, max_size=3), weights_st,
           st.floats(0.6, 3.0), st.floats(0.1, 0.99))
    def test_scaling_identity(self, h, w, alpha, frac):
        d = min(len(h), len(w))
        h = h[:d]
        lam = frac * alpha
        sp = SpaceParams(d, alpha, w)
        assert r_vector(sp.scaled(lam), h) ** lam == pytest.approx(r_vector(sp, h), rel=1e-12)
        assert r_vector(sp.squared(), h) == pytest.approx(r_vector(sp, h) ** 2, rel=1e-12)


class TestZetaAndV:
    def test_zeta_closed_forms(self):
        assert zeta(2) == math.pi**2 / 6
        assert zeta(4) == math.pi**4 / 90
        assert zeta(3) == pytest.approx(1.2020569031595942, rel=1e-14)
        with pytest.raises(ValueError):
            zeta(1.0)

    def test_v_examples(self):
        assert v_d(2, Weights((1.0,)), 1) == pytest.approx(3 * (1 + math.pi**2 / 3), rel=1e-14)
        assert v_d(2, Weights((1.0,)), 1) == pytest.approx(12.8696, abs=1e-4)
        assert v_d(2, Weights((1.0, 1.0)), 2) == pytest.approx(55.2089, abs=1e-4)
        assert v_d(4, Weights((1e-300,) * 5), 5) == pytest.approx(3.0)


class TestSumInverseR:
    @pytest.mark.parametrize("d,beta,gam,H,target", [
        (1, 2, (1.0,), 10**6, 1 + math.pi**2 / 3),
        (1, 4, (1.0,), 10**3, 1 + math.pi**4 / 45),
        (2, 2, (1.0, 0.5), 10**4, (1 + math.pi**2 / 3) * (1 + math.pi**2 / 6)),
    ])
    def test_interval_contains_target(self, d, beta, gam, H, target):
        lo, hi = sum_inverse_r_oracle(beta, Weights(gam), d, H)
        assert lo <= target <= hi
        # the interval is tight: its width is the certified tail
        assert hi - lo < 1e-2 * target

    @given(weights_st, st.sampled_from([2.0, 2.5, 4.0]), st.integers(2, 12))
    def test_factorised_sum_matches_brute_box(self, w, beta, H):
        d = min(len(w), 2)
        lo, hi = sum_inverse_r_oracle(beta, w, d, H)
        box = brute_box_sum(beta, w, d, H)
        assert lo <= box * (1 + 1e-12)


class TestCountSmallR:
    def test_examples(self):
        assert count_small_r(2, Weights((1.0,)), 1, 9) == 7
        assert count_small_r(2, Weights((1.0,)), 1, 0.5) == 0
        # boundary ties included: (0|±1, 0|±1) all have r = 1
        assert count_small_r(2, Weights((1.0, 1.0)), 2, 1) == 9

    @given(weights_st, st.sampled_from([2.0, 3.0, 4.0]), st.floats(0.5, 60))
    def test_matches_enumeration_and_count_bound(self, w, beta, T):
        d = min(len(w), 3)
        g = w.gammas[:d]
        M = int((T * max(g)) ** (1 / beta)) + 2
        axis = np.arange(-M, M + 1)
        grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), -1).reshape(-1, d)
        brute = sum(1 for h in grid if r_ref(beta, g, h) <= T)
        got = count_small_r(beta, w, d, T)
        assert got == brute
        assert got <= T * v_d(beta, w, d)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            count_small_r(2, Weights((1.0, 1.0, 1.0)), 3, 1e6, budget=100)
