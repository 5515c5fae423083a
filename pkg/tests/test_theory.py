"""Tests for rates, hardness labels, and the low-degree norm routes."""

import itertools
import math

import numpy as np
import numpy.testing as npt
import pytest

from lrmm.exceptions import BruteForceTooLarge, DimensionError
from lrmm.theory import (classify, lowdeg_norm, minimax_rate,
                         rademacher_moment, rademacher_moment_log,
                         trace_concentration_mc)


class TestMinimaxRate:
    def test_known_values(self):
        """Balanced point where both branches equal 1, and a strong-signal
        point where estimation wins."""
        npt.assert_allclose(minimax_rate(100, 25, 1, 1.0), 1.0, rtol=1e-12)
        want = math.sqrt(1e-4) / 10.0 + math.sqrt(1e-4)
        npt.assert_allclose(minimax_rate(10000, 1, 1, 10.0), want, rtol=1e-12)

    def test_trivial_branch_wins_for_tiny_signal(self):
        lam = 1e-3
        npt.assert_allclose(
            minimax_rate(10, 1000, 4, lam), lam * 2.0, rtol=1e-12
        )

    def test_monotone_in_n(self):
        rates = [minimax_rate(n, 50, 2, 1.0) for n in (10, 100, 1000, 10000)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_invalid_inputs(self):
        with pytest.raises(DimensionError):
            minimax_rate(0, 10, 1, 1.0)
        with pytest.raises(DimensionError):
            minimax_rate(10, 10, 1, 0.0)
        with pytest.raises(DimensionError):
            minimax_rate(10, 10, 1, -2.0)


class TestClassify:
    def test_sample_regimes(self):
        assert classify(10, 20, 1, 1.0).sample_regime == "R1"
        assert classify(20, 20, 1, 1.0).sample_regime == "R1"  # boundary
        assert classify(100, 20, 1, 1.0).sample_regime == "R2"
        assert classify(400, 20, 1, 1.0).sample_regime == "R3"  # boundary
        assert classify(10_000, 20, 1, 1.0).sample_regime == "R3"

    def test_thresholds_formulas(self):
        pt = classify(256, 16, 1, 1.0)
        npt.assert_allclose(
            pt.info_threshold, 2.0 / 4.0 + 0.25, rtol=1e-12
        )
        npt.assert_allclose(pt.comp_threshold, 1.0, rtol=1e-12)

    def test_hardness_bands(self):
        """d = 16, n = 256: info threshold 0.75, comp threshold 1."""
        assert classify(256, 16, 1, 0.5).hardness == "impossible"
        assert classify(256, 16, 1, 0.9).hardness == "stat_possible_comp_hard"
        assert classify(256, 16, 1, 2.0).hardness == "poly_easy"
        # at the threshold itself the larger class wins
        assert classify(256, 16, 1, 1.0).hardness == "poly_easy"

    def test_fields_round_trip(self):
        pt = classify(300, 250, 2, 1.7)
        assert (pt.n, pt.d, pt.r) == (300, 250, 2)
        assert pt.lam == 1.7
        npt.assert_allclose(pt.rate, minimax_rate(300, 250, 2, 1.7), rtol=1e-15)


class TestRademacherMoments:
    # E[S_n^(2k)] for small n, k enumerated by hand over all 2^n sign
    # vectors.
    KNOWN = {
        (1, 1): 1.0,
        (1, 2): 1.0,
        (2, 1): 2.0,
        (2, 2): 8.0,
        (3, 1): 3.0,
        (3, 2): 21.0,
        (4, 2): 40.0,
        (5, 3): 1205.0,
    }

    @pytest.mark.parametrize("nk,want", sorted(KNOWN.items()))
    def test_small_cases_exact(self, nk, want):
        n, k = nk
        npt.assert_allclose(rademacher_moment(n, k), want, rtol=1e-12)

    def test_matches_direct_enumeration(self):
        rng = np.random.default_rng(0)
        for n in range(1, 11):
            signs = np.array(
                [np.sum(2 * np.array(bits) - 1)
                 for bits in itertools.product([0, 1], repeat=n)],
                dtype=np.float64,
            )
            for k in (1, 2, 3, 4):
                want = float(np.mean(signs ** (2 * k)))
                npt.assert_allclose(rademacher_moment(n, k), want, rtol=1e-10)

    def test_zeroth_moment(self):
        assert rademacher_moment_log(5, 0) == 0.0
        assert rademacher_moment(5, 0) == 1.0

    def test_second_moment_is_n(self):
        for n in (1, 7, 100, 12345):
            npt.assert_allclose(rademacher_moment(n, 1), float(n), rtol=1e-10)

    def test_large_n_window_agrees_with_full_sum(self):
        """The windowed path must agree with the dense path; compare
        through the scaling E S^(2k) ~ n^k (2k-1)!! for n >> k."""
        n = 2_000_000  # windowed branch
        for k in (1, 2, 3):
            got = rademacher_moment_log(n, k)
            df = math.lgamma(2 * k + 1) - k * math.log(2.0) - math.lgamma(k + 1)
            want = k * math.log(n) + df
            assert abs(got - want) < 1e-4

    def test_moment_overflow_to_inf(self):
        assert rademacher_moment(10**6, 200) == math.inf
        assert math.isfinite(rademacher_moment_log(10**6, 200))

    def test_invalid(self):
        with pytest.raises(DimensionError):
            rademacher_moment_log(0, 1)
        with pytest.raises(DimensionError):
            rademacher_moment_log(3, -1)


class TestLowdegPaperBound:
    def test_frozen_value(self):
        """n=100, d1=d2=10, lam=1, degree=2: single term n lam^4 / (2 d^2)
        gives exactly 1.5."""
        result = lowdeg_norm(100, 10, 10, 1.0, 2, mode="paper_bound")
        assert result.value == 1.5
        assert result.degree == 2
        assert result.mode == "paper_bound"
        assert set(result.terms) == {1}
        npt.assert_allclose(result.terms[1], math.log(0.5), rtol=1e-12)

    def test_terms_match_value(self):
        result = lowdeg_norm(50, 8, 6, 1.3, 8)
        rebuilt = 1.0 + sum(math.exp(v) for v in result.terms.values())
        npt.assert_allclose(result.value, rebuilt, rtol=1e-12)
        assert set(result.terms) == {1, 2, 3, 4}

    def test_odd_degree_adds_nothing(self):
        a = lowdeg_norm(50, 8, 6, 1.3, 8)
        b = lowdeg_norm(50, 8, 6, 1.3, 9)
        assert a.value == b.value
        assert a.terms == b.terms

    def test_geometric_decay_below_threshold(self):
        """When n lam^4 / (d1 d2) <= 1/2 consecutive terms at least
        halve, so the series is dominated by its head."""
        n, d1, d2, lam = 100, 20, 20, 1.0
        assert n * lam ** 4 / (d1 * d2) <= 0.5
        result = lowdeg_norm(n, d1, d2, lam, 12)
        logs = [result.terms[k] for k in sorted(result.terms)]
        for a, b in zip(logs, logs[1:]):
            assert b <= a + math.log(0.5) + 1e-9

    def test_diverges_for_large_signal(self):
        weak = lowdeg_norm(100, 10, 10, 1.0, 10).value
        strong = lowdeg_norm(100, 10, 10, 4.0, 10).value
        assert strong > weak


class TestLowdegExactVsBrute:
    def test_exact_equals_brute_on_small_instances(self):
        """The series with true sign moments must reproduce exhaustive
        enumeration; these are independent code paths."""
        cases = [(4, 2, 2, 0.7), (6, 3, 2, 1.0), (8, 4, 4, 1.5), (5, 5, 5, 0.5)]
        for n, d1, d2, lam in cases:
            for degree in (2, 4, 6):
                exact = lowdeg_norm(n, d1, d2, lam, degree, mode="exact")
                brute = lowdeg_norm(n, d1, d2, lam, degree, mode="brute_force")
                npt.assert_allclose(brute.value, exact.value, rtol=1e-10)
                for k in exact.terms:
                    npt.assert_allclose(
                        brute.terms[k], exact.terms[k], atol=1e-9
                    )

    def test_exact_at_least_paper_bound(self):
        """True moments dominate the bounding tuple counts termwise."""
        for n, d1, d2, lam in [(10, 4, 4, 1.2), (30, 6, 5, 0.9)]:
            exact = lowdeg_norm(n, d1, d2, lam, 8, mode="exact")
            bound = lowdeg_norm(n, d1, d2, lam, 8, mode="paper_bound")
            for k in bound.terms:
                assert exact.terms[k] >= bound.terms[k] - 1e-12

    def test_hand_computed_degree2(self):
        """Degree 2 exact term is n lam^4 / (2 d1 d2) since
        E S_n^2 = n and E S_d^2 = d."""
        n, d1, d2, lam = 7, 3, 5, 1.1
        result = lowdeg_norm(n, d1, d2, lam, 2, mode="exact")
        want = 1.0 + n * lam ** 4 / (2.0 * d1 * d2)
        npt.assert_allclose(result.value, want, rtol=1e-12)

    def test_brute_force_cap(self):
        with pytest.raises(BruteForceTooLarge):
            lowdeg_norm(20, 4, 4, 1.0, 2, mode="brute_force")

    def test_zero_signal_all_modes(self):
        for mode in ("paper_bound", "exact", "brute_force"):
            result = lowdeg_norm(8, 4, 4, 0.0, 6, mode=mode)
            assert result.value == 1.0
            assert result.terms == {}

    def test_bad_mode_and_args(self):
        with pytest.raises(DimensionError):
            lowdeg_norm(8, 4, 4, 1.0, 2, mode="fast")
        with pytest.raises(DimensionError):
            lowdeg_norm(8, 4, 4, 1.0, 0)
        with pytest.raises(DimensionError):
            lowdeg_norm(0, 4, 4, 1.0, 2)
        with pytest.raises(DimensionError):
            lowdeg_norm(8, 4, 4, -1.0, 2)


class TestTraceConcentration:
    def test_shrinks_with_n(self):
        med_small, q_small = trace_concentration_mc(3, 50, reps=60, seed=0)
        med_large, q_large = trace_concentration_mc(3, 5000, reps=60, seed=0)
        assert med_large < med_small / 3.0
        assert q_large < q_small

    def test_quantile_ordering_and_sign(self):
        med, q90 = trace_concentration_mc(2, 100, reps=40, seed=1)
        assert 0.0 < med <= q90

    def test_deterministic(self):
        assert trace_concentration_mc(2, 64, reps=30, seed=2) == \
            trace_concentration_mc(2, 64, reps=30, seed=2)

    def test_rep_floor(self):
        with pytest.raises(DimensionError):
            trace_concentration_mc(2, 10, reps=10)
