import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steinpoisson import (
    Pmf,
    SteinParams,
    poisson_expectation,
    poisson_pmf,
    pseudo_inverse_bounds,
    stein_apply,
    stein_identity_oracle,
    stein_inverse,
    tv_distance,
)
from steinpoisson.pair_models import (
    birthday_pairs_model,
    birthday_triples_model,
    coupon_model,
    enumerate_pair_measure,
    matching_model,
    poisson_binomial_model,
)

import oracles

LAMBDA_GRID = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]


# ---------------------------------------------------------------------------
# Pmf
# ---------------------------------------------------------------------------


class TestPmf:
    def test_valid_construction(self):
        p = Pmf(np.array([0.5, 0.25, 0.25]))
        assert p.support_max == 2
        assert p.tail == 0.0
        assert p.prob(1) == 0.25
        assert p.prob(99) == 0.0

    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError):
            Pmf(np.array([0.5, 0.6]))  # sums over 1
        with pytest.raises(ValueError):
            Pmf(np.array([0.5, -0.5, 1.0]))
        with pytest.raises(ValueError):
            Pmf(np.array([0.5, 0.25]), tail=0.1)  # mass + tail != 1
        with pytest.raises(ValueError):
            Pmf(np.array([np.nan, 1.0]))

    def test_immutable(self):
        p = Pmf(np.array([1.0]))
        with pytest.raises(ValueError):
            p.mass[0] = 0.5

    def test_mean_variance(self):
        p = Pmf(np.array([0.25, 0.5, 0.25]))
        assert p.mean() == 1.0
        assert abs(p.variance() - 0.5) < 1e-15


# ---------------------------------------------------------------------------
# Poisson reference law
# ---------------------------------------------------------------------------


class TestPoissonPmf:
    def test_mass_at_zero(self):
        p = poisson_pmf(SteinParams(1.0, 1e-12))
        assert abs(p.mass[0] - math.exp(-1.0)) < 1e-16

    def test_unit_rate_recursion(self):
        # lam * p(k-1) = k * p(k); at lam = 1 the first two masses coincide
        p = poisson_pmf(SteinParams(1.0))
        assert p.mass[1] == pytest.approx(p.mass[0], abs=1e-16)
        for k in range(1, p.support_max + 1):
            assert 1.0 * p.mass[k - 1] == pytest.approx(k * p.mass[k], rel=1e-12)

    def test_mean_with_tail_correction(self):
        lam = 4.0
        p = poisson_pmf(SteinParams(lam, 1e-12))
        # the mean deficit of the truncated table is exactly
        # lam * (mass[-1] + tail)
        corrected = p.mean() + lam * (p.mass[-1] + p.tail)
        assert abs(corrected - lam) < 1e-12
        assert abs(p.mean() - lam) < 1e-9

    def test_truncation_is_minimal(self):
        p = poisson_pmf(SteinParams(2.0, 1e-6))
        assert p.tail <= 1e-6
        # one entry earlier the tail would exceed the budget
        assert p.tail + p.mass[-1] > 1e-6

    def test_matches_direct_series(self):
        for lam in LAMBDA_GRID:
            p = poisson_pmf(SteinParams(lam))
            direct = oracles.poisson_series(lam, p.mass.size)
            assert np.abs(p.mass - direct).max() < 1e-14

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            SteinParams(0.0)
        with pytest.raises(ValueError):
            SteinParams(-1.0)
        with pytest.raises(ValueError):
            SteinParams(1.0, truncation_eps=0.1)
        with pytest.raises(ValueError):
            SteinParams(1.0, truncation_eps=0.0)


# ---------------------------------------------------------------------------
# total variation
# ---------------------------------------------------------------------------


class TestTvDistance:
    def test_identical_is_zero(self):
        p = poisson_pmf(SteinParams(2.0))
        assert tv_distance(p, p) == pytest.approx(p.tail, abs=1e-15)
        q = Pmf(np.array([0.5, 0.5]))
        assert tv_distance(q, q) == 0.0

    def test_disjoint_point_masses(self):
        p = Pmf(np.array([1.0]))
        q = Pmf(np.array([0.0, 1.0]))
        assert tv_distance(p, q) == 1.0

    def test_rencontres_four_vs_unit_poisson_pinned(self):
        # oracle: enumerate S_4, Poisson by direct series, plain half-l1
        from steinpoisson import MatchingSpec, matching_pmf

        brute = oracles.enumerate_matching(4)
        ref = poisson_pmf(SteinParams(1.0, 1e-12))
        direct = oracles.poisson_series(1.0, ref.mass.size)
        oracle_value = oracles.tv_arrays(brute, direct) + 0.5 * ref.tail
        value = tv_distance(matching_pmf(MatchingSpec(4)), ref)
        assert value == pytest.approx(oracle_value, abs=1e-13)
        assert value == pytest.approx(0.09951919486069308, abs=1e-14)

    def test_never_exceeds_one(self):
        p = Pmf(np.array([0.3]), tail=0.7)
        q = Pmf(np.array([0.0, 0.4]), tail=0.6)
        assert tv_distance(p, q) <= 1.0

    @settings(max_examples=60, deadline=None)
    @given(
        a=st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=8),
        b=st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=8),
        c=st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=8),
    )
    def test_metric_properties(self, a, b, c):
        def norm(values):
            arr = np.array(values)
            return Pmf(arr / arr.sum())

        p, q, r = norm(a), norm(b), norm(c)
        assert tv_distance(p, q) == tv_distance(q, p)  # symmetry, exact
        assert tv_distance(p, q) <= tv_distance(p, r) + tv_distance(r, q) + 1e-12
        assert tv_distance(p, p) == 0.0


# ---------------------------------------------------------------------------
# characterizing operator
# ---------------------------------------------------------------------------


class TestSteinApply:
    def test_constant_function(self):
        params = SteinParams(2.0)
        f = np.ones(8)
        out = stein_apply(f, params)
        assert np.array_equal(out, 2.0 - np.arange(7))

    def test_point_mass_function(self):
        lam, k, size = 1.5, 3, 8
        f = np.zeros(size)
        f[k] = 1.0
        out = stein_apply(f, SteinParams(lam))
        expected = np.zeros(size - 1)
        expected[k - 1] = lam
        expected[k] = -k
        assert np.array_equal(out, expected)

    def test_rejects_undefined_final_slot(self):
        with pytest.raises(ValueError):
            stein_apply(np.array([1.0, np.inf]), SteinParams(1.0))
        with pytest.raises(ValueError):
            stein_apply(np.array([1.0]), SteinParams(1.0))

    def test_characterizing_property(self):
        # E_o[T f] telescopes to the boundary term (N+1) w_{N+1} f(N+1),
        # so the truncated expectation vanishes within (N+2) * eps * ||f||
        rng = np.random.default_rng(7)
        eps = 1e-12
        for lam in LAMBDA_GRID:
            params = SteinParams(lam, eps)
            ref = poisson_pmf(params)
            n_top = ref.support_max
            for _ in range(25):
                f = rng.uniform(-1.0, 1.0, n_top + 2)
                value = float(np.dot(ref.mass, stein_apply(f, params)))
                w_next = ref.mass[-1] * lam / (n_top + 1)
                boundary = (n_top + 1) * w_next * f[n_top + 1]
                assert abs(value - boundary) < 1e-13
                assert abs(value) <= (n_top + 2) * eps * np.abs(f).max()


class TestSteinInverse:
    def test_constant_maps_to_zero(self):
        params = SteinParams(3.0)
        u = stein_inverse(np.full(12, 0.7), params)
        assert np.abs(u).max() < 1e-13

    def test_inverse_property_random_functions(self):
        rng = np.random.default_rng(11)
        for lam in [0.25, 1.0, 4.0, 16.0]:
            params = SteinParams(lam)
            size = poisson_pmf(params).mass.size
            for _ in range(100):
                f = rng.uniform(-1.0, 1.0, size)
                u = stein_inverse(f, params)
                lhs = stein_apply(u, params)
                e_f = poisson_expectation(f, params)
                assert np.abs(lhs - (f - e_f)).max() <= 1e-12

    def test_centered_indicator_bound(self):
        # f = indicator of {0} at lam = 1: sup |u| <= 1 - e^{-1}
        params = SteinParams(1.0)
        size = poisson_pmf(params).mass.size
        f = np.zeros(size)
        f[0] = 1.0
        u = stein_inverse(f, params)
        assert np.abs(u).max() <= -math.expm1(-1.0) + 1e-12

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            stein_inverse(np.array([]), SteinParams(1.0))

    def test_indicator_bounds_dominance(self):
        rng = np.random.default_rng(23)
        for lam in LAMBDA_GRID:
            params = SteinParams(lam)
            sup_bound, diff_bound = pseudo_inverse_bounds(params)
            size = poisson_pmf(params).mass.size
            for _ in range(100):
                f = (rng.random(size) < 0.5).astype(float)
                u = stein_inverse(f, params)
                assert np.abs(u).max() <= sup_bound + 1e-12
                assert np.abs(np.diff(u)).max() <= diff_bound + 1e-12


class TestPseudoInverseBounds:
    def test_unit_rate(self):
        sup_b, diff_b = pseudo_inverse_bounds(SteinParams(1.0))
        assert sup_b == 1.0
        assert diff_b == pytest.approx(-math.expm1(-1.0), abs=1e-16)

    def test_rate_four(self):
        sup_b, diff_b = pseudo_inverse_bounds(SteinParams(4.0))
        assert sup_b == pytest.approx(0.7, abs=1e-15)
        assert diff_b == pytest.approx(-math.expm1(-4.0) / 4.0, abs=1e-16)

    def test_large_rate_scaling(self):
        for lam in [100.0, 400.0, 2500.0]:
            sup_b, _ = pseudo_inverse_bounds(SteinParams(lam))
            assert sup_b == pytest.approx(1.4 / math.sqrt(lam), rel=1e-15)


# ---------------------------------------------------------------------------
# exchangeable-pair identity oracle
# ---------------------------------------------------------------------------


def _delta(size, hits):
    g = np.zeros(size)
    for h in hits:
        g[h] = 1.0
    return g


class TestIdentityOracle:
    def test_poisson_binomial_indicator(self):
        rng = np.random.default_rng(5)
        p = rng.random(6)
        model = poisson_binomial_model(p)
        measure = enumerate_pair_measure(model)
        g = _delta(7, [0, 2, 5])
        lhs, rhs = stein_identity_oracle(measure, c=float(len(p)), g=g)
        assert abs(lhs - rhs) <= 1e-10

    def test_matching_indicator(self):
        model = matching_model(6)
        measure = enumerate_pair_measure(model)
        lhs, rhs = stein_identity_oracle(measure, c=(6 - 1) / 2.0, g=_delta(7, [0]))
        assert abs(lhs - rhs) <= 1e-10

    def test_constant_function_gives_zero(self):
        # the table must cover the whole truncated reference support,
        # otherwise the zero padding makes it non-constant
        model = matching_model(4)
        measure = enumerate_pair_measure(model)
        size = poisson_pmf(SteinParams(measure.lam)).mass.size + 1
        lhs, rhs = stein_identity_oracle(measure, c=1.5, g=np.full(size, 0.3))
        assert abs(lhs) < 1e-14
        assert abs(rhs) < 1e-13

    def test_rejects_nonpositive_c(self):
        model = matching_model(4)
        measure = enumerate_pair_measure(model)
        with pytest.raises(ValueError):
            stein_identity_oracle(measure, c=0.0, g=np.ones(5))

    def test_every_enumerable_family(self):
        rng = np.random.default_rng(17)
        cases = [
            poisson_binomial_model(rng.random(5)),
            matching_model(5),
            matching_model(4, (2, 2)),
            birthday_pairs_model(3, 3),
            birthday_triples_model(4, 4),
            coupon_model(3, 3),
        ]
        for model in cases:
            measure = enumerate_pair_measure(model)
            top = int(measure.w.max()) + 2
            g = (rng.random(top) < 0.5).astype(float)
            lhs, rhs = stein_identity_oracle(measure, c=model.c, g=g)
            assert abs(lhs - rhs) <= 1e-10, model.problem
