"""Coefficient machinery: exact A-series identities, Monte Carlo moments
against independent oracles, classifier decisions, FGM reductions."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from ruintail import (
    Case,
    FgmPairSpec,
    Finite,
    Lognormal,
    ModelSpec,
    Pareto,
    RVStar,
    Shifted,
    asymptotic_tail,
    asymptotic_weights,
    checked_upper_moment,
    classify,
    coeff_fgm_finite,
    coeff_finite,
    coeff_infinite,
)

BAL_F = Shifted(RVStar(2.0, 2.0, 1.0), -1.0)
BAL_G = RVStar(2.0, 2.0, 0.3)


# ---------------------------------------------------------------------------
# classifier
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "f,g,case,alpha",
    [
        (RVStar(2, 2, 1), Lognormal(0, 0.5), Case.INSURANCE_DOMINANT, 2.0),
        (RVStar(2, 2, 1), RVStar(2, 2, 0.5), Case.BALANCED, 2.0),
        (RVStar(3, 2, 1), RVStar(2, 2, 0.5), Case.FINANCE_DOMINANT, 2.0),
        (RVStar(2, 2, 1), RVStar(3, 2, 0.5), Case.INSURANCE_DOMINANT, 2.0),
        (Lognormal(0, 0.5), RVStar(2, 2, 0.3), Case.FINANCE_DOMINANT, 2.0),
        # equal index, unequal log damping: lighter side is o() of heavier
        (RVStar(2, 2, 1), RVStar(2, 3, 1), Case.INSURANCE_DOMINANT, 2.0),
        (RVStar(2, 3, 1), RVStar(2, 2, 1), Case.FINANCE_DOMINANT, 2.0),
        # plain Pareto may only be dominated
        (RVStar(2, 2, 1), Pareto(3, 1), Case.INSURANCE_DOMINANT, 2.0),
        (Pareto(3, 1), RVStar(2, 2, 1), Case.FINANCE_DOMINANT, 2.0),
        (Pareto(2, 1), RVStar(2, 2, 1), Case.VIOLATED, math.nan),
        (Pareto(2, 1), Pareto(2, 1), Case.VIOLATED, math.nan),
        (Lognormal(0, 1), Lognormal(0, 1), Case.VIOLATED, math.nan),
        (Pareto(2, 1), Lognormal(0, 1), Case.VIOLATED, math.nan),
        # shifts are transparent
        (Shifted(RVStar(2, 2, 1), -1.0), RVStar(2, 2, 0.3), Case.BALANCED, 2.0),
        (Shifted(Lognormal(0, 0.5), -1.0), RVStar(2, 2, 0.3),
         Case.FINANCE_DOMINANT, 2.0),
    ],
)
def test_classifier_cases(f, g, case, alpha):
    sc = classify(f, g)
    assert sc.case is case
    if math.isnan(alpha):
        assert math.isnan(sc.effective_alpha)
    else:
        assert sc.effective_alpha == alpha


def test_violated_configuration_refused():
    spec = ModelSpec(f=Pareto(2, 1), g=Pareto(2, 1), alpha=2.0)
    with pytest.raises(ValueError, match="not certified"):
        coeff_finite(spec, 2, moment_samples=10_000)


# ---------------------------------------------------------------------------
# finite-horizon coefficients
# ---------------------------------------------------------------------------


def _spec(f=BAL_F, g=BAL_G, **kw) -> ModelSpec:
    return ModelSpec(f=f, g=g, alpha=2.0, **kw)


def test_a_series_arithmetic():
    cs = coeff_finite(_spec(), 2, moment_samples=10_000)
    assert cs.mu_alpha == pytest.approx(0.27, abs=1e-15)
    assert cs.a == pytest.approx(0.27 + 0.27**2, abs=1e-12)


def test_b1_c1_equal_and_match_quadrature_oracle():
    # M_1 = S_{1,+}, so B_1 = C_1 = E[X_+^alpha]; oracle by direct quadrature
    f = Shifted(RVStar(2.0, 2.0, 1.0), -1.5)
    spec = _spec(f=f)
    ex2_oracle = (
        integrate.quad(lambda x: 2 * x * float(f.tail(x)), 0, 50, limit=300)[0]
        + integrate.quad(lambda w: 2 * math.exp(2 * w) * float(f.tail(math.exp(w)))
                         * 1.0, math.log(50), 300, limit=400)[0]
    )
    cs = coeff_finite(spec, 1, moment_samples=2_000_000, seed_or_rng=3)
    assert cs.b == cs.c  # identical sweeps, identical totals
    assert abs(cs.b - ex2_oracle) <= 4.0 * cs.se_b


def test_b2_against_oversampled_independent_run():
    spec = _spec()
    small = coeff_finite(spec, 2, moment_samples=200_000, seed_or_rng=5)
    big = coeff_finite(spec, 2, moment_samples=2_000_000, seed_or_rng=6)
    tol = 3.0 * math.hypot(small.se_b, big.se_b)
    assert abs(small.b - big.b) <= tol
    tol_c = 3.0 * math.hypot(small.se_c, big.se_c)
    assert abs(small.c - big.c) <= tol_c


def test_c_below_b_for_signed_losses():
    spec = _spec(f=Shifted(RVStar(2.0, 2.0, 1.0), -1.5))
    for n in (1, 2, 5):
        cs = coeff_finite(spec, n, moment_samples=300_000, seed_or_rng=7)
        assert cs.c <= cs.b + 1e-12
        assert cs.a >= 0 and cs.b >= 0 and cs.c >= 0


def test_coefficients_nondecreasing_in_horizon():
    spec = _spec(f=Shifted(RVStar(2.0, 2.0, 1.0), -1.5))
    prev = None
    for n in (1, 2, 4, 8):
        cs = coeff_finite(spec, n, moment_samples=400_000, seed_or_rng=8)
        if prev is not None:
            assert cs.a > prev.a
            assert cs.b >= prev.b - 3.0 * math.hypot(cs.se_b, prev.se_b)
            assert cs.c >= prev.c - 3.0 * math.hypot(cs.se_c, prev.se_c)
        prev = cs


# ---------------------------------------------------------------------------
# infinite-horizon coefficients
# ---------------------------------------------------------------------------


def test_a_infinity_formula():
    cs = coeff_infinite(_spec(), moment_samples=50_000, seed_or_rng=9)
    assert cs.a == pytest.approx(0.27 / 0.73, abs=1e-15)
    spec75 = _spec(g=RVStar(2.0, 2.0, 0.5))
    cs75 = coeff_infinite(spec75, moment_samples=50_000, seed_or_rng=9)
    assert cs75.a == pytest.approx(3.0, abs=1e-12)


def test_a_chain_identity_exact():
    spec = _spec()
    mu = spec.mu_alpha
    a_inf = mu / (1.0 - mu)
    for n in (1, 5, 10, 30):
        cs = coeff_finite(spec, n, moment_samples=10_000)
        assert a_inf - cs.a == pytest.approx(mu ** (n + 1) / (1 - mu), rel=1e-10)


def test_infinite_dominates_finite_coefficients():
    spec = _spec()
    inf = coeff_infinite(spec, moment_samples=1_000_000, seed_or_rng=10)
    for n in (1, 5, 10, 30):
        fin = coeff_finite(spec, n, moment_samples=500_000, seed_or_rng=11)
        assert inf.b >= fin.b - 3.0 * math.hypot(inf.se_b, fin.se_b)
        assert inf.c >= fin.c - 3.0 * math.hypot(inf.se_c, fin.se_c)


def test_infinite_requires_contraction():
    with pytest.raises(ValueError, match="mu_alpha < 1"):
        coeff_infinite(_spec(g=RVStar(2.0, 2.0, 0.7)), moment_samples=10_000)


# ---------------------------------------------------------------------------
# FGM coefficients
# ---------------------------------------------------------------------------


def test_fgm_theta_zero_reduces_to_independent():
    pair = FgmPairSpec(theta=0.0, f=BAL_F, g=BAL_G)
    prime = coeff_fgm_finite(pair, 2.0, 3, moment_samples=1_000_000, seed_or_rng=12)
    plain = coeff_finite(_spec(), 3, moment_samples=1_000_000, seed_or_rng=13)
    assert prime.a == pytest.approx(plain.a, rel=1e-12)
    assert abs(prime.b - plain.b) <= 3.0 * math.hypot(prime.se_b, plain.se_b)
    assert abs(prime.c - plain.c) <= 3.0 * math.hypot(prime.se_c, plain.se_c)


def test_fgm_b1_formula():
    # B'_1 = (1-theta) E[X_+^a] + theta E[Xcheck_+^a]  (prefix maximum is 0)
    theta = 0.6
    pair = FgmPairSpec(theta=theta, f=BAL_F, g=BAL_G)
    cs = coeff_fgm_finite(pair, 2.0, 1, moment_samples=2_000_000, seed_or_rng=14)
    ex = BAL_F.upper_moment(2.0)

    def checked_tail(x):
        t = float(BAL_F.tail(x))
        return t * (2.0 - t)

    ex_checked = (
        integrate.quad(lambda x: 2 * x * checked_tail(x), 0, 50, limit=300)[0]
        + integrate.quad(lambda w: 2 * math.exp(2 * w) * checked_tail(math.exp(w)),
                         math.log(50), 300, limit=400)[0]
    )
    expected = (1 - theta) * ex + theta * ex_checked
    assert abs(cs.b - expected) <= 4.0 * cs.se_b
    assert cs.b == cs.c  # one-step prefix: M_0 = S_0 = 0


def test_fgm_a_prime_uses_checked_discount_moment():
    theta = 0.5
    pair = FgmPairSpec(theta=theta, f=BAL_F, g=BAL_G)
    cs = coeff_fgm_finite(pair, 2.0, 2, moment_samples=10_000, seed_or_rng=15)
    mu = 0.27
    eyc = checked_upper_moment(BAL_G, 2.0)
    expected = ((1 - theta) * mu + theta * eyc) * (1 + mu)
    assert cs.a == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# asymptotic tail evaluation
# ---------------------------------------------------------------------------


def test_asymptotic_tail_weight_selection():
    cs = coeff_finite(_spec(), 1, moment_samples=10_000, seed_or_rng=16)
    # degenerate weights isolate each term
    assert asymptotic_tail(cs, 0.0, 1.0, BAL_F, BAL_G, 5.0) == float(BAL_G.tail(5.0))
    x_low = -2.0  # below both supports: both tails are 1
    assert asymptotic_tail(cs, 0.3, 0.7, BAL_F, BAL_G, x_low) == pytest.approx(1.0)
    wf, wg = asymptotic_weights(cs, "max")
    assert (wf, wg) == (cs.a, cs.b)
    wf, wg = asymptotic_weights(cs, "sum")
    assert (wf, wg) == (cs.a, cs.c)
    with pytest.raises(ValueError):
        asymptotic_weights(cs, "nope")


def test_asymptotic_tail_n1_is_base_expansion():
    # at n = 1 the combination is mu Fbar + E[X_+^a] Gbar
    spec = _spec()
    cs = coeff_finite(spec, 1, moment_samples=2_000_000, seed_or_rng=17)
    x = 50.0
    wf, wg = asymptotic_weights(cs, "max")
    value = asymptotic_tail(cs, wf, wg, spec.f, spec.g, x)
    expected = 0.27 * float(spec.f.tail(x)) + spec.f.upper_moment(2.0) * float(
        spec.g.tail(x))
    assert value == pytest.approx(expected, rel=5e-3)  # B_1 is MC-estimated
