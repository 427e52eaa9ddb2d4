"""Closed-form tail-approximation coefficients and the dominance classifier.

The tail approximations are linear combinations of the marginal tails,

    Pr(M_n > x) ~ A_n Fbar(x) + B_n Gbar(x)
    Pr(S_n > x) ~ A_n Fbar(x) + C_n Gbar(x)

with, writing mu = E[Y^alpha],

    A_n = sum_{i=1..n} mu^i
    B_n = sum_{i=1..n} mu^(i-2) E[M_{n-i+1}^alpha]
    C_n = sum_{i=1..n} mu^(i-2) E[S_{n-i+1,+}^alpha]

and, when mu < 1, the infinite-horizon limits

    A_inf = mu/(1-mu),
    B_inf = E[M_inf^alpha] / (mu (1-mu)),
    C_inf = E[S_inf,+^alpha] / (mu (1-mu)).

For FGM-coupled pairs with parameter theta the coefficients become (with
``checked`` variables distributed as the max of two iid copies)

    A'_n = ((1-theta) mu + theta E[Ychk^alpha]) sum_{i=1..n} mu^(i-1)
    B'_n = sum_{i=1..n} mu^(i-1) ((1-theta) E[(M_{n-i}+X)_+^alpha]
                                  + theta   E[(M_{n-i}+Xchk)_+^alpha])

and C'_n likewise with S in place of M, where X and Xchk are drawn fresh,
independent of the simulated prefixes.

A_n and mu are exact (closed form or quadrature); the path moments have no
closed form for the catalog laws and are estimated by Monte Carlo with
reported standard errors.  All moments for one coefficient come from a
single path sweep (prefix reuse), and standard errors are taken over
per-path totals of the full linear combination, so cross-term correlation
is accounted for exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import rng as rngmod
from .distributions import (
    FgmPairSpec,
    Lognormal,
    Pareto,
    RVStar,
    Shifted,
    TailDistribution,
    checked_upper_moment,
)
from .model import Fgm, Finite, Horizon, Infinite, ModelSpec, draw_pairs, truncation_level

__all__ = [
    "Case",
    "ScenarioClass",
    "CoefficientSet",
    "classify",
    "coeff_finite",
    "coeff_infinite",
    "coeff_fgm_finite",
    "asymptotic_tail",
    "asymptotic_weights",
]

_SWEEP_CHUNK = 1 << 19


class Case(enum.Enum):
    INSURANCE_DOMINANT = "insurance_dominant"
    FINANCE_DOMINANT = "finance_dominant"
    BALANCED = "balanced"
    VIOLATED = "violated"


@dataclass(frozen=True)
class ScenarioClass:
    case: Case
    effective_alpha: float


@dataclass(frozen=True)
class CoefficientSet:
    """alpha, mu_alpha and the A/B/C combination weights for one horizon.

    ``se_b``/``se_c`` are the Monte Carlo standard errors of the estimated
    coefficients; 0 for exactly computed entries.
    """

    alpha: float
    mu_alpha: float
    a: float
    b: float
    c: float
    horizon: Horizon
    se_b: float = 0.0
    se_c: float = 0.0


def _strip_shift(d: TailDistribution) -> TailDistribution:
    # shifting by a constant preserves both the regular-variation index and
    # strong-regular-variation membership (tails are weakly equivalent)
    while isinstance(d, Shifted):
        d = d.inner
    return d


def classify(f: TailDistribution, g: TailDistribution) -> ScenarioClass:
    """Decide which certified dominance case a (f, g) configuration realizes.

    The classifier is conservative: it certifies only configurations whose
    class membership is analytically known for the catalog.

    * one marginal log-damped Pareto, the other with lighter tail
      (higher index, or equal index with stronger log damping, or
      lognormal, or a dominated plain Pareto)  ->  that marginal dominates;
    * both log-damped Pareto with equal index and equal log exponent
      ->  balanced (the tail ratio is asymptotically constant);
    * anything requiring a plain Pareto or a lognormal to drive the
      asymptotics  ->  violated (no strongly-regularly-varying driver).
    """
    fb, gb = _strip_shift(f), _strip_shift(g)

    if isinstance(fb, RVStar) and isinstance(gb, RVStar):
        if fb.alpha < gb.alpha:
            return ScenarioClass(Case.INSURANCE_DOMINANT, fb.alpha)
        if fb.alpha > gb.alpha:
            return ScenarioClass(Case.FINANCE_DOMINANT, gb.alpha)
        if fb.beta == gb.beta:
            return ScenarioClass(Case.BALANCED, fb.alpha)
        # equal index, unequal log damping: the lighter (larger beta) side is
        # o() of the heavier, so the heavier side drives the asymptotics
        if fb.beta < gb.beta:
            return ScenarioClass(Case.INSURANCE_DOMINANT, fb.alpha)
        return ScenarioClass(Case.FINANCE_DOMINANT, gb.alpha)

    if isinstance(fb, RVStar):
        if isinstance(gb, Lognormal):
            return ScenarioClass(Case.INSURANCE_DOMINANT, fb.alpha)
        if isinstance(gb, Pareto) and gb.alpha > fb.alpha:
            return ScenarioClass(Case.INSURANCE_DOMINANT, fb.alpha)
        return ScenarioClass(Case.VIOLATED, math.nan)

    if isinstance(gb, RVStar):
        if isinstance(fb, Lognormal):
            return ScenarioClass(Case.FINANCE_DOMINANT, gb.alpha)
        if isinstance(fb, Pareto) and fb.alpha > gb.alpha:
            return ScenarioClass(Case.FINANCE_DOMINANT, gb.alpha)
        return ScenarioClass(Case.VIOLATED, math.nan)

    return ScenarioClass(Case.VIOLATED, math.nan)


def _require_certified(spec: ModelSpec) -> ScenarioClass:
    sc = classify(spec.f, spec.g)
    if sc.case is Case.VIOLATED:
        raise ValueError("assumption not certified for this configuration: "
                         "no strongly-regularly-varying law drives the tails")
    return sc


def _geometric_sum(mu: float, n: int) -> float:
    # sum_{i=1..n} mu^i without cancellation surprises
    return float(np.sum(mu ** np.arange(1, n + 1)))


def _moment_streams(seed_or_rng, n_chunks: int):
    """Either shard deterministic Philox streams off a seed, or consume a
    caller-provided generator sequentially."""
    if isinstance(seed_or_rng, np.random.Generator):
        return [seed_or_rng] * n_chunks
    seed = int(seed_or_rng)
    return [
        rngmod.stream(seed, rngmod.shard_stream_id(rngmod.PURPOSE_MOMENTS, i))
        for i in range(n_chunks)
    ]


def coeff_finite(spec: ModelSpec, n: int, moment_samples: int = 1_000_000,
                 seed_or_rng=0) -> CoefficientSet:
    """A_n exactly; B_n, C_n by one Monte Carlo prefix sweep of ``n`` steps.

    Re-indexing the defining sums by k = n-i+1 gives
    ``B_n = sum_{k=1..n} mu^(n-k-1) E[M_k^alpha]`` (C_n likewise with
    S_{k,+}), so one sweep recording every prefix (S_k, M_k) yields all the
    moments; per-path totals of the weighted sum give the estimate and its
    standard error directly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _require_certified(spec)
    alpha = spec.alpha
    mu = spec.mu_alpha
    a = _geometric_sum(mu, n)
    weights = mu ** (n - np.arange(1, n + 1) - 1.0)  # mu^(n-k-1), k = 1..n

    sizes = rngmod.shard_sizes(moment_samples, _SWEEP_CHUNK)
    streams = _moment_streams(seed_or_rng, len(sizes))
    sum_b = sum_b2 = sum_c = sum_c2 = 0.0
    total = 0
    for size, stream in zip(sizes, streams):
        s = np.zeros(size)
        m = np.zeros(size)
        w = np.ones(size)
        btot = np.zeros(size)
        ctot = np.zeros(size)
        for k in range(1, n + 1):
            x, y = draw_pairs(spec, stream, size)
            w = w * y
            s = s + x * w
            np.maximum(m, s, out=m)
            btot += weights[k - 1] * m**alpha
            ctot += weights[k - 1] * np.maximum(s, 0.0) ** alpha
        sum_b += float(btot.sum())
        sum_b2 += float((btot**2).sum())
        sum_c += float(ctot.sum())
        sum_c2 += float((ctot**2).sum())
        total += size
    b = sum_b / total
    c = sum_c / total
    var_b = max(sum_b2 / total - b * b, 0.0)
    var_c = max(sum_c2 / total - c * c, 0.0)
    return CoefficientSet(
        alpha=alpha, mu_alpha=mu, a=a, b=b, c=c, horizon=Finite(n),
        se_b=math.sqrt(var_b / total), se_c=math.sqrt(var_c / total),
    )


def coeff_infinite(spec: ModelSpec, moment_samples: int = 1_000_000,
                   seed_or_rng=0, truncation_tol: Optional[float] = None) -> CoefficientSet:
    """A_inf = mu/(1-mu) exactly; B_inf, C_inf from truncated-infinite paths."""
    _require_certified(spec)
    alpha = spec.alpha
    mu = spec.mu_alpha
    if not (alpha > 0) or not (mu < 1):
        raise ValueError(f"infinite horizon requires mu_alpha < 1, got {mu}")
    tol = truncation_tol
    if tol is None:
        tol = spec.horizon.truncation_tol if isinstance(spec.horizon, Infinite) else 1e-6
    n = truncation_level(mu, tol)

    sizes = rngmod.shard_sizes(moment_samples, _SWEEP_CHUNK)
    streams = _moment_streams(seed_or_rng, len(sizes))
    sum_b = sum_b2 = sum_c = sum_c2 = 0.0
    total = 0
    for size, stream in zip(sizes, streams):
        s = np.zeros(size)
        m = np.zeros(size)
        w = np.ones(size)
        for _ in range(n):
            x, y = draw_pairs(spec, stream, size)
            w = w * y
            s = s + x * w
            np.maximum(m, s, out=m)
        bm = m**alpha
        cm = np.maximum(s, 0.0) ** alpha
        sum_b += float(bm.sum())
        sum_b2 += float((bm**2).sum())
        sum_c += float(cm.sum())
        sum_c2 += float((cm**2).sum())
        total += size
    scale = 1.0 / (mu * (1.0 - mu))
    em = sum_b / total
    es = sum_c / total
    var_b = max(sum_b2 / total - em * em, 0.0)
    var_c = max(sum_c2 / total - es * es, 0.0)
    return CoefficientSet(
        alpha=alpha, mu_alpha=mu, a=mu / (1.0 - mu),
        b=em * scale, c=es * scale, horizon=Infinite(tol),
        se_b=math.sqrt(var_b / total) * scale,
        se_c=math.sqrt(var_c / total) * scale,
    )


def coeff_fgm_finite(pair: FgmPairSpec, alpha: float, n: int,
                     moment_samples: int = 1_000_000, seed_or_rng=0) -> CoefficientSet:
    """FGM coefficients A'_n (exact) and B'_n, C'_n (one prefix sweep).

    Path prefixes (M_k, S_k), k = 0..n-1, come from FGM-coupled paths; the
    mixed-moment terms add fresh X and checked-X draws independent of the
    prefixes, one of each per path per prefix index.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = ModelSpec(f=pair.f, g=pair.g, alpha=alpha,
                     dependence=Fgm(pair.theta) if pair.theta != 0.0 else Fgm(0.0))
    _require_certified(spec)
    theta = pair.theta
    mu = spec.mu_alpha
    ey_checked = checked_upper_moment(pair.g, alpha)
    a = ((1.0 - theta) * mu + theta * ey_checked) * float(np.sum(mu ** np.arange(0, n)))
    weights = mu ** (n - 1.0 - np.arange(0, n))  # mu^(n-1-k), k = 0..n-1

    sizes = rngmod.shard_sizes(moment_samples, _SWEEP_CHUNK)
    streams = _moment_streams(seed_or_rng, len(sizes))
    sum_b = sum_b2 = sum_c = sum_c2 = 0.0
    total = 0
    for size, stream in zip(sizes, streams):
        s = np.zeros(size)
        m = np.zeros(size)
        w = np.ones(size)
        btot = np.zeros(size)
        ctot = np.zeros(size)
        for k in range(0, n):
            if k > 0:
                x, y = draw_pairs(spec, stream, size)
                w = w * y
                s = s + x * w
                np.maximum(m, s, out=m)
            xf = pair.f.sample(stream, size)
            xc = pair.f.sample_checked(stream, size)
            bterm = (1.0 - theta) * np.maximum(m + xf, 0.0) ** alpha \
                + theta * np.maximum(m + xc, 0.0) ** alpha
            cterm = (1.0 - theta) * np.maximum(s + xf, 0.0) ** alpha \
                + theta * np.maximum(s + xc, 0.0) ** alpha
            btot += weights[k] * bterm
            ctot += weights[k] * cterm
        sum_b += float(btot.sum())
        sum_b2 += float((btot**2).sum())
        sum_c += float(ctot.sum())
        sum_c2 += float((ctot**2).sum())
        total += size
    b = sum_b / total
    c = sum_c / total
    var_b = max(sum_b2 / total - b * b, 0.0)
    var_c = max(sum_c2 / total - c * c, 0.0)
    return CoefficientSet(
        alpha=alpha, mu_alpha=mu, a=a, b=b, c=c, horizon=Finite(n),
        se_b=math.sqrt(var_b / total), se_c=math.sqrt(var_c / total),
    )


def asymptotic_weights(coeffs: CoefficientSet, target: str) -> tuple[float, float]:
    """(weight on Fbar, weight on Gbar) for a target in {"max", "sum"}."""
    if target == "max":
        return coeffs.a, coeffs.b
    if target == "sum":
        return coeffs.a, coeffs.c
    raise ValueError(f"target must be 'max' or 'sum', got {target!r}")


def asymptotic_tail(coeffs: CoefficientSet, weight_f: float, weight_g: float,
                    f: TailDistribution, g: TailDistribution, x):
    """Evaluate the linear-combination approximation weight_f*Fbar + weight_g*Gbar.

    Callers select the ruin (B) or sum (C) combination by passing the
    corresponding weights, typically via :func:`asymptotic_weights`;
    ``coeffs`` travels along so downstream diagnostics can report alpha,
    mu_alpha and coefficient standard errors next to the value.
    """
    del coeffs
    x = np.asarray(x, dtype=float)
    out = weight_f * f.tail(x) + weight_g * g.tail(x)
    return out if out.ndim else float(out)
