"""Catalog of one-dimensional laws used by the risk model.

Each law exposes its survival function (``tail``), generalized inverse CDF
(``quantile``), density, truncated power moments, and inverse-transform
sampling.  The catalog deliberately contains only laws whose membership in
the relevant regular-variation classes is known analytically:

``RVStar(alpha, beta, scale)``
    Log-damped Pareto: ``tail(x) = (x/scale)^-alpha * (1 + ln(x/scale))^-beta``
    for ``x >= scale``, with ``alpha > 0``, ``beta > 1``, ``scale > 0``.
    The log-transform of this law has tail ``e^{-alpha t}(1+t)^-beta``, a
    standard convolution-equivalent member with finite moment generating
    function at ``alpha``; the law itself is regularly varying of index
    ``-alpha`` with finite ``alpha``-moment of the positive part.

``Pareto(alpha, scale)``
    Plain Pareto, ``tail(x) = (x/scale)^-alpha``.  Its ``alpha``-moment is
    infinite, so at its own index it can only serve as a dominated or
    contrast component, never as the driving law.

``Lognormal(mu, sigma)``
    All power moments finite; lighter than every power tail.

``Shifted(inner, offset)``
    ``inner + offset``; models a net loss as claims minus a deterministic
    premium (``offset = -premium``).

Sampling is inverse-transform throughout: a law consumes exactly one
uniform per draw, which keeps sharded Monte Carlo sweeps reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate
from scipy.special import erfc, log_ndtr, ndtri

__all__ = [
    "RVStar",
    "Pareto",
    "Lognormal",
    "Shifted",
    "TailDistribution",
    "FgmPairSpec",
    "sample_fgm",
    "fgm_conditional_inverse",
    "checked_upper_moment",
]

# Quadrature tolerances for moment integrals (absolute / relative).
_QUAD_EPSABS = 1e-12
_QUAD_EPSREL = 1e-9

_U_FLOOR = 1e-300
_U_CEIL = 1.0 - 1e-16


def _clip_u(u):
    return np.clip(np.asarray(u, dtype=float), _U_FLOOR, _U_CEIL)


def _require_open_unit(u):
    if np.any((np.asarray(u) <= 0.0) | (np.asarray(u) >= 1.0)):
        raise ValueError("quantile requires u in the open interval (0, 1)")


class _TailBase:
    """Shared behaviour: inverse-transform sampling, checked quantile,
    generic moment quadrature on a log axis."""

    # -- abstract surface --------------------------------------------------
    @property
    def support_lower(self) -> float:
        raise NotImplementedError

    def tail(self, x):
        """Pr(xi > x); exact formula, vectorized."""
        raise NotImplementedError

    def log_tail_at_exp(self, w):
        """log tail(e^w), overflow-safe for large w."""
        raise NotImplementedError

    def quantile(self, u):
        """Generalized inverse of the CDF at u in (0, 1)."""
        raise NotImplementedError

    def pdf(self, x):
        """Density (the catalog laws are absolutely continuous)."""
        raise NotImplementedError

    def moment_is_finite(self, alpha: float) -> bool:
        """Whether E[xi_+^alpha] < infinity (analytic, per kind)."""
        raise NotImplementedError

    # -- shared operations ---------------------------------------------------
    def sample(self, rng: np.random.Generator, size=None):
        """Draw via quantile(uniform); consumes one uniform per variate."""
        return self.quantile(rng.random(size))

    def checked_quantile(self, u):
        """Quantile of the squared-CDF law, i.e. of max of two iid copies."""
        return self.quantile(np.sqrt(np.asarray(u, dtype=float)))

    def sample_checked(self, rng: np.random.Generator, size=None):
        return self.checked_quantile(rng.random(size))

    def upper_moment(self, alpha: float) -> float:
        """E[xi_+^alpha], or ``math.inf`` when the integral diverges.

        Closed form where available, otherwise adaptive quadrature of
        ``alpha * x^(alpha-1) * tail(x)`` over the positive axis (on a log
        axis above 1 so heavy tails decay exponentially in the integration
        variable), relative tolerance 1e-9.  Divergent cases are detected
        analytically per kind and reported as ``math.inf``, never as a large
        float.
        """
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if alpha == 0:
            return float(self.tail(0.0))
        if not self.moment_is_finite(alpha):
            return math.inf
        return _tail_power_integral(self, alpha)


def _tail_power_integral(d, alpha: float, factor=None) -> float:
    """integral of alpha x^(alpha-1) tail(x) dx over (0, inf) plus the
    sub-support mass, with an optional bounded extra ``factor(tail_value)``
    multiplying the tail (used for the squared-CDF law)."""
    lo = max(d.support_lower, 0.0)
    total = lo**alpha
    if factor is not None:
        total *= factor(1.0)
    split = max(lo, 1.0)

    def f_x(x: float) -> float:
        t = float(d.tail(x))
        return alpha * x ** (alpha - 1.0) * (t if factor is None else t * factor(t))

    if lo < split:
        part, _ = integrate.quad(
            f_x, lo, split, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=300
        )
        total += part

    def f_w(w: float) -> float:
        lt = float(d.log_tail_at_exp(w))
        val = alpha * math.exp(min(alpha * w + lt, 700.0))
        if factor is not None:
            val *= factor(math.exp(max(min(lt, 0.0), -745.0)))
        return val

    part, _ = integrate.quad(
        f_w, math.log(split), np.inf,
        epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500,
    )
    return total + part


@dataclass(frozen=True)
class RVStar(_TailBase):
    """Log-damped Pareto; the strongly-regularly-varying workhorse."""

    alpha: float
    beta: float
    scale: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError(f"RVStar requires alpha > 0, got {self.alpha}")
        if not (self.beta > 1):
            raise ValueError(f"RVStar requires beta > 1, got {self.beta}")
        if not (self.scale > 0):
            raise ValueError(f"RVStar requires scale > 0, got {self.scale}")

    @property
    def support_lower(self) -> float:
        return self.scale

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        t = np.log(np.maximum(x, self.scale) / self.scale)
        val = np.exp(-self.alpha * t) * (1.0 + t) ** (-self.beta)
        out = np.where(x < self.scale, 1.0, val)
        return out if out.ndim else float(out)

    def log_tail_at_exp(self, w):
        w = np.asarray(w, dtype=float)
        t = np.maximum(w - math.log(self.scale), 0.0)
        out = -self.alpha * t - self.beta * np.log1p(t)
        return out if out.ndim else float(out)

    def _ppf_t(self, u):
        """Solve alpha*t + beta*log1p(t) = -log(1-u) for t >= 0.

        phi(t) is increasing and concave, so Newton started from the
        under-estimate t0 = (L - beta*log1p(L/alpha))/alpha converges
        monotonically from below; iterations are vectorized.
        """
        a, b = self.alpha, self.beta
        L = -np.log1p(-_clip_u(u))
        t = np.maximum((L - b * np.log1p(L / a)) / a, 0.0)
        for _ in range(4):
            t -= (a * t + b * np.log1p(t) - L) / (a + b / (1.0 + t))
            t = np.maximum(t, 0.0)
        scale = 1.0 + float(np.max(L, initial=0.0))
        for _ in range(6):
            resid = a * t + b * np.log1p(t) - L
            if float(np.max(np.abs(resid), initial=0.0)) <= 1e-13 * scale:
                break
            t -= resid / (a + b / (1.0 + t))
            t = np.maximum(t, 0.0)
        return t

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        _require_open_unit(u_arr)
        out = self.scale * np.exp(self._ppf_t(u_arr))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, self.scale)
        t = np.log(xs / self.scale)
        val = np.exp(-self.alpha * t) * (1.0 + t) ** (-self.beta)
        val *= (self.alpha + self.beta / (1.0 + t)) / xs
        out = np.where(x < self.scale, 0.0, val)
        return out if out.ndim else float(out)

    def moment_is_finite(self, alpha: float) -> bool:
        return alpha <= self.alpha  # at the index itself beta > 1 saves it

    def upper_moment(self, alpha: float) -> float:
        if alpha == self.alpha:
            # substitution u = ln(x/scale) collapses the integral
            return self.scale**alpha * (1.0 + alpha / (self.beta - 1.0))
        return super().upper_moment(alpha)


@dataclass(frozen=True)
class Pareto(_TailBase):
    alpha: float
    scale: float

    def __post_init__(self):
        if not (self.alpha > 0):
            raise ValueError(f"Pareto requires alpha > 0, got {self.alpha}")
        if not (self.scale > 0):
            raise ValueError(f"Pareto requires scale > 0, got {self.scale}")

    @property
    def support_lower(self) -> float:
        return self.scale

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        val = (np.maximum(x, self.scale) / self.scale) ** (-self.alpha)
        out = np.where(x < self.scale, 1.0, val)
        return out if out.ndim else float(out)

    def log_tail_at_exp(self, w):
        w = np.asarray(w, dtype=float)
        out = -self.alpha * np.maximum(w - math.log(self.scale), 0.0)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        _require_open_unit(u_arr)
        out = self.scale * np.exp(-np.log1p(-_clip_u(u_arr)) / self.alpha)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        val = self.alpha / self.scale * (np.maximum(x, self.scale) / self.scale) ** (-self.alpha - 1.0)
        out = np.where(x < self.scale, 0.0, val)
        return out if out.ndim else float(out)

    def moment_is_finite(self, alpha: float) -> bool:
        return alpha < self.alpha  # log-divergent already at the index

    def upper_moment(self, alpha: float) -> float:
        if alpha == 0:
            return 1.0
        if alpha >= self.alpha:
            return math.inf
        return self.scale**alpha * self.alpha / (self.alpha - alpha)


@dataclass(frozen=True)
class Lognormal(_TailBase):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not (self.sigma > 0):
            raise ValueError(f"Lognormal requires sigma > 0, got {self.sigma}")

    @property
    def support_lower(self) -> float:
        return 0.0

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        z = (np.log(np.maximum(x, 1e-300)) - self.mu) / self.sigma
        out = np.where(x <= 0.0, 1.0, 0.5 * erfc(z / math.sqrt(2.0)))
        return out if out.ndim else float(out)

    def log_tail_at_exp(self, w):
        z = (np.asarray(w, dtype=float) - self.mu) / self.sigma
        out = log_ndtr(-z)
        return out if out.ndim else float(out)

    def quantile(self, u):
        u_arr = np.asarray(u, dtype=float)
        _require_open_unit(u_arr)
        out = np.exp(self.mu + self.sigma * ndtri(_clip_u(u_arr)))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        xs = np.maximum(x, 1e-300)
        z = (np.log(xs) - self.mu) / self.sigma
        val = np.exp(-0.5 * z * z) / (xs * self.sigma * math.sqrt(2.0 * math.pi))
        out = np.where(x <= 0.0, 0.0, val)
        return out if out.ndim else float(out)

    def moment_is_finite(self, alpha: float) -> bool:
        return True

    def upper_moment(self, alpha: float) -> float:
        return math.exp(alpha * self.mu + 0.5 * (alpha * self.sigma) ** 2)


@dataclass(frozen=True)
class Shifted(_TailBase):
    inner: "TailDistribution"
    offset: float

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise ValueError("Shifted offset must be finite")

    @property
    def support_lower(self) -> float:
        return self.inner.support_lower + self.offset

    def tail(self, x):
        return self.inner.tail(np.asarray(x, dtype=float) - self.offset)

    def log_tail_at_exp(self, w):
        w = np.asarray(w, dtype=float)
        # ln(e^w - offset) = w + log1p(-offset e^-w); fall back to direct
        # evaluation where e^w is not safely larger than |offset|.
        big = w > math.log(max(2.0 * abs(self.offset), 1.0)) + 1.0
        wbig = np.where(big, w, 1.0)
        shifted_log = wbig + np.log1p(-self.offset * np.exp(-wbig))
        out_big = self.inner.log_tail_at_exp(shifted_log)
        with np.errstate(divide="ignore"):
            out_small = np.log(self.inner.tail(np.exp(np.where(big, 0.0, w)) - self.offset))
        out = np.where(big, out_big, out_small)
        return out if out.ndim else float(out)

    def quantile(self, u):
        return self.inner.quantile(u) + self.offset

    def pdf(self, x):
        return self.inner.pdf(np.asarray(x, dtype=float) - self.offset)

    def moment_is_finite(self, alpha: float) -> bool:
        return self.inner.moment_is_finite(alpha)  # shifting keeps the index


TailDistribution = Union[RVStar, Pareto, Lognormal, Shifted]


def checked_upper_moment(d: TailDistribution, alpha: float) -> float:
    """E[max(xi_1, xi_2)^alpha] for iid copies of ``d``.

    The checked law has tail ``1 - F(x)^2 = tail(x) (2 - tail(x))``; the
    moment is integrated by the same scheme as ``upper_moment``.  Requires a
    law on the positive axis.
    """
    if d.support_lower < 0:
        raise ValueError("checked_upper_moment requires nonnegative support")
    if alpha == 0:
        return 1.0
    if not d.moment_is_finite(alpha):
        return math.inf
    return _tail_power_integral(d, alpha, factor=lambda t: 2.0 - t)


# ---------------------------------------------------------------------------
# Farlie-Gumbel-Morgenstern dependent pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FgmPairSpec:
    """A bivariate pair with FGM copula ``C(u,v) = uv(1 + theta(1-u)(1-v))``
    and marginals ``f`` (real line) and ``g`` (positive axis)."""

    theta: float
    f: TailDistribution
    g: TailDistribution

    def __post_init__(self):
        if not (-1.0 <= self.theta <= 1.0):
            raise ValueError(f"FGM theta must lie in [-1, 1], got {self.theta}")
        if self.g.support_lower < 0:
            raise ValueError("FGM second marginal must be supported on (0, inf)")


def fgm_conditional_inverse(theta: float, u, w):
    """Invert the conditional copula CDF ``v (1 + theta(1-2u)(1-v)) = w``.

    With ``a = theta * (1 - 2u)`` the equation is the quadratic
    ``a v^2 - (1+a) v + w = 0``; its root in [0, 1], written in the
    cancellation-free form ``2w / (1+a + sqrt((1+a)^2 - 4aw))``, degenerates
    smoothly to ``v = w`` as ``a -> 0``.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    a = theta * (1.0 - 2.0 * u)
    disc = (1.0 + a) ** 2 - 4.0 * a * w
    v = 2.0 * w / (1.0 + a + np.sqrt(np.maximum(disc, 0.0)))
    out = np.clip(v, 0.0, 1.0)
    return out if out.ndim else float(out)


def sample_fgm(pair: FgmPairSpec, rng: np.random.Generator, size=None):
    """Draw (X, Y) pairs from the FGM joint law.

    Consumes two uniforms per pair: ``u`` for the first marginal, ``w`` to
    invert the conditional CDF of the second given ``u``.
    """
    u = rng.random(size)
    w = rng.random(size)
    v = fgm_conditional_inverse(pair.theta, u, w)
    return pair.f.quantile(u), pair.g.quantile(v)
