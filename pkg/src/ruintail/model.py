"""Exact path simulation of the aggregate-loss recursions.

The model: per-period net losses ``X_1, X_2, ...`` (law ``f`` on the real
line) and stochastic discount factors ``Y_1, Y_2, ...`` (law ``g`` on the
positive axis).  Discounted sums and their running maxima

    S_0 = 0,  S_n = sum_{i<=n} X_i prod_{j<=i} Y_j,   M_n = max_{0<=k<=n} S_k

are simulated forward; the distributional recursions

    T_n = (X_n + T_{n-1}) Y_n            (same law as S_n)
    M_n =d (X_n + M_{n-1})_+ Y_n

are provided as independent cross-check samplers.  Pairs ``(X_i, Y_i)`` are
either independent or FGM-coupled; pairs across periods are always iid.

Forward simulation is the source of truth; the recursions exist to flag
sampler bugs distributionally (two-sample KS checks in the test suite).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distributions import FgmPairSpec, TailDistribution, sample_fgm

__all__ = [
    "Independent",
    "Fgm",
    "Finite",
    "Infinite",
    "ModelSpec",
    "PathSample",
    "truncation_level",
    "simulate_path",
    "simulate_path_batch",
    "simulate_T",
    "simulate_T_batch",
    "simulate_M_recursive",
    "simulate_M_recursive_batch",
    "simulate_truncated_infinite",
    "simulate_truncated_infinite_batch",
]

# A single extreme discount draw outside this band switches the rest of the
# sweep to log-space product accumulation to dodge overflow/underflow.
_DIRECT_PRODUCT_LO = 1e-6
_DIRECT_PRODUCT_HI = 1e6


@dataclass(frozen=True)
class Independent:
    pass


@dataclass(frozen=True)
class Fgm:
    theta: float

    def __post_init__(self):
        if not (-1.0 <= self.theta <= 1.0):
            raise ValueError(f"FGM theta must lie in [-1, 1], got {self.theta}")


Dependence = Union[Independent, Fgm]


@dataclass(frozen=True)
class Finite:
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("finite horizon requires n >= 1")


@dataclass(frozen=True)
class Infinite:
    truncation_tol: float = 1e-6

    def __post_init__(self):
        if not (0 < self.truncation_tol < 1):
            raise ValueError("truncation_tol must lie in (0, 1)")


Horizon = Union[Finite, Infinite]


@dataclass(frozen=True)
class ModelSpec:
    """Full experiment description: laws, dependence, tail index, horizon."""

    f: TailDistribution
    g: TailDistribution
    alpha: float
    dependence: Dependence = field(default_factory=Independent)
    horizon: Horizon = field(default_factory=lambda: Finite(1))

    def __post_init__(self):
        if self.g.support_lower < 0:
            raise ValueError("discount law g must be supported on (0, inf)")
        if isinstance(self.horizon, Infinite):
            if not (self.alpha > 0):
                raise ValueError("infinite horizon requires alpha > 0")
            if not (self.mu_alpha < 1):
                raise ValueError(
                    f"infinite horizon requires mu_alpha < 1, got {self.mu_alpha}"
                )

    @property
    def mu_alpha(self) -> float:
        """E[Y^alpha]; the geometric contraction rate of the model."""
        mu = self.__dict__.get("_mu_alpha")
        if mu is None:
            mu = self.g.upper_moment(self.alpha)
            self.__dict__["_mu_alpha"] = mu
        return mu

    @property
    def theta(self) -> float:
        return self.dependence.theta if isinstance(self.dependence, Fgm) else 0.0

    def fgm_pair(self) -> FgmPairSpec:
        return FgmPairSpec(theta=self.theta, f=self.f, g=self.g)


@dataclass(frozen=True)
class PathSample:
    """One realization of (S_n, M_n) with the horizon actually simulated."""

    s: float
    m: float
    n_used: int


def draw_pairs(spec: ModelSpec, rng: np.random.Generator, size):
    """One period's (X, Y) draws; FGM-coupled within the pair if specified.

    Draw order is part of the reproducibility contract: independent models
    consume the X uniforms then the Y uniforms; FGM models consume the
    first-marginal uniforms then the conditional uniforms.
    """
    if isinstance(spec.dependence, Fgm) and spec.dependence.theta != 0.0:
        return sample_fgm(spec.fgm_pair(), rng, size)
    x = spec.f.sample(rng, size)
    y = spec.g.sample(rng, size)
    return x, y


def truncation_level(mu_alpha: float, tol: float) -> int:
    """Horizon N making the geometric coefficient remainder at most tol.

    The coefficient series has remainder mu^(N+1)/(1-mu) after N terms;
    N = ceil(ln(tol (1-mu)/mu) / ln mu) is the smallest horizon pushing it
    below tol.
    """
    if not (0 < mu_alpha < 1):
        raise ValueError("infinite horizon requires mu_alpha < 1")
    if not (0 < tol < 1):
        raise ValueError("truncation tolerance must lie in (0, 1)")
    n = math.ceil(math.log(tol * (1.0 - mu_alpha) / mu_alpha) / math.log(mu_alpha))
    return max(int(n), 1)


class _ProductState:
    """Running discount products with automatic log-space fallback."""

    def __init__(self, size: int):
        self.w = np.ones(size)
        self.logw: Optional[np.ndarray] = None

    def update(self, y: np.ndarray) -> np.ndarray:
        """Multiply in one period's discount draws; return current products."""
        if self.logw is None:
            if np.any((y < _DIRECT_PRODUCT_LO) | (y > _DIRECT_PRODUCT_HI)):
                self.logw = np.log(self.w)
                self.w = np.empty(0)
            else:
                self.w *= y
                return self.w
        self.logw += np.log(y)
        return np.exp(self.logw)


def simulate_path_batch(spec: ModelSpec, n: int, rng: np.random.Generator, size: int,
                        return_draws: bool = False):
    """Forward-simulate ``size`` paths to horizon ``n``; return (S_n, M_n).

    With ``return_draws=True`` also returns the raw (X, Y) history with
    shape (n, size) each, for oracle recomputation in tests.
    """
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    s = np.zeros(size)
    m = np.zeros(size)
    prod = _ProductState(size)
    draws = [] if return_draws else None
    for _ in range(n):
        x, y = draw_pairs(spec, rng, size)
        if return_draws:
            draws.append((x, y))
        w = prod.update(y)
        s = s + x * w
        np.maximum(m, s, out=m)
    if return_draws:
        xs = np.stack([d[0] for d in draws])
        ys = np.stack([d[1] for d in draws])
        return s, m, xs, ys
    return s, m


def simulate_path(spec: ModelSpec, n: int, rng: np.random.Generator) -> PathSample:
    """One forward path draw of (S_n, M_n)."""
    s, m = simulate_path_batch(spec, n, rng, size=1)
    return PathSample(s=float(s[0]), m=float(m[0]), n_used=n)


def simulate_T_batch(spec: ModelSpec, n: int, rng: np.random.Generator, size: int):
    """Draws of T_n from the backward recursion T_k = (X_k + T_{k-1}) Y_k."""
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    t = np.zeros(size)
    for _ in range(n):
        x, y = draw_pairs(spec, rng, size)
        t = (x + t) * y
    return t


def simulate_T(spec: ModelSpec, n: int, rng: np.random.Generator) -> float:
    return float(simulate_T_batch(spec, n, rng, size=1)[0])


def simulate_M_recursive_batch(spec: ModelSpec, n: int, rng: np.random.Generator, size: int):
    """Draws of M_n from the recursion M_k =d (X_k + M_{k-1})_+ Y_k."""
    if n < 1:
        raise ValueError("horizon n must be >= 1")
    m = np.zeros(size)
    for _ in range(n):
        x, y = draw_pairs(spec, rng, size)
        m = np.maximum(x + m, 0.0) * y
    return m


def simulate_M_recursive(spec: ModelSpec, n: int, rng: np.random.Generator) -> float:
    return float(simulate_M_recursive_batch(spec, n, rng, size=1)[0])


def _infinite_horizon_n(spec: ModelSpec, truncation_tol: Optional[float]) -> int:
    tol = truncation_tol
    if tol is None:
        tol = spec.horizon.truncation_tol if isinstance(spec.horizon, Infinite) else 1e-6
    return truncation_level(spec.mu_alpha, tol)


def simulate_truncated_infinite_batch(spec: ModelSpec, rng: np.random.Generator,
                                      size: int, truncation_tol: Optional[float] = None):
    """Proxies for (S_inf, M_inf): forward paths truncated at the horizon
    where the geometric coefficient remainder drops below the tolerance."""
    if not (spec.alpha > 0) or not (spec.mu_alpha < 1):
        raise ValueError("infinite horizon requires mu_alpha < 1")
    n = _infinite_horizon_n(spec, truncation_tol)
    s, m = simulate_path_batch(spec, n, rng, size)
    return s, m, n


def simulate_truncated_infinite(spec: ModelSpec, rng: np.random.Generator,
                                truncation_tol: Optional[float] = None) -> PathSample:
    s, m, n = simulate_truncated_infinite_batch(spec, rng, size=1, truncation_tol=truncation_tol)
    return PathSample(s=float(s[0]), m=float(m[0]), n_used=n)
