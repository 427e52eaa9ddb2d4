"""Quadrature oracles and numeric verifiers for the supporting tail lemmas.

Working on the log scale turns products of positive variables into sums, so
one set of convolution machinery serves both worlds.  For a law ``U`` on the
real line the log-transform

    V(x) = 1 - Ubar(e^x) / Ubar(0)

is the conditional law of ``ln xi`` on ``xi > 0``; its exponential moment
``Vhat(alpha) = int e^{alpha x} dV(x)`` equals ``E[xi^alpha | xi > 0]``.

Verified statements (each as an operation returning a
:class:`VerificationReport`):

* product-tail expansion: ``Pr(prod xi_i > x) ~ sum_i (prod_{j!=i}
  E xi_j^alpha) Ubar_i(x)`` for independent nonnegative factors;
* sum-tail expansion: the same linear combination with exponential moments
  for a convolution of laws on the real line, checked against a nested
  adaptive quadrature of the convolution integral (n <= 3);
* the n-fold relation ``Vbar^{n*}(x)/Vbar(x) -> n Vhat(alpha)^{n-1}``;
* a geometric no-blow-up bound for n-fold convolution tails, Monte Carlo:
  ``Vbar^{n*}(x) <= K (Vhat(alpha)+eps)^n Vbar(x)`` uniformly in n, x;
* negligibility of the infinite-horizon remainder past a truncation point;
* two-sided exponential envelopes for tail ratios (existence of a
  threshold x0 beyond which they hold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from . import rng as rngmod
from .distributions import TailDistribution
from .model import ModelSpec, draw_pairs, truncation_level

__all__ = [
    "LogTransformTail",
    "DirectLaw",
    "AdditiveLaw",
    "VerificationReport",
    "v_hat",
    "product_tail_expansion",
    "sum_tail_expansion",
    "convolve_tail_oracle",
    "verify_pakes",
    "verify_kesten",
    "verify_remainder",
    "verify_potter",
]

_QUAD_EPSABS = 1e-18
_QUAD_EPSREL = 1e-9


@dataclass(frozen=True)
class LogTransformTail:
    """The log-transform law V of a catalog distribution (see module doc)."""

    source: TailDistribution

    @property
    def mass_positive(self) -> float:
        return float(self.source.tail(0.0))

    @property
    def support_lower(self) -> float:
        s = self.source.support_lower
        return math.log(s) if s > 0 else -math.inf

    def v_tail(self, x):
        """Vbar(x) = Ubar(e^x) / Ubar(0)."""
        x = np.asarray(x, dtype=float)
        out = np.exp(self.source.log_tail_at_exp(x)) / self.mass_positive
        return out if out.ndim else float(out)

    def v_pdf(self, x):
        x = np.asarray(x, dtype=float)
        ex = np.exp(np.minimum(x, 700.0))
        out = ex * self.source.pdf(ex) / self.mass_positive
        return out if out.ndim else float(out)

    def v_quantile_level(self, p: float) -> float:
        """x with Vbar(x) = p."""
        if not (0 < p < 1):
            raise ValueError("level must lie in (0, 1)")
        u = 1.0 - p * self.mass_positive
        return math.log(float(self.source.quantile(u)))

    def exp_moment(self, alpha: float) -> float:
        return v_hat(self, alpha)


@dataclass(frozen=True)
class DirectLaw:
    """A catalog law viewed directly as a law on the real line.

    Used for the additive expansions applied at alpha = 0 (subexponential
    regime), where the exponential moment is 1 by normalization; positive
    exponential moments of heavy-tailed laws are infinite.
    """

    source: TailDistribution

    @property
    def support_lower(self) -> float:
        return self.source.support_lower

    def v_tail(self, x):
        return self.source.tail(x)

    def v_pdf(self, x):
        return self.source.pdf(x)

    def v_quantile_level(self, p: float) -> float:
        if not (0 < p < 1):
            raise ValueError("level must lie in (0, 1)")
        return float(self.source.quantile(1.0 - p))

    def exp_moment(self, alpha: float) -> float:
        if alpha == 0.0:
            return 1.0
        return math.inf


AdditiveLaw = Union[LogTransformTail, DirectLaw]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numeric lemma check.

    ``passed`` holds iff ``max_rel_err <= tolerance``; ``details`` carries
    verifier-specific diagnostics (hit counts, per-cell tables, thresholds)
    so failures are diagnosable from the report alone.
    """

    lemma_id: str
    grid: list[float]
    observed: list[float]
    predicted: list[float]
    max_rel_err: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    @staticmethod
    def build(lemma_id: str, grid, observed, predicted, max_rel_err, tolerance,
              **details) -> "VerificationReport":
        return VerificationReport(
            lemma_id=lemma_id,
            grid=[float(v) for v in grid],
            observed=[float(v) for v in observed],
            predicted=[float(v) for v in predicted],
            max_rel_err=float(max_rel_err),
            tolerance=float(tolerance),
            passed=bool(max_rel_err <= tolerance),
            details=details,
        )


def v_hat(t: LogTransformTail, alpha: float) -> float:
    """Exponential moment int e^{alpha x} dV(x) of a log-transform law.

    Diverges (returns inf) when the source's alpha-moment does; otherwise
    adaptive quadrature at relative tolerance 1e-9.  Equals
    ``E[xi^alpha]/Pr(xi>0)`` for the source variable.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0.0:
        return 1.0
    if not t.source.moment_is_finite(alpha):
        return math.inf

    def integrand(x: float) -> float:
        return math.exp(min(alpha * x, 700.0)) * float(t.v_pdf(x))

    lo = t.support_lower
    if math.isfinite(lo):
        val, _ = integrate.quad(integrand, lo, np.inf,
                                epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
    else:
        val1, _ = integrate.quad(integrand, -np.inf, 0.0,
                                 epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
        val2, _ = integrate.quad(integrand, 0.0, np.inf,
                                 epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
        val = val1 + val2
    return float(val)


def product_tail_expansion(ds: Sequence[TailDistribution], alpha: float, x) -> float:
    """Right-hand side of the product-tail expansion
    ``sum_i (prod_{j != i} E xi_j^alpha) Ubar_i(x)`` for independent
    nonnegative factors."""
    if len(ds) < 2:
        raise ValueError("need at least two factors")
    for d in ds:
        if d.support_lower < 0:
            raise ValueError("product expansion requires nonnegative factors")
    moments = [d.upper_moment(alpha) for d in ds]
    if any(math.isinf(m) for m in moments):
        raise ValueError("a factor has infinite alpha-moment; expansion undefined")
    total = 0.0
    for i, d in enumerate(ds):
        weight = math.prod(m for j, m in enumerate(moments) if j != i)
        total += weight * float(d.tail(x))
    return total


def sum_tail_expansion(vs: Sequence[AdditiveLaw], alpha: float, x) -> float:
    """Right-hand side of the convolution-tail expansion
    ``sum_i (prod_{j != i} Vhat_j(alpha)) Vbar_i(x)``."""
    if len(vs) < 2:
        raise ValueError("need at least two summands")
    hats = [v.exp_moment(alpha) for v in vs]
    if any(math.isinf(h) for h in hats):
        raise ValueError("a summand has infinite exponential moment; expansion undefined")
    total = 0.0
    for i, v in enumerate(vs):
        weight = math.prod(h for j, h in enumerate(hats) if j != i)
        total += weight * float(v.v_tail(x))
    return total


def _conv_breakpoints(v: AdditiveLaw, lo: float, hi: float) -> list[float]:
    pts = []
    for p in (0.5, 1e-1, 1e-2, 1e-4, 1e-6, 1e-8):
        try:
            q = v.v_quantile_level(p)
        except (ValueError, ArithmeticError):
            continue
        if lo < q < hi:
            pts.append(q)
    mid = 0.5 * (lo + hi) if math.isfinite(lo) else hi - 1.0
    if lo < mid < hi:
        pts.append(mid)
    return sorted(set(pts))


def _conv_tail_2(v1: AdditiveLaw, v2: AdditiveLaw, x: float) -> float:
    """Pr(eta1 + eta2 > x) by quadrature against v1's density."""
    m1, m2 = v1.support_lower, v2.support_lower
    if math.isfinite(m1) and math.isfinite(m2) and x <= m1 + m2:
        return 1.0
    t_hi = x - m2 if math.isfinite(m2) else math.inf
    saturated = float(v1.v_tail(t_hi)) if math.isfinite(t_hi) else 0.0

    def integrand(t: float) -> float:
        return float(v2.v_tail(x - t)) * float(v1.v_pdf(t))

    t_lo = m1 if math.isfinite(m1) else -math.inf
    val = 0.0
    if math.isfinite(t_lo) and math.isfinite(t_hi):
        if t_hi > t_lo:
            pts = [p for p in _conv_breakpoints(v1, t_lo, t_hi)]
            val, _ = integrate.quad(integrand, t_lo, t_hi, points=pts,
                                    epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
    else:
        anchor = min(0.0, x / 2.0) if not math.isfinite(t_lo) else t_lo
        if not math.isfinite(t_lo):
            part, _ = integrate.quad(integrand, -np.inf, anchor,
                                     epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
            val += part
        upper = t_hi if math.isfinite(t_hi) else math.inf
        if math.isfinite(upper):
            pts = _conv_breakpoints(v1, anchor, upper)
            part, _ = integrate.quad(integrand, anchor, upper, points=pts,
                                     epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
        else:
            part, _ = integrate.quad(integrand, anchor, np.inf,
                                     epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=500)
        val += part
    return float(min(val + saturated, 1.0))


def convolve_tail_oracle(vs: Sequence[AdditiveLaw], x: float) -> float:
    """Convolution tail ``Pr(eta_1 + ... + eta_n > x)`` by nested adaptive
    quadrature; restricted to n in {2, 3} (cost grows exponentially)."""
    n = len(vs)
    if n == 2:
        return _conv_tail_2(vs[0], vs[1], x)
    if n == 3:
        v1, v2, v3 = vs
        m23 = v2.support_lower + v3.support_lower
        m1 = v1.support_lower
        if math.isfinite(m1) and math.isfinite(m23) and x <= m1 + m23:
            return 1.0
        t_hi = x - m23 if math.isfinite(m23) else math.inf
        saturated = float(v1.v_tail(t_hi)) if math.isfinite(t_hi) else 0.0

        def integrand(t: float) -> float:
            return _conv_tail_2(v2, v3, x - t) * float(v1.v_pdf(t))

        t_lo = m1 if math.isfinite(m1) else -math.inf
        if math.isfinite(t_lo) and math.isfinite(t_hi):
            if t_hi <= t_lo:
                return float(min(saturated + (1.0 if t_hi < t_lo else 0.0), 1.0))
            pts = _conv_breakpoints(v1, t_lo, t_hi)
            val, _ = integrate.quad(integrand, t_lo, t_hi, points=pts,
                                    epsabs=_QUAD_EPSABS, epsrel=1e-7, limit=200)
        else:
            val, _ = integrate.quad(integrand, t_lo, t_hi,
                                    epsabs=_QUAD_EPSABS, epsrel=1e-7, limit=200)
        return float(min(val + saturated, 1.0))
    raise ValueError("convolution oracle supports n in {2, 3} only")


def verify_pakes(v: LogTransformTail, alpha: float, n_values: Sequence[int] = (2, 3),
                 level: float = 1e-6, tolerance: float = 0.10) -> VerificationReport:
    """Check ``Vbar^{n*}(x)/Vbar(x)`` against ``n Vhat(alpha)^{n-1}`` at the
    x where ``Vbar(x) = level``."""
    vh = v_hat(v, alpha)
    if math.isinf(vh):
        raise ValueError("exponential moment is infinite at this alpha")
    x = v.v_quantile_level(level)
    observed, predicted = [], []
    for n in n_values:
        if n not in (2, 3):
            raise ValueError("verify_pakes covers n in {2, 3}")
        oracle = convolve_tail_oracle([v] * n, x)
        observed.append(oracle / float(v.v_tail(x)))
        predicted.append(n * vh ** (n - 1))
    rel = max(abs(o / p - 1.0) for o, p in zip(observed, predicted))
    return VerificationReport.build(
        "pakes", list(n_values), observed, predicted, rel, tolerance,
        x=x, level=level, v_hat=vh,
    )


# ---------------------------------------------------------------------------
# Monte Carlo verifiers
# ---------------------------------------------------------------------------

_MC_CHUNK = 1 << 20


def verify_kesten(g: TailDistribution, alpha: float, eps: float, n_max: int,
                  x_grid: Sequence[float], samples: int, seed: int,
                  blowup_tolerance: float = 0.10) -> VerificationReport:
    """Geometric bound on n-fold product tails, by Monte Carlo.

    Estimates ``Pr(prod_{j<=n} Y_j > x)`` for n = 1..n_max over the grid and
    forms ``Khat(m) = max_{n<=m, x} estimate / ((mu+eps)^n Gbar(x))``.  The
    bound holds with some finite constant iff the running max stops growing:
    pass requires ``Khat(n_max) <= (1+tol) Khat(n_max/2)``.  Zero-hit cells
    are excluded from the max and counted in the report.
    """
    if not g.moment_is_finite(alpha):
        raise ValueError("exponential moment is infinite at this alpha "
                         "(law excluded by the bound's hypothesis)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    mu = g.upper_moment(alpha)
    x_grid = np.asarray(x_grid, dtype=float)
    counts = np.zeros((n_max, len(x_grid)), dtype=np.int64)

    sizes = rngmod.shard_sizes(samples, _MC_CHUNK)
    for shard, size in enumerate(sizes):
        stream = rngmod.stream(seed, rngmod.shard_stream_id(rngmod.PURPOSE_KESTEN, shard))
        w = np.ones(size)
        for n in range(1, n_max + 1):
            w = w * g.sample(stream, size)
            counts[n - 1] += (w[:, None] > x_grid[None, :]).sum(axis=0)

    gbar = np.asarray(g.tail(x_grid), dtype=float)
    khat_n = []
    zero_cells = 0
    for n in range(1, n_max + 1):
        est = counts[n - 1] / samples
        denom = (mu + eps) ** n * gbar
        zero = counts[n - 1] == 0
        zero_cells += int(zero.sum())
        ratios = np.where(zero, 0.0, est / denom)
        khat_n.append(float(ratios.max()))
    running = np.maximum.accumulate(khat_n)
    k_half = running[n_max // 2 - 1]
    k_full = running[n_max - 1]
    growth = k_full / k_half - 1.0 if k_half > 0 else math.inf
    return VerificationReport.build(
        "kesten", list(range(1, n_max + 1)), khat_n, list(running),
        max(growth, 0.0), blowup_tolerance,
        mu_alpha=mu, eps=eps, samples=samples, zero_cells=zero_cells,
        k_hat=float(k_full), x_grid=[float(v) for v in x_grid],
    )


def verify_remainder(spec: ModelSpec, n_list: Sequence[int], x_grid: Sequence[float],
                     samples: int, seed: int, s_samples: Optional[int] = None,
                     tolerance: float = 0.05, batches: int = 10,
                     truncation_tol: float = 1e-6) -> VerificationReport:
    """Negligibility of the post-truncation remainder, by paired Monte Carlo.

    The remainder past period n factorizes as ``W_n * S'`` with
    ``W_n = prod_{j<=n} Y_j`` independent of ``S'``, a fresh copy of the
    infinite-horizon sum.  Exceedance probabilities are therefore estimated
    by cross-pairing an independent W-sample with an independent S-sample
    (every pair (i, j) contributes an indicator), which resolves remainder
    probabilities far below 1/samples.  Standard errors come from
    ``batches`` fully independent sub-pairings.

    Pass iff the ratio against ``Fbar(x) + Gbar(x)`` at the largest n stays
    below ``tolerance`` on the whole grid.
    """
    if not (spec.mu_alpha < 1):
        raise ValueError(f"remainder check requires mu_alpha < 1, got {spec.mu_alpha}")
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1:
        raise ValueError("n_list must contain positive horizons")
    x_grid = np.asarray(x_grid, dtype=float)
    if s_samples is None:
        s_samples = samples
    n_top = n_list[-1]
    horizon = truncation_level(spec.mu_alpha, truncation_tol)

    # W side: products at every requested n, one sweep
    w_snap = {}
    w_parts = []
    for shard, size in enumerate(rngmod.shard_sizes(samples, _MC_CHUNK)):
        stream = rngmod.stream(seed, rngmod.shard_stream_id(rngmod.PURPOSE_REMAINDER_W, shard))
        w = np.ones(size)
        snaps = {}
        for n in range(1, n_top + 1):
            _, y = draw_pairs(spec, stream, size)
            w = w * y
            if n in n_list:
                snaps[n] = w.copy()
        w_parts.append(snaps)
    for n in n_list:
        w_snap[n] = np.concatenate([p[n] for p in w_parts])

    # S side: truncated infinite-horizon sums
    s_parts = []
    for shard, size in enumerate(rngmod.shard_sizes(s_samples, _MC_CHUNK)):
        stream = rngmod.stream(seed, rngmod.shard_stream_id(rngmod.PURPOSE_REMAINDER_S, shard))
        s = np.zeros(size)
        w = np.ones(size)
        for _ in range(horizon):
            x, y = draw_pairs(spec, stream, size)
            w = w * y
            s = s + x * w
        s_parts.append(s)
    s_all = np.concatenate(s_parts)

    denom = np.asarray(spec.f.tail(x_grid) + spec.g.tail(x_grid), dtype=float)
    ratios = {}
    ses = {}
    for n in n_list:
        r_b = np.empty((batches, len(x_grid)))
        for b in range(batches):
            wb = w_snap[n][b::batches]
            sb = np.sort(s_all[b::batches])
            m_pairs = len(wb) * len(sb)
            for j, x in enumerate(x_grid):
                with np.errstate(over="ignore"):
                    thr = x / wb
                cnt = len(sb) - np.searchsorted(sb, thr, side="right")
                r_b[b, j] = cnt.sum() / m_pairs
        p_hat = r_b.mean(axis=0)
        se = r_b.std(axis=0, ddof=1) / math.sqrt(batches)
        ratios[n] = p_hat / denom
        ses[n] = se / denom

    top = ratios[n_top]
    return VerificationReport.build(
        "remainder", list(x_grid), list(top), [0.0] * len(x_grid),
        float(np.max(top)), tolerance,
        n_list=list(n_list),
        ratios={int(n): [float(v) for v in ratios[n]] for n in n_list},
        ratio_ses={int(n): [float(v) for v in ses[n]] for n in n_list},
        samples=samples, s_samples=s_samples, horizon=horizon,
    )


def verify_potter(v: LogTransformTail, alpha: float, b: float = 1.1, eps: float = 0.1,
                  y_span: float = 4.0, y_points: int = 17,
                  x_levels: Sequence[float] = (0.5, 0.2, 0.1, 0.05, 1e-2, 1e-3, 1e-4, 1e-5),
                  x_max_level: float = 1e-7) -> VerificationReport:
    """Two-sided exponential envelope for tail ratios of the log transform.

    Searches the smallest grid threshold x0 such that for all grid x >= x0
    and offsets y with x + y >= x0,

        (1/b) (e^{-(a+e)y} ^ e^{-(a-e)y}) <= Vbar(x+y)/Vbar(x)
                                          <= b (e^{-(a+e)y} v e^{-(a-e)y}).

    Pass iff such a threshold exists on the test grid; the report records
    the threshold and the worst envelope breach per candidate.
    """
    x_candidates = [v.v_quantile_level(p) for p in x_levels]
    x_deep = v.v_quantile_level(x_max_level)
    ys = np.linspace(-y_span, y_span, y_points)

    def breach(x0: float) -> float:
        worst = 0.0
        xs = np.linspace(x0, x_deep, 25)
        for x in xs:
            for y in ys:
                if x + y < x0:
                    continue
                ratio = float(v.v_tail(x + y)) / float(v.v_tail(x))
                lo = (math.exp(-(alpha + eps) * y) if y > 0 else math.exp(-(alpha - eps) * y)) / b
                hi = (math.exp(-(alpha - eps) * y) if y > 0 else math.exp(-(alpha + eps) * y)) * b
                if ratio < lo:
                    worst = max(worst, lo / ratio - 1.0)
                elif ratio > hi:
                    worst = max(worst, ratio / hi - 1.0)
        return worst

    breaches = [breach(x0) for x0 in x_candidates]
    found = [i for i, w in enumerate(breaches) if w == 0.0]
    idx = found[0] if found else int(np.argmin(breaches))
    return VerificationReport.build(
        "potter", x_candidates, breaches, [0.0] * len(breaches),
        breaches[idx], 0.0,
        x0=x_candidates[idx] if found else math.nan,
        x0_found=bool(found), b=b, eps=eps,
    )
