"""Command-line front end.

Subcommands:

* ``simulate`` -- Monte Carlo tail estimates joined with the closed-form
  approximation for both the running-maximum and the sum targets; CSV out.
* ``coeffs``   -- the A/B/C coefficient set for a finite horizon or the
  infinite-horizon limit; CSV out.
* ``verify``   -- one of the numeric lemma checks; CSV report plus a
  one-line pass/fail summary on stdout; exit 1 on failure.
* ``fgm``      -- like ``simulate`` but with FGM-coupled pairs and the
  primed coefficient set, at a theta given on the command line.

Exit codes: 0 success / verification pass, 1 verification failure,
2 configuration error.  Identical config and seed produce byte-identical
output files.
"""

from __future__ import annotations

import argparse
import sys
from importlib.metadata import version as _pkg_version
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .asymptotics import Case, classify, coeff_fgm_finite, coeff_finite, coeff_infinite
from .config import ConfigError, ExperimentConfig, load_config
from .distributions import FgmPairSpec
from .estimate import Method, Target, default_x_grid, ratio_table, tail_n1
from .model import Fgm, Finite, Infinite, ModelSpec
from .svgplot import line_plot_svg
from .tailcalc import (
    LogTransformTail,
    VerificationReport,
    convolve_tail_oracle,
    sum_tail_expansion,
    verify_kesten,
    verify_pakes,
    verify_potter,
    verify_remainder,
)


def product_tail_expansion_for_model(spec: ModelSpec, x: float) -> float:
    """One-period expansion mu_alpha Fbar(x) + E[X_+^alpha] Gbar(x)."""
    ex = spec.f.upper_moment(spec.alpha)
    return spec.mu_alpha * float(spec.f.tail(x)) + ex * float(spec.g.tail(x))

__all__ = ["main", "run_simulate", "run_coeffs", "run_verify", "run_fgm"]

_EXIT_OK = 0
_EXIT_VERIFY_FAIL = 1
_EXIT_CONFIG = 2


def _artifact_version() -> str:
    try:
        return _pkg_version("ruintail")
    except Exception:
        return "unknown"


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_csv(path: str, cfg: ExperimentConfig, header: list[str],
               rows: list[list]) -> None:
    lines = [
        f"# config_hash={cfg.config_hash} seed={cfg.seed} "
        f"artifact_version={_artifact_version()}",
        ",".join(header),
    ]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _horizon_label(h) -> str:
    return f"finite({h.n})" if isinstance(h, Finite) else "infinite"


def _resolve_grid(cfg: ExperimentConfig) -> np.ndarray:
    gs = cfg.x_grid_spec
    if isinstance(gs, list):
        return np.asarray(sorted(float(v) for v in gs))
    return default_x_grid(cfg.model, points=gs["points"],
                          quantile_lo=gs["quantile_lo"], quantile_hi=gs["quantile_hi"])


def _require_certified(spec: ModelSpec) -> None:
    sc = classify(spec.f, spec.g)
    if sc.case is Case.VIOLATED:
        raise ConfigError(
            "configuration not certified: neither marginal is a "
            "strongly-regularly-varying driver (plain Pareto and lognormal "
            "laws cannot dominate); choose an rvstar-driven pair")


def _ratio_rows(spec: ModelSpec, cfg: ExperimentConfig, n: Optional[int],
                coeffs_by_target) -> tuple[list[list], np.ndarray, dict]:
    grid = _resolve_grid(cfg)
    rows = []
    series = {}
    for target in (Target.MAX_M, Target.SUM_S):
        coeffs = coeffs_by_target[target]
        diags = ratio_table(spec, target, coeffs, grid, cfg.samples, cfg.seed,
                            n=n, workers=cfg.workers, method=Method.CRUDE_MC)
        series[target.value] = [d.ratio for d in diags]
        for d in diags:
            e = d.estimate
            rows.append([
                target.value, _horizon_label(e.horizon), e.x, e.p_hat, e.se,
                e.ci_lo, e.ci_hi, d.asymptotic, d.ratio, d.ratio_ci[0],
                d.ratio_ci[1], e.samples, e.method.value,
            ])
    return rows, grid, series


_RATIO_HEADER = ["target", "horizon", "x", "p_hat", "se", "ci_lo", "ci_hi",
                 "asymptotic", "ratio", "ratio_lo", "ratio_hi", "samples", "method"]


def run_simulate(cfg: ExperimentConfig) -> int:
    """Tail estimates + ratio diagnostics for the configured horizon."""
    spec = cfg.model
    _require_certified(spec)
    if isinstance(spec.horizon, Finite):
        n: Optional[int] = spec.horizon.n
        cs = coeff_finite(spec, spec.horizon.n, cfg.moment_samples, cfg.seed)
    else:
        n = None
        cs = coeff_infinite(spec, cfg.moment_samples, cfg.seed,
                            truncation_tol=spec.horizon.truncation_tol)
    coeffs = {Target.MAX_M: cs, Target.SUM_S: cs}
    rows, grid, series = _ratio_rows(spec, cfg, n, coeffs)
    _write_csv(cfg.csv_path, cfg, _RATIO_HEADER, rows)
    if cfg.svg_path:
        svg = line_plot_svg(grid, series,
                            title=f"estimate/asymptotic, horizon {_horizon_label(spec.horizon)}")
        with open(cfg.svg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    print(f"simulate: wrote {len(rows)} rows to {cfg.csv_path}")
    return _EXIT_OK


def run_coeffs(cfg: ExperimentConfig, n: Optional[int], infinite: bool) -> int:
    """Coefficient set for horizon n (or the infinite-horizon limit)."""
    spec = cfg.model
    _require_certified(spec)
    if infinite:
        cs = coeff_infinite(spec, cfg.moment_samples, cfg.seed)
    else:
        if n is None:
            if not isinstance(spec.horizon, Finite):
                raise ConfigError("coeffs needs -n or --infinite for this config")
            n = spec.horizon.n
        cs = coeff_finite(spec, n, cfg.moment_samples, cfg.seed)
    _write_csv(cfg.csv_path, cfg,
               ["horizon", "alpha", "mu_alpha", "A", "B", "C", "se_B", "se_C"],
               [[_horizon_label(cs.horizon), cs.alpha, cs.mu_alpha,
                 cs.a, cs.b, cs.c, cs.se_b, cs.se_c]])
    print(f"coeffs: horizon={_horizon_label(cs.horizon)} mu_alpha={cs.mu_alpha:.6g} "
          f"A={cs.a:.6g} B={cs.b:.6g} C={cs.c:.6g}")
    return _EXIT_OK


def run_fgm(cfg: ExperimentConfig, theta: float, n: Optional[int]) -> int:
    """FGM-coupled ratio diagnostics with primed coefficients."""
    base = cfg.model
    _require_certified(base)
    if n is None:
        if not isinstance(base.horizon, Finite):
            raise ConfigError("fgm requires a finite horizon (give -n)")
        n = base.horizon.n
    spec = ModelSpec(f=base.f, g=base.g, alpha=base.alpha,
                     dependence=Fgm(theta), horizon=Finite(n))
    pair = FgmPairSpec(theta=theta, f=base.f, g=base.g)
    cs = coeff_fgm_finite(pair, base.alpha, n, cfg.moment_samples, cfg.seed)
    rows, grid, series = _ratio_rows(spec, cfg, n, {Target.MAX_M: cs, Target.SUM_S: cs})
    _write_csv(cfg.csv_path, cfg, _RATIO_HEADER, rows)
    if cfg.svg_path:
        svg = line_plot_svg(grid, series, title=f"FGM theta={theta:g}, n={n}")
        with open(cfg.svg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    print(f"fgm: theta={theta:g} n={n} wrote {len(rows)} rows to {cfg.csv_path}")
    return _EXIT_OK


_LEMMAS = ("c2", "l2", "pakes", "kesten", "remainder", "potter", "ratio")


def _report_csv(cfg: ExperimentConfig, rep: VerificationReport) -> None:
    rows = [[rep.lemma_id, g, o, p, rep.max_rel_err, rep.tolerance,
             "pass" if rep.passed else "fail"]
            for g, o, p in zip(rep.grid, rep.observed, rep.predicted)]
    _write_csv(cfg.csv_path, cfg,
               ["lemma", "grid", "observed", "predicted", "max_rel_err",
                "tolerance", "status"], rows)


def run_verify(cfg: ExperimentConfig, lemma: str, tolerance: Optional[float],
               n_max: int, eps: float) -> int:
    """Dispatch one lemma verification; exit 0 on pass, 1 on fail."""
    spec = cfg.model
    if lemma not in _LEMMAS:
        raise ConfigError(f"unknown lemma {lemma!r}; pick one of {_LEMMAS}")

    if lemma == "c2":
        # product expansion vs the exact one-period quadrature oracle
        tol = tolerance if tolerance is not None else 0.10
        grid = _resolve_grid(cfg)[-3:]
        observed, predicted = [], []
        for x in grid:
            predicted.append(product_tail_expansion_for_model(spec, float(x)))
            observed.append(tail_n1(spec, float(x)))
        err = max(abs(o / p - 1.0) for o, p in zip(observed, predicted))
        rep = VerificationReport.build("c2", grid, observed, predicted, err, tol)
    elif lemma == "l2":
        # two-term convolution expansion on the log scale, mixed laws
        tol = tolerance if tolerance is not None else 0.10
        vf = LogTransformTail(spec.f)
        vg = LogTransformTail(spec.g)
        heavier = vf if float(spec.f.tail(1e6)) >= float(spec.g.tail(1e6)) else vg
        x = heavier.v_quantile_level(1e-6)
        oracle = convolve_tail_oracle([vf, vg], x)
        expansion = sum_tail_expansion([vf, vg], spec.alpha, x)
        err = abs(oracle / expansion - 1.0)
        rep = VerificationReport.build("l2", [x], [oracle], [expansion], err, tol)
    elif lemma == "pakes":
        tol = tolerance if tolerance is not None else 0.10
        rep = verify_pakes(LogTransformTail(spec.g), spec.alpha,
                           n_values=(2, 3), tolerance=tol)
    elif lemma == "kesten":
        _require_certified(spec)
        levels = [0.5, 0.1, 1e-2, 1e-3, 1e-4]
        xg = [float(spec.g.quantile(1 - p)) for p in levels]
        rep = verify_kesten(spec.g, spec.alpha, eps, n_max, xg, cfg.samples, cfg.seed,
                            blowup_tolerance=tolerance if tolerance is not None else 0.10)
    elif lemma == "remainder":
        _require_certified(spec)
        levels = [1e-2, 3e-3, 1e-3]
        xg = []
        for lev in levels:
            f_plus_g = lambda x: float(spec.f.tail(x) + spec.g.tail(x)) - lev
            hi = 1.0
            while f_plus_g(hi) > 0:
                hi *= 4
            xg.append(float(brentq(f_plus_g, 1e-9, hi)))
        n_list = sorted({max(n_max // 4, 1), max(n_max // 2, 1), n_max})
        rep = verify_remainder(spec, n_list, xg, cfg.samples, cfg.seed,
                               tolerance=tolerance if tolerance is not None else 0.05)
    elif lemma == "potter":
        rep = verify_potter(LogTransformTail(spec.g), spec.alpha)
    else:  # ratio
        _require_certified(spec)
        if not isinstance(spec.horizon, Finite):
            raise ConfigError("verify ratio requires a finite horizon")
        n = spec.horizon.n
        cs = coeff_finite(spec, n, cfg.moment_samples, cfg.seed)
        grid = _resolve_grid(cfg)
        diags = ratio_table(spec, Target.MAX_M, cs, grid, cfg.samples, cfg.seed,
                            n=n, workers=cfg.workers)
        ratios = [d.ratio for d in diags]
        tol = tolerance if tolerance is not None else 0.10
        err = max(abs(r - 1.0) for r in ratios)
        rep = VerificationReport.build(
            "ratio", [d.x for d in diags], ratios, [1.0] * len(ratios), err, tol,
            horizon=n, samples=cfg.samples)

    _report_csv(cfg, rep)
    status = "PASS" if rep.passed else "FAIL"
    print(f"verify {lemma}: {status} max_rel_err={rep.max_rel_err:.4g} "
          f"tolerance={rep.tolerance:.4g}")
    return _EXIT_OK if rep.passed else _EXIT_VERIFY_FAIL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruintail",
        description="Tail-probability simulation and asymptotics verification "
                    "for the discrete-time insurance/financial risk model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="override output.csv_path")
        p.add_argument("--svg", help="override output.svg_path")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--samples", type=int, help="override run.samples")
        p.add_argument("--workers", type=int, help="override run.workers")

    p_sim = sub.add_parser("simulate", help="tail estimates + ratio diagnostics")
    common(p_sim)

    p_coef = sub.add_parser("coeffs", help="A/B/C coefficient set")
    common(p_coef)
    p_coef.add_argument("-n", type=int, default=None, help="finite horizon")
    p_coef.add_argument("--infinite", action="store_true", help="infinite horizon")

    p_ver = sub.add_parser("verify", help="numeric lemma checks")
    common(p_ver)
    p_ver.add_argument("lemma", choices=_LEMMAS)
    p_ver.add_argument("--tolerance", type=float, default=None)
    p_ver.add_argument("--n-max", type=int, default=10)
    p_ver.add_argument("--eps", type=float, default=0.05)

    p_fgm = sub.add_parser("fgm", help="FGM-coupled diagnostics")
    common(p_fgm)
    p_fgm.add_argument("--theta", type=float, required=True)
    p_fgm.add_argument("-n", type=int, default=None)
    return parser


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides = {}
    if args.out is not None:
        overrides["output.csv_path"] = args.out
    if args.svg is not None:
        overrides["output.svg_path"] = args.svg
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.samples is not None:
        overrides["run.samples"] = args.samples
    if args.workers is not None:
        overrides["run.workers"] = args.workers
    return overrides


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
        if args.command == "simulate":
            code = run_simulate(cfg)
        elif args.command == "coeffs":
            if args.infinite and args.n is not None:
                raise ConfigError("give either -n or --infinite, not both")
            code = run_coeffs(cfg, args.n, args.infinite)
        elif args.command == "verify":
            code = run_verify(cfg, args.lemma, args.tolerance, args.n_max, args.eps)
        elif args.command == "fgm":
            code = run_fgm(cfg, args.theta, args.n)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
