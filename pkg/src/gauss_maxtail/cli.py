"""Command-line interface: ``gauss-maxtail <command> [options]``.

Every command writes a JSON report ``{"schema", "command", "payload",
"metadata"}``; the payload is a pure function of the flags, input files and
seed, and anything run-dependent (timestamps) lives in ``metadata``. Grid
commands can emit CSV instead.

Exit codes: 0 success, 2 configuration error, 3 accuracy not reached,
4 hypothesis failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

from . import __version__, bounds, exact, montecarlo, slepian
from .corrmodel import (
    CorrelationError,
    CorrelationModel,
    Equicorrelated,
    build_equicorrelated,
    find_low_correlation_subset,
    load_csv,
    max_offdiag,
    min_offdiag,
    min_residual_variance,
)

SCHEMA = "gauss-maxtail/1"
EXIT_OK, EXIT_CONFIG, EXIT_ACCURACY, EXIT_HYPOTHESIS = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    n_grid: list | None = None
    rho0: float | None = None
    delta0: float | None = None
    t: float | None = None
    samples: int = 10**6
    seed: int = 0
    matrix_path: str | None = None
    format: str = "json"
    out: str | None = None
    threads: int = 1
    small_ball: bool = False
    epsilon: float = 0.01
    c0: float = 4.0
    rho_tilde: float | None = None
    mode: str = "exact"
    method: str = "auto"
    absmax: bool = False

    def validate(self):
        if self.n_grid is not None:
            if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
                raise ConfigError("--n-grid must be strictly increasing")
        if self.samples < 1:
            raise ConfigError("--samples must be positive")
        if self.threads < 1:
            raise ConfigError("--threads must be positive")
        if self.format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")


def _model(cfg: RunConfig) -> CorrelationModel:
    if cfg.matrix_path is not None:
        model = load_csv(cfg.matrix_path)
        if cfg.n is not None and cfg.n != model.n:
            raise ConfigError(f"--n {cfg.n} does not match the {model.n}x{model.n} matrix")
        return model
    if cfg.n is None or cfg.rho0 is None:
        raise ConfigError("need --n and --rho0 (or --matrix)")
    return build_equicorrelated(cfg.n, cfg.rho0)


def _threshold(cfg: RunConfig, n: int) -> float:
    if (cfg.t is None) == (cfg.delta0 is None):
        raise ConfigError("exactly one of --t and --delta0 must be given")
    if cfg.t is not None:
        return cfg.t
    if cfg.rho0 is None:
        raise ConfigError("--delta0 needs --rho0")
    return exact.threshold(n, cfg.delta0, cfg.rho0)


def _threshold_info(cfg, t):
    info = {"t": t}
    if cfg.delta0 is not None:
        info.update(delta0=cfg.delta0, rho0=cfg.rho0,
                    epsilon0=cfg.delta0 * math.sqrt(1.0 - cfg.rho0))
    return info


def _require_equicorrelated(model, what):
    if not isinstance(model, Equicorrelated):
        raise ConfigError(f"{what} needs an equicorrelated model (--n/--rho0, no --matrix)")
    if model.rho < 0.0:
        raise ConfigError(f"{what} needs rho0 in [0, 1]")


def cmd_exact(cfg: RunConfig):
    model = _model(cfg)
    _require_equicorrelated(model, "exact")
    t = _threshold(cfg, model.n)
    res = exact.lower_tail_exact(model.n, model.rho, t)
    payload = {"model": model.to_dict(), "threshold": _threshold_info(cfg, t),
               "lower_tail": res.to_dict()}
    ok = res.converged
    if cfg.small_ball:
        sb = exact.small_ball_exact(model.n, model.rho, t)
        payload["small_ball"] = sb.to_dict()
        ok = ok and sb.converged
    return payload, EXIT_OK if ok else EXIT_ACCURACY


def _row(ev: bounds.BoundEvaluation, exact_value=None):
    d = ev.to_dict()
    d["exact_at_threshold"] = exact_value
    return d


def bound_table(model: CorrelationModel, delta0: float, rho0: float | None, epsilon: float,
                c0: float, samples: int, seed: int, threads: int = 1,
                rho_tilde: float | None = None) -> dict:
    """Evaluate every bound in the catalog that applies to ``model``.

    Medians and variances come from quadrature for equicorrelated models and
    from Monte Carlo (with the given budget) otherwise.
    """
    n = model.n
    names = ["borell_tis", "paouris_valettas", "pv_fixed_ratio", "hartigan", "main_rate",
             "reference_level", "small_ball_abs", "small_ball_nonneg",
             "latala_oleszkiewicz", "pv_small_ball"]
    if n == 1:
        rows = [bounds.not_applicable(name, "n = 1: no maximum over several variables").to_dict()
                for name in names]
        return {"rows": rows, "statistics": None}

    rho_hat = max_offdiag(model)
    rho_abs = max_offdiag(model, absolute=True)
    if rho0 is None:
        rho0 = rho_hat
    if not 0.0 < rho0 < 1.0:
        raise ConfigError(f"rho0={rho0} must lie in (0, 1) for the bound catalog")
    is_equi = isinstance(model, Equicorrelated) and model.rho >= 0.0

    if is_equi:
        med = exact.median_exact(n, model.rho)
        _, var = exact.moments_exact(n, model.rho)
        med_abs = exact.absmax_median_exact(n, model.rho)
        stats_abs = montecarlo.estimate_statistics(model, samples, seed, threads=threads,
                                                   target="absmax")
        var_abs = stats_abs["variance"].value
        source = "exact (absmax variance: monte carlo)"
    else:
        st = montecarlo.estimate_statistics(model, samples, seed, threads=threads)
        st_abs = montecarlo.estimate_statistics(model, samples, seed + 1, threads=threads,
                                                target="absmax")
        med, var = st["median"].value, st["variance"].value
        med_abs, var_abs = st_abs["median"].value, st_abs["variance"].value
        source = "monte carlo"

    def lower(t):
        return exact.lower_tail_exact(n, model.rho, t).value if is_equi else None

    def ball(t):
        return exact.small_ball_exact(n, model.rho, t).value if is_equi else None

    rows = []
    t_n = exact.threshold(n, delta0, rho0)
    s = med - t_n
    if s > 0.0:
        ev = bounds.borell_tis(med, s)
        rows.append(_row(ev, lower(ev.threshold)))
        ev = bounds.paouris_valettas(med, var, s)
        rows.append(_row(ev, lower(ev.threshold)))
    else:
        why = "threshold is not below the median"
        rows.append(_row(bounds.not_applicable("borell_tis", why, median=med, t=t_n)))
        rows.append(_row(bounds.not_applicable("paouris_valettas", why, median=med, t=t_n)))
    ev = bounds.pv_fixed_ratio(med, var, delta0)
    rows.append(_row(ev, lower(ev.threshold) if ev.applicable else None))

    sigma_sq = min_residual_variance(model)
    if sigma_sq > 0.0:
        ev = bounds.hartigan(n, epsilon, min(sigma_sq, 1.0))
    else:
        ev = bounds.not_applicable("hartigan", "minimum residual variance is 0",
                                   n=n, epsilon=epsilon, sigma_n_sq=sigma_sq)
    rows.append(_row(ev, lower(ev.threshold) if ev.applicable else None))

    hyp_ok = rho_hat <= rho0
    if n >= 3:
        ev = bounds.main_rate(n, delta0, rho0)
        if not hyp_ok:
            ev.applicable, ev.reason = False, f"max off-diagonal {rho_hat:.6g} exceeds rho0"
        rows.append(_row(ev, lower(ev.threshold)))
    else:
        rows.append(_row(bounds.not_applicable("main_rate", "needs n >= 3", bounds.RATE)))
    rows.append(_row(bounds.reference_level_row(n, rho0, c0)))

    abs_case, nonneg_case = bounds.small_ball_rates(n, delta0, rho0)
    if rho_abs > rho0:
        abs_case.applicable, abs_case.reason = False, "max |R_ij| exceeds rho0"
    if not (min_offdiag(model) >= 0.0 and rho_hat <= rho0) or n < 3:
        nonneg_case.applicable, nonneg_case.reason = False, "requires n >= 3 and R_ij in [0, rho0]"
    rows.append(_row(abs_case, ball(abs_case.threshold)))
    rows.append(_row(nonneg_case, ball(nonneg_case.threshold)))

    ev = bounds.latala_oleszkiewicz(med_abs, delta0)
    rows.append(_row(ev, ball(ev.threshold) if ev.applicable else None))
    ev = bounds.pv_small_ball(med_abs, var_abs, delta0)
    rows.append(_row(ev, ball(ev.threshold)))

    if rho_tilde is not None:
        J = find_low_correlation_subset(model, rho_tilde)
        if len(J) >= 2:
            ev = bounds.subset_rate(len(J), delta0, rho_tilde)
            ev.inputs["subset"] = J if len(J) <= 64 else J[:64]
        else:
            ev = bounds.not_applicable("subset_rate", "greedy subset has fewer than 2 indices",
                                       bounds.RATE, rho_tilde=rho_tilde)
        rows.append(_row(ev, lower(ev.threshold) if (ev.applicable and is_equi) else None))

    statistics = {
        "source": source, "median": med, "variance": var,
        "median_absmax": med_abs, "variance_absmax": var_abs,
        "max_offdiag": rho_hat, "max_abs_offdiag": rho_abs, "rho0": rho0,
        "sigma_n_sq": sigma_sq,
    }
    if n >= 3:
        statistics["variance_ratio_floor_c1_1"] = bounds.variance_ratio_floor(n, rho0, 1.0)
        statistics["inverse_variance"] = 1.0 / var if var > 0 else None
    pv_exp, main_exp = bounds.worstcase_exponents(n, delta0, rho0)
    statistics["worstcase_exponents"] = {"pv": pv_exp, "main": main_exp}
    return {"rows": rows, "statistics": statistics}


def cmd_bound(cfg: RunConfig):
    if cfg.delta0 is None:
        raise ConfigError("bound needs --delta0")
    model = _model(cfg)
    table = bound_table(model, cfg.delta0, cfg.rho0, cfg.epsilon, cfg.c0, cfg.samples,
                        cfg.seed, cfg.threads, cfg.rho_tilde)
    payload = {"model": _model_summary(model), "delta0": cfg.delta0,
               "samples": cfg.samples, "seed": cfg.seed, **table}
    return payload, EXIT_OK


def _model_summary(model):
    d = model.to_dict()
    if "matrix" in d and model.n > 16:
        d.pop("matrix")
    return d


SHARPNESS_FIELDS = ["n", "threshold", "exact", "rate", "C_hat", "quad_error"]


def cmd_sharpness(cfg: RunConfig):
    if cfg.matrix_path is not None:
        raise ConfigError("sharpness is defined for the equicorrelated model only")
    if cfg.n_grid is None or cfg.delta0 is None or cfg.rho0 is None:
        raise ConfigError("sharpness needs --n-grid, --delta0 and --rho0")
    study = bounds.empirical_constant(cfg.n_grid, cfg.delta0, cfg.rho0)
    rows = [{"n": r.n, "threshold": r.threshold, "exact": r.exact, "rate": r.rate,
             "C_hat": r.c_hat, "quad_error": r.exact_error} for r in study.rows]
    summary = {"c_min": study.c_min, "c_max": study.c_max, "band_ratio": study.band_ratio,
               "loglog_slope": study.loglog_slope}
    payload = {"delta0": cfg.delta0, "rho0": cfg.rho0, "rows": rows, "summary": summary}
    return payload, EXIT_OK


def sharpness_csv(payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SHARPNESS_FIELDS)
    for r in payload["rows"]:
        w.writerow([r["n"]] + [repr(float(r[k])) for k in SHARPNESS_FIELDS[1:]])
    s = payload["summary"]
    buf.write(f"# band_min={s['c_min']!r},band_max={s['c_max']!r},"
              f"band_ratio={s['band_ratio']!r}\n")
    return buf.getvalue()


def cmd_mc(cfg: RunConfig):
    model = _model(cfg)
    t = _threshold(cfg, model.n)
    payload = {"model": _model_summary(model), "threshold": _threshold_info(cfg, t),
               "method": cfg.method}
    if cfg.small_ball:
        lt, sb = montecarlo.estimate_both(model, t, cfg.samples, cfg.seed, cfg.method,
                                          cfg.threads)
        payload["lower_tail"] = lt.to_dict()
        payload["small_ball"] = sb.to_dict()
    else:
        lt = montecarlo.estimate_lower_tail(model, t, cfg.samples, cfg.seed, cfg.method,
                                            cfg.threads)
        payload["lower_tail"] = lt.to_dict()
    return payload, EXIT_OK


def cmd_median(cfg: RunConfig):
    model = _model(cfg)
    target = "absmax" if cfg.absmax else "max"
    payload = {"model": _model_summary(model), "target": target}
    if cfg.mode == "exact" and isinstance(model, Equicorrelated) and model.rho >= 0.0:
        fn = exact.absmax_median_exact if cfg.absmax else exact.median_exact
        payload.update(source="exact", median=fn(model.n, model.rho))
        if model.n >= 2 and 0.0 < model.rho < 1.0 and not cfg.absmax:
            lo, hi = bounds.reference_level(model.n, model.rho, cfg.c0)
            payload["reference_level"] = {"lower": lo, "upper": hi, "c0": cfg.c0}
    else:
        st = montecarlo.estimate_statistics(model, max(cfg.samples, 1000), cfg.seed,
                                            cfg.method, cfg.threads, target)
        payload.update(source="monte carlo", median=st["median"].to_dict(),
                       mean=st["mean"].to_dict(), variance=st["variance"].to_dict())
    return payload, EXIT_OK


def cmd_slepian_check(cfg: RunConfig):
    if cfg.rho0 is None:
        raise ConfigError("slepian-check needs --rho0 for the equicorrelated comparison model")
    if cfg.matrix_path is not None:
        model_a = load_csv(cfg.matrix_path)
    elif cfg.n is not None:
        model_a = build_equicorrelated(cfg.n, 0.0)
    else:
        raise ConfigError("slepian-check needs --matrix or --n")
    model_b = build_equicorrelated(model_a.n, cfg.rho0)
    t = _threshold(cfg, model_a.n)
    rep = slepian.check_comparison(model_a, model_b, t, cfg.mode, cfg.samples, cfg.seed,
                                   cfg.threads)
    payload = {"model_a": _model_summary(model_a), "model_b": model_b.to_dict(),
               "threshold": _threshold_info(cfg, t), "report": rep.to_dict()}
    return payload, EXIT_OK if rep.hypothesis_holds else EXIT_HYPOTHESIS


COMMANDS = {
    "exact": cmd_exact,
    "bound": cmd_bound,
    "sharpness": cmd_sharpness,
    "mc": cmd_mc,
    "median": cmd_median,
    "slepian-check": cmd_slepian_check,
}


def _int_list(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _int(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gauss-maxtail",
        description="Lower-tail and small-ball probabilities for maxima of Gaussian vectors.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--n", type=_int)
        p.add_argument("--n-grid", type=_int_list)
        p.add_argument("--rho0", type=float)
        p.add_argument("--delta0", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--samples", type=_int, default=10**6)
        p.add_argument("--seed", type=_int, default=0)
        p.add_argument("--matrix", dest="matrix_path")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--out")
        p.add_argument("--threads", type=_int, default=1)
        p.add_argument("--small-ball", action="store_true")
        p.add_argument("--epsilon", type=float, default=0.01,
                       help="Hartigan bound level (bound command)")
        p.add_argument("--c0", type=float, default=4.0)
        p.add_argument("--rho-tilde", type=float)
        p.add_argument("--mode", choices=["exact", "mc"], default="exact")
        p.add_argument("--method", choices=list(montecarlo.METHODS), default="auto")
        p.add_argument("--absmax", action="store_true")
    return parser


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _clean(obj.item())
    return obj


def render(command: str, payload: dict, fmt: str = "json") -> str:
    if fmt == "csv":
        if command != "sharpness":
            raise ConfigError("--format csv is only available for grid commands (sharpness)")
        return sharpness_csv(payload)
    report = {
        "schema": SCHEMA,
        "command": command,
        "payload": _clean(payload),
        "metadata": {"generated_at": datetime.now(timezone.utc).isoformat(),
                     "version": __version__},
    }
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig(**vars(ns))
    try:
        cfg.validate()
        payload, code = COMMANDS[cfg.command](cfg)
        text = render(cfg.command, payload, cfg.format)
    except (ConfigError, CorrelationError, ValueError, OSError) as exc:
        if isinstance(exc, slepian.HypothesisError):
            print(f"gauss-maxtail: hypothesis failure: {exc}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        print(f"gauss-maxtail: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except exact.AccuracyNotReached as exc:
        print(f"gauss-maxtail: accuracy not reached: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
