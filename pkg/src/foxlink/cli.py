"""Command-line front end: metric sweeps, Monte-Carlo comparison and an oracle report."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import csi_assisted as csi
from . import fixed_gain as fg
from . import mc_sim
from . import power_alloc as pa
from .config import ConfigError, apply_sweep, load_preset, resolve, sweep_labels, sweep_values
from .errors import ConsistencyError, ConvergenceError, DivergenceError, FoxlinkError, SpecError
from .params import FixedGain

log = logging.getLogger("foxlink")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 1, 2, 3
_NUMERIC_FAILURES = (ConvergenceError, DivergenceError, ConsistencyError)
METRIC_COLUMNS = ["series", "sweep_value", "analytic", "asymptotic", "mc_mean", "mc_stderr", "converged"]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isinf(v) or math.isnan(v) else f"{v:.10g}"
    return str(v)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("FOXLINK_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------------


_warned: set[str] = set()


def _warn_once(msg: str):
    if msg not in _warned:
        _warned.add(msg)
        log.warning("%s", msg)


def _analytic(metric: str, sc, sys, gth):
    fixed = isinstance(sys.scheme, FixedGain)
    if metric == "outage":
        return fg.outage(sys, gth) if fixed else csi.outage_bound(sys, gth)
    if metric == "ber":
        return fg.avg_ber(sys, sc.modulation) if fixed else csi.avg_ber_csi(sys, sc.modulation)
    return fg.capacity(sys) if fixed else csi.capacity_csi(sys)


def _asymptote(metric: str, sc, sys, gth):
    fixed = isinstance(sys.scheme, FixedGain)
    if metric == "outage":
        return fg.outage_asymptotic(sys, gth).value if fixed else csi.outage_asymptotic_csi(sys, gth)[0].value
    if metric == "ber" and fixed:
        return fg.avg_ber_asymptotic(sys, sc.modulation).value
    return None


def _simulate(metric: str, sc, sys, gth, cfg: mc_sim.SimConfig) -> mc_sim.Estimate:
    if metric == "outage":
        return mc_sim.simulate_outage(sys, gth, cfg)
    if metric == "ber":
        return mc_sim.simulate_ber(sys, sc.modulation, cfg)
    return mc_sim.simulate_capacity(sys, cfg)


def _metric_row(metric, variable, sc, label, value, asymptotic, mc_cfg, analytic=True):
    sys, gth = apply_sweep(sc, variable, value)
    row = {"series": sc.label, "sweep_value": label, "converged": True}
    if analytic:
        try:
            res = _analytic(metric, sc, sys, gth)
            row["analytic"] = res.value
            row["converged"] = bool(res.converged)
        except _NUMERIC_FAILURES as exc:
            log.warning("%s at %s=%s: %s", sc.label, variable, label, exc)
            row["converged"] = False
        if asymptotic:
            try:
                row["asymptotic"] = _asymptote(metric, sc, sys, gth)
            except FoxlinkError as exc:
                _warn_once(f"no asymptote for {sc.label}: {exc}")
    if mc_cfg is not None:
        est = _simulate(metric, sc, sys, gth, mc_cfg)
        row["mc_mean"], row["mc_stderr"] = est.mean, est.stdError
    return row


def _header(cfg: dict, scenarios, extra: dict | None = None) -> list[str]:
    lines = [f"# foxlink {cfg.get('name', 'config')}: {cfg.get('description', '')}".rstrip()]
    lines.append("# config: " + json.dumps(cfg, sort_keys=True))
    if cfg.get("assumed"):
        lines.append("# assumed: true (" + ", ".join(cfg["assumed"]) + ")")
    for sc in scenarios:
        for note in sc.notes:
            lines.append(f"# note [{sc.label}]: {note}")
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {_fmt(v)}")
    return lines


def _write(out, header, columns, rows):
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def run_metric(cfg: dict, metric: str, args, analytic: bool = True) -> int:
    scenarios = resolve(cfg, _overrides(args))
    variable = cfg["sweep"]["variable"]
    values, labels = sweep_values(cfg), sweep_labels(cfg)
    mc_cfg = _sim_config(args) if (args.samples is not None or not analytic) else None
    jobs = [(sc, float(lab), float(v)) for sc in scenarios for lab, v in zip(labels, values)]
    rows = _pmap(lambda j: _metric_row(metric, variable, j[0], j[1], j[2], args.asymptotic, mc_cfg, analytic), jobs)
    extra = {"metric": metric, "sweep_variable": variable, "sweep_units": "dB" if cfg["sweep"].get("spacing", "log-dB") == "log-dB" else "linear"}
    if mc_cfg is not None:
        extra.update({"mc_samples": mc_cfg.samples, "mc_seed": mc_cfg.seed, "mc_batches": mc_cfg.batches})
    _write(args.out, _header(cfg, scenarios, extra), METRIC_COLUMNS, rows)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_CONVERGENCE


def run_power_alloc(cfg: dict, args) -> int:
    if cfg.get("metric") != "power-alloc":
        raise ConfigError("power-alloc needs a configuration with metric 'power-alloc'")
    scenarios = resolve(cfg, _overrides(args))
    values, labels = sweep_values(cfg), sweep_labels(cfg)
    extra = {}
    rows = []
    for sc in scenarios:
        p = sc.params
        base = pa.build_problem(sc.system, sc.gamma_th, sc.pathloss, 1.0, p["S_cap"], p["delta"], p["fso_distance"])
        extra[f"exponent[{sc.label}]"] = base.a

        def point(j, sc=sc, p=p, base=base):
            lab, v = j
            prob = base.with_total(v)
            row = {"series": sc.label, "sweep_value": lab, "converged": True}
            for name, split in (("optimal", pa.optimal_split(prob)), ("equal", pa.equal_split(prob))):
                row[f"P_F_{name}"], row[f"P_R_{name}"] = split
                row[f"surrogate_{name}"] = pa.objective(prob, *split)
                try:
                    row[f"outage_{name}"] = pa.split_outage(sc.system, sc.gamma_th, sc.pathloss, *split, p["delta"], p["fso_distance"])
                except _NUMERIC_FAILURES as exc:
                    log.warning("%s: %s", sc.label, exc)
                    row["converged"] = False
            return row

        rows += _pmap(point, zip(map(float, labels), map(float, values)))
        try:
            target = p["target_outage"]
            po = pa.required_total_power(sc.system, sc.gamma_th, sc.pathloss, target, "optimal", p["delta"], p["fso_distance"])
            pe = pa.required_total_power(sc.system, sc.gamma_th, sc.pathloss, target, "equal", p["delta"], p["fso_distance"])
            extra[f"saving_db[{sc.label}] at outage {target:g}"] = pe - po
        except (ValueError, FoxlinkError) as exc:
            log.warning("no power saving for %s: %s", sc.label, exc)
    cols = ["series", "sweep_value"]
    for name in ("optimal", "equal"):
        cols += [f"P_F_{name}", f"P_R_{name}", f"outage_{name}", f"surrogate_{name}"]
    cols.append("converged")
    _write(args.out, _header(cfg, scenarios, extra), cols, rows)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_CONVERGENCE


# ----------------------------------------------------------------------------
# validate
# ----------------------------------------------------------------------------


def _check_row(check, series, value, analytic, est, mode="match"):
    z = (analytic - est.mean) / est.stdError if est.stdError > 0 else (0.0 if analytic == est.mean else math.inf)
    if mode == "match":
        ok = abs(analytic - est.mean) <= 3.0 * est.stdError or (est.stdError == 0 and abs(analytic - est.mean) < 3.0 / est.samples)
    else:  # analytic is a lower bound
        ok = analytic <= est.mean + 3.0 * est.stdError
    return {
        "check": check, "series": series, "sweep_value": value, "analytic": analytic,
        "mc_mean": est.mean, "mc_stderr": est.stdError, "z": z, "status": "PASS" if ok else "FAIL",
    }  # fmt: skip


def run_validate(args) -> int:
    mc_cfg = _sim_config(args)
    rows = []
    converged = True

    # fixed-gain outage along the fig2 sweep
    cfg2 = load_preset("fig2")
    for sc in resolve(cfg2, _overrides(args)):
        for lab, v in zip(sweep_labels(cfg2), sweep_values(cfg2)):
            sys_, gth = apply_sweep(sc, "mu_r", float(v))
            res = fg.outage(sys_, gth)
            converged &= res.converged
            rows.append(_check_row("fixed_outage", sc.label, float(lab), res.value, mc_sim.simulate_outage(sys_, gth, mc_cfg)))

    # CSI capacity (exact) and the outage min-bound on the first fig6 series
    cfg6 = load_preset("fig6")
    sc = resolve(cfg6)[0]
    for lab in (0.0, 20.0, 40.0):
        sys_, _ = apply_sweep(sc, "gamma_bar", 10.0 ** (lab / 10.0))
        res = csi.capacity_csi(sys_)
        converged &= res.converged
        rows.append(_check_row("csi_capacity", sc.label, lab, res.value, mc_sim.simulate_capacity(sys_, mc_cfg)))
    sys_, _ = apply_sweep(sc, "gamma_bar", 100.0)
    for gth_db in (0.0, 5.0, 10.0):
        gth = 10.0 ** (gth_db / 10.0)
        res = csi.outage_bound(sys_, gth)
        converged &= res.converged
        rows.append(_check_row("csi_outage_bound", sc.label, gth_db, res.value, mc_sim.simulate_outage(sys_, gth, mc_cfg), "bound"))

    header = [
        "# foxlink validate: analytic values against Monte-Carlo estimates",
        f"# mc_samples: {mc_cfg.samples}",
        f"# mc_seed: {mc_cfg.seed}",
        f"# mc_batches: {mc_cfg.batches}",
        f"# passed: {sum(r['status'] == 'PASS' for r in rows)}/{len(rows)}",
    ]
    cols = ["check", "series", "sweep_value", "analytic", "mc_mean", "mc_stderr", "z", "status"]
    _write(args.out, header, cols, rows)
    if not converged:
        return EXIT_CONVERGENCE
    return EXIT_OK if all(r["status"] == "PASS" for r in rows) else EXIT_FAIL


# ----------------------------------------------------------------------------
# argument handling
# ----------------------------------------------------------------------------


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "scheme", None):
        out["scheme"] = args.scheme
    if getattr(args, "detection", None):
        out["detection"] = args.detection
    return out


def _sim_config(args) -> mc_sim.SimConfig:
    samples = args.samples if args.samples is not None else 1e6
    return mc_sim.SimConfig(samples=int(samples), seed=int(args.seed), batches=int(args.batches))


def _load(args) -> dict:
    if args.config and args.preset:
        raise ConfigError("give either --preset or --config, not both")
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                return json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config} is not valid JSON: {exc}") from None
    if args.preset:
        return load_preset(args.preset)
    raise ConfigError("a --preset or --config is required")


def _samples(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v.is_integer() or v <= 0:
        raise argparse.ArgumentTypeError("samples must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foxlink", description="Mixed FSO/RF relay performance sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="built-in scenario (fig2 .. fig7)")
    common.add_argument("--config", help="JSON scenario file")
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--scheme", choices=["fixed", "csi"], help="override the relaying scheme")
    common.add_argument("--detection", type=int, choices=[1, 2], help="override the detection type")
    common.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed")
    common.add_argument("--samples", type=_samples, default=None, help="Monte-Carlo samples (e.g. 1e6)")
    common.add_argument("--batches", type=int, default=20, help="Monte-Carlo batches for the standard error")
    common.add_argument("--asymptotic", action="store_true", help="add the high-SNR asymptote column")
    common.add_argument("--verbose", action="store_true")

    for name, text in (
        ("outage", "outage probability sweep"),
        ("ber", "average error-rate sweep"),
        ("capacity", "ergodic capacity sweep"),
        ("power-alloc", "optimal versus equal power split"),
        ("simulate", "Monte-Carlo estimates only, for the configured metric"),
        ("validate", "analytic versus Monte-Carlo oracle report"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    dump = sub.add_parser("dump-preset", help="print a preset document")
    dump.add_argument("name")
    dump.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "dump-preset":
            text = json.dumps(load_preset(args.name), indent=2, sort_keys=True) + "\n"
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "validate":
            return run_validate(args)
        cfg = _load(args)
        if args.command == "power-alloc":
            return run_power_alloc(cfg, args)
        if args.command == "simulate":
            metric = cfg.get("metric")
            if metric == "power-alloc":
                raise ConfigError("simulate needs an outage, ber or capacity configuration")
            return run_metric(cfg, metric, args, analytic=False)
        if cfg.get("metric") not in (args.command, None) and cfg.get("metric") != "power-alloc":
            log.info("configuration metric %s overridden by subcommand %s", cfg.get("metric"), args.command)
        cfg = dict(cfg, metric=args.command)
        return run_metric(cfg, args.command, args)
    except (ConfigError, SpecError) as exc:
        print(f"foxlink: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_FAILURES as exc:
        print(f"foxlink: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
