"""Command-line interface.

    ierk verify  <method|--tableau f.json> [--<param> VALUE ...] [--tol T]
    ierk certify <method|--tableau f.json> [--<param> VALUE ...]
    ierk scan    <family> --symbol S --lo A --hi B --step H [--target T]
    ierk rate-table
    ierk converge --config cfg.json [overrides]
    ierk evolve   --config cfg.json [overrides]

Method parameters ride along as plain flags (`--c2 1 --a33 0.5`) or as
repeated `--p NAME=VALUE`; values parse exactly ("0.5" and "1/2" are the
same rational). All subcommands accept --config (JSON object with
experiment keys; flags override its entries) and --out DIR (write
report.json plus table.csv / trace.csv / plot.svg as applicable).
Exit codes: 0 success, 1 a requested check failed, 2 invalid configuration
or parameters.
"""

from __future__ import annotations

import argparse
import math
import json
import os
import sys as _sys

from . import harness
from .errors import IerkError
from .tableau import as_scalar, load_tableau, registry

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2


def _parse_params(pairs):
    params = {}
    for item in pairs or ():
        if "=" not in item:
            raise ValueError(f"--p expects NAME=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = as_scalar(value.strip())
    return params


def _parse_extra_params(extras):
    """Leftover `--name value` pairs become method parameters.

    Lets the natural form `certify IERK2-1 --c2 1 --a33 0.5` work without
    pre-declaring every family's symbols; unknown names are still rejected
    by the registry.
    """
    params = {}
    i = 0
    while i < len(extras):
        tok = extras[i]
        if not tok.startswith("--") or len(tok) == 2:
            raise ValueError(f"unexpected argument {tok!r}")
        name = tok[2:]
        if "=" in name:
            name, value = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extras):
                raise ValueError(f"missing value for parameter --{name}")
            value = extras[i + 1]
            i += 2
        params[name] = as_scalar(value)
    return params


def _merge_config(args, keys):
    cfg = dict(harness.load_config(args.config)) if getattr(args, "config", None) else {}
    for key in keys:
        attr = key.replace("-", "_")
        val = getattr(args, attr, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "tableau", None):
        cfg["tableau_file"] = args.tableau
    extra = {**_parse_params(getattr(args, "p", None)), **getattr(args, "extra_params", {})}
    if extra:
        cfg["params"] = {**cfg.get("params", {}), **extra}
    return cfg


def _resolve(args, cfg):
    if getattr(args, "tableau", None):
        return load_tableau(args.tableau)
    if cfg.get("tableau_file"):
        return load_tableau(cfg["tableau_file"])
    method = getattr(args, "method", None) or cfg.get("method")
    if not method:
        raise ValueError("no method given (positional METHOD or config key 'method')")
    params = {k: as_scalar(v) for k, v in (cfg.get("params") or {}).items()}
    return registry(method, params)


def _emit(outdir, report):
    if outdir:
        harness.write_json(os.path.join(outdir, "report.json"), report)
    json.dump(report, _sys.stdout, indent=2, sort_keys=True)
    _sys.stdout.write("\n")


def _add_common(p, method_positional=True):
    if method_positional:
        p.add_argument("method", nargs="?", help="registry method id")
    p.add_argument("--tableau", help="JSON tableau file instead of a registry id")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--p", action="append", metavar="NAME=VALUE",
                   help="method parameter (repeatable)")


def build_parser():
    ap = argparse.ArgumentParser(prog="ierk",
                                 description="IMEX Runge-Kutta energy-dissipation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check order conditions")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("certify", help="certify unconditional energy dissipation")
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("scan", help="scan one parameter for certification")
    _add_common(p)
    p.add_argument("--symbol", required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--target", default="certified", choices=("certified", "d_e", "d_ei"))

    p = sub.add_parser("rate-table", help="average dissipation rates at the best parameters")
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--out", help="output directory")

    for name in ("converge", "evolve"):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        _add_common(p)
        p.add_argument("--m", type=int)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--kappa", type=float)
        p.add_argument("--t-final", dest="t_final", type=float)
        p.add_argument("--initial", choices=("sine", "tanh-bumps"))
        if name == "converge":
            p.add_argument("--tau-grid", dest="tau_grid",
                           help="comma-separated decreasing step sizes")
        else:
            p.add_argument("--tau", type=float)
            p.add_argument("--record-stages", dest="record_stages", action="store_true",
                           default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args, extras = ap.parse_known_args(argv)
        args.extra_params = _parse_extra_params(extras)
        return _dispatch(args)
    except IerkError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_BAD_CONFIG
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_BAD_CONFIG


def _dispatch(args) -> int:
    outdir = harness.ensure_outdir(getattr(args, "out", None))

    if args.command == "verify":
        cfg = _merge_config(args, ("method",))
        tab = _resolve(args, cfg)
        report = harness.run_verify(tab, tol=args.tol)
        _emit(outdir, report)
        return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED

    if args.command == "certify":
        cfg = _merge_config(args, ("method",))
        tab = _resolve(args, cfg)
        report = harness.run_certify(tab, tol=args.tol)
        _emit(outdir, report)
        return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED

    if args.command == "scan":
        cfg = _merge_config(args, ("method",))
        family = getattr(args, "method", None) or cfg.get("method")
        if not family:
            raise ValueError("scan needs a method family")
        fixed = {k: as_scalar(v) for k, v in (cfg.get("params") or {}).items()}
        report = harness.run_scan(family, args.symbol, args.lo, args.hi, args.step,
                                  fixed=fixed, target=args.target)
        rows = report.pop("rows")
        if outdir:
            harness.write_csv(
                os.path.join(outdir, "table.csv"),
                (args.symbol, "certified"),
                [(r["value"], "" if r["verdict"] is None else int(r["verdict"])) for r in rows],
            )
        _emit(outdir, report)
        return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED

    if args.command == "rate-table":
        if args.extra_params:
            raise ValueError(f"rate-table takes no method parameters: {sorted(args.extra_params)}")
        rows = harness.run_rate_table()
        if outdir:
            harness.write_csv(
                os.path.join(outdir, "table.csv"),
                ("method", "params", "intercept", "slope", "certified"),
                [
                    (r["method"], "\"" + ";".join(f"{k}={v}" for k, v in r["params"].items()) + "\"",
                     r["intercept"], r["slope"], int(r["certified"]))
                    for r in rows
                ],
            )
        _emit(outdir, {"rows": rows, "ok": True})
        return EXIT_OK

    if args.command == "converge":
        cfg = _merge_config(args, ("method", "m", "epsilon", "kappa", "t-final", "t_final"))
        if getattr(args, "tau_grid", None):
            cfg["tau_grid"] = [float(x) for x in str(args.tau_grid).split(",")]
        table = harness.run_converge(cfg)

        def fin(x):
            # keep report.json strict: non-finite values become null
            return x if x is not None and math.isfinite(x) else None

        report = {
            "method": table.method,
            "params": table.params,
            "kappa": table.kappa,
            "observed_order": fin(table.observed_order()),
            "rows": [
                {"tau": r.tau, "error": fin(r.error), "observed_order": fin(r.observed_order)}
                for r in table.rows
            ],
            "ok": all(math.isfinite(r.error) for r in table.rows),
        }
        if outdir:
            harness.write_convergence_csv(os.path.join(outdir, "table.csv"), table)
            finite = [(r.tau, r.error) for r in table.rows
                      if r.error > 0 and r.error != float("inf")]
            if finite:
                harness.svg_line_plot(
                    os.path.join(outdir, "plot.svg"),
                    [(table.method, [t for t, _ in finite], [e for _, e in finite])],
                    title=f"max-norm error vs tau ({table.method})",
                    logx=True, logy=True,
                )
        _emit(outdir, report)
        return EXIT_OK if report["ok"] else EXIT_CHECK_FAILED

    if args.command == "evolve":
        cfg = _merge_config(
            args,
            ("method", "m", "epsilon", "kappa", "t-final", "t_final", "tau",
             "initial", "record_stages"),
        )
        trace, summary, final = harness.run_evolve(cfg)
        if outdir:
            harness.write_trace_csv(os.path.join(outdir, "trace.csv"), trace)
            if trace.stage_energies is not None:
                tab = harness.resolve_method(cfg)
                harness.write_stage_csv(os.path.join(outdir, "stages.csv"), trace, tab)
            if final is not None:
                from .spectral import SpectralGrid

                grid = SpectralGrid(summary["domain"][0], summary["domain"][1], summary["m"])
                harness.write_field_csv(os.path.join(outdir, "snapshot.csv"), grid, final)
            if len(trace):
                harness.svg_line_plot(
                    os.path.join(outdir, "plot.svg"),
                    [(summary["method"], trace.times, trace.energies)],
                    title=f"energy vs time ({summary['method']})",
                )
        _emit(outdir, summary)
        return EXIT_OK if not summary["diverged"] else EXIT_CHECK_FAILED

    raise ValueError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
