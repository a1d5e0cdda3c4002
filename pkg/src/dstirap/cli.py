"""Command-line interface.

Subcommands: design (solve and fit the detuning), propagate (one scenario),
scan (one- or two-axis grid), report-table2 (simultaneous-deviation table),
and fit (standalone least-squares fitting of a csv time series). Every
subcommand reads one optional flat config file (dotted keys, ``key = value``
lines) plus repeatable ``--set KEY=VALUE`` overrides.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance-check failure (with --check).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .design import fit_detuning, solve_detuning
from .harness import (
    ConfigError,
    DeviationSpec,
    ScanSpec,
    ScenarioConfig,
    export,
    run_scenario,
    scan_grid,
    table2_report,
)
from .model import PulseParameters
from .numerics import (
    FitConvergenceError,
    FitFamily,
    IntegrationError,
    TimeGrid,
    fit_least_squares,
)
from .propagate import DissipationRates, TraceConsistencyError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CHECK = 3


def _parse_value(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in s:
        return [_parse_value(p) for p in s.split(",")]
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def load_config_file(path: str) -> dict:
    settings = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            settings[key.strip()] = _parse_value(value)
    return settings


def gather_settings(args) -> dict:
    settings = {}
    if args.config:
        settings.update(load_config_file(args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        settings[key.strip()] = _parse_value(value)
    if args.detuning:
        settings["detuning"] = args.detuning
    if args.sign:
        settings["rates.sign"] = args.sign
    return settings


def _as_float_list(value, key):
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, list) and all(isinstance(v, (int, float)) for v in value):
        return [float(v) for v in value]
    raise ConfigError(f"{key} must be a number list")


def build_scenario(settings: dict) -> ScenarioConfig:
    get = settings.get
    pulse = PulseParameters(
        omega_peak=float(get("pulse.omega", 1.0)),
        pulse_width=float(get("pulse.width", 1.0)),
        tau=None if get("pulse.tau") is None else float(get("pulse.tau")),
        gamma=float(get("pulse.gamma", 0.0)),
        scale_C=float(get("pulse.scale_C", 1.0)),
        scale_alpha=float(get("pulse.scale_alpha", 1.0)),
    )
    window = TimeGrid(
        float(get("window.start", -1.5)),
        float(get("window.end", 1.5)),
        int(get("window.samples", 3000)),
    )
    rates = DissipationRates(
        gamma_ground=float(get("rates.ground", 0.0)),
        gamma_damp=float(get("rates.damp", 0.0)),
        gamma_dephase=float(get("rates.dephase", 0.0)),
        sign_convention=str(get("rates.sign", "standard")),
    )
    deviations = DeviationSpec(
        rel_omega=float(get("deviation.omega", 0.0)),
        rel_tau=float(get("deviation.tau", 0.0)),
        rel_delta0=float(get("deviation.delta0", 0.0)),
        rel_omega_fit=float(get("deviation.omega_fit", 0.0)),
    )
    params = get("detuning.parameters")
    if params is not None:
        params = tuple(_as_float_list(params, "detuning.parameters"))
    return ScenarioConfig(
        pulse=pulse,
        window=window,
        epsilon=float(get("epsilon", 0.0)),
        detuning_source=str(get("detuning", "none")),
        dynamics=str(get("dynamics", "schrodinger")),
        rates=rates,
        deviations=deviations,
        detuning_parameters=params,
        exact_cancellation=bool(get("detuning.exact", False)),
        cancel=str(get("detuning.cancel", "upper")),
        lindblad_hamiltonian=str(get("lindblad.hamiltonian", "bare")),
        convention=str(get("convention", "full")),
        tol=float(get("tol", 1e-9)),
        method=str(get("method", "adaptive")),
    )


def _parse_axis(text, key):
    if not isinstance(text, str) or ":" not in text:
        raise ConfigError(f"{key} must look like 'name:start:stop:count' or 'name:v1,v2'")
    name, rest = text.split(":", 1)
    name = name.strip()
    parts = rest.split(":")
    if len(parts) == 3:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        return (name, np.linspace(start, stop, count))
    values = _as_float_list(_parse_value(rest), key)
    return (name, np.asarray(values))


def build_scan(settings: dict) -> ScanSpec:
    if "scan.axis1" not in settings:
        raise ConfigError("scan requires scan.axis1")
    axis1 = _parse_axis(settings["scan.axis1"], "scan.axis1")
    axis2 = None
    if settings.get("scan.axis2") is not None:
        axis2 = _parse_axis(settings["scan.axis2"], "scan.axis2")
    quantities = settings.get("scan.quantities", ["P3r", "P3"])
    if isinstance(quantities, str):
        quantities = [quantities]
    return ScanSpec(
        axis1=axis1,
        axis2=axis2,
        output_quantities=tuple(str(q) for q in quantities),
        steps_per_unit=int(settings.get("scan.steps_per_unit", 1000)),
    )


def _emit(result, args, default_stem: str):
    fmt = args.format or "json"
    if args.out:
        export(result, fmt, args.out)
        return
    if fmt == "json":
        from .harness import _json_payload

        json.dump(_json_payload(result), sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        path = default_stem + (".gp" if fmt == "gnuplot-script" else "." + fmt)
        export(result, fmt, path)
        print(f"wrote {path}")


def cmd_design(args) -> int:
    settings = gather_settings(args)
    config = build_scenario(settings)
    sol = solve_detuning(
        config.pulse,
        config.window,
        exact_cancellation=config.exact_cancellation,
        cancel=config.cancel,
    )
    family = config.fit_family
    det_fit = None
    if family is not None:
        det_fit = fit_detuning(sol, family)
    payload = {
        "kind": "design",
        "peak": sol.peak,
        "delta_final": sol.delta_final,
        "boundary_violation": sol.boundary_violation,
    }
    if det_fit is not None:
        payload["fit"] = {
            "family": det_fit.family.value,
            "parameters": [float(p) for p in det_fit.fit.parameters],
            "residual_rms": det_fit.fit.residual_rms,
        }
    if args.out:
        fmt = args.format or "csv"
        if fmt == "json":
            with open(args.out, "w", encoding="utf-8") as fh:
                payload["samples"] = [[float(t), float(v)] for t, v in sol.samples]
                json.dump(payload, fh, indent=1)
                fh.write("\n")
        else:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("t,delta\n")
                for t, v in sol.samples:
                    fh.write(f"{t:.17g},{v:.17g}\n")
    json.dump(payload, sys.stdout, indent=1)
    sys.stdout.write("\n")
    if args.check:
        ok = not sol.boundary_violation
        if det_fit is not None:
            ok = ok and det_fit.accepted
        if not ok:
            print("check failed: boundary or fit residual out of tolerance",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def cmd_propagate(args) -> int:
    settings = gather_settings(args)
    config = build_scenario(settings)
    traj, summary = run_scenario(config)
    print(json.dumps({"kind": "summary", **summary}, indent=1))
    if args.out:
        export(traj, args.format or "csv", args.out)
    if args.check:
        rel_sum = np.abs(traj.relative.sum(axis=1) - 1.0).max()
        finite = np.isfinite(traj.populations).all()
        if rel_sum > 1e-9 or not finite:
            print("check failed: population bookkeeping out of tolerance",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def cmd_scan(args) -> int:
    settings = gather_settings(args)
    config = build_scenario(settings)
    scan = build_scan(settings)
    grid = scan_grid(config, scan)
    _emit(grid, args, "scan")
    if args.check:
        bad = [r for r in grid.records if "error" in r]
        if bad:
            print(f"check failed: {len(bad)} scan cells reported errors",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def cmd_report_table2(args) -> int:
    settings = gather_settings(args)
    if "detuning" not in settings:
        config = harness.baseline_transfer_config()
    else:
        config = build_scenario(settings)
    rows = table2_report(config)
    _emit(rows, args, "table2")
    if args.check:
        order = np.argsort(
            [-(r["rel_omega"] + r["rel_tau"] + r["rel_delta0"] + r["rel_omega_fit"])
             for r in rows]
        )
        p3_sorted = [rows[i]["P3"] for i in order]
        if not all(a > b for a, b in zip(p3_sorted, p3_sorted[1:])):
            print("check failed: P3 is not monotone in the aggregate deviation",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def cmd_fit(args) -> int:
    settings = gather_settings(args)
    family_name = str(settings.get("fit.family", "fourier"))
    try:
        family = FitFamily(family_name if family_name != "gaussian" else "gaussian_sum")
    except ValueError as exc:
        raise ConfigError(f"unknown fit family {family_name!r}") from exc
    data = np.loadtxt(args.samples, delimiter=",", skiprows=int(settings.get("fit.skiprows", 0)))
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError("samples file must hold two numeric columns (t, value)")
    init = settings.get("fit.init")
    n_params = 3 if family is FitFamily.FOURIER else 6
    init = np.zeros(n_params) if init is None else np.asarray(
        _as_float_list(init, "fit.init"), dtype=float
    )
    result = fit_least_squares(data[:, :2], family, init)
    payload = {
        "kind": "fit",
        "family": result.family.value,
        "parameters": [float(p) for p in result.parameters],
        "residual_rms": result.residual_rms,
    }
    text = json.dumps(payload, indent=1)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if args.check:
        scale = float(np.abs(data[:, 1]).max())
        if scale > 0 and result.residual_rms > 0.05 * scale:
            print("check failed: fit residual above 5% of the data scale",
                  file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dstirap",
        description="Design and simulate dissipation-assisted STIRAP scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help="output path")
        p.add_argument("--format", choices=["csv", "json", "gnuplot-script"])
        p.add_argument("--sign", choices=["standard", "paper"],
                       help="master-equation dissipator sign convention")
        p.add_argument(
            "--detuning",
            choices=["none", "ode", "fitted:fourier", "fitted:gaussian"],
            help="detuning source for the scenario",
        )
        p.add_argument("--check", action="store_true",
                       help="validate the result and exit 3 on failure")

    p = sub.add_parser("design", help="solve and optionally fit the detuning")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("propagate", help="run a single scenario")
    common(p)
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("scan", help="run a one- or two-axis parameter scan")
    common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("report-table2",
                       help="simultaneous-deviation robustness table")
    common(p)
    p.set_defaults(func=cmd_report_table2)

    p = sub.add_parser("fit", help="fit a two-column csv time series")
    p.add_argument("samples", help="csv file with t,value rows")
    common(p)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, FitConvergenceError, TraceConsistencyError,
            RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
