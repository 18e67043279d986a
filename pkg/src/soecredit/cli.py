"""Command-line entry point.

Every numeric artifact is accompanied by a run manifest: embedded under
``"manifest"`` in JSON written to stdout, written to ``<file>.manifest.json``
next to a file given with ``--out``, or printed to stderr for CSV on stdout.
Exit status is 0 on success, 2 on usage errors and 1 on model or estimation
errors, which are reported as JSON ``{"code", "message", "context"}``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .calibration import (
    SCENARIO_ALIASES,
    SCENARIOS,
    SHOCK_NAMES,
    Calibration,
    CalibrationError,
    load_calibration,
    resolve_shock,
    scenario,
)
from .empirics import Dataset, EmpiricsError, RankDeficientError, decelerator_regression, ols_hac, spread_leverage_regression
from .model import build_system, max_residual
from .simulate import (
    LOSS_VERSIONS,
    PathSet,
    compare_rules,
    fmt,
    irf,
    loss,
    scenario_sweep,
    stochastic_simulate,
)
from .solver import SolverError, solve, spectral_report

CONFIG_ENV = "SOECREDIT_CONFIG"


class UsageError(Exception):
    pass


class ModelError(Exception):
    def __init__(self, code: str, message: str, context: dict | None = None):
        super().__init__(message)
        self.code = code
        self.context = context or {}


@dataclass(frozen=True)
class RunManifest:
    command: str
    calibration_hash: str | None
    scenario: str | None
    policy: str | None
    seed: int | None
    version: str
    timestamp: str

    def to_dict(self) -> dict:
        return asdict(self)


# -- argument parsing -------------------------------------------------------


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(s) for s in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _override(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-numeric value in {text!r}") from None


def _add_model_args(p: argparse.ArgumentParser, policy: bool = True):
    p.add_argument("--config", help=f"calibration file (default: ${CONFIG_ENV} if set)")
    p.add_argument("--set", dest="overrides", action="append", type=_override, default=[], metavar="KEY=VALUE")
    p.add_argument("--scenario", default="baseline_friction", help="preset: " + ", ".join(SCENARIOS))
    if policy:
        p.add_argument("--policy", default="fi", choices=["fi", "pi"])


def _add_out(p: argparse.ArgumentParser, default: str = "csv", figure: bool = False):
    p.add_argument("--out", default=default, help="csv, json, or an output file path (.csv or .json)")
    p.add_argument("--manifest", help="write the run manifest to this path")
    if figure:
        p.add_argument("--figure", help="also render a figure to this image path (png, pdf, svg)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="soecredit", description="Small-open-economy model with household credit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("solve", help="solve the model and report determinacy")
    _add_model_args(p)
    _add_out(p, default="json")

    p = sub.add_parser("irf", help="impulse responses to one shock")
    _add_model_args(p)
    p.add_argument("--shock", required=True)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--size", type=float, default=1.0, help="shock size in standard deviations")
    p.add_argument("--absolute", action="store_true", help="interpret --size as the innovation itself")
    p.add_argument("--variables", type=_csv_list, help="comma-separated subset of series")
    _add_out(p, figure=True)

    p = sub.add_parser("simulate", help="stochastic simulation")
    _add_model_args(p)
    p.add_argument("--periods", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shocks", type=_csv_list, default=list(SHOCK_NAMES))
    p.add_argument("--burn-in", type=int, default=100)
    p.add_argument("--variables", type=_csv_list)
    _add_out(p, figure=True)

    p = sub.add_parser("loss", help="loss of a simulated or stored path")
    _add_model_args(p)
    p.add_argument("--version", dest="loss_version", type=int, required=True, choices=LOSS_VERSIONS)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.0)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV path written by 'simulate'")
    src.add_argument("--shocks", type=_csv_list)
    p.add_argument("--periods", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, default="json")

    p = sub.add_parser("compare-rules", help="losses under the FI and PI rules")
    _add_model_args(p, policy=False)
    p.add_argument("--v", type=float, default=0.64)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=6.0)
    p.add_argument("--periods", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shocks", type=_csv_list, default=["spread", "preference"])
    _add_out(p, figure=True)

    p = sub.add_parser("sweep", help="impulse responses across values of one parameter")
    _add_model_args(p)
    p.add_argument("--param", required=True)
    p.add_argument("--values", type=_float_list, required=True)
    p.add_argument("--shock", required=True)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--size", type=float, default=1.0)
    p.add_argument("--absolute", action="store_true")
    p.add_argument("--variables", type=_csv_list)
    p.add_argument("--workers", type=int, default=1)
    _add_out(p, figure=True)

    p = sub.add_parser("regress", help="OLS with Newey-West standard errors on a CSV file")
    p.add_argument("--data", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--x", type=_csv_list, default=[], help="regressors; lagged controls for --model decelerator")
    p.add_argument("--model", default="ols", choices=["ols", "spread-leverage", "decelerator"])
    p.add_argument("--dummy", help="interaction dummy for the first regressor")
    p.add_argument("--shock", help="shock column (decelerator model)")
    p.add_argument("--z", type=_csv_list, default=[], help="exogenous controls (decelerator model)")
    p.add_argument("--lags", type=int)
    _add_out(p, default="json")

    p = sub.add_parser("dump-system", help="write the model matrices and registry")
    _add_model_args(p)
    _add_out(p, default="json")
    return parser


# -- helpers -----------------------------------------------------------------


def _calibration(args) -> tuple[Calibration, str]:
    path = args.config or os.environ.get(CONFIG_ENV)
    if path and not Path(path).is_file():
        raise UsageError(f"config file not found: {path}")
    base = load_calibration(Path(path) if path else None)
    name = SCENARIO_ALIASES.get(args.scenario, args.scenario)
    if name not in SCENARIOS:
        raise UsageError(f"unknown scenario: {args.scenario}")
    cal = scenario(name, dict(args.overrides)).apply(base)
    return cal, name


def _check_shock(name: str) -> str:
    try:
        return resolve_shock(name)
    except KeyError:
        raise UsageError(f"unknown shock: {name}") from None


def _solve(cal: Calibration, policy: str):
    try:
        return solve(build_system(cal, policy))
    except SolverError as exc:
        ctx = {"policy": policy}
        if exc.report is not None:
            ctx["spectrum"] = exc.report.to_dict()
        if exc.residual is not None:
            ctx["residual"] = exc.residual
        raise ModelError(exc.code, str(exc), ctx) from None


def _manifest(args, cal: Calibration | None, scen: str | None, seed: int | None = None) -> RunManifest:
    return RunManifest(
        command=args.command,
        calibration_hash=cal.fingerprint() if cal is not None else None,
        scenario=scen,
        policy=getattr(args, "policy", None),
        seed=seed,
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _round(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round(obj.item())
    return obj


def _emit(args, manifest: RunManifest, payload: dict, csv_text: str | None = None, stdout=None) -> None:
    """Write the payload in the requested format together with its manifest."""
    stdout = stdout or sys.stdout
    out = args.out
    fmt_name = out if out in ("csv", "json") else Path(out).suffix.lstrip(".").lower()
    if fmt_name not in ("csv", "json"):
        raise UsageError(f"--out must be csv, json or a .csv/.json path, got {out!r}")
    if fmt_name == "csv" and csv_text is None:
        raise UsageError(f"'{args.command}' has no CSV form; use --out json")
    man = manifest.to_dict()
    if fmt_name == "json":
        doc = dict(_round(payload))
        if out == "json":
            doc["manifest"] = man
        text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    else:
        text = csv_text
    man_text = json.dumps(man, indent=1, sort_keys=True) + "\n"
    if out in ("csv", "json"):
        stdout.write(text)
        if args.manifest:
            Path(args.manifest).write_text(man_text, encoding="utf-8")
        elif fmt_name == "csv":
            sys.stderr.write(man_text)
    else:
        Path(out).write_text(text, encoding="utf-8")
        Path(args.manifest or f"{out}.manifest.json").write_text(man_text, encoding="utf-8")


def _select(paths: PathSet, variables) -> PathSet:
    if not variables:
        return paths
    unknown = [v for v in variables if v not in paths]
    if unknown:
        raise UsageError(f"unknown variable: {', '.join(unknown)}")
    return paths.select(variables)


# -- commands ----------------------------------------------------------------


def cmd_solve(args):
    cal, scen = _calibration(args)
    sol = _solve(cal, args.policy)
    # equation residuals along a 200-quarter simulated path from the steady state
    check = stochastic_simulate(sol, 200, 0, burn_in=0)
    path_resid = max_residual(sol.system, check.values, check.innovations, transition=sol.P)
    payload = {
        "determinacy": sol.determinacy,
        "policy": args.policy,
        "scenario": scen,
        "fixed_point_residual": sol.residual,
        "path_residual": path_resid,
        "spectral_radius": sol.spectral_radius,
        "spectrum": spectral_report(sol).to_dict(),
        "variables": list(sol.names),
        "shocks": list(sol.shocks),
        "eigenvalues": [{"real": float(z.real), "imag": float(z.imag)} for z in sol.eigenvalues],
        "P": sol.P.tolist(),
        "Q": sol.Q.tolist(),
    }
    return _manifest(args, cal, scen), payload, None


def cmd_irf(args):
    shock = _check_shock(args.shock)
    if args.horizon < 0:
        raise UsageError("--horizon must be >= 0")
    cal, scen = _calibration(args)
    sol = _solve(cal, args.policy)
    paths = irf(sol, shock, args.size, args.horizon, args.absolute, {"scenario": scen})
    out = _select(paths, args.variables)
    if args.figure:
        from .report import plot_paths

        plot_paths(paths, args.figure, args.variables, title=f"{shock} shock, {scen}, {args.policy.upper()}")
    return _manifest(args, cal, scen), out.to_dict(), out.to_csv()


def cmd_simulate(args):
    shocks = [_check_shock(s) for s in args.shocks]
    if args.periods < 1:
        raise UsageError("--periods must be >= 1")
    cal, scen = _calibration(args)
    sol = _solve(cal, args.policy)
    paths = stochastic_simulate(sol, args.periods, args.seed, shocks, args.burn_in, {"scenario": scen})
    out = _select(paths, args.variables)
    if args.figure:
        from .report import plot_paths

        plot_paths(paths, args.figure, args.variables, title=f"simulation, {scen}, {args.policy.upper()}")
    return _manifest(args, cal, scen, args.seed), out.to_dict(), out.to_csv()


def cmd_loss(args):
    if args.input:
        try:
            paths = PathSet.from_csv(Path(args.input).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
        cal, scen, seed = None, None, None
    else:
        shocks = [_check_shock(s) for s in (args.shocks or ["spread", "preference"])]
        cal, scen = _calibration(args)
        sol = _solve(cal, args.policy)
        paths = stochastic_simulate(sol, args.periods, args.seed, shocks)
        seed = args.seed
    try:
        value = loss(paths, args.loss_version, args.alpha, args.beta)
    except KeyError as exc:
        raise ModelError("missing_series", str(exc.args[0]), {"version": args.loss_version}) from None
    payload = {"version": args.loss_version, "alpha": args.alpha, "beta": args.beta, "loss": value}
    csv_text = f"version,alpha,beta,loss\n{args.loss_version},{fmt(args.alpha)},{fmt(args.beta)},{fmt(value)}\n"
    return _manifest(args, cal, scen, seed), payload, csv_text


def cmd_compare_rules(args):
    shocks = [_check_shock(s) for s in args.shocks]
    cal, scen = _calibration(args)
    try:
        rep = compare_rules(cal, args.v, args.alpha, args.beta, args.periods, args.seed, shocks)
    except SolverError as exc:
        raise ModelError(exc.code, str(exc)) from None
    if args.figure:
        from .report import plot_losses

        plot_losses(rep, args.figure, title=f"losses, v={args.v:g}")
    cal_used = cal.with_overrides({"v": args.v})
    return _manifest(args, cal_used, scen, args.seed), rep.to_dict(), rep.to_csv()


def cmd_sweep(args):
    shock = _check_shock(args.shock)
    cal, scen = _calibration(args)
    if args.param not in cal.to_flat():
        raise UsageError(f"unknown calibration key: {args.param}")
    entries = scenario_sweep(
        cal, args.param, args.values, shock, args.horizon, args.policy, args.size, args.absolute, args.workers
    )
    labels = None
    lines = []
    doc = []
    for e in entries:
        if e.paths is None:
            doc.append({"value": e.value, "error": e.error})
            continue
        p = _select(e.paths, args.variables)
        labels = labels or p.labels
        doc.append({"value": e.value, **p.to_dict()})
        lines += [",".join([fmt(e.value), str(t), *(fmt(x) for x in row)]) for t, row in enumerate(p.values)]
    header = ",".join([args.param, "period", *(labels or ())])
    csv_text = "\n".join([header, *lines]) + "\n"
    if args.figure:
        from .report import plot_sweep

        plot_sweep(entries, args.param, args.figure, args.variables, title=f"{shock} shock, {args.policy.upper()}")
    return _manifest(args, cal, scen), {"parameter": args.param, "shock": shock, "entries": doc}, csv_text


def cmd_regress(args):
    try:
        data = Dataset.from_csv(args.data)
    except OSError as exc:
        raise UsageError(f"cannot read {args.data}: {exc.strerror}") from None
    for col in [args.y, *args.x, *args.z, *([args.dummy] if args.dummy else []), *([args.shock] if args.shock else [])]:
        if col not in data:
            raise UsageError(f"unknown column: {col}")
    try:
        if args.model == "decelerator":
            if not args.shock:
                raise UsageError("--model decelerator requires --shock")
            res = decelerator_regression(data, args.y, args.shock, args.x, args.z, args.lags)
        elif args.model == "spread-leverage" or args.dummy:
            if len(args.x) not in (2, 5):
                raise UsageError("spread-leverage needs --x leverage,hp or leverage,hp0,hp1,hp2,hp3")
            hp = args.x[1] if len(args.x) == 2 else args.x[1:]
            res = spread_leverage_regression(data, args.y, args.x[0], hp, args.dummy, args.lags)
        else:
            if not args.x:
                raise UsageError("--x is required")
            res = ols_hac(data, args.y, args.x, args.lags)
    except RankDeficientError as exc:
        raise ModelError("rank_deficient", str(exc), {"columns": list(exc.columns)}) from None
    except EmpiricsError as exc:
        raise ModelError("estimation_error", str(exc)) from None
    lines = ["name,coef,se,t,p"] + [
        ",".join([n, fmt(b), fmt(s), fmt(t), fmt(p)])
        for n, b, s, t, p in zip(res.names, res.coef, res.se, res.tstat, res.pvalue)
    ]
    return _manifest(args, None, None), res.to_dict(), "\n".join(lines) + "\n"


def cmd_dump_system(args):
    cal, scen = _calibration(args)
    sys_ = build_system(cal, args.policy)
    payload = sys_.to_dict()
    payload["calibration"] = cal.to_flat()
    payload["budget_coefficients"] = cal.budget_coefficients()
    return _manifest(args, cal, scen), payload, None


COMMANDS = {
    "solve": cmd_solve,
    "irf": cmd_irf,
    "simulate": cmd_simulate,
    "loss": cmd_loss,
    "compare-rules": cmd_compare_rules,
    "sweep": cmd_sweep,
    "regress": cmd_regress,
    "dump-system": cmd_dump_system,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        manifest, payload, csv_text = COMMANDS[args.command](args)
        _emit(args, manifest, payload, csv_text)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        err = {"code": exc.code, "message": str(exc), "context": _round(exc.context)}
        print(json.dumps(err, sort_keys=True))
        return 1
    except CalibrationError as exc:
        print(json.dumps({"code": "invalid_calibration", "message": str(exc), "context": {}}, sort_keys=True))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
