"""Command-line interface.

    bcs-universality asym -d 1 --mu 1 --potential gaussian:a=1,sigma=1 --lambda 0.4
    bcs-universality sweep -d 1 --ladder 0.5,0.4,0.3,0.25 --output sweep.csv --plot sweep.svg

Units: hbar = 2m = 1, so momenta are inverse lengths and energies (mu, T_c,
Xi, Delta) are inverse squared lengths.  Exit status 0 on success, 1 for bad
input, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback

from . import sweep as sweep_mod
from .critical_temperature import critical_temperature
from .errors import BCSError, ConfigError, DomainError, NumericalError
from .gap_solver import energy_gap, zero_temperature_gap
from .potential import parse_descriptor, validate
from .sphere_asymptotics import FermiSphereData

PROG = "bcs-universality"
DEFAULTS = {
    "dimension": 1, "mu": 1.0, "potential": "gaussian:a=1,sigma=1", "Lambda": None,
    "points_per_panel": 16, "s_min_factor": 0.05, "rtol": 1e-10, "format": "csv",
    "output": None, "plot": None, "lam": None, "ladder": None,
}


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _ladder(text: str):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must be comma-separated numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("physics")
    g.add_argument("-d", "--dimension", type=int, choices=(1, 2),
                   help="space dimension d (default 1)")
    g.add_argument("--mu", type=float, help="chemical potential mu > 0, energy (default 1)")
    g.add_argument("--potential",
                   help="'gaussian:a=<amplitude, energy>,sigma=<width, length>' or "
                        "'table:<path>' with columns r [length], V(r) [energy] "
                        "(default gaussian:a=1,sigma=1)")
    g = common.add_argument_group("numerics")
    g.add_argument("--Lambda", type=float,
                   help="momentum cutoff, inverse length (default: where |V^| < 1e-14)")
    g.add_argument("--points-per-panel", type=int,
                   help="Gauss-Legendre points per radial panel (default 16)")
    g.add_argument("--s-min-factor", type=float,
                   help="finest panel half-width s_min = factor * (T_c or Delta) / mu, "
                        "dimensionless (default 0.05)")
    g.add_argument("--rtol", type=float,
                   help="relative tolerance for T_c bisection and gap residual (default 1e-10)")
    g = common.add_argument_group("output")
    g.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    g.add_argument("--output", help="write results to this file instead of stdout")
    g.add_argument("--config", help="key=value file with defaults for any flag; flags win")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = _Parser(prog=PROG, description=__doc__.split("\n\n")[0],
                     epilog="Units: hbar = 2m = 1; energies and temperatures in units of "
                            "inverse length squared, momenta in inverse length.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check the potential's assumptions")
    for name, text in (("tc", "critical temperature T_c (energy)"),
                       ("gap", "zero-temperature gap: Xi, Delta(sqrt mu) (energies)"),
                       ("asym", "Fermi-sphere quantities and weak-coupling predictions")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--lambda", dest="lam", type=float, help="coupling lambda > 0, dimensionless")
    p = sub.add_parser("sweep", parents=[common], help="lambda-ladder of T_c, Xi and residuals")
    p.add_argument("--ladder", type=_ladder,
                   help="descending comma-separated couplings, dimensionless")
    p.add_argument("--plot", help="write an SVG plot of ratio and residuals to this path")
    return parser


def read_config(path) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


_CONVERT = {"dimension": int, "mu": float, "Lambda": float, "points_per_panel": int,
            "s_min_factor": float, "rtol": float, "lam": float, "ladder": _ladder,
            "potential": str, "format": str, "output": str, "plot": str}


def merge_config(args: argparse.Namespace) -> argparse.Namespace:
    cfg = read_config(args.config) if args.config else {}
    if "lambda" in cfg:
        cfg["lam"] = cfg.pop("lambda")
    for key, raw in cfg.items():
        if key not in _CONVERT:
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            try:
                setattr(args, key, _CONVERT[key](raw))
            except (ValueError, argparse.ArgumentTypeError):
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
    for key, val in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    if args.dimension not in (1, 2):
        raise ConfigError("dimension must be 1 or 2")
    if args.format not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    return args


def _emit(rows: list, args) -> None:
    if args.format == "json":
        text = json.dumps(rows[0] if len(rows) == 1 else rows, indent=2) + "\n"
    else:
        keys = list(rows[0])
        lines = [",".join(keys)]
        lines += [",".join(sweep_mod._fmt(r[k]) if not isinstance(r[k], bool) else str(r[k]).lower()
                           for k in keys) for r in rows]
        text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _require_lambda(args) -> float:
    if args.lam is None:
        raise ConfigError("--lambda is required")
    if args.lam < 0:
        raise ConfigError("--lambda must be non-negative")
    return args.lam


def _check_potential(P, need_gap: bool) -> None:
    rep = validate(P)
    ok = rep.eligible_gap if need_gap else rep.eligible_tc
    if not ok:
        raise DomainError(f"potential fails the solver assumptions: {rep.as_dict()}")


def cmd_validate(P, args) -> int:
    rep = validate(P)
    _emit([rep.as_dict()], args)
    if not rep.eligible_gap:
        print(f"{PROG}: potential does not satisfy all assumptions", file=sys.stderr)
        return 1
    return 0


def cmd_tc(P, args) -> int:
    lam = _require_lambda(args)
    _check_potential(P, need_gap=False)
    res, grid = critical_temperature(P, args.mu, lam, args.rtol, args.points_per_panel,
                                     args.Lambda, s_min_factor=args.s_min_factor)
    _emit([{"lambda": lam, "Tc": res.Tc, "bracket_lo": res.bracket[0],
            "bracket_hi": res.bracket[1], "grid_nodes": grid.size}], args)
    return 0


def cmd_gap(P, args) -> int:
    lam = _require_lambda(args)
    _check_potential(P, need_gap=True)
    gap = zero_temperature_gap(P, args.mu, lam, args.rtol, args.points_per_panel, args.Lambda,
                               s_min_factor=args.s_min_factor)
    Xi, p_star = energy_gap(gap, args.mu)
    _emit([{"lambda": lam, "Xi": Xi, "p_star": p_star, "Delta_fermi": gap.at_fermi,
            "iterations": gap.iterations, "residual": gap.residual}], args)
    return 0


def cmd_asym(P, args) -> int:
    lam = _require_lambda(args)
    row = {"lambda": lam, **FermiSphereData.build(P, args.mu).summary(lam)}
    order = ("lambda", "e_mu", "b_mu", "predicted_Tc", "predicted_Xi", "universal_ratio")
    _emit([{k: row[k] for k in order}], args)
    return 0


def cmd_sweep(P, args) -> int:
    if args.ladder is None:
        raise ConfigError("--ladder is required")
    cfg = sweep_mod.SweepConfig(P, args.ladder, args.mu, args.Lambda, args.points_per_panel,
                                args.s_min_factor, args.rtol, args.rtol)
    records = sweep_mod.run_sweep(cfg)
    text = sweep_mod.to_csv(records) if args.format == "csv" else sweep_mod.to_json(records)
    if args.output:
        sweep_mod.write_records(records, args.output, args.format)
    else:
        sys.stdout.write(text)
    if args.plot:
        sweep_mod.plot_sweep(records, args.plot)
    failed = [r for r in records if not r.ok]
    for r in failed:
        print(f"{PROG}: lambda={r.lam:g}: {r.status}: {r.message}", file=sys.stderr)
    return 2 if failed else 0


COMMANDS = {"validate": cmd_validate, "tc": cmd_tc, "gap": cmd_gap, "asym": cmd_asym,
            "sweep": cmd_sweep}


def _failing_module(exc: BaseException) -> str:
    frames = traceback.extract_tb(exc.__traceback__)
    if not frames:
        return "?"
    name = os.path.splitext(os.path.basename(frames[-1].filename))[0]
    return {"sweep": "universality_sweep"}.get(name, name)


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args = merge_config(args)
        P = parse_descriptor(args.potential, args.dimension)
        return COMMANDS[args.command](P, args)
    except DomainError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"{PROG}: {_failing_module(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except BCSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
