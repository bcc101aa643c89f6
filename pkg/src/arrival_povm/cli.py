"""Command-line front end: simulate -> check -> fit -> report.

Exit codes: 0 success / POVM-compatible, 2 input error, 3 incompatible
verdict, 4 fit did not converge (partial result still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .bohmian_sim import run_simulation
from .config import ConfigError, bundled_config_path, load_config
from .errors import ArrivalPOVMError
from .measurability import DEFAULT_TOL, CheckReport, Verdict, full_report
from .povm_fit import FitOptions, FitResult, fit
from .reporting import CSV_NAMES, write_report
from .time_distributions import DirectionFamily

EXIT_OK, EXIT_INPUT, EXIT_INCOMPATIBLE, EXIT_NOT_CONVERGED = 0, 2, 3, 4

log = logging.getLogger("arrival_povm")


class InputError(Exception):
    pass


def _hash_files(paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def manifest(command: str, inputs, outputs, seed=None, config_hash=None) -> dict:
    """Run metadata embedded in every output. Outputs are recorded by file name only."""
    inputs = [str(p) for p in inputs]
    return {
        "command": command,
        "inputs": inputs,
        "outputs": [Path(p).name for p in outputs],
        "seed": seed,
        "tool_version": __version__,
        "config_hash": config_hash if config_hash is not None else _hash_files(inputs),
    }


def suggested_tol(trajectories: int) -> float:
    """Three binomial standard errors on the TV scale."""
    return 3 * 2 / math.sqrt(trajectories)


def _load_family(path) -> tuple[DirectionFamily, dict]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return DirectionFamily.from_dict(raw), raw.get("manifest", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: invalid family file ({exc})") from None


def _load_json(path, cls):
    try:
        return cls.from_dict(json.loads(Path(path).read_text()))
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: invalid {cls.__name__} file ({exc})") from None


# -- subcommands ---------------------------------------------------------------


def simulate(config, out, seed=None, spin_term=None) -> DirectionFamily:
    setup = load_config(config, seed=seed, spin_term=spin_term)
    run = run_simulation(setup.model, setup.surface, setup.directions, setup.sim)
    man = manifest("simulate", [config], [out], setup.sim.seed, setup.config_hash)
    man["trajectories"] = setup.sim.trajectories
    man["spin_term"] = setup.sim.spin_term
    man["flagged"] = run.flagged
    run.family.save(out, man)
    for n, p in run.family.entries:
        print(f"n={n.label()}  arrived={1 - p.censored_mass:.4f}  censored={p.censored_mass:.4f}")
    return run.family


def cmd_simulate(args) -> int:
    simulate(args.config, args.out, args.seed, False if args.no_spin_term else None)
    print(f"wrote {args.out}")
    return EXIT_OK


def _resolve_tol(tol, fam_manifest) -> float:
    if tol is not None:
        return tol
    n = fam_manifest.get("trajectories")
    return suggested_tol(n) if n else DEFAULT_TOL


def print_report(report: CheckReport):
    def fmt(v):
        return "n/a" if v is None else f"{v:.6g}"

    print(f"{'quantity':<24}{'value':>14}")
    print(f"{'delta':<24}{fmt(report.delta):>14}")
    print(f"{'lower bound (delta/4)':<24}{fmt(report.lower_bound):>14}")
    print(f"{'axial defect':<24}{fmt(report.axial_defect):>14}")
    chiral = fmt(report.chiral_defect)
    if report.chiral_applicable is False:
        chiral += " (NOT_APPLICABLE)"
    print(f"{'chiral defect':<24}{chiral:>14}")
    print(f"{'inversion defect':<24}{fmt(report.inversion_defect):>14}")
    print(f"verdict: {report.verdict.value} (tol {report.tol:.3g}, {report.direction_count} directions)")


def check(family_path, out=None, tol=None) -> CheckReport:
    family, fam_man = _load_family(family_path)
    tol = _resolve_tol(tol, fam_man)
    report = full_report(family, tol)
    if out:
        report.save(out, manifest("check", [family_path], [out], fam_man.get("seed")))
    print_report(report)
    return report


def cmd_check(args) -> int:
    report = check(args.input, args.out, args.tol)
    return EXIT_INCOMPATIBLE if report.verdict is Verdict.INCOMPATIBLE else EXIT_OK


def run_fit(family_path, out, opts: FitOptions) -> FitResult:
    family, _ = _load_family(family_path)
    result = fit(family, opts)
    result.save(out, manifest("fit", [family_path], [out], opts.seed))
    print(f"{'minimax error':<16}{'delta/4':>14}{'gap':>14}")
    print(f"{result.minimax_error:<16.6g}{result.lower_bound:>14.6g}{result.minimax_error - result.lower_bound:>14.3g}")
    print(f"converged: {result.converged} ({result.status}, {result.iterations} iterations)")
    return result


def _fit_options(args, use_tol: bool = True) -> FitOptions:
    opts = FitOptions(seed=args.seed or 0, enforce_axial=args.enforce_axial)
    if args.max_iters is not None:
        opts.max_iterations = args.max_iters
    if use_tol and args.tol is not None:
        opts.tol = args.tol
    return opts


def cmd_fit(args) -> int:
    result = run_fit(args.input, args.out, _fit_options(args))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_report(args) -> int:
    family, fam_man = _load_family(args.input)
    check_report = _load_json(args.check, CheckReport) if args.check else None
    fit_result = _load_json(args.fit, FitResult) if args.fit else None
    inputs = [p for p in (args.input, args.check, args.fit) if p]
    outdir = Path(args.out)
    man = manifest("report", inputs, [outdir / n for n in CSV_NAMES], fam_man.get("seed"))
    for p in write_report(family, outdir, check_report, fit_result, man):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_demo(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    config = args.config or bundled_config_path()
    fam_path, check_path, fit_path = outdir / "family.json", outdir / "check.json", outdir / "fit.json"
    simulate(config, fam_path, args.seed, False if args.no_spin_term else None)
    report = check(fam_path, check_path, args.tol)
    result = run_fit(fam_path, fit_path, _fit_options(args, use_tol=False))
    family, fam_man = _load_family(fam_path)
    man = manifest("demo", [fam_path, check_path, fit_path], [outdir / "csv"], fam_man.get("seed"))
    write_report(family, outdir / "csv", report, result, man)
    print()
    print(f"delta        = {report.delta:.4f}   (antipodal sums disagree: {report.verdict.value})")
    print(f"delta / 4    = {report.lower_bound:.4f}   (no spin POVM can do better)")
    print(f"fitted error = {result.minimax_error:.4f}   (best spin POVM found)")
    if not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_INCOMPATIBLE if report.verdict is Verdict.INCOMPATIBLE else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arrival-povm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Bohmian arrival-time family from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-spin-term", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="necessary conditions and the delta/4 bound")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--tol", type=float, help="verdict tolerance (default: from trajectory count, else 1e-6)")
    p.set_defaults(func=cmd_check)

    def fit_flags(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--max-iters", type=int)
        p.add_argument("--enforce-axial", action="store_true")

    p = sub.add_parser("fit", help="minimax spin-POVM fit")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol", type=float)
    fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="CSV tables from family / check / fit files")
    p.add_argument("--in", dest="input", required=True, help="family file")
    p.add_argument("--check")
    p.add_argument("--fit")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("demo", help="simulate, check, fit and report on the bundled configuration")
    p.add_argument("--config")
    p.add_argument("--out", default="demo_out")
    p.add_argument("--tol", type=float)
    p.add_argument("--no-spin-term", action="store_true")
    fit_flags(p)
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArrivalPOVMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
