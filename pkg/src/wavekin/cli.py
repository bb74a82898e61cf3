"""Command line: ``wavekin run | verify | diagnose | kernel-check``.

Exit codes: 0 success, 1 validation failure (bad config or a failed check),
2 runtime failure (unreadable or corrupt files, time-step underflow).
The collision sums use ``WAVEKIN_THREADS`` threads when it is set.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, set_threads
from .errors import ConfigError, WaveKinError

logger = logging.getLogger("wavekin")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _emit(doc: dict, path: Path | None = None) -> None:
    from .verify import jsonable

    text = json.dumps(jsonable(doc), indent=2, sort_keys=False)
    if path is not None:
        path.write_text(text + "\n")
    print(text)


def _error(exc: BaseException, code: int) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, ConfigError):
        doc["violations"] = exc.violations
    print(json.dumps(doc, indent=2), file=sys.stderr)
    return code


def cmd_run(args) -> int:
    from . import integrator as it
    from . import plotting
    from .analysis import invariant_report
    from .config import build_problem, parse_config

    config = parse_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    traj = it.integrate(problem.initial, problem.table, problem.control, problem.detector,
                        with_dissipation=config.diagnostics.record_dissipation)
    traj.write(out / "spectra.csv", out / "diagnostics.csv")
    summary = {
        "config": str(args.config),
        "termination": traj.termination,
        "samples": len(traj.snapshots),
        "t_last": traj.snapshots[-1].t,
        "condensation_time": traj.condensation_time,
        "dt_init": problem.control.dt_init,
        "detector": None if problem.detector is None else {
            "C_F": problem.detector.C_F, "varsigma": problem.detector.varsigma,
            "n_range": list(problem.detector.n_range)},
        "invariants": invariant_report(traj),
        "files": ["spectra.csv", "diagnostics.csv"],
    }
    if not args.no_plots:
        summary["figures"] = [p.name for p in (plotting.plot_spectra(traj, out),
                                                 plotting.plot_diagnostics(traj, out))]
    _emit(summary, out / "run_summary.json")
    return EXIT_RUNTIME if traj.termination == it.DT_UNDERFLOW else EXIT_OK


def cmd_verify(args) -> int:
    from .config import parse_config
    from .verify import SUITES, report, run_suites

    config = parse_config(args.config)
    names = args.suite or list(SUITES)
    bad = [n for n in names if n not in SUITES]
    if bad:
        raise ConfigError([f"unknown suite {n!r}; choose from {SUITES}" for n in bad])
    results = run_suites(config, names)
    doc = report(results)
    _emit(doc, Path(args.out) if args.out else None)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.seconds:.1f} s)", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_INVALID


def cmd_diagnose(args) -> int:
    from . import collision, plotting
    from .analysis import diagnose, supersolution_section, supersolution_segment, trajectory_from_snapshots
    from .config import parse_config, theory_params
    from .spectrum import read_spectra_csv

    config = parse_config(args.config)
    path = Path(args.trajectory)
    snaps = read_spectra_csv(path)
    table = collision.build_kernel_table(config.grid, config.model, config.kernel.scale, config.kernel.mode)
    traj = trajectory_from_snapshots(snaps, table, with_dissipation=config.diagnostics.record_dissipation,
                                     record_dt=config.step.record_dt)
    doc = diagnose(traj, config)
    sup = doc.get("supersolution", {})
    if sup.get("vacuous") and not args.no_rerun:
        seg, info = supersolution_segment(config)
        if seg is None:
            doc["supersolution_fine"] = info
        else:
            fine = supersolution_section(seg, theory_params(config, traj.records[0]["mass"]), config.model,
                                         info["n"])
            fine["segment"] = info
            doc["supersolution_fine"] = fine
    out_dir = path.parent
    if not args.no_plots:
        doc["figures"] = [p.name for p in plotting.plot_report(traj, doc, out_dir)]
    _emit(doc, out_dir / "diagnose_report.json")
    return EXIT_OK


def cmd_kernel_check(args) -> int:
    from .config import parse_config
    from .verify import suite_min_kernel

    config = parse_config(args.config)
    res = suite_min_kernel(config)
    _emit(res.as_dict(), Path(args.out) if args.out else None)
    return EXIT_OK if res.passed else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavekin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a config and write CSV, JSON and figures")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="also write the JSON report here")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("diagnose", help="theory diagnostics of a stored trajectory")
    p.add_argument("--trajectory", required=True, help="spectra CSV written by 'run'")
    p.add_argument("--config", required=True)
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--no-rerun", action="store_true",
                   help="skip the fine-cadence re-integration used when the stored cadence cannot resolve T1")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("kernel-check", help="quadrature sweep of the min-kernel identity")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    set_threads()
    try:
        return args.func(args)
    except ConfigError as exc:
        return _error(exc, EXIT_INVALID)
    except (WaveKinError, OSError) as exc:
        return _error(exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
