"""Command-line front end: ``remmpc check|run|compare|sweep <scenario>``.

Exit codes: 0 success, 1 validation or assumption failure, 2 solver failure,
64 usage error. ``REMMPC_LOG`` (off, info, debug) sets diagnostic verbosity on
stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import matops, report
from .analysis import certify_mu_limit, certify_pd_fixed_point, certify_stability
from .controller import (
    ControllerKind,
    compute_metrics,
    run_closed_loop,
    sweep_mu,
)
from .errors import AssumptionViolated, CertificationFailed, RemmpcError, StepFailed
from .horizon import build_stacked
from .model import Scenario, check_controllability, check_detectability
from .scenario import CONTROLLERS, load_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64

log = logging.getLogger("remmpc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _configure_logging():
    level = os.environ.get("REMMPC_LOG", "off").strip().lower()
    levels = {"off": None, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        print(f"remmpc: ignoring REMMPC_LOG={level!r} (expected off, info or debug)", file=sys.stderr)
        level = "off"
    root = logging.getLogger("remmpc")
    root.handlers.clear()
    if levels[level] is None:
        root.addHandler(logging.NullHandler())
        root.setLevel(logging.CRITICAL + 1)
        root.propagate = False
        return
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(levels[level])
    root.propagate = False


def _mu_list(text: str) -> list[float]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("mu list is empty")
    try:
        mus = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number in mu list: {exc}") from exc
    if any(not mu > 0 for mu in mus):
        raise argparse.ArgumentTypeError("every mu must be positive")
    return mus


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="remmpc", description="Regularized MPC benchmark runner.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, controller=True):
        p.add_argument("scenario", type=Path, help="scenario file (YAML)")
        p.add_argument("--tol", type=_positive, default=matops.DEFAULT_TOL,
                       help="tolerance for definiteness and rank checks (default %(default)g)")
        p.add_argument("--mu", type=_positive, default=None, help="penalty weight, overrides the scenario")
        if controller:
            p.add_argument("--controller", choices=CONTROLLERS, default=None,
                           help="controller kind, overrides the scenario")
        p.add_argument("--out", type=Path, default=None, help="output directory (default ./remmpc-out/<name>)")
        p.add_argument("--force", action="store_true", help="run even if assumption checks fail")

    p = sub.add_parser("check", help="check assumptions on a scenario")
    common(p)
    p.add_argument("--certify", action="store_true", help="also run the numerical certificates")
    common(sub.add_parser("run", help="closed-loop run of one controller"))
    common(sub.add_parser("compare", help="C-MPC against Re-MPC"))
    p = sub.add_parser("sweep", help="Re-MPC over a list of penalty weights")
    common(p, controller=False)
    p.add_argument("--mu-list", type=_mu_list, default=[100.0, 50.0, 25.0, 10.0, 1.0],
                   help="comma-separated penalty weights (default 100,50,25,10,1)")
    return parser


def run_checks(sc: Scenario, tol: float) -> list[tuple[str, bool, str]]:
    """(name, passed, detail) for every assumption the controller relies on."""
    sys_, cost = sc.system, sc.cost
    out = [
        ("controllable (A, B)", check_controllability(sys_), "Kalman rank test"),
        ("detectable (A, Q)", check_detectability(sys_, cost.Q), "PBH test on |z| >= 1"),
    ]
    rep = cost.definiteness_report(tol)
    for name in ("Q", "R", "P_terminal"):
        d = rep[name]
        want = "PSD" if name == "Q" else "PD"
        got = "not symmetric" if d is None else d.value
        ok = got == "PD" or (want == "PSD" and got == "PSD")
        out.append((f"{name} {want}", ok, got))
    sp = build_stacked(sys_, cost, cost.P_terminal, sc.l)
    r = matops.rank_of(sp.Aeq)
    out.append(("rank [B1 -B2] full row", r == sp.n_x, f"rank {r} of {sp.n_x}"))
    return out


def _resolve(args):
    sf = load_scenario(args.scenario)
    sc = sf.scenario
    if args.mu is not None:
        sc = replace(sc, mu=args.mu)
    controller = getattr(args, "controller", None) or sf.controller
    out = args.out if args.out is not None else Path("remmpc-out") / sc.name
    return sc, controller, out


def _kind(controller: str, mu: float) -> ControllerKind:
    if controller == "re-mpc":
        return ControllerKind.penalized(mu)
    return ControllerKind(controller)


def _print_checks(checks):
    w = max(len(c[0]) for c in checks)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name.ljust(w)}  {detail}")


def _gate(sc: Scenario, args) -> bool:
    checks = run_checks(sc, args.tol)
    if all(ok for _, ok, _ in checks):
        return True
    _print_checks(checks)
    if args.force:
        print("assumption checks failed; continuing because of --force", file=sys.stderr)
        return True
    print("assumption checks failed; rerun with --force to ignore", file=sys.stderr)
    return False


def _run_or_flush(sc, kind, path):
    """Closed-loop run; on solver failure write the partial CSV and re-raise."""
    try:
        return run_closed_loop(sc, kind)
    except StepFailed as exc:
        if exc.partial is not None:
            report.write_atomic(path, report.trajectory_csv(exc.partial, failed_step=exc.step))
        raise


def cmd_check(args) -> int:
    sc, _, _ = _resolve(args)
    checks = run_checks(sc, args.tol)
    _print_checks(checks)
    ok = all(c[1] for c in checks)
    if args.certify:
        if not ok:
            print("SKIP  certificates (assumptions not met)")
            return EXIT_INVALID
        sp = build_stacked(sc.system, sc.cost, sc.cost.P_terminal, sc.l)
        try:
            fp = certify_pd_fixed_point(sc.system, sc.cost, sc.l)
            print(f"PASS  fixed point unique and PD  max deviation {fp.max_deviation:.3e} over {fp.trials} starts")
            st = certify_stability(sc.system, sc.cost, sc.l)
            print(f"PASS  closed loop stable  spectral radius {st.spectral_radius:.6f}, margin {st.margin:.6f}")
            mu = certify_mu_limit(sp, np.logspace(2, 8, 7))
            print(f"PASS  penalty limit  log-log slope {mu.slope:.4f}")
        except (CertificationFailed, AssumptionViolated) as exc:
            print(f"FAIL  certificate  {exc}")
            return EXIT_INVALID
    return EXIT_OK if ok else EXIT_INVALID


def cmd_run(args) -> int:
    sc, controller, out = _resolve(args)
    if not _gate(sc, args):
        return EXIT_INVALID
    kind = _kind(controller, sc.mu)
    run = _run_or_flush(sc, kind, out / "trajectory.csv")
    base = None
    if kind.name != "c-mpc":
        base = run_closed_loop(sc, ControllerKind.classical())
    metrics = compute_metrics(run, base, sc.cost)
    report.write_atomic(out / "trajectory.csv", report.trajectory_csv(run))
    report.write_atomic(out / "metrics.csv", report.metrics_csv([(run, metrics)]))
    from .plotting import plot_runs

    plot_runs([run], out / "trajectory.png", sc.constraints, title=f"{sc.name}: {kind.label}")
    print(report.render_table([(run, metrics)]), end="")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc, controller, out = _resolve(args)
    if not _gate(sc, args):
        return EXIT_INVALID
    if controller == "c-mpc":
        controller = "re-mpc"
    base = _run_or_flush(sc, ControllerKind.classical(), out / "trajectory_c-mpc.csv")
    kind = _kind(controller, sc.mu)
    run = _run_or_flush(sc, kind, out / f"trajectory_{kind.name}.csv")
    entries = [(base, compute_metrics(base, base, sc.cost)), (run, compute_metrics(run, base, sc.cost))]
    for r, _ in entries:
        report.write_atomic(out / f"trajectory_{r.kind.name}.csv", report.trajectory_csv(r))
    report.write_atomic(out / "compare.csv", report.metrics_csv(entries))
    table = report.render_table(entries)
    report.write_atomic(out / "compare.txt", table)
    from .plotting import plot_runs

    plot_runs([base, run], out / "compare.png", sc.constraints, title=f"{sc.name}: C-MPC vs Re-MPC")
    print(table, end="")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    sc, _, out = _resolve(args)
    if not _gate(sc, args):
        return EXIT_INVALID
    try:
        result = sweep_mu(sc, args.mu_list)
    except StepFailed as exc:
        name = exc.partial.kind if exc.partial is not None else None
        tag = f"mu_{report.mu_tag(name.mu)}" if name is not None and name.mu else "c-mpc"
        if exc.partial is not None:
            report.write_atomic(out / f"trajectory_{tag}.csv",
                                report.trajectory_csv(exc.partial, failed_step=exc.step))
        raise
    report.write_atomic(out / "sweep.csv", report.sweep_csv(result))
    for p in result.points:
        report.write_atomic(out / f"trajectory_mu_{report.mu_tag(p.mu)}.csv", report.trajectory_csv(p.run))
    entries = [(result.baseline, result.baseline_metrics)] + [(p.run, p.metrics) for p in result.points]
    from .plotting import plot_runs

    plot_runs([p.run for p in result.points] + [result.baseline], out / "sweep.png", sc.constraints,
              title=f"{sc.name}: penalty sweep")
    print(report.render_table(entries), end="")
    print(f"wrote {out}")
    return EXIT_OK


COMMANDS = {"check": cmd_check, "run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except StepFailed as exc:
        print(f"remmpc: solver failure at step {exc.step}: {exc.cause}", file=sys.stderr)
        return EXIT_SOLVER
    except (RemmpcError, ValueError) as exc:
        print(f"remmpc: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
