"""Command line runner: `multibang run <config>` and `multibang verify <config>`.

`run` executes the configured experiment and writes three artifacts into
the output directory (control.csv, state.csv, report.csv; written via
temp-file + rename so readers never observe partial files), printing the
per-level report table.  Exit codes: 0 full continuation, 1 bad
configuration, 2 continuation stopped early (artifacts still written).

`verify` runs the oracle suites relevant to the configured penalty and
model and exits 3 if any suite fails.
"""

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bloch as bloch_mod
from . import ssn, verify
from .config import ConfigError, parse_config


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(int(value))


def _report_csv(report):
    lines = ["gamma,newton_iters,avg_krylov_iters,line_search_count,nonmultibang_count,final_residual"]
    for row in report.rows():
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _print_report(report, out=None):
    out = out or sys.stdout
    head = f"{'gamma':>12} {'newton':>7} {'avg_gmres':>10} {'linesearch':>11} {'non_mb':>8} {'residual':>12}"
    print(head, file=out)
    for rec in report.levels:
        print(
            f"{rec.gamma:>12.4e} {rec.newton_iters:>7d} {rec.avg_krylov_iters:>10.2f} "
            f"{rec.line_search_count:>11d} {rec.nonmultibang_count:>8d} {rec.final_residual:>12.4e}",
            file=out,
        )
    print(f"status: {report.status}", file=out)


def _run_bloch(cfg, outdir):
    problem = cfg.build_bloch_problem()
    penalty = cfg.build_penalty()
    u, report = ssn.ssn_solve_bloch(
        problem, penalty, cfg.build_schedule(), cfg.build_newton_config()
    )
    times = np.linspace(0.0, problem.duration, problem.n_steps + 1)[1:]
    lines = ["t,u1,u2"]
    for t, (u1, u2) in zip(times, u):
        lines.append(f"{float(t)!r},{float(u1)!r},{float(u2)!r}")
    _atomic_write(outdir / "control.csv", "\n".join(lines) + "\n")

    traj = bloch_mod.forward_solve(problem, u)
    state_lines = ["t,j,Mx,My,Mz"]
    all_times = np.linspace(0.0, problem.duration, problem.n_steps + 1)
    for m, t in enumerate(all_times):
        for j in range(problem.n_isochromats):
            mx, my, mz = (float(v) for v in traj[m, j])
            state_lines.append(f"{float(t)!r},{j + 1},{mx!r},{my!r},{mz!r}")
    _atomic_write(outdir / "state.csv", "\n".join(state_lines) + "\n")
    return report


def _run_elasticity(cfg, outdir):
    rng = np.random.default_rng(cfg.seed)
    system = cfg.build_elasticity_system(rng)
    penalty = cfg.build_penalty()
    (y, p, u), report = ssn.ssn_solve_elasticity(
        system, penalty, cfg.build_schedule(), cfg.build_newton_config()
    )
    gamma = report.last_converged_gamma
    if np.isnan(gamma):
        gamma = cfg.gamma0
    labels = penalty.labels(p, gamma)
    pure = penalty.pure_mask(labels)
    nearest = penalty.nearest_vertex(u)
    mesh = system.mesh
    lines = ["x,y,u1,u2,nearest_vertex,is_multibang"]
    for (x, yy), (u1, u2), nv, mb in zip(mesh.vertices, u, nearest, pure):
        lines.append(
            f"{float(x)!r},{float(yy)!r},{float(u1)!r},{float(u2)!r},{int(nv)},{int(mb)}"
        )
    _atomic_write(outdir / "control.csv", "\n".join(lines) + "\n")

    state_lines = ["x,y,y1,y2"]
    for (x, yy), (y1, y2) in zip(mesh.vertices, y):
        state_lines.append(f"{float(x)!r},{float(yy)!r},{float(y1)!r},{float(y2)!r}")
    _atomic_write(outdir / "state.csv", "\n".join(state_lines) + "\n")
    return report


def cmd_run(args):
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.output_dir is not None:
            cfg = replace(cfg, output_dir=str(args.output_dir))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(cfg.output_dir) if cfg.output_dir else Path("runs") / Path(args.config).stem
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg.model == "bloch":
        report = _run_bloch(cfg, outdir)
    else:
        report = _run_elasticity(cfg, outdir)
    _atomic_write(outdir / "report.csv", _report_csv(report))
    _print_report(report)
    print(f"artifacts written to {outdir}")
    return 0 if report.complete else 2


def cmd_verify(args):
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    penalty = cfg.build_penalty()
    suites = [
        (
            f"{cfg.penalty} prox closed form vs oracle",
            lambda: verify.check_prox_sweep(penalty, seed=cfg.seed),
        )
    ]
    if cfg.model == "bloch":
        problem = cfg.build_bloch_problem()
        suites.append(
            ("adjoint gradient vs finite differences",
             lambda: verify.check_bloch_gradient(problem, seed=cfg.seed))
        )
    else:
        material_kw = dict(nx=3, ny=3)
        suites.append(
            ("sparse assembly vs dense reference",
             lambda: verify.check_assembly(**material_kw))
        )
    failures = 0
    for name, runner in suites:
        ok, detail = runner()
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    return 3 if failures else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="multibang",
        description="Multibang optimal control experiments (pulse design, elasticity)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute an experiment configuration")
    p_run.add_argument("config", help="path to a flat key=value config file")
    p_run.add_argument("--output-dir", default=None, help="override the artifact directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.set_defaults(func=cmd_run)
    p_ver = sub.add_parser("verify", help="run oracle suites scoped by a configuration")
    p_ver.add_argument("config", help="path to a flat key=value config file")
    p_ver.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_ver.set_defaults(func=cmd_verify)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
