"""Command-line entry points.

    gridmdp generate-chronics --grid F --days N --seed S --out DIR
    gridmdp run --agent {do-nothing|expert|ppo:DIR|mixture:DIR} --scenario DIR --report F
    gridmdp train-ppo --config F --out DIR
    gridmdp sweep --param {safe-max-rho|limit-cs-margin} --values LIST
    gridmdp score --reports DIR
    gridmdp serve --port P

The environment variable GRIDMDP_DATA_DIR sets the default scenario root;
the literal scenario name "default" regenerates the built-in fixture.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .chronics import generate_chronics, load_chronics, save_chronics
from .defaults import default_chronics_config, default_grid, default_scenario
from .grid import load_grid
from . import harness

DATA_DIR_VAR = "GRIDMDP_DATA_DIR"


def _resolve_grid(path: str | None):
    return load_grid(path) if path else default_grid()


def _resolve_scenario(name: str):
    if name == "default":
        return default_scenario(days=7, seed=42)
    path = Path(name)
    if not path.is_dir():
        root = os.environ.get(DATA_DIR_VAR)
        if root and (Path(root) / name).is_dir():
            path = Path(root) / name
    return load_chronics(path)


def _cmd_generate(args) -> int:
    grid = _resolve_grid(args.grid)
    cfg = default_chronics_config(days=args.days)
    if args.start:
        cfg.start = args.start
    if args.hard:
        cfg = harness.hard_week_config(days=args.days)
    for spec in args.maintenance or []:
        line_id, start, dur = spec.split(":")
        cfg.maintenance.append((line_id, int(start), int(dur)))
    chronics = generate_chronics(grid, cfg, args.seed)
    out = save_chronics(chronics, args.out)
    print(f"wrote scenario with {chronics.n_steps} steps to {out}")
    return 0


def _cmd_run(args) -> int:
    grid = _resolve_grid(args.grid)
    chronics = _resolve_scenario(args.scenario)
    agent = harness.build_agent(args.agent, grid)
    report = harness.run_episode(agent, grid, chronics, scenario_id=args.scenario,
                                 agent_id=args.agent)
    if args.report:
        harness.save_report(report, args.report)
    print(f"agent {report.agent} survived {report.survived_steps}/{report.total_steps} "
          f"steps, score {report.score:.2f}")
    return 0


def _cmd_train(args) -> int:
    job = harness.TrainingJob.from_file(args.config) if args.config else harness.TrainingJob()
    if args.steps is not None:
        job.total_steps = args.steps
    if args.seed is not None:
        job.seed = args.seed
    _, log = harness.run_training(job, args.out)
    mean_len = (sum(log.episode_lengths) / len(log.episode_lengths)
                if log.episode_lengths else float("nan"))
    print(f"trained {job.total_steps} steps over {log.episodes} episodes "
          f"(mean length {mean_len:.1f}) in {log.wall_clock_s:.1f}s -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    grid = _resolve_grid(args.grid)
    scenarios = [_resolve_scenario(s) for s in args.scenario]
    values = [float(v) for v in args.values.split(",")]
    agent_dir = args.agent[4:] if args.agent and args.agent.startswith("ppo:") else None
    rows = harness.sweep(args.param, values, grid, scenarios, agent_dir=agent_dir)
    header = f"{args.param:>16} {'mean_score':>12} {'survival':>10}"
    print(header)
    for value, score, survival in rows:
        print(f"{value:>16.4g} {score:>12.3f} {survival:>10.3f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps([{"value": v, "mean_score": s, "survival": f}
                        for v, s, f in rows], indent=2) + "\n")
    return 0


def _cmd_score(args) -> int:
    rows = harness.leaderboard_from_reports(args.reports)
    print(f"{'agent':<24} {'mean_score':>12} {'scenarios':>10}")
    for name, mean, n in rows:
        print(f"{name:<24} {mean:>12.3f} {n:>10}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(grid_path=args.grid, data_dir=args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridmdp", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-chronics", help="generate a scenario directory")
    p.add_argument("--grid", default=None, help="grid file (default: built-in)")
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--start", default=None, help="ISO start datetime")
    p.add_argument("--hard", action="store_true",
                   help="use the stressed winter-week configuration")
    p.add_argument("--maintenance", action="append", metavar="LINE:START:STEPS",
                   help="add a maintenance window (repeatable)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run one agent over one scenario")
    p.add_argument("--agent", required=True,
                   help="do-nothing | expert | ppo:DIR | mixture:DIR")
    p.add_argument("--scenario", required=True, help="scenario directory or 'default'")
    p.add_argument("--report", default=None, help="write the run report here")
    p.add_argument("--grid", default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("train-ppo", help="train the policy")
    p.add_argument("--config", default=None, help="training config JSON")
    p.add_argument("--out", required=True, help="agent output directory")
    p.add_argument("--steps", type=int, default=None, help="override total steps")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="score agents across a hyperparameter axis")
    p.add_argument("--param", required=True, choices=harness.SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--scenario", action="append", required=True,
                   help="scenario directory or 'default' (repeatable)")
    p.add_argument("--agent", default=None, help="ppo:DIR to sweep the full agent")
    p.add_argument("--grid", default=None)
    p.add_argument("--out", default=None, help="write rows as JSON")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("score", help="leaderboard from stored reports")
    p.add_argument("--reports", required=True)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--grid", default=None)
    p.add_argument("--data-dir", default=os.environ.get(DATA_DIR_VAR))
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
