"""``fleet-hfc`` command line: field generation, solving, mode comparison,
Monte Carlo batteries and plotting.

Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import KEY_DOCS, ConfigError, ScenarioConfig, config_hash, load_config

log = logging.getLogger("fleet_hfc")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _config_epilog() -> str:
    lines = ["scenario config keys (INI sections and keys):"]
    section = None
    for (sec, key), text in KEY_DOCS.items():
        if sec != section:
            lines.append(f"  [{sec}]")
            section = sec
        lines.append(f"    {key:<24} {text}")
    lines.append("")
    lines.append("bundled configs: canonical_s4.cfg (may be named without a path)")
    lines.append("default output directory: $FLEET_HFC_OUT, else ./fleet_hfc_out")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="canonical_s4.cfg", help="scenario .cfg file")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--solver", choices=("hfc", "ga"), default=None)
    common.add_argument("--mode", choices=("ncm1", "ncm2", "cm"), default=None)
    common.add_argument("--iters", type=int, default=None, help="iteration budget override")
    common.add_argument("--no-plots", action="store_true", help="skip SVG figures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="fleet-hfc",
        description="Cooperative task allocation for a battery-limited vehicle fleet.",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    kw = dict(parents=[common], formatter_class=argparse.RawDescriptionHelpFormatter,
              epilog=_config_epilog())
    sub.add_parser("gen-field", help="write the density grid and sampled tasks", **kw)
    sub.add_parser("solve", help="solve one scenario", **kw)
    p = sub.add_parser("compare", help="paired comparison of modes on one seed", **kw)
    p.add_argument("--modes", default="ncm1,ncm2,cm", help="comma list of ncm1,ncm2,cm,ga")
    p = sub.add_parser("montecarlo", help="repeated solves on deformed scenarios", **kw)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--deform-std", type=float, default=None, help="hotspot noise std (m)")
    p = sub.add_parser("plot", help="solve and draw figures, plus boxplots of a runs CSV", **kw)
    p.add_argument("--runs-csv", default=None, help="per-run CSV from montecarlo")
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("FLEET_HFC_OUT") or "fleet_hfc_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, mode=args.mode, solver=args.solver,
                              iters=args.iters, runs=getattr(args, "runs", None),
                              deform_std=getattr(args, "deform_std", None))


def _echo(cfg: ScenarioConfig, out: Path, extra: dict | None = None) -> None:
    doc = {"config_hash": config_hash(cfg), "config": cfg.to_dict(), **(extra or {})}
    (out / "config_echo.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _cmd_gen_field(args, cfg, out) -> None:
    from .environment import export_density_csv
    from .harness import scenario_inputs

    fm, tasks = scenario_inputs(cfg)
    export_density_csv(fm, out / "density.csv")
    with (out / "tasks.csv").open("w") as fh:
        fh.write("task_id,x,y,z,priority,injection_time_s\n")
        for t in tasks:
            x, y, z = t.position_xyz
            fh.write(f"{t.id},{x!r},{y!r},{z!r},{t.priority},{t.injection_time_s!r}\n")
    if not args.no_plots:
        from .plotting import plot_field

        plot_field(fm, tasks, out / "field.svg")
    print(f"{len(tasks)} tasks, field {fm.shape[1]}x{fm.shape[0]} cells -> {out}")


def _cmd_solve(args, cfg, out) -> None:
    from .clustering import export_assignment_csv
    from .harness import run_scenario, write_history_csv, write_plan_json, write_runs_csv

    res = run_scenario(cfg)
    write_plan_json(res, out / "plan.json")
    write_history_csv(res.history, out / "history.csv")
    write_runs_csv([res], out / "result.csv")
    if res.clusters is not None:
        export_assignment_csv(res.clusters, out / "clusters.csv")
    if not args.no_plots:
        from .plotting import emit_plots

        emit_plots([res], out)
    if res.infeasible_vehicles:
        print(f"warning: vehicles {res.infeasible_vehicles} cannot reach the rendezvous in time")
    print(f"{res.label}: completed {res.completed}/{len(res.tasks)}, total cost "
          f"{res.total_cost:.6g}, violation {res.total_violation_s:.6g} s, "
          f"wall {res.wall_time_s:.1f} s -> {out}")


def _cmd_compare(args, cfg, out) -> None:
    from .harness import compare_modes, write_comparison_csv, write_history_csv

    modes = [m for m in args.modes.split(",") if m.strip()]
    if not modes:
        raise ConfigError("modes", "no modes given")
    results = compare_modes(cfg, modes)
    write_comparison_csv(results, out / "comparison.csv")
    for res in results:
        write_history_csv(res.history, out / f"history_{res.label}.csv")
    if not args.no_plots:
        from .plotting import emit_plots

        emit_plots(results, out)
    for res in results:
        print(f"{res.label:>5}: cost {res.total_cost:.6g}  completed {res.completed}/"
              f"{len(res.tasks)}  residual {res.residual_time_s:.1f} s  "
              f"violation {res.total_violation_s:.1f} s")


def _cmd_montecarlo(args, cfg, out) -> None:
    from .harness import run_monte_carlo, write_runs_csv

    if args.jobs < 1:
        raise ConfigError("jobs", "must be at least 1")
    results, summary = run_monte_carlo(cfg, jobs=args.jobs)
    write_runs_csv(results, out / "montecarlo_runs.csv")
    (out / "montecarlo_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_plots:
        from .plotting import emit_plots

        emit_plots(results, out, prefix="mc_")
    print(f"{summary['runs']} runs, {summary['failures']} failures "
          f"({100 * summary['failure_rate']:.1f}%)")
    for vid, m in summary["vehicles"].items():
        print(f"  vehicle {vid}: operation time median {m['mission_time_s']['median']:.1f} s, "
              f"violation median {m['violation_s']['median']:.1f} s")


def _cmd_plot(args, cfg, out) -> None:
    from .harness import read_runs_csv, run_scenario
    from .plotting import emit_plots, plot_montecarlo

    written = emit_plots([run_scenario(cfg)], out)
    if args.runs_csv:
        written.append(plot_montecarlo(read_runs_csv(args.runs_csv), out / "montecarlo_boxplots.svg"))
    for p in written:
        print(p)


COMMANDS = {
    "gen-field": _cmd_gen_field,
    "solve": _cmd_solve,
    "compare": _cmd_compare,
    "montecarlo": _cmd_montecarlo,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
        out = _out_dir(args)
        _echo(cfg, out)
        COMMANDS[args.command](args, cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure maps to one exit code
        log.debug("runtime failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
