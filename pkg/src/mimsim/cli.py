"""Command-line scenario runner.

Subcommands select the task family; the scenario file supplies the scene,
assembly and task parameters.  Exit codes: 0 success, 1 requirement
violation or task failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, IoError, MimError
from .report import emit_report, render_report, run
from .scenario import load_scenario

EXIT_OK = 0
EXIT_REQUIREMENT = 1
EXIT_CONFIG = 2

# subcommand -> task types it accepts; `report` runs whatever the file declares
_TASKS = {
    "inspect": ("inspect", "inspect_structure"),
    "walk": ("walk",),
    "pod": ("pod",),
    "maintain": ("maintain",),
    "report": None,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimsim",
        description="Deterministic inspection-and-maintenance scenario runner",
    )
    parser.add_argument("--scenario", required=True, type=Path, help="scenario JSON file")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out", type=Path, default=None, help="write the report JSON here")
    parser.add_argument(
        "command",
        choices=sorted(_TASKS),
        help="task family to run (report runs whatever the scenario declares)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = scenario.__class__(
                scene_path=scenario.scene_path,
                scene=scenario.scene,
                assembly=scenario.assembly,
                task=scenario.task,
                seed=args.seed,
                raw={**scenario.raw, "seed": args.seed},
            )
        allowed = _TASKS[args.command]
        if allowed is not None and scenario.task.get("type") not in allowed:
            raise ConfigError(
                f"scenario task {scenario.task.get('type')!r} does not match "
                f"subcommand {args.command!r}"
            )
        result = run(scenario)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MimError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REQUIREMENT

    for line in result.stdout_lines:
        print(line)
    for row in result.report["traceability"]:
        if row["status"] != "not-exercised":
            print(f"{row['element']}: {row['status'].upper()} ({row['detail']})")

    if args.out is not None:
        try:
            emit_report(result.report, args.out)
            for name, content in result.artifacts.items():
                (args.out.parent / f"{args.out.stem}_{name}").write_text(content)
        except (IoError, OSError) as exc:
            print(f"io error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        print(render_report(result.report), end="")

    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
