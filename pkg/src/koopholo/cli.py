"""
koopholo CLI - run geometric-phase scenarios from the terminal
"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from . import __version__
from .errors import KoopholoError, ScenarioError, error_category
from .loopstore import persist_loop, read_loop_state
from .runner import ScenarioRunner, emit_convergence_table, load_scenarios, summarize, write_report
from .scenario import Report, Scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4
_EXIT_CODES = {"config": EXIT_CONFIG, "numerical": EXIT_NUMERICAL, "io": EXIT_IO}

# subcommand -> task it accepts; "run" accepts any
TASK_COMMANDS = {
    "holonomy": "holonomy",
    "moving-frame": "moving_frame",
    "hannay": "hannay",
    "holonomy-sample": "holonomy_sample",
    "unitarity": "unitarity",
    "cyclic": "cyclic",
}


def _suffixed(path: Path, name: str, batch: bool) -> Path:
    return path.with_name(f"{path.stem}-{name}{path.suffix}") if batch else path


class KoopholoCLI:
    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog="koopholo",
            description="koopholo - geometric phases of classical flows in the Koopman representation",
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        commands = parser.add_subparsers(dest="command", required=True)

        for name, help_text in [("run", "Run a scenario file of any task")] + [
            (command, f"Run a '{task}' scenario file") for command, task in TASK_COMMANDS.items()
        ]:
            sub = commands.add_parser(name, help=help_text)
            sub.add_argument("scenario", metavar="SCENARIO", help="Scenario JSON file (object or array)")
            sub.add_argument("--output", "-o", metavar="PATH", help="Write the JSON report here")
            sub.add_argument("--table", metavar="PATH", help="Write the convergence table (CSV) here")
            sub.add_argument("--dump-loop", metavar="PATH", help="Cache the finest loop of the run here")
            sub.add_argument("--seed", type=int, help="Override the scenario seed")
            sub.add_argument("--rtol", type=float, help="Override the refinement tolerance")
            sub.add_argument("--verbose", "-v", action="count", default=0, help="-v for info, -vv for debug")

        show = commands.add_parser("show-loop", help="Summarize a cached loop file")
        show.add_argument("path", metavar="PATH")
        show.add_argument("--verbose", "-v", action="count", default=0)
        return parser

    def setup_logging(self, verbosity: int):
        level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
        logging.basicConfig(
            level=level,
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler(console=self.console, show_path=False)],
            force=True,
        )

    def print_report(self, report: Report):
        color = "green" if report.status == "ok" else "red"
        table = Table(title=f"{report.scenario.get('name')} [{color}]{report.status}[/{color}]", show_header=True)
        table.add_column("Result")
        table.add_column("Value", justify="right")
        if report.error is not None:
            table.add_row("error", f"{report.error.type}: {report.error.message}")
        for key, value in summarize(report).items():
            table.add_row(key, f"{value:.12g}" if isinstance(value, float) else str(value))
        if report.convergence:
            table.add_row("levels", str(len(report.convergence)))
        self.console.print(table)

    def show_loop_cmd(self, path: str) -> int:
        try:
            state = read_loop_state(path)
        except OSError as e:
            self.console.print(f"[red]Cannot read {path}: {e}[/red]")
            return EXIT_IO
        except ValueError as e:
            self.console.print(f"[red]{e}[/red]")
            return EXIT_CONFIG
        table = Table(show_header=False)
        table.add_row("nodes", str(state["rows"]))
        table.add_row("torus dimension", str(state["dim"]))
        table.add_row("modes", str(len(state["modes"])))
        for key, value in state.get("meta", {}).items():
            table.add_row(key, str(value))
        self.console.print(table)
        return EXIT_OK

    def run_cmd(self, args) -> int:
        path = Path(args.scenario)
        try:
            scenarios: List[Scenario] = load_scenarios(path)
        except OSError as e:
            self.console.print(f"[red]Cannot read scenario {path}: {e}[/red]")
            return EXIT_IO
        except ScenarioError as e:
            self.console.print(f"[red]Invalid scenario {path}: {e}[/red]")
            return EXIT_CONFIG

        task = TASK_COMMANDS.get(args.command)
        if task is not None:
            wrong = [s.name for s in scenarios if s.task != task]
            if wrong:
                self.console.print(f"[red]'{args.command}' only runs {task} scenarios; got {', '.join(wrong)}[/red]")
                return EXIT_CONFIG

        runner = ScenarioRunner(seed=args.seed, rtol=args.rtol, base_dir=path.parent)
        batch = len(scenarios) > 1
        reports: List[Report] = []
        exit_code = EXIT_OK
        try:
            for scenario in scenarios:
                report = runner.run(scenario)
                reports.append(report)
                self.print_report(report)
                if report.error is not None:
                    exit_code = max(exit_code, _EXIT_CODES[report.error.category])
                    continue
                if args.table and report.convergence:
                    emit_convergence_table(report, _suffixed(Path(args.table), scenario.name, batch))
                if args.dump_loop and runner.last_loop is not None:
                    persist_loop(
                        runner.last_loop,
                        _suffixed(Path(args.dump_loop), scenario.name, batch),
                        meta={"scenario": scenario.name, "task": scenario.task},
                    )
            if args.output:
                write_report(reports if batch else reports[0], args.output)
        except ScenarioError as e:
            self.console.print(f"[red]{e}[/red]")
            return EXIT_CONFIG
        except OSError as e:
            self.console.print(f"[red]I/O error: {e}[/red]")
            return EXIT_IO

        if args.table and not any(r.convergence for r in reports) and exit_code == EXIT_OK:
            self.console.print("[red]No refinement sequence to tabulate.[/red]")
            exit_code = EXIT_NUMERICAL
        return exit_code

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Parse arguments and run the CLI"""
        args = self.build_parser().parse_args(argv)
        self.setup_logging(args.verbose)
        try:
            if args.command == "show-loop":
                return self.show_loop_cmd(args.path)
            return self.run_cmd(args)
        except KoopholoError as e:
            self.console.print(f"[red]{e}[/red]")
            return _EXIT_CODES[error_category(e)]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point for the CLI"""
    return KoopholoCLI().run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
