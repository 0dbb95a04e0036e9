"""
RAISE-T2I - Command Line Interface

Entry point for the `raise-t2i` command-line tool.

Commands:
    raise-t2i run       Refine one prompt and persist the run
    raise-t2i batch     Refine every prompt of a file and write the efficiency report
    raise-t2i inspect   Narrate a run trace round by round
    raise-t2i replay    Re-execute a sim run and check it reproduces its trace
    raise-t2i report    Recompute the efficiency report from stored traces

Exit status: 0 on a normal termination, 2 when a run terminated with an
error, 1 on configuration, trace or replay errors.

Author: Vladimir K.S.
"""

import functools
import json
import logging
import sys
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Optional, TypeVar

import click
from rich.markup import escape
from rich.table import Table

from . import __version__
from .config import RunConfig, load_config
from .console import console, err_console, setup_logging
from .errors import RaiseError, ReplayDivergence
from .ops.inspect import render_trace
from .ops.metrics import MetricsReport, report_from_run_dirs, report_from_summaries
from .ops.replay import replay_trace
from .ops.store import RunDirectory, RunStore, RunSummary, execute_run, make_run_id
from .ops.trace import read_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_RUN_ERROR = 2

METRICS_FILE = "metrics.json"

F = TypeVar("F", bound=Callable[..., Any])


def handle_errors(command: F) -> F:
    """Turn RaiseError into a red diagnostic and exit status 1."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except RaiseError as e:
            err_console.print(f"[red]Error:[/red] {escape(str(e))}")
            sys.exit(EXIT_FAILURE)

    return wrapper  # type: ignore[return-value]


def config_options(command: F) -> F:
    """Options shared by run and batch."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="RunConfig document (JSON or YAML)",
        ),
        click.option(
            "--out",
            type=click.Path(file_okay=False, path_type=Path),
            default=Path("runs"),
            show_default=True,
            help="Run store directory",
        ),
        click.option("--seed", type=click.IntRange(min=0), help="Override run_seed"),
        click.option("--parallelism", type=click.IntRange(min=1), help="Override parallelism"),
        click.option(
            "--backend-profile",
            type=click.Choice(["real", "sim"], case_sensitive=False),
            help="Override backend_profile",
        ),
        click.option(
            "--force-rounds",
            type=click.IntRange(min=1),
            help="Run exactly N rounds (disables adaptive stopping)",
        ),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def resolve_config(
    config_path: Optional[Path],
    seed: Optional[int],
    parallelism: Optional[int],
    backend_profile: Optional[str],
    force_rounds: Optional[int],
) -> RunConfig:
    config = load_config(config_path)
    return config.with_overrides(
        run_seed=seed,
        parallelism=parallelism,
        backend_profile=backend_profile.lower() if backend_profile else None,
        force_rounds=force_rounds,
    )


def summary_table(summaries: list[RunSummary], title: str) -> Table:
    table = Table(title=title)
    table.add_column("Run", style="cyan")
    table.add_column("Termination")
    table.add_column("Rounds", justify="right")
    table.add_column("Samples", justify="right", style="yellow")
    table.add_column("Agent calls", justify="right", style="yellow")
    table.add_column("Best fitness", justify="right", style="green")
    for summary in summaries:
        kind = summary.termination.kind.value
        fitness = summary.global_best_fitness
        table.add_row(
            summary.run_id,
            f"[red]{kind}[/red]" if summary.termination.is_error else kind,
            str(summary.rounds),
            str(summary.total_samples),
            str(summary.total_agent_calls),
            "-" if fitness is None else f"{fitness:.4f}",
        )
    return table


def report_table(report: MetricsReport) -> Table:
    table = Table(title=f"Efficiency over {report.runs} run(s)")
    table.add_column("Scope", style="cyan")
    table.add_column("Runs", justify="right")
    table.add_column("Avg. samples", justify="right", style="yellow")
    table.add_column("Avg. agent calls", justify="right", style="yellow")
    table.add_row(
        "all", str(report.runs), f"{report.avg_samples:.2f}", f"{report.avg_agent_calls:.2f}"
    )
    for name, stats in report.categories.items():
        table.add_row(
            escape(name), str(stats.runs), f"{stats.avg_samples:.2f}", f"{stats.avg_agent_calls:.2f}"
        )
    return table


def read_prompts(path: Path) -> list[tuple[Optional[str], str]]:
    """
    One prompt per line; ``category<TAB>prompt`` tags a category. Blank lines are skipped.

    Raises:
        RaiseError: If the file cannot be read as UTF-8 text or holds no prompt
    """
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise RaiseError(f"cannot read prompts file {path}: {e}") from e
    prompts: list[tuple[Optional[str], str]] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if "\t" in line:
            category, prompt = line.split("\t", 1)
            prompts.append((category.strip() or None, prompt.strip()))
        else:
            prompts.append((None, line.strip()))
    if not prompts:
        raise RaiseError(f"prompts file {path} is empty")
    return prompts


# ====================
# Commands
# ====================


@click.group()
@click.version_option(version=__version__, prog_name="RAISE-T2I")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool) -> None:
    """
    RAISE-T2I - requirement-adaptive evolutionary refinement for text-to-image.

    Each round extracts a requirement checklist from the prompt, mutates the
    best image so far (resample, prompt rewrite, instructional edit), scores
    and selects, and verifies the round's best against binary questions.
    Runs stop as soon as the requirements are met.

    \b
    Examples:
        raise-t2i run --prompt "a bear above two red clocks" --backend-profile sim
        raise-t2i batch --prompts-file prompts.txt --config sim.json
        raise-t2i inspect runs/<run-id>/trace.jsonl
        raise-t2i replay runs/<run-id>/trace.jsonl
        raise-t2i report runs
    """
    ctx.ensure_object(dict)
    setup_logging(verbose)


@cli.command()
@click.option("--prompt", required=True, help="The user prompt to refine")
@config_options
@handle_errors
def run(
    prompt: str,
    config_path: Optional[Path],
    out: Path,
    seed: Optional[int],
    parallelism: Optional[int],
    backend_profile: Optional[str],
    force_rounds: Optional[int],
) -> None:
    """
    Refine one prompt and persist the run under --out.

    \b
    Examples:
        raise-t2i run --prompt "a photo of a cat" --config real.yaml
        raise-t2i run --prompt "a photo of a cat" --backend-profile sim --force-rounds 4
    """
    config = resolve_config(config_path, seed, parallelism, backend_profile, force_rounds)
    run_dir = RunStore(out).create(make_run_id(prompt, config.run_seed))
    state, summary = execute_run(prompt, config, run_dir)

    console.print(summary_table([summary], "Run"))
    console.print(f"Run directory: {run_dir.path}")
    if state.termination is not None and state.termination.is_error:
        err_console.print(f"[red]Run ended with an error:[/red] {escape(str(state.termination.detail))}")
        sys.exit(EXIT_RUN_ERROR)


@cli.command()
@click.option(
    "--prompts-file",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="One prompt per line (optionally category<TAB>prompt)",
)
@click.option(
    "--concurrency",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Prompts run at once",
)
@config_options
@handle_errors
def batch(
    prompts_file: Path,
    concurrency: int,
    config_path: Optional[Path],
    out: Path,
    seed: Optional[int],
    parallelism: Optional[int],
    backend_profile: Optional[str],
    force_rounds: Optional[int],
) -> None:
    """
    Refine every prompt of a file and write metrics.json under --out.

    A failing prompt is reported and does not stop the batch.

    \b
    Examples:
        raise-t2i batch --prompts-file prompts.txt --backend-profile sim
    """
    config = resolve_config(config_path, seed, parallelism, backend_profile, force_rounds)
    prompts = read_prompts(prompts_file)
    store = RunStore(out)
    run_dirs = [
        store.create(make_run_id(prompt, config.run_seed, index))
        for index, (_, prompt) in enumerate(prompts)
    ]

    def one(index: int) -> Optional[RunSummary]:
        category, prompt = prompts[index]
        try:
            return execute_run(prompt, config, run_dirs[index], category=category)[1]
        except RaiseError as e:
            err_console.print(f"[red]Prompt {index} failed:[/red] {escape(str(e))}")
            return None
        except Exception as e:
            logger.exception("prompt %d failed unexpectedly", index)
            err_console.print(f"[red]Prompt {index} failed:[/red] {escape(repr(e))}")
            return None

    with ThreadPoolExecutor(max_workers=concurrency, thread_name_prefix="raise-batch") as pool:
        results = list(pool.map(one, range(len(prompts))))
    summaries = [s for s in results if s is not None]

    if summaries:
        report = report_from_summaries(summaries)
        (out / METRICS_FILE).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        console.print(summary_table(summaries, "Batch"))
        console.print(report_table(report))
    if len(summaries) < len(prompts) or any(s.termination.is_error for s in summaries):
        sys.exit(EXIT_RUN_ERROR)


@cli.command()
@click.argument("trace", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@handle_errors
def inspect(trace: Path) -> None:
    """
    Narrate a run trace round by round.

    A truncated trace is narrated up to the damage, followed by a warning.
    """
    render_trace(read_trace(trace, strict=False), console)


@cli.command()
@click.argument("trace", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Config to replay under (default: the run directory's config.json)",
)
@click.option("--seed", type=click.IntRange(min=0), help="Override run_seed")
@handle_errors
def replay(trace: Path, config_path: Optional[Path], seed: Optional[int]) -> None:
    """
    Re-execute a sim run and require the identical trace (wall-clock fields masked).

    \b
    Examples:
        raise-t2i replay runs/<run-id>/trace.jsonl
        raise-t2i replay runs/<run-id>/trace.jsonl --seed 8    # diverges
    """
    if config_path is not None:
        config = load_config(config_path, environ={})
    else:
        config = RunDirectory(trace.parent).read_config()
    config = config.with_overrides(run_seed=seed)
    try:
        replay_trace(trace, config)
    except ReplayDivergence as e:
        err_console.print(f"[red]Replay diverged[/red] at event #{e.sequence} ({e.kind}): {escape(e.detail)}")
        sys.exit(EXIT_FAILURE)
    console.print(f"[green]✓[/green] Replay reproduced {trace}")


@cli.command()
@click.argument("out", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--format",
    "output_format",
    type=click.Choice(["table", "json"], case_sensitive=False),
    default="table",
    help="Output format",
)
@handle_errors
def report(out: Path, output_format: str) -> None:
    """Recompute the efficiency report from every trace under OUT."""
    metrics = report_from_run_dirs(RunStore(out).runs())
    if output_format == "json":
        click.echo(json.dumps(metrics.model_dump(mode="json"), indent=2))
    else:
        console.print(report_table(metrics))


def main() -> None:
    """Main entry point for CLI."""
    try:
        cli(obj={})
    except RaiseError as e:
        err_console.print(f"[red]Error:[/red] {escape(str(e))}")
        sys.exit(EXIT_FAILURE)


if __name__ == "__main__":
    main()
