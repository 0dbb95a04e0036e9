"""
Trace Narrative

Renders a trace round by round: action plan, candidate fitness, round-best,
checklist changes, verifier answers and the termination reason.

Author: Vladimir K.S.
"""

from collections import defaultdict
from typing import Any, Optional

from rich.console import Console
from rich.markup import escape
from rich.table import Table

from .trace import TraceEvent, TraceReadResult


def _fitness(value: Optional[float]) -> str:
    return "[red]failed[/red]" if value is None else f"{value:.4f}"


def _satisfied_texts(round_end: TraceEvent) -> tuple[set[str], set[str]]:
    checklist = round_end.payload.get("checklist")
    if not checklist:
        return set(), set()
    texts = {r["index"]: r["text"] for r in checklist["requirements"]}
    satisfied = {texts[i] for i in checklist["satisfied"] if i in texts}
    unsatisfied = {texts[i] for i in checklist["unsatisfied"] if i in texts}
    return satisfied, unsatisfied


def _render_round(
    console: Console,
    index: int,
    events: list[TraceEvent],
    previous_satisfied: set[str],
) -> set[str]:
    by_kind: dict[str, list[TraceEvent]] = defaultdict(list)
    for event in events:
        by_kind[event.kind].append(event)

    console.rule(f"[bold]Round {index}[/bold]")

    calls = by_kind.get("agent_call", [])
    if calls:
        roles = ", ".join(
            f"{e.payload['role']}" + ("" if e.payload["outcome"] == "ok" else " [red](failed)[/red]")
            for e in calls
        )
        console.print(f"Agent calls: {roles}")

    round_end = by_kind["round_end"][0] if by_kind.get("round_end") else None
    satisfied: set[str] = set()
    if round_end is not None:
        satisfied, unsatisfied = _satisfied_texts(round_end)
        gained = sorted(satisfied - previous_satisfied)
        lost = sorted(previous_satisfied - satisfied)
        console.print(
            f"Checklist: {len(satisfied)} satisfied, {len(unsatisfied)} unsatisfied "
            f"(analyzer: {round_end.payload.get('decision', '?')})"
        )
        for text in gained:
            console.print(f"  [green]+[/green] {escape(text)}")
        for text in lost:
            console.print(f"  [red]-[/red] {escape(text)}")

    for built in by_kind.get("population_built", []):
        plan = ", ".join(f"{n} {kind}" for kind, n in built.payload["plan"].items())
        console.print(f"Action plan: {plan}")

    scores: dict[str, Optional[float]] = {}
    for scored in by_kind.get("candidates_scored", []):
        scores.update({s["candidate"]: s["fitness"] for s in scored.payload["scores"]})
    executed = by_kind.get("candidate_executed", [])
    if executed:
        table = Table(show_header=True, header_style="bold")
        table.add_column("Candidate", style="cyan")
        table.add_column("Fitness", justify="right")
        table.add_column("Note", style="dim")
        for event in executed:
            key = f"r{event.payload['candidate']['round']}_s{event.payload['candidate']['slot']}"
            if event.payload.get("failure"):
                table.add_row(key, "[red]failed[/red]", escape(event.payload["failure"]))
            else:
                table.add_row(key, _fitness(scores.get(key)), "")
        console.print(table)

    for selected in by_kind.get("round_best_selected", []):
        payload = selected.payload
        console.print(
            f"Round best: [bold]{payload['round_best']}[/bold] ({_fitness(payload['round_best_fitness'])}), "
            f"global best: {payload['global_best']} ({_fitness(payload['global_best_fitness'])})"
        )

    for verified in by_kind.get("verifier_result", []):
        verifier: dict[str, Any] = verified.payload["verifier"]
        console.print(f"Verifier ({verified.payload['verification']}):")
        for triplet in verifier["triplets"]:
            mark = "[green]Yes[/green]" if triplet["answer"] == "Yes" else "[red]No[/red]"
            console.print(f"  {mark}  {escape(triplet['question'])}")
        console.print(f"  all satisfied: {verifier['all_satisfied']}")

    if round_end is not None:
        for note in round_end.payload.get("notes", []):
            console.print(f"  [yellow]note:[/yellow] {escape(note)}")
    return satisfied if round_end is not None else previous_satisfied


def render_trace(result: TraceReadResult, console: Console) -> None:
    """Print the narrative of ``result``, then any read warnings."""
    events = result.events
    start = events[0]
    if start.kind == "run_start":
        console.print(f"[bold blue]Prompt:[/bold blue] {escape(start.payload.get('user_prompt', ''))}")

    rounds: dict[int, list[TraceEvent]] = defaultdict(list)
    for event in events:
        if event.round is not None and event.kind not in ("run_start", "run_end"):
            rounds[event.round].append(event)

    satisfied: set[str] = set()
    for index in sorted(rounds):
        satisfied = _render_round(console, index, rounds[index], satisfied)

    end = next((e for e in events if e.kind == "run_end"), None)
    if end is not None:
        payload = end.payload
        termination = payload["termination"]
        console.rule("[bold]Result[/bold]")
        detail = f" ({escape(termination['detail'])})" if termination.get("detail") else ""
        style = "red" if termination["kind"] == "error" else "green"
        console.print(
            f"Termination: [{style}]{termination['kind']}[/{style}] at round "
            f"{termination['round']}{detail}"
        )
        console.print(
            f"Samples: {payload['total_samples']}  Agent calls: {payload['total_agent_calls']}  "
            f"Scorer calls: {payload['total_scorer_calls']}"
        )
        if payload.get("global_best"):
            console.print(
                f"Final image: {payload['global_best']} ({_fitness(payload['global_best_fitness'])})"
            )

    for warning in result.warnings:
        console.print(f"[yellow]Warning:[/yellow] {escape(warning)}")
