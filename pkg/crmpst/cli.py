"""
Command-line interface: ``crmpst check | verify | simulate | typecheck | run | semantics``.

Exit codes: 0 clean, 1 diagnostics or violated property, 2 unreadable input,
3 inconclusive verdict or exhausted step budget.
"""
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Tuple

import click
from tabulate import tabulate

from .DEFAULTS import COLOR_ENV, CYCLE_LEN_BOUND, MAX_STEPS, QUEUE_BOUND, STATE_BOUND
from .diagnostics import Diagnostic
from .parsing import ProtocolDecl, ProtocolError, parse_process_script, parse_protocol
from .projection import ProjectionError, project_all
from .registry import SemanticsRegistry
from .rendering import render_local
from .semantics.config_lts import Arrow, Configuration
from .semantics.global_lts import AnnotatedGlobal
from .semantics.session import Exact, Seeded, run_session
from .typecheck import session_diagnostics
from .verifier import (ExplorationBounds, InconsistentQueuesError, Status, Verdict,
                       derive_canonical_config, verify_all)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_IO, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_STATUS_COLOURS = {Status.HOLDS: "green", Status.VIOLATED: "red", Status.INCONCLUSIVE: "yellow"}


def _style(text: str, fg: str) -> str:
    if os.environ.get(COLOR_ENV) == "0":
        return text
    return click.style(text, fg=fg)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        click.echo(f"cannot read {path}: {e.strerror}", err=True)
        sys.exit(EXIT_IO)


def _report(diagnostics: List[Diagnostic], path: str) -> None:
    for d in diagnostics:
        colour = "red" if d.is_error else "yellow"
        click.echo(f"{path}:{_style(str(d), colour)}", err=True)


def _load_protocol(path: str) -> ProtocolDecl:
    try:
        decl = parse_protocol(_read(path))
    except ProtocolError as e:
        _report(e.diagnostics, path)
        sys.exit(EXIT_FAILED)
    _report(list(decl.warnings), path)
    return decl


def _load_session(protocol_path: str, process_path: str):
    decl = _load_protocol(protocol_path)
    try:
        script = parse_process_script(_read(process_path), decl)
    except ProtocolError as e:
        _report(e.diagnostics, process_path)
        sys.exit(EXIT_FAILED)
    return decl, script.session()


def _projections(decl: ProtocolDecl) -> Dict[str, str]:
    try:
        return {role: render_local(t) for role, t in project_all(decl).items()}
    except ProjectionError as e:
        click.echo(_style(f"error [Projection] {e}", "red"), err=True)
        sys.exit(EXIT_FAILED)


def _canonical_config(decl: ProtocolDecl, ann: AnnotatedGlobal) -> Configuration:
    try:
        return derive_canonical_config(ann, decl.reliable, decl.role_names)
    except ProjectionError as e:
        click.echo(_style(f"error [Projection] {e}", "red"), err=True)
    except InconsistentQueuesError as e:
        click.echo(_style(f"error [Queues] {e}", "red"), err=True)
    sys.exit(EXIT_FAILED)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log debug output.")
def cli(verbose: bool) -> None:
    """Crash-stop multiparty session types: projection, verification and runs."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("path", type=click.Path(dir_okay=False))
def check(path: str) -> None:
    """Parse a protocol, check it is well formed and print its projections."""
    decl = _load_protocol(path)
    rows = [[role, text] for role, text in _projections(decl).items()]
    click.echo(tabulate(rows, headers=["Role", "Local type"], tablefmt="simple"))
    sys.exit(EXIT_OK)


def _verdict_code(verdicts: Dict[str, Verdict]) -> int:
    statuses = {v.status for v in verdicts.values()}
    if Status.VIOLATED in statuses:
        return EXIT_FAILED
    if Status.INCONCLUSIVE in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


@cli.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--bound", "queue_bound", default=QUEUE_BOUND, show_default=True, type=click.IntRange(min=1),
              help="Maximum number of messages per channel.")
@click.option("--state-bound", default=STATE_BOUND, show_default=True, type=click.IntRange(min=1))
@click.option("--cycle-bound", default=CYCLE_LEN_BOUND, show_default=True, type=click.IntRange(min=1),
              help="Longest cycle searched for liveness violations.")
@click.option("--threads", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--json", "as_json", is_flag=True, help="Print a JSON report.")
def verify(path: str, queue_bound: int, state_bound: int, cycle_bound: int, threads: int, as_json: bool) -> None:
    """Verify safety, deadlock-freedom, liveness and correspondence of a protocol."""
    decl = _load_protocol(path)
    projections = _projections(decl)
    bounds = ExplorationBounds(queue_bound, state_bound, cycle_bound, threads)
    ann = AnnotatedGlobal.initial(decl.body)
    c0 = _canonical_config(decl, ann)
    verdicts = verify_all(ann, c0, decl.reliable, bounds)

    if as_json:
        report = {
            "protocol": decl.name,
            "reliable": sorted(decl.reliable),
            "projections": projections,
            "checks": {name: verdict.to_dict() for name, verdict in verdicts.items()},
            "bounds": {"queue_bound": queue_bound, "state_bound": state_bound, "cycle_len_bound": cycle_bound},
        }
        click.echo(json.dumps(report, indent=2, ensure_ascii=False))
    else:
        rows = [[name, _style(v.status.value, _STATUS_COLOURS[v.status]), v.reason] for name, v in verdicts.items()]
        click.echo(tabulate(rows, headers=["Check", "Verdict", "Reason"], tablefmt="simple"))
        for name, verdict in verdicts.items():
            if verdict.witness:
                click.echo(f"\n{name} witness:")
                for step in verdict.witness:
                    click.echo(f"  {step.state}")
                    if step.label:
                        click.echo(f"    --{step.label}-->")
    sys.exit(_verdict_code(verdicts))


@cli.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--global", "mode", flag_value="global", default=True, help="Reduce the global type.")
@click.option("--config", "mode", flag_value="config", help="Reduce the projected configuration.")
@click.option("--depth", default=5, show_default=True, type=click.IntRange(min=1))
def simulate(path: str, mode: str, depth: int) -> None:
    """Print the transitions reachable within DEPTH steps."""
    decl = _load_protocol(path)
    ann = AnnotatedGlobal.initial(decl.body)
    if mode == "global":
        system = SemanticsRegistry.create("global", ann, decl.reliable)
    else:
        c0 = _canonical_config(decl, ann)
        system = SemanticsRegistry.create("config", c0, decl.reliable, Arrow.RELIABILITY_AWARE)
    states = {}
    rows = []
    for level, src, label, dst in system.layers(depth):
        for state in (src, dst):
            states.setdefault(system.digest(state), system.render_state(state))
        rows.append([level, system.digest(src), str(label), system.digest(dst)])
    click.echo(tabulate(rows, headers=["Level", "From", "Label", "To"], tablefmt="simple"))
    click.echo()
    click.echo(tabulate(sorted(states.items()), headers=["State", "Term"], tablefmt="simple"))
    sys.exit(EXIT_OK)


@cli.command()
@click.argument("protocol", type=click.Path(dir_okay=False))
@click.argument("procfile", type=click.Path(dir_okay=False))
@click.option("--lax", is_flag=True, help="Accept receive branches the type never takes, with a warning.")
def typecheck(protocol: str, procfile: str, lax: bool) -> None:
    """Check that the processes of PROCFILE are governed by PROTOCOL."""
    decl, session = _load_session(protocol, procfile)
    diagnostics = session_diagnostics(session, AnnotatedGlobal.initial(decl.body), decl.reliable, not lax)
    _report(diagnostics, procfile)
    if any(d.is_error for d in diagnostics):
        sys.exit(EXIT_FAILED)
    click.echo(_style(f"{decl.name}: session is well typed", "green"))
    sys.exit(EXIT_OK)


def _parse_crash(value: str) -> Tuple[int, str]:
    role, sep, step = value.partition("@")
    if not sep or not role or not step.isdigit():
        raise click.BadParameter(f"expected ROLE@STEP, got {value}")
    return int(step), role


@cli.command()
@click.argument("protocol", type=click.Path(dir_okay=False))
@click.argument("procfile", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Seed for random crashes.")
@click.option("--crash", "crashes", multiple=True, metavar="ROLE@STEP", help="Crash ROLE before STEP.")
@click.option("--max-steps", default=MAX_STEPS, show_default=True, type=click.IntRange(min=1))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the trace as JSON to this file.")
@click.option("--json", "as_json", is_flag=True, help="Print the trace as a JSON array.")
@click.option("--check", "checked", is_flag=True, help="Re-type every reduct against the global type.")
def run(protocol: str, procfile: str, seed: Optional[int], crashes: Tuple[str, ...], max_steps: int,
        trace_path: Optional[str], as_json: bool, checked: bool) -> None:
    """Run the processes of PROCFILE, crashing roles as scheduled."""
    decl, session = _load_session(protocol, procfile)
    schedule = None
    if crashes:
        planned = tuple(_parse_crash(c) for c in crashes)
        for _, role in planned:
            if role not in decl.role_names or role in decl.reliable:
                raise click.BadParameter(f"{role} is not an unreliable role", param_hint="--crash")
        try:
            schedule = Exact(planned)
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="--crash")
    elif seed is not None:
        schedule = Seeded(seed)
    governing = AnnotatedGlobal.initial(decl.body) if checked else None
    trace = run_session(session, decl.reliable, schedule, max_steps, governing)

    steps = [step.to_dict() for step in trace.steps]
    if as_json:
        click.echo(json.dumps(steps, indent=2))
    else:
        for step in trace.steps:
            click.echo(f"{step.index:>4}  {step.label}  {step.digest}")
    if trace_path:
        try:
            with open(trace_path, "w", encoding="utf-8") as f:
                json.dump(steps, f, indent=2)
        except OSError as e:
            click.echo(f"cannot write {trace_path}: {e.strerror}", err=True)
            sys.exit(EXIT_IO)

    if trace.untyped_at is not None:
        click.echo(_style(f"reduct {trace.untyped_at} is not typed: {trace.untyped_reason}", "red"), err=True)
        sys.exit(EXIT_FAILED)
    if trace.exhausted:
        click.echo(_style(f"step budget of {max_steps} exhausted", "yellow"), err=True)
        sys.exit(EXIT_INCONCLUSIVE)
    if not trace.conforming:
        click.echo(_style("session is stuck", "red"), err=True)
        sys.exit(EXIT_FAILED)
    sys.exit(EXIT_OK)


@cli.command()
def semantics() -> None:
    """List the registered transition systems."""
    rows = []
    for name in SemanticsRegistry.get_registered_semantics():
        capabilities = SemanticsRegistry.get_capabilities(name)
        rows.append([name, SemanticsRegistry.get_semantics_class(name).__name__,
                     ", ".join(c for c, available in capabilities.items() if available)])
    click.echo(tabulate(rows, headers=["Name", "Class", "Capabilities"], tablefmt="simple"))


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
