"""Command line front end.

Exit codes are script friendly:

* 0  success (for analyze: no candidates; for verify: consistent)
* 1  analyze found candidate pairs
* 2  verify flagged potential deadlocks, or simulate hit them
* 3  bad input of any kind

Every command reads scenario and dependency files; --json switches the
report format on stdout from human text to machine JSON.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path
from typing import Optional

import click

from .composition import (
    CompositionError,
    VerificationGateError,
    completed_traces,
    describe_config,
    enumerate_steps,
    explore,
    inject_dependencies,
    run_trace,
    verify_expression,
)
from .dependency import (
    DependencyError,
    DependencySet,
    LabelPair,
    SelectionError,
    Stage,
    candidate_details,
    dependency_key,
    extended_label_dependencies,
)
from .model import ProtocolError
from .scenario import (
    Scenario,
    ScenarioFormatError,
    candidates_jsonable,
    dependencies_jsonable,
    exploration_jsonable,
    load_scenario,
    merge_reports,
    parse_dependency_set,
    report_jsonable,
    serialize_dependency_set,
    trace_jsonable,
    write_atomic,
)

INPUT_ERRORS = (
    ScenarioFormatError,
    ProtocolError,
    DependencyError,
    SelectionError,
    CompositionError,
    OSError,
)


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(3)


def _load_scenario(path: str) -> Scenario:
    try:
        return load_scenario(path)
    except INPUT_ERRORS as exc:
        raise _fail(str(exc)) from None


def _load_deps(path: str) -> DependencySet:
    try:
        return parse_dependency_set(Path(path).read_bytes())
    except INPUT_ERRORS as exc:
        raise _fail(str(exc)) from None


@click.group()
def main() -> None:
    """Analyze, verify and simulate context-aware service protocols."""


@main.command()
@click.argument("scenario_path", metavar="SCENARIO")
@click.argument("left")
@click.argument("right")
@click.option("-o", "--out", type=click.Path(), help="write candidate pairs to a dependency file")
@click.option("--json", "as_json", is_flag=True, help="print machine-readable JSON")
def analyze(scenario_path: str, left: str, right: str, out: Optional[str], as_json: bool) -> None:
    """Detect candidate dependency pairs between two client protocols.

    Exits 1 when candidates are found, 0 when the protocols share nothing.
    """
    scenario = _load_scenario(scenario_path)
    protocols = scenario.protocol_map()
    for pid in (left, right):
        if pid not in protocols:
            raise _fail(f"no protocol {pid!r} in scenario")
    try:
        candidates = candidate_details(protocols[left], protocols[right], scenario.ontology)
    except ProtocolError as exc:
        raise _fail(str(exc)) from None

    if out:
        deps = DependencySet(
            Stage.CANDIDATES, tuple(LabelPair(c.pair.left, c.pair.right) for c in candidates)
        )
        write_atomic(out, serialize_dependency_set(deps))

    if as_json:
        click.echo(json.dumps(candidates_jsonable(candidates), indent=2))
    else:
        click.echo(f"candidate dependency pairs between {left} and {right}:")
        for index, c in enumerate(candidates):
            click.echo(f"  [{index}] {c.pair.left} ~ {c.pair.right}")
            for m in c.matches:
                click.echo(
                    f"      {m.left_arg} ~ {m.right_arg}  {m.degree.value}  ({m.type})"
                )
        click.echo(f"{len(candidates)} candidate pair(s)")
    sys.exit(1 if candidates else 0)


@main.command()
@click.argument("scenario_path", metavar="SCENARIO")
@click.argument("deps_path", metavar="DEPS")
@click.option("-o", "--out", type=click.Path(), required=True, help="where to write the extended set")
@click.option("--json", "as_json", is_flag=True, help="print machine-readable JSON")
def extend(scenario_path: str, deps_path: str, out: str, as_json: bool) -> None:
    """Close a selected dependency set over the dominant side's history."""
    scenario = _load_scenario(scenario_path)
    deps = _load_deps(deps_path)
    if deps.stage != Stage.SELECTED:
        raise _fail(f"extend expects a selected dependency set, got stage {deps.stage.value!r}")
    protocols = scenario.protocol_map()

    groups: dict[tuple[str, str], list] = {}
    for dep in deps.items:
        key = tuple(sorted({dep.dominant.protocol_id, dep.dominated.protocol_id}))
        if len(key) == 1:
            key = (key[0], key[0])
        groups.setdefault(key, []).append(dep)

    extended = set()
    for (first_id, second_id), group in sorted(groups.items()):
        for pid in (first_id, second_id):
            if pid not in protocols:
                raise _fail(f"dependency references unknown protocol {pid!r}")
        try:
            extended.update(
                extended_label_dependencies(protocols[first_id], protocols[second_id], group)
            )
        except (DependencyError, ProtocolError) as exc:
            raise _fail(str(exc)) from None

    items = tuple(sorted(extended, key=dependency_key))
    write_atomic(out, serialize_dependency_set(DependencySet(Stage.EXTENDED, items)))
    if as_json:
        click.echo(json.dumps(dependencies_jsonable(Stage.EXTENDED, items), indent=2))
    else:
        for dep in items:
            click.echo(str(dep))
        click.echo(f"{len(items)} extended dependencies written to {out}")


@main.command()
@click.argument("scenario_path", metavar="SCENARIO")
@click.argument("deps_path", metavar="DEPS")
@click.option("--json", "as_json", is_flag=True, help="print machine-readable JSON")
def verify(scenario_path: str, deps_path: str, as_json: bool) -> None:
    """Check a dependency set for mutual and crossed deadlocks.

    Exits 2 when any pair is flagged.
    """
    scenario = _load_scenario(scenario_path)
    deps = _load_deps(deps_path)
    if deps.stage == Stage.CANDIDATES:
        raise _fail("verify needs oriented dependencies; this file holds candidates")
    if deps.stage == Stage.SELECTED:
        click.echo(
            "warning: verifying a selected set; extension may add further dependencies",
            err=True,
        )
    try:
        expr = inject_dependencies(scenario.composition, deps.items)
        reports = verify_expression(expr, scenario.protocol_map())
    except (CompositionError, DependencyError, ProtocolError) as exc:
        raise _fail(str(exc)) from None

    merged = merge_reports(reports)
    if as_json:
        payload = report_jsonable(merged)
        payload["reports"] = [
            {"pair": list(pair), "report": report_jsonable(rep)} for pair, rep in reports
        ]
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(f"verification of {len(deps.items)} label dependencies:")
        for item in merged.flagged:
            click.echo(f"  FLAGGED {item.kind.value}: {item.first}  with  {item.second}")
        for warning in merged.chain_warnings:
            click.echo(f"  warning: {warning}")
        if merged.is_empty:
            click.echo("no potential deadlocks")
        else:
            click.echo(f"{len(merged.flagged)} potential deadlock(s) found")
    sys.exit(0 if merged.is_empty else 2)


@main.command()
@click.argument("scenario_path", metavar="SCENARIO")
@click.option("--deps", "deps_path", type=click.Path(), help="dependency file to attach to the composition")
@click.option("--bound", default=10_000, show_default=True, help="state bound for exploration")
@click.option("--trace", "schedule_text", help="comma-separated successor choices to replay")
@click.option("--force", is_flag=True, help="run even when verification flags the composition")
@click.option("--json", "as_json", is_flag=True, help="print machine-readable JSON")
def simulate(
    scenario_path: str,
    deps_path: Optional[str],
    bound: int,
    schedule_text: Optional[str],
    force: bool,
    as_json: bool,
) -> None:
    """Explore the composed system, or replay one run with --trace.

    Exits 2 when exploration finds deadlocks or verification refuses to
    start the run.
    """
    scenario = _load_scenario(scenario_path)
    expr = scenario.composition
    if deps_path:
        deps = _load_deps(deps_path)
        if deps.stage == Stage.CANDIDATES:
            raise _fail("simulate needs oriented dependencies; this file holds candidates")
        try:
            expr = inject_dependencies(expr, deps.items)
        except CompositionError as exc:
            raise _fail(str(exc)) from None

    protocols = scenario.protocol_map()
    services = scenario.service_actives()
    envs = scenario.client_environments()

    schedule: list[int] = []
    if schedule_text:
        try:
            schedule = [int(part) for part in schedule_text.split(",") if part.strip() != ""]
        except ValueError:
            raise _fail(f"bad --trace value {schedule_text!r}") from None

    try:
        if schedule_text is not None:
            result = run_trace(expr, protocols, services, envs, schedule, force=force)
            if as_json:
                click.echo(json.dumps(trace_jsonable(result), indent=2))
            else:
                for position, step in enumerate(result.steps):
                    click.echo(f"step {position + 1}: [{step.choice}] {step.tag.description}")
                click.echo("enabled:")
                for index, tag in enumerate(result.enabled):
                    click.echo(f"  [{index}] {tag.description}")
                if result.blocked:
                    click.echo("blocked:")
                    for item in result.blocked:
                        needs = ", ".join(str(d) for d in item.blocking)
                        click.echo(f"  {item.label} (needs {needs})")
                click.echo(f"completed: {'yes' if result.completed else 'no'}")
            sys.exit(0)
        result = explore(expr, protocols, services, envs, bound=bound, force=force)
    except VerificationGateError as exc:
        merged = merge_reports(exc.reports)
        if as_json:
            click.echo(json.dumps({"refused": True, "verification": report_jsonable(merged)}, indent=2))
        else:
            click.echo("refusing to run: verification flagged this composition", err=True)
            for item in merged.flagged:
                click.echo(f"  FLAGGED {item.kind.value}: {item.first}  with  {item.second}", err=True)
            click.echo("pass --force to simulate anyway", err=True)
        sys.exit(2)
    except CompositionError as exc:
        raise _fail(str(exc)) from None

    if as_json:
        payload = exploration_jsonable(result)
        payload["deadlockDetails"] = [describe_config(c) for c in result.deadlocks[:10]]
        click.echo(json.dumps(payload, indent=2))
    else:
        click.echo(f"explored {result.state_count} configuration(s), {len(result.edges)} transition(s)")
        if result.truncated:
            click.echo(f"exploration truncated at bound {bound}")
        click.echo(f"completions: {len(result.completions)}")
        click.echo(f"deadlocks: {len(result.deadlocks)}")
        for config in result.deadlocks[:3]:
            click.echo(f"  deadlock at {describe_config(config)}")
            _, blocked = enumerate_steps(config[0], config[1])
            for item in blocked:
                needs = ", ".join(str(d) for d in item.blocking)
                click.echo(f"    blocked: {item.label} (needs {needs})")
    sys.exit(2 if result.deadlocks else 0)


@main.command()
@click.argument("scenario_path", metavar="SCENARIO")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(scenario_path: str, host: str, port: int) -> None:
    """Serve the HTTP API with SCENARIO as the default session scenario."""
    path = Path(scenario_path).resolve()
    _load_scenario(str(path))  # validate before binding

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise _fail(f"cannot bind {host}:{port}: {exc}") from None
    finally:
        probe.close()

    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(default_scenario=path), host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
