"""Composition of client protocols and bounded exploration.

The composition language has three operators over protocols: sequence
(``a . b``), nondeterministic choice (``a + b``, committed by the first
step, internal steps included), and dependency-constrained parallel
(``a ||[deps] b``). Parentheses are required when operators are mixed.

The parallel operator carries a set of oriented label dependencies that
gates execution:

* a label currently dominated by any dependency in the set is blocked;
* a non-dominated label that dominates others fires and removes every
  dependency it dominates, unless the label sits on a cycle of its
  protocol, in which case the set is kept (the loop may run again);
* a label in no dependency fires freely.

Client protocols take internal steps on their own and synchronize
emissions and receptions with service protocols (synchronous, binary).
When no services are given the system is open: event labels fire without a
partner and receptions bind nothing. That open mode is what makes an
unconstrained parallel composition produce exactly the interleavings of
its operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .dependency import DependencyError, LabelDependency, dependency_key
from .model import Protocol, QualifiedLabel, label_in_loop
from .verification import label_dependency_verification
from .semantics import (
    ActiveState,
    CommEvent,
    Emit,
    Environment,
    Internal,
    Receive,
    SystemConfig,
    TauEvent,
    communicate,
    compatible,
    initial_active,
    step_protocol,
    step_system,
)


class CompositionSyntaxError(ValueError):
    """Raised for malformed composition expression text."""


class CompositionError(ValueError):
    """Raised for expressions that do not fit the scenario's protocols."""


class VerificationGateError(RuntimeError):
    """Raised when exploring a composition whose dependency set is flagged."""

    def __init__(self, reports):
        self.reports = reports
        names = ", ".join(
            f"{f.first} / {f.second} ({f.kind.value})" for _, r in reports for f in r.flagged
        )
        super().__init__(f"dependency set flagged as deadlocking: {names}")


## Expression AST


@dataclass(frozen=True)
class Leaf:
    protocol_id: str


@dataclass(frozen=True)
class Seq:
    left: "CompositionExpression"
    right: "CompositionExpression"


@dataclass(frozen=True)
class Choice:
    left: "CompositionExpression"
    right: "CompositionExpression"


@dataclass(frozen=True)
class Par:
    left: "CompositionExpression"
    right: "CompositionExpression"
    deps: tuple[LabelDependency, ...] = ()
    ref: str = ""  # dependency file reference as written in the source text


CompositionExpression = Union[Leaf, Seq, Choice, Par]


def leaf_ids(expr: CompositionExpression) -> list[str]:
    if isinstance(expr, Leaf):
        return [expr.protocol_id]
    return leaf_ids(expr.left) + leaf_ids(expr.right)


def par_nodes(expr: CompositionExpression) -> list[Par]:
    """All parallel nodes, left to right."""
    if isinstance(expr, Leaf):
        return []
    found = par_nodes(expr.left) + par_nodes(expr.right)
    if isinstance(expr, Par):
        found.append(expr)
    return found


def map_pars(
    expr: CompositionExpression, fn: Callable[["Par"], "Par"]
) -> CompositionExpression:
    if isinstance(expr, Leaf):
        return expr
    left = map_pars(expr.left, fn)
    right = map_pars(expr.right, fn)
    if isinstance(expr, Par):
        return fn(Par(left, right, expr.deps, expr.ref))
    return type(expr)(left, right)


def inject_dependencies(
    expr: CompositionExpression, deps: Sequence[LabelDependency]
) -> CompositionExpression:
    """Attach dependencies to the parallel nodes whose operands they span.

    Each dependency must relate a label under one operand of some parallel
    node with a label under the other operand.
    """
    remaining = set(deps)

    def place(par: Par) -> Par:
        left_ids = set(leaf_ids(par.left))
        right_ids = set(leaf_ids(par.right))
        mine = [
            d
            for d in deps
            if (d.dominant.protocol_id in left_ids and d.dominated.protocol_id in right_ids)
            or (d.dominant.protocol_id in right_ids and d.dominated.protocol_id in left_ids)
        ]
        remaining.difference_update(mine)
        merged = sorted(set(par.deps) | set(mine), key=dependency_key)
        return Par(par.left, par.right, tuple(merged), par.ref)

    out = map_pars(expr, place)
    if remaining:
        rest = ", ".join(sorted(str(d) for d in remaining))
        raise CompositionError(f"dependencies span no parallel operator: {rest}")
    return out


## Expression text

# expr := operand (op operand)*   with a single operator kind per level
# operand := IDENT | '(' expr ')'
# op := '.' | '+' | '||[' ref? ']'


def parse_composition(
    text: str,
    deps_loader: Optional[Callable[[str], tuple[LabelDependency, ...]]] = None,
) -> CompositionExpression:
    tokens = _comp_tokenize(text)
    expr, pos = _parse_level(tokens, 0, text, deps_loader)
    if pos != len(tokens):
        raise CompositionSyntaxError(f"trailing input in composition: {text!r}")
    return expr


def _parse_level(tokens, pos, text, deps_loader):
    operands = []
    ops = []
    operand, pos = _parse_operand(tokens, pos, text, deps_loader)
    operands.append(operand)
    while pos < len(tokens) and tokens[pos][0] in (".", "+", "par"):
        kind, payload = tokens[pos]
        ops.append((kind, payload))
        pos += 1
        operand, pos = _parse_operand(tokens, pos, text, deps_loader)
        operands.append(operand)
    kinds = {k for k, _ in ops}
    if len(kinds) > 1:
        raise CompositionSyntaxError(
            f"mixed operators need parentheses: {text!r}"
        )
    expr = operands[0]
    for (kind, payload), operand in zip(ops, operands[1:]):
        if kind == ".":
            expr = Seq(expr, operand)
        elif kind == "+":
            expr = Choice(expr, operand)
        else:
            deps: tuple[LabelDependency, ...] = ()
            if payload:
                if deps_loader is None:
                    raise CompositionSyntaxError(
                        f"no way to resolve dependency reference {payload!r}"
                    )
                deps = tuple(sorted(deps_loader(payload), key=dependency_key))
            expr = Par(expr, operand, deps, payload)
    return expr, pos


def _parse_operand(tokens, pos, text, deps_loader):
    if pos >= len(tokens):
        raise CompositionSyntaxError(f"unexpected end of composition: {text!r}")
    kind, payload = tokens[pos]
    if kind == "ident":
        return Leaf(payload), pos + 1
    if kind == "(":
        expr, pos = _parse_level(tokens, pos + 1, text, deps_loader)
        if pos >= len(tokens) or tokens[pos][0] != ")":
            raise CompositionSyntaxError(f"missing closing parenthesis: {text!r}")
        return expr, pos + 1
    raise CompositionSyntaxError(f"unexpected {payload!r} in composition: {text!r}")


def _comp_tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "().+":
            tokens.append((ch, ch))
            i += 1
        elif text.startswith("||[", i):
            j = text.find("]", i + 3)
            if j < 0:
                raise CompositionSyntaxError(f"unterminated '||[' in {text!r}")
            tokens.append(("par", text[i + 3 : j].strip()))
            i = j + 1
        elif ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_-"):
                j += 1
            tokens.append(("ident", text[i:j]))
            i = j
        else:
            raise CompositionSyntaxError(f"unexpected character {ch!r} in {text!r}")
    return tokens


def format_composition(expr: CompositionExpression) -> str:
    """Canonical text form; every composite operand is parenthesized."""

    def wrap(sub: CompositionExpression) -> str:
        rendered = format_composition(sub)
        return rendered if isinstance(sub, Leaf) else f"({rendered})"

    if isinstance(expr, Leaf):
        return expr.protocol_id
    if isinstance(expr, Seq):
        return f"{wrap(expr.left)} . {wrap(expr.right)}"
    if isinstance(expr, Choice):
        return f"{wrap(expr.left)} + {wrap(expr.right)}"
    return f"{wrap(expr.left)} ||[{expr.ref}] {wrap(expr.right)}"


## Composition state


@dataclass(frozen=True)
class CLeaf:
    active: ActiveState


@dataclass(frozen=True)
class CSeq:
    left: "CompositionState"
    right: "CompositionState"


@dataclass(frozen=True)
class CChoice:
    left: "CompositionState"
    right: "CompositionState"


@dataclass(frozen=True)
class CPar:
    left: "CompositionState"
    right: "CompositionState"
    deps: tuple[LabelDependency, ...]


CompositionState = Union[CLeaf, CSeq, CChoice, CPar]


def build_state(
    expr: CompositionExpression,
    protocols: Mapping[str, Protocol],
    envs: Optional[Mapping[str, Environment]] = None,
) -> CompositionState:
    envs = envs or {}
    if isinstance(expr, Leaf):
        try:
            protocol = protocols[expr.protocol_id]
        except KeyError:
            raise CompositionError(f"unknown protocol {expr.protocol_id!r}") from None
        return CLeaf(initial_active(protocol, envs.get(expr.protocol_id)))
    left = build_state(expr.left, protocols, envs)
    right = build_state(expr.right, protocols, envs)
    if isinstance(expr, Seq):
        return CSeq(left, right)
    if isinstance(expr, Choice):
        return CChoice(left, right)
    return CPar(left, right, tuple(sorted(expr.deps, key=dependency_key)))


def all_final(state: CompositionState) -> bool:
    if isinstance(state, CLeaf):
        return state.active.at_final
    if isinstance(state, CChoice):
        return all_final(state.left) or all_final(state.right)
    return all_final(state.left) and all_final(state.right)


def remove_dependencies(
    label: QualifiedLabel, deps: Iterable[LabelDependency]
) -> tuple[LabelDependency, ...]:
    """Drop every dependency the label dominates."""
    return tuple(d for d in deps if d.dominant != label)


## Step enumeration


@dataclass
class _Move:
    current: ActiveState
    successor: ActiveState
    action: object  # semantics.Action
    qlabel: QualifiedLabel
    rebuild: Callable[[ActiveState], CompositionState]


@dataclass(frozen=True)
class BlockedLabel:
    label: QualifiedLabel
    blocking: tuple[LabelDependency, ...]


@dataclass(frozen=True)
class StepTag:
    """Identity of one composition step, stable across runs."""

    kind: str  # "tau" | "com" | "open"
    fired: tuple[QualifiedLabel, ...]
    operation: Optional[str]
    description: str

    def sort_key(self) -> tuple:
        return (self.kind, tuple(str(q) for q in self.fired), self.operation or "")

    def __str__(self) -> str:
        return self.description


Config = tuple  # (CompositionState, SystemConfig)


def _enumerate_client_moves(
    state: CompositionState,
) -> tuple[list[_Move], list[BlockedLabel]]:
    if isinstance(state, CLeaf):
        moves = []
        for action, successor in step_protocol(state.active):
            qlabel = QualifiedLabel(state.active.protocol.id, action.label_id)
            moves.append(_Move(state.active, successor, action, qlabel, CLeaf))
        return moves, []

    if isinstance(state, CSeq):
        moves, blocked = _enumerate_client_moves(state.left)
        wrapped = [
            _rewire(m, lambda a, m=m: CSeq(m.rebuild(a), state.right)) for m in moves
        ]
        if all_final(state.left):
            # The left operand finished; its continuation is discarded when
            # the right side takes its first step.
            right_moves, right_blocked = _enumerate_client_moves(state.right)
            wrapped.extend(right_moves)
            blocked = blocked + right_blocked
        return wrapped, blocked

    if isinstance(state, CChoice):
        left_moves, left_blocked = _enumerate_client_moves(state.left)
        right_moves, right_blocked = _enumerate_client_moves(state.right)
        # Any first step, internal ones included, commits the choice.
        return left_moves + right_moves, left_blocked + right_blocked

    assert isinstance(state, CPar)
    out: list[_Move] = []
    blocked: list[BlockedLabel] = []
    for side in ("left", "right"):
        sub = state.left if side == "left" else state.right
        moves, sub_blocked = _enumerate_client_moves(sub)
        blocked.extend(sub_blocked)
        for move in moves:
            dominating = tuple(d for d in state.deps if d.dominated == move.qlabel)
            if dominating:
                blocked.append(BlockedLabel(move.qlabel, dominating))
                continue
            if any(d.dominant == move.qlabel for d in state.deps):
                if label_in_loop(move.qlabel.label_id, move.current.protocol):
                    new_deps = state.deps
                else:
                    new_deps = remove_dependencies(move.qlabel, state.deps)
            else:
                new_deps = state.deps
            if side == "left":
                out.append(
                    _rewire(
                        move,
                        lambda a, m=move, nd=new_deps: CPar(m.rebuild(a), state.right, nd),
                    )
                )
            else:
                out.append(
                    _rewire(
                        move,
                        lambda a, m=move, nd=new_deps: CPar(state.left, m.rebuild(a), nd),
                    )
                )
    return out, blocked


def _rewire(move: _Move, rebuild: Callable[[ActiveState], CompositionState]) -> _Move:
    return _Move(move.current, move.successor, move.action, move.qlabel, rebuild)


def _digest_active(active: ActiveState) -> str:
    return f"{active.protocol.id}@{active.state}{active.env.bindings!r}"


def _digest_tree(state: CompositionState) -> str:
    if isinstance(state, CLeaf):
        return _digest_active(state.active)
    tag = {CSeq: "seq", CChoice: "choice", CPar: "par"}[type(state)]
    inner = f"{_digest_tree(state.left)},{_digest_tree(state.right)}"
    if isinstance(state, CPar):
        deps = ";".join(str(d) for d in state.deps)
        return f"par({inner})[{deps}]"
    return f"{tag}({inner})"


def _digest_services(services: SystemConfig) -> str:
    return "|".join(_digest_active(a) for a in services.actives)


def describe_config(config: "Config") -> str:
    """Short human-readable position summary, e.g. ``ac@a3 mc@m3 | es@e3``."""
    tree, services = config
    actives: list[ActiveState] = []

    def collect(state: CompositionState) -> None:
        if isinstance(state, CLeaf):
            actives.append(state.active)
        else:
            collect(state.left)
            collect(state.right)

    collect(tree)
    left = " ".join(f"{a.protocol.id}@{a.state}" for a in actives)
    right = " ".join(f"{a.protocol.id}@{a.state}" for a in services.actives)
    return f"{left} | {right}" if right else left


def step_composition(
    state: CompositionState, services: SystemConfig
) -> tuple[tuple[StepTag, CompositionState, SystemConfig], ...]:
    successors, _ = enumerate_steps(state, services)
    return successors


def enumerate_steps(
    state: CompositionState, services: SystemConfig
) -> tuple[
    tuple[tuple[StepTag, CompositionState, SystemConfig], ...],
    tuple[BlockedLabel, ...],
]:
    """All successors of a configuration plus the currently gated labels.

    Successors are canonically ordered so repeated enumeration of the same
    configuration yields the same sequence.
    """
    moves, blocked = _enumerate_client_moves(state)
    found: dict[tuple, tuple[StepTag, CompositionState, SystemConfig]] = {}

    def record(tag: StepTag, tree: CompositionState, svc: SystemConfig) -> None:
        key = tag.sort_key() + (_digest_tree(tree), _digest_services(svc))
        found[key] = (tag, tree, svc)

    open_system = not services.actives
    service_steps = {
        a.protocol.id: step_protocol(a) for a in services.actives
    }
    for move in moves:
        if isinstance(move.action, Internal):
            tag = StepTag("tau", (move.qlabel,), None, f"tau {move.qlabel}")
            record(tag, move.rebuild(move.successor), services)
            continue
        if open_system:
            mark = "!" if isinstance(move.action, Emit) else "?"
            tag = StepTag(
                "open",
                (move.qlabel,),
                move.action.operation,
                f"{move.qlabel} {move.action.operation}{mark}",
            )
            record(tag, move.rebuild(move.successor), services)
            continue
        for service in services.actives:
            for saction, ssucc in service_steps[service.protocol.id]:
                if isinstance(move.action, Emit) and isinstance(saction, Receive):
                    if not compatible(move.action, saction):
                        continue
                    snd, rcv = communicate(
                        move.current, move.action, move.successor, service, saction, ssucc
                    )
                    sq = QualifiedLabel(service.protocol.id, saction.label_id)
                    tag = StepTag(
                        "com",
                        (move.qlabel, sq),
                        move.action.operation,
                        f"{move.qlabel} {move.action.operation}! -> {sq}",
                    )
                    record(tag, move.rebuild(snd), services.replace(rcv))
                elif isinstance(move.action, Receive) and isinstance(saction, Emit):
                    if not compatible(saction, move.action):
                        continue
                    snd, rcv = communicate(
                        service, saction, ssucc, move.current, move.action, move.successor
                    )
                    sq = QualifiedLabel(service.protocol.id, saction.label_id)
                    tag = StepTag(
                        "com",
                        (sq, move.qlabel),
                        move.action.operation,
                        f"{sq} {saction.operation}! -> {move.qlabel}",
                    )
                    record(tag, move.rebuild(rcv), services.replace(snd))

    # Services may also progress on their own: internal steps and
    # service-to-service communication.
    if services.actives:
        for event, svc_next in step_system(services):
            if isinstance(event, TauEvent):
                tag = StepTag(
                    "tau",
                    (QualifiedLabel(event.protocol_id, event.label_id),),
                    None,
                    f"tau {event.protocol_id}:{event.label_id}",
                )
            else:
                assert isinstance(event, CommEvent)
                tag = StepTag(
                    "com",
                    (
                        QualifiedLabel(event.sender_id, event.sender_label),
                        QualifiedLabel(event.receiver_id, event.receiver_label),
                    ),
                    event.operation,
                    str(event),
                )
            record(tag, state, svc_next)

    ordered = tuple(found[key] for key in sorted(found))
    dedup_blocked: dict[str, BlockedLabel] = {}
    for b in blocked:
        dedup_blocked.setdefault(str(b.label), b)
    return ordered, tuple(dedup_blocked[k] for k in sorted(dedup_blocked))


## Verification gate


def verify_expression(
    expr: CompositionExpression, protocols: Mapping[str, Protocol]
):
    """Run deadlock verification for every parallel node's dependency set.

    Returns a list of ((first_id, second_id), DeadlockReport) entries, one
    per protocol pair that the node's dependencies relate.
    """
    results = []
    for par in par_nodes(expr):
        groups: dict[tuple[str, str], list[LabelDependency]] = {}
        for dep in par.deps:
            pair = tuple(sorted({dep.dominant.protocol_id, dep.dominated.protocol_id}))
            if len(pair) == 1:
                pair = (pair[0], pair[0])
            groups.setdefault(pair, []).append(dep)
        for (first_id, second_id), deps in sorted(groups.items()):
            try:
                first, second = protocols[first_id], protocols[second_id]
            except KeyError as missing:
                raise DependencyError(f"dependency references unknown protocol {missing}")
            report = label_dependency_verification(first, second, deps)
            results.append(((first_id, second_id), report))
    return results


## Exploration


@dataclass(frozen=True)
class ExplorationResult:
    initial: Config
    states: tuple[Config, ...]
    edges: tuple[tuple[Config, StepTag, Config], ...]
    completions: tuple[Config, ...]
    deadlocks: tuple[Config, ...]
    truncated: bool

    @property
    def state_count(self) -> int:
        return len(self.states)


def _config_final(config: Config) -> bool:
    tree, services = config
    return all_final(tree) and services.all_final


def explore(
    expr: CompositionExpression,
    protocols: Mapping[str, Protocol],
    services: Union[SystemConfig, Sequence[ActiveState]] = (),
    envs: Optional[Mapping[str, Environment]] = None,
    bound: int = 10_000,
    force: bool = False,
) -> ExplorationResult:
    """Breadth-first exploration of a composed system up to ``bound`` states.

    Refuses to run when verification flags the expression's dependency sets,
    unless ``force`` is set.
    """
    reports = verify_expression(expr, protocols)
    flagged = [(pair, r) for pair, r in reports if not r.is_empty]
    if flagged and not force:
        raise VerificationGateError(flagged)

    if not isinstance(services, SystemConfig):
        services = SystemConfig(tuple(services))
    initial: Config = (build_state(expr, protocols, envs), services)
    visited: set[Config] = {initial}
    order: list[Config] = [initial]
    edges: list[tuple[Config, StepTag, Config]] = []
    completions: list[Config] = []
    deadlocks: list[Config] = []
    queue: list[Config] = [initial]
    truncated = False
    head = 0
    while head < len(queue):
        config = queue[head]
        head += 1
        successors, _ = enumerate_steps(config[0], config[1])
        if _config_final(config):
            completions.append(config)
        elif not successors:
            deadlocks.append(config)
        for tag, tree, svc in successors:
            target: Config = (tree, svc)
            edges.append((config, tag, target))
            if target in visited:
                continue
            if len(visited) >= bound:
                truncated = True
                continue
            visited.add(target)
            order.append(target)
            queue.append(target)
    return ExplorationResult(
        initial,
        tuple(order),
        tuple(edges),
        tuple(completions),
        tuple(deadlocks),
        truncated,
    )


def completed_traces(
    result: ExplorationResult, limit: int = 100_000
) -> list[tuple[StepTag, ...]]:
    """All label traces from the initial configuration to a completion.

    Cycles are cut; intended for small exploration graphs in tests.
    """
    by_source: dict[Config, list[tuple[StepTag, Config]]] = {}
    for source, tag, target in result.edges:
        by_source.setdefault(source, []).append((tag, target))
    complete = set(result.completions)
    traces: list[tuple[StepTag, ...]] = []

    def walk(config: Config, trail: tuple[StepTag, ...], on_path: set) -> None:
        if len(traces) >= limit:
            return
        successors = by_source.get(config, [])
        if config in complete and not successors:
            traces.append(trail)
            return
        if config in complete:
            traces.append(trail)
        for tag, target in successors:
            if target in on_path:
                continue
            walk(target, trail + (tag,), on_path | {target})

    walk(result.initial, (), {result.initial})
    return traces


@dataclass(frozen=True)
class TraceStep:
    choice: int
    tag: StepTag


@dataclass(frozen=True)
class TraceResult:
    steps: tuple[TraceStep, ...]
    config: Config
    enabled: tuple[StepTag, ...]
    blocked: tuple[BlockedLabel, ...]
    completed: bool


def run_trace(
    expr: CompositionExpression,
    protocols: Mapping[str, Protocol],
    services: Union[SystemConfig, Sequence[ActiveState]] = (),
    envs: Optional[Mapping[str, Environment]] = None,
    schedule: Sequence[int] = (),
    force: bool = False,
) -> TraceResult:
    """Replay a schedule of successor choices from the initial configuration.

    Enumeration order is the canonical one used by explore, so a schedule
    identifies one concrete run.
    """
    reports = verify_expression(expr, protocols)
    flagged = [(pair, r) for pair, r in reports if not r.is_empty]
    if flagged and not force:
        raise VerificationGateError(flagged)

    if not isinstance(services, SystemConfig):
        services = SystemConfig(tuple(services))
    config: Config = (build_state(expr, protocols, envs), services)
    steps: list[TraceStep] = []
    for position, choice in enumerate(schedule):
        successors, _ = enumerate_steps(config[0], config[1])
        if choice < 0 or choice >= len(successors):
            raise CompositionError(
                f"schedule step {position}: choice {choice} out of range "
                f"({len(successors)} enabled)"
            )
        tag, tree, svc = successors[choice]
        steps.append(TraceStep(choice, tag))
        config = (tree, svc)
    successors, blocked = enumerate_steps(config[0], config[1])
    return TraceResult(
        tuple(steps),
        config,
        tuple(tag for tag, _, _ in successors),
        blocked,
        _config_final(config),
    )
