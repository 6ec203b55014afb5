"""Operational semantics: environments, evaluation, protocol and system steps.

Evaluation is split in two stages. Regular variables are resolved when a
transition fires (emissions ship the resulting expression), while dynamic
context variables stay symbolic until the moment a receiver needs a ground
value. That staging is what gives context attributes their late-binding
behaviour: an emitted payload mentioning ``~loc`` picks up the sender's
location as it is when the communication happens, not when the emission
became enabled.

Communication is synchronous and binary: one emitter, one receiver, same
operation name, componentwise equal payload types. Only the receiver's
environment changes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .expr import (
    App,
    BUILTINS,
    EvaluationError,
    Expression,
    Value,
    Var,
    format_expression,
    format_value,
    is_literal,
    lit,
    literal_value,
    reduce_builtin,
    static_type,
    variables,
)
from .model import EMISSION, PUBLIC, Protocol

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Environment:
    """An immutable variable store, ordered by name for stable hashing."""

    bindings: tuple[tuple[str, Value], ...] = ()

    @classmethod
    def from_dict(cls, values: Mapping[str, Value]) -> "Environment":
        return cls(tuple(sorted(values.items())))

    def lookup(self, name: str) -> Value:
        for key, value in self.bindings:
            if key == name:
                return value
        raise EvaluationError(f"variable {name!r} is not bound")

    def bound(self, name: str) -> bool:
        return any(key == name for key, _ in self.bindings)

    def overload(self, name: str, value: Value) -> "Environment":
        """Bind or rebind one variable, returning the updated environment."""
        kept = tuple((k, v) for k, v in self.bindings if k != name)
        return Environment(tuple(sorted(kept + ((name, value),))))

    def as_dict(self) -> dict[str, Value]:
        return dict(self.bindings)

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={format_value(v)}" for k, v in self.bindings)
        return f"{{{inner}}}"


def overload(env: Environment, name: str, value: Value) -> Environment:
    return env.overload(name, value)


def dynamic_update(env: Environment, var: Var, value: Value) -> Environment:
    """Change a dynamic context attribute. Regular variables are rejected."""
    if not var.is_context:
        raise EvaluationError(f"{var.name} is not a dynamic context attribute")
    return env.overload(var.name, value)


## Evaluation


def eval_regular(env: Environment, expr: Expression) -> Expression:
    """Resolve regular variables and reduce ground builtin applications.

    Context variables are left symbolic. Unbound regular variables are an
    error: emissions must never ship open regular terms.
    """
    if isinstance(expr, Var):
        if expr.is_context:
            return expr
        return lit(env.lookup(expr.name))
    if is_literal(expr):
        return expr
    args = tuple(eval_regular(env, a) for a in expr.args)
    if expr.symbol in BUILTINS and all(is_literal(a) for a in args):
        return lit(reduce_builtin(expr.symbol, tuple(literal_value(a) for a in args)))
    # Uninterpreted symbols keep the application with evaluated arguments.
    return App(expr.symbol, args)


def eval_context(env: Environment, expr: Expression) -> Value:
    """Resolve remaining context variables and produce a ground value.

    Meant to run on the output of eval_regular; a surviving regular variable
    means the staging contract was violated.
    """
    if isinstance(expr, Var):
        if not expr.is_context:
            raise EvaluationError(
                f"regular variable {expr.name!r} survived regular evaluation"
            )
        return env.lookup(expr.name)
    if is_literal(expr):
        return literal_value(expr)
    args = tuple(eval_context(env, a) for a in expr.args)
    return reduce_builtin(expr.symbol, args)


def guard_holds(env: Environment, guard: Expression) -> bool:
    """Evaluate a guard: regular variables first, then context variables."""
    value = eval_context(env, eval_regular(env, guard))
    if not isinstance(value, bool):
        raise EvaluationError(
            f"guard {format_expression(guard)} evaluated to non-boolean {value!r}"
        )
    return value


## Protocol steps


@dataclass(frozen=True)
class ActiveState:
    """One protocol instance: structure, current state, environment."""

    protocol: Protocol
    state: str
    env: Environment

    def with_state(self, state: str) -> "ActiveState":
        return ActiveState(self.protocol, state, self.env)

    def with_env(self, env: Environment) -> "ActiveState":
        return ActiveState(self.protocol, self.state, env)

    @property
    def at_final(self) -> bool:
        return self.state in self.protocol.finals

    def __hash__(self) -> int:
        return hash((self.protocol.id, self.state, self.env))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ActiveState):
            return NotImplemented
        return (
            self.protocol.id == other.protocol.id
            and self.state == other.state
            and self.env == other.env
        )


@dataclass(frozen=True)
class Internal:
    label_id: str


@dataclass(frozen=True)
class Emit:
    """An enabled emission. ``values`` is the payload after regular
    evaluation; context variables may still occur and are resolved by the
    receiver at communication time. ``types`` are the declared payload types."""

    label_id: str
    operation: str
    values: tuple[Expression, ...]
    types: tuple[str, ...]


@dataclass(frozen=True)
class Receive:
    label_id: str
    operation: str
    variables: tuple[Var, ...]
    types: tuple[str, ...]


Action = Union[Internal, Emit, Receive]


def step_protocol(active: ActiveState) -> tuple[tuple[Action, ActiveState], ...]:
    """Enabled open steps of one protocol, in canonical order.

    The environment never changes here: receptions bind only at
    communication time, emissions only read.
    """
    out: list[tuple[Action, ActiveState]] = []
    for t in sorted(active.protocol.outgoing(active.state), key=lambda t: (t.label_id, t.target)):
        label = active.protocol.label(t.label_id)
        if not guard_holds(active.env, label.guard):
            continue
        successor = active.with_state(t.target)
        if label.is_tau:
            out.append((Internal(label.id), successor))
            continue
        types = tuple(static_type(p) for p in label.payload)
        if label.direction == EMISSION:
            values = tuple(eval_regular(active.env, p) for p in label.payload)
            out.append((Emit(label.id, label.operation, values, types), successor))
        else:
            out.append(
                (Receive(label.id, label.operation, tuple(label.payload), types), successor)
            )
    return tuple(out)


## Communication


def exported_context(sender: ActiveState) -> Environment:
    """Current values of the sender's public dynamic context attributes."""
    names = sender.protocol.context_profile.public_dynamic_names()
    pairs = {n: sender.env.lookup(n) for n in names if sender.env.bound(n)}
    return Environment.from_dict(pairs)


def communicate(
    sender: ActiveState,
    emit: Emit,
    sender_next: ActiveState,
    receiver: ActiveState,
    receive: Receive,
    receiver_next: ActiveState,
) -> tuple[ActiveState, ActiveState]:
    """Commit a synchronous communication.

    The payload's context variables are resolved against the sender's
    current public dynamic attributes (late binding); the receiver's
    environment is overloaded with the resulting values. The sender's
    environment is untouched. The caller has already checked operation,
    arity and types.
    """
    scope = receiver.env
    for name, value in exported_context(sender).bindings:
        scope = scope.overload(name, value)
    profile = sender.protocol.context_profile
    env = receiver.env
    for var, payload in zip(receive.variables, emit.values):
        for occurrence in variables(payload):
            if not occurrence.is_context:
                continue
            attr = profile.get(occurrence.name)
            if attr is not None and attr.visibility != PUBLIC:
                raise EvaluationError(
                    f"payload of {emit.operation} references private context "
                    f"attribute {occurrence.name!r} of {sender.protocol.id}"
                )
        env = env.overload(var.name, eval_context(scope, payload))
    return sender_next, receiver_next.with_env(env)


def compatible(emit: Emit, receive: Receive) -> bool:
    """Same operation, same arity, componentwise equal declared types."""
    if emit.operation != receive.operation:
        return False
    if len(emit.values) != len(receive.variables):
        log.warning(
            "operation %s: arity mismatch between emission (%d) and reception (%d)",
            emit.operation,
            len(emit.values),
            len(receive.variables),
        )
        return False
    if emit.types != receive.types:
        log.warning(
            "operation %s: payload type mismatch %s vs %s",
            emit.operation,
            list(emit.types),
            list(receive.types),
        )
        return False
    return True


## System of concurrent protocols


@dataclass(frozen=True)
class TauEvent:
    protocol_id: str
    label_id: str

    def sort_key(self) -> tuple:
        return ("tau", self.protocol_id, self.label_id)

    def __str__(self) -> str:
        return f"tau {self.protocol_id}:{self.label_id}"


@dataclass(frozen=True)
class CommEvent:
    sender_id: str
    sender_label: str
    receiver_id: str
    receiver_label: str
    operation: str
    values: tuple[Value, ...]

    def sort_key(self) -> tuple:
        return ("com", self.sender_id, self.sender_label, self.receiver_id, self.receiver_label)

    def __str__(self) -> str:
        rendered = ",".join(format_value(v) for v in self.values)
        return (
            f"{self.sender_id}:{self.sender_label} {self.operation}!{rendered}"
            f" -> {self.receiver_id}:{self.receiver_label}"
        )


SystemEvent = Union[TauEvent, CommEvent]


@dataclass(frozen=True)
class SystemConfig:
    """A set of concurrently active protocol instances with distinct ids."""

    actives: tuple[ActiveState, ...]

    def __post_init__(self) -> None:
        ids = [a.protocol.id for a in self.actives]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate protocol ids in system: {ids}")

    def get(self, protocol_id: str) -> ActiveState:
        for a in self.actives:
            if a.protocol.id == protocol_id:
                return a
        raise KeyError(protocol_id)

    def replace(self, *updated: ActiveState) -> "SystemConfig":
        table = {a.protocol.id: a for a in updated}
        return SystemConfig(tuple(table.get(a.protocol.id, a) for a in self.actives))

    @property
    def all_final(self) -> bool:
        return all(a.at_final for a in self.actives)


def step_system(config: SystemConfig) -> tuple[tuple[SystemEvent, SystemConfig], ...]:
    """Enabled steps of a closed system: internal moves and communications.

    Communication requires two distinct participants; a protocol never
    synchronizes with itself.
    """
    moves: dict[tuple, tuple[SystemEvent, SystemConfig]] = {}
    steps = {a.protocol.id: step_protocol(a) for a in config.actives}
    for active in config.actives:
        for action, successor in steps[active.protocol.id]:
            if isinstance(action, Internal):
                event = TauEvent(active.protocol.id, action.label_id)
                moves[event.sort_key()] = (event, config.replace(successor))
    for sender in config.actives:
        for action, sender_next in steps[sender.protocol.id]:
            if not isinstance(action, Emit):
                continue
            for receiver in config.actives:
                if receiver.protocol.id == sender.protocol.id:
                    continue
                for raction, receiver_next in steps[receiver.protocol.id]:
                    if not isinstance(raction, Receive):
                        continue
                    if not compatible(action, raction):
                        continue
                    committed_sender, committed_receiver = communicate(
                        sender, action, sender_next, receiver, raction, receiver_next
                    )
                    received = tuple(
                        committed_receiver.env.lookup(v.name) for v in raction.variables
                    )
                    event = CommEvent(
                        sender.protocol.id,
                        action.label_id,
                        receiver.protocol.id,
                        raction.label_id,
                        action.operation,
                        received,
                    )
                    moves[event.sort_key()] = (
                        event,
                        config.replace(committed_sender, committed_receiver),
                    )
    return tuple(moves[key] for key in sorted(moves))


def initial_active(protocol: Protocol, env: Optional[Environment] = None) -> ActiveState:
    """Start a protocol instance; the environment defaults to the profile
    attribute values."""
    if env is None:
        env = Environment.from_dict(
            {a.name: a.value for a in protocol.context_profile.attributes}
        )
    return ActiveState(protocol, protocol.initial, env)
