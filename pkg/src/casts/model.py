"""Protocol model: labels, transition structure, context profiles, interfaces.

A protocol is a finite transition system over value-passing labels. Each
label is either internal (tau) or an event: a guarded emission or reception
of a payload on a named operation. Context attributes attached to the
protocol's interface describe device or environment state; the dynamic ones
are late bound and show up in expressions as ``~name`` variables.

Labels have stable string identifiers and are compared by identifier, never
by structure. Graph queries (which labels can precede a given one, whether a
label sits on a cycle) are the basis of dependency extension and of the
runtime gating rules, so they are defined here next to the structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .expr import (
    App,
    Expression,
    TRUE,
    Value,
    Var,
    format_expression,
    is_literal,
    static_type,
    variables,
)

EMISSION = "emission"
RECEPTION = "reception"

STATIC = "static"
DYNAMIC = "dynamic"
PUBLIC = "public"
PRIVATE = "private"


class UnknownLabelError(KeyError):
    """Raised when a label identifier does not resolve in a protocol."""


class ProtocolError(ValueError):
    """Raised when an operation is applied to a structurally broken protocol."""


@dataclass(frozen=True)
class Diagnostic:
    """A single validation finding. ``element`` names the offending piece."""

    code: str
    element: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.element}: {self.message}"


@dataclass(frozen=True)
class ContextAttribute:
    name: str
    value: Value
    kind: str  # static or dynamic
    visibility: str  # public or private


@dataclass(frozen=True)
class ContextProfile:
    attributes: tuple[ContextAttribute, ...] = ()

    def get(self, name: str) -> Optional[ContextAttribute]:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None

    def dynamic_names(self) -> frozenset[str]:
        return frozenset(a.name for a in self.attributes if a.kind == DYNAMIC)

    def public_dynamic_names(self) -> frozenset[str]:
        return frozenset(
            a.name
            for a in self.attributes
            if a.kind == DYNAMIC and a.visibility == PUBLIC
        )


@dataclass(frozen=True)
class OperationProfile:
    """Typed view of one operation as it appears in a protocol's labels."""

    name: str
    role: str  # "provided" (received here) or "required" (called from here)
    parameter_types: tuple[str, ...] = ()


@dataclass(frozen=True)
class Signature:
    operations: tuple[OperationProfile, ...] = ()

    def get(self, name: str) -> Optional[OperationProfile]:
        for op in self.operations:
            if op.name == name:
                return op
        return None


@dataclass(frozen=True)
class Label:
    """A transition label.

    kind "tau" has no operation, direction or payload; kind "event" carries
    all three. Emission payloads are expressions, reception payloads must be
    plain variables. The guard defaults to the constant true.
    """

    id: str
    kind: str  # "tau" or "event"
    guard: Expression = TRUE
    operation: Optional[str] = None
    direction: Optional[str] = None
    payload: tuple[Expression, ...] = ()

    @property
    def is_tau(self) -> bool:
        return self.kind == "tau"

    def __str__(self) -> str:
        if self.is_tau:
            return f"{self.id}:tau"
        mark = "!" if self.direction == EMISSION else "?"
        body = ",".join(format_expression(p) for p in self.payload)
        return f"{self.id}:{self.operation}{mark}{body}"


@dataclass(frozen=True)
class Transition:
    source: str
    label_id: str
    target: str


@dataclass(frozen=True)
class QualifiedLabel:
    """A label identifier paired with its protocol identifier."""

    protocol_id: str
    label_id: str

    def __str__(self) -> str:
        return f"{self.protocol_id}:{self.label_id}"

    @classmethod
    def parse(cls, text: str) -> "QualifiedLabel":
        left, sep, right = text.partition(":")
        if not sep or not left or not right:
            raise ValueError(f"expected protocol:label, got {text!r}")
        return cls(left, right)


@dataclass(frozen=True)
class Protocol:
    id: str
    alphabet: tuple[Label, ...]
    states: tuple[str, ...]
    initial: str
    finals: tuple[str, ...]
    transitions: tuple[Transition, ...]
    context_profile: ContextProfile = ContextProfile()
    signature: Signature = Signature()
    # Lazily built adjacency caches; not part of identity.
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def label(self, label_id: str) -> Label:
        table = self._index.get("labels")
        if table is None:
            table = {l.id: l for l in self.alphabet}
            self._index["labels"] = table
        try:
            return table[label_id]
        except KeyError:
            raise UnknownLabelError(f"{self.id}: no label {label_id!r}") from None

    def has_label(self, label_id: str) -> bool:
        try:
            self.label(label_id)
            return True
        except UnknownLabelError:
            return False

    def outgoing(self, state: str) -> tuple[Transition, ...]:
        table = self._index.get("out")
        if table is None:
            table = {}
            for t in self.transitions:
                table.setdefault(t.source, []).append(t)
            table = {s: tuple(ts) for s, ts in table.items()}
            self._index["out"] = table
        return table.get(state, ())

    def qualified(self, label: Union[Label, str]) -> QualifiedLabel:
        label_id = label.id if isinstance(label, Label) else label
        return QualifiedLabel(self.id, label_id)

    def __hash__(self) -> int:
        return hash((self.id, self.initial, len(self.transitions)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Protocol):
            return NotImplemented
        return (
            self.id == other.id
            and self.alphabet == other.alphabet
            and self.states == other.states
            and self.initial == other.initial
            and self.finals == other.finals
            and self.transitions == other.transitions
            and self.context_profile == other.context_profile
            and self.signature == other.signature
        )


## Validation


def validate_protocol(protocol: Protocol) -> list[Diagnostic]:
    """Structural checks. Returns an empty list for a well-formed protocol."""
    out: list[Diagnostic] = []
    where = protocol.id

    states = set(protocol.states)
    if len(states) != len(protocol.states):
        out.append(Diagnostic("dup-state", where, "duplicate state identifiers"))
    if protocol.initial not in states:
        out.append(
            Diagnostic("bad-initial", where, f"initial state {protocol.initial!r} not declared")
        )
    for f in protocol.finals:
        if f not in states:
            out.append(Diagnostic("bad-final", where, f"final state {f!r} not declared"))

    seen_labels: set[str] = set()
    for label in protocol.alphabet:
        lwhere = f"{where}.{label.id}"
        if label.id in seen_labels:
            out.append(Diagnostic("dup-label", lwhere, "duplicate label identifier"))
        seen_labels.add(label.id)
        if label.is_tau:
            if label.operation or label.direction or label.payload:
                out.append(
                    Diagnostic("tau-shape", lwhere, "tau labels carry no operation or payload")
                )
            continue
        if not label.operation:
            out.append(Diagnostic("no-operation", lwhere, "event label without operation"))
        if label.direction not in (EMISSION, RECEPTION):
            out.append(
                Diagnostic("bad-direction", lwhere, f"direction {label.direction!r} unknown")
            )
        if label.direction == RECEPTION:
            for p in label.payload:
                if not isinstance(p, Var):
                    out.append(
                        Diagnostic(
                            "reception-payload",
                            lwhere,
                            "reception payloads must be plain variables",
                        )
                    )
        if label.operation and protocol.signature.operations:
            if protocol.signature.get(label.operation) is None:
                out.append(
                    Diagnostic(
                        "unknown-operation",
                        lwhere,
                        f"operation {label.operation!r} missing from the signature",
                    )
                )

    dynamic = protocol.context_profile.dynamic_names()
    for label in protocol.alphabet:
        lwhere = f"{where}.{label.id}"
        exprs: tuple[Expression, ...] = label.payload + (label.guard,)
        for e in exprs:
            for v in variables(e):
                if v.is_context and v.name not in dynamic:
                    out.append(
                        Diagnostic(
                            "bad-context-var",
                            lwhere,
                            f"~{v.name} does not name a dynamic context attribute",
                        )
                    )

    names = [a.name for a in protocol.context_profile.attributes]
    if len(names) != len(set(names)):
        out.append(Diagnostic("dup-context-attr", where, "duplicate context attribute names"))
    for attr in protocol.context_profile.attributes:
        if attr.kind not in (STATIC, DYNAMIC):
            out.append(
                Diagnostic("bad-attr-kind", f"{where}.{attr.name}", f"kind {attr.kind!r} unknown")
            )
        if attr.visibility not in (PUBLIC, PRIVATE):
            out.append(
                Diagnostic(
                    "bad-attr-visibility",
                    f"{where}.{attr.name}",
                    f"visibility {attr.visibility!r} unknown",
                )
            )

    provided = [o.name for o in protocol.signature.operations if o.role == "provided"]
    required = [o.name for o in protocol.signature.operations if o.role == "required"]
    overlap = set(provided) & set(required)
    if overlap:
        out.append(
            Diagnostic(
                "signature-overlap",
                where,
                f"operations both provided and required: {sorted(overlap)}",
            )
        )

    for t in protocol.transitions:
        twhere = f"{where}.{t.source}->{t.target}"
        if t.source not in states or t.target not in states:
            out.append(Diagnostic("bad-endpoint", twhere, "transition endpoint not declared"))
        if not any(l.id == t.label_id for l in protocol.alphabet):
            out.append(
                Diagnostic("bad-transition-label", twhere, f"label {t.label_id!r} not in alphabet")
            )
    return out


def require_valid(protocol: Protocol) -> None:
    problems = validate_protocol(protocol)
    if problems:
        detail = "; ".join(str(p) for p in problems)
        raise ProtocolError(f"protocol {protocol.id} is not well formed: {detail}")


## Label queries


def arguments(label: Label) -> list[Expression]:
    """Payload of an event label. Tau labels have no arguments."""
    if label.is_tau:
        raise ProtocolError(f"tau label {label.id} has no arguments")
    return list(label.payload)


def infer_signature(protocol: Protocol) -> Signature:
    """Derive the operation signature from the label typing.

    Emissions become required operations, receptions provided ones.
    """
    ops: dict[tuple[str, str], tuple[str, ...]] = {}
    for label in protocol.alphabet:
        if label.is_tau or not label.operation:
            continue
        role = "required" if label.direction == EMISSION else "provided"
        types = tuple(static_type(p) for p in label.payload)
        ops.setdefault((label.operation, role), types)
    profiles = [
        OperationProfile(name, role, types) for (name, role), types in sorted(ops.items())
    ]
    return Signature(tuple(profiles))


## Graph queries


def _resolve(label: Union[Label, str], protocol: Protocol) -> Label:
    if isinstance(label, Label):
        if not protocol.has_label(label.id):
            raise UnknownLabelError(f"{protocol.id}: no label {label.id!r}")
        return protocol.label(label.id)
    return protocol.label(label)


def _forward_reachable(protocol: Protocol, start: str) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        state = stack.pop()
        for t in protocol.outgoing(state):
            if t.target not in seen:
                seen.add(t.target)
                stack.append(t.target)
    return seen


def _backward_reachable(protocol: Protocol, targets: Iterable[str]) -> set[str]:
    incoming: dict[str, list[str]] = {}
    for t in protocol.transitions:
        incoming.setdefault(t.target, []).append(t.source)
    seen = set(targets)
    stack = list(seen)
    while stack:
        state = stack.pop()
        for src in incoming.get(state, ()):
            if src not in seen:
                seen.add(src)
                stack.append(src)
    return seen


def previous_labels(label: Union[Label, str], protocol: Protocol) -> frozenset[Label]:
    """Labels that can occur strictly before ``label`` on some run.

    A label l' qualifies when one of its transitions both is reachable from
    the initial state and leads to a state from which a transition labelled
    ``label`` can still be taken. The label itself is included only when an
    occurrence of it can precede another occurrence (that is, it lies on a
    path back to one of its own source states).
    """
    target = _resolve(label, protocol)
    sources = {t.source for t in protocol.transitions if t.label_id == target.id}
    if not sources:
        return frozenset()
    reach = _forward_reachable(protocol, protocol.initial)
    can_reach_source = _backward_reachable(protocol, sources)
    found: set[str] = set()
    for t in protocol.transitions:
        if t.source in reach and t.target in can_reach_source:
            found.add(t.label_id)
    return frozenset(protocol.label(lid) for lid in found)


def label_in_loop(label: Union[Label, str], protocol: Protocol) -> bool:
    """True when some cycle of the transition graph contains the label."""
    target = _resolve(label, protocol)
    for t in protocol.transitions:
        if t.label_id != target.id:
            continue
        if t.source in _forward_reachable(protocol, t.target):
            return True
    return False
