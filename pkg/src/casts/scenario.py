"""Scenario files and the XML formats for protocols, ontologies,
dependency sets and verification reports.

A scenario file (``*.casts.xml``) bundles everything one analysis session
needs: client protocols, service protocols, the domain ontology, the
composition expression, and initial variable bindings. Dependency sets
travel separately (``*.deps.xml``) because they are produced and consumed
at different pipeline stages.

Parsers are strict: a missing required attribute, an unknown element, an
undeclared reference or a version mismatch is an error. The only default
applied is the constant true guard. Serialization is canonical, so
parse/serialize round-trips are byte stable.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

from .composition import (
    CompositionExpression,
    CompositionSyntaxError,
    ExplorationResult,
    TraceResult,
    format_composition,
    leaf_ids,
    parse_composition,
)
from .dependency import (
    Candidate,
    DependencySet,
    LabelDependency,
    LabelPair,
    Stage,
    dependency_key,
)
from .expr import (
    ExpressionError,
    TRUE,
    Value,
    Var,
    format_expression,
    format_value,
    is_literal,
    lit,
    literal_value,
    parse_expression,
    parse_value,
    value_type,
)
from .model import (
    ContextAttribute,
    ContextProfile,
    Label,
    Protocol,
    QualifiedLabel,
    Transition,
    infer_signature,
    validate_protocol,
)
from .ontology import Ontology
from .semantics import ActiveState, Environment, initial_active
from .verification import DeadlockReport, FlaggedPair

FORMAT_VERSION = "1"


class ScenarioFormatError(ValueError):
    """Raised for any malformed input file."""


@dataclass(frozen=True)
class Scenario:
    clients: tuple[Protocol, ...]
    services: tuple[Protocol, ...]
    ontology: Ontology
    composition: CompositionExpression
    binds: tuple[tuple[str, tuple[tuple[str, Value], ...]], ...] = ()
    instances: tuple[tuple[str, int], ...] = ()

    def protocol_map(self) -> dict[str, Protocol]:
        return {p.id: p for p in self.clients + self.services}

    def client(self, protocol_id: str) -> Protocol:
        for p in self.clients:
            if p.id == protocol_id:
                return p
        raise ScenarioFormatError(f"no client protocol {protocol_id!r}")

    def initial_environment(self, protocol: Protocol) -> Environment:
        values = {a.name: a.value for a in protocol.context_profile.attributes}
        for pid, pairs in self.binds:
            if pid == protocol.id:
                values.update(pairs)
        return Environment.from_dict(values)

    def client_environments(self) -> dict[str, Environment]:
        return {p.id: self.initial_environment(p) for p in self.clients}

    def service_actives(self) -> list[ActiveState]:
        """Service instances ready to run; ids get a #n suffix when a
        service is instantiated more than once."""
        out: list[ActiveState] = []
        counts = dict(self.instances)
        for protocol in self.services:
            n = counts.get(protocol.id, 1)
            for k in range(n):
                instance = (
                    protocol
                    if n == 1
                    else dataclasses.replace(protocol, id=f"{protocol.id}#{k + 1}")
                )
                out.append(initial_active(instance, self.initial_environment(protocol)))
        return out


## Strict element helpers


def _req(elem: ET.Element, attr: str) -> str:
    value = elem.get(attr)
    if value is None:
        raise ScenarioFormatError(
            f"<{elem.tag}> is missing required attribute {attr!r}"
        )
    return value


def _check_attrs(elem: ET.Element, allowed: set[str]) -> None:
    unknown = set(elem.keys()) - allowed
    if unknown:
        raise ScenarioFormatError(
            f"<{elem.tag}> has unknown attribute(s): {sorted(unknown)}"
        )


def _check_children(elem: ET.Element, allowed: set[str]) -> None:
    unknown = {child.tag for child in elem} - allowed
    if unknown:
        raise ScenarioFormatError(
            f"<{elem.tag}> has unknown child element(s): {sorted(unknown)}"
        )


def _check_version(elem: ET.Element) -> None:
    version = _req(elem, "version")
    if version != FORMAT_VERSION:
        raise ScenarioFormatError(
            f"<{elem.tag}> version {version!r} is not supported (expected {FORMAT_VERSION})"
        )


def _parse_root(data: Union[bytes, str], expected_tag: str) -> ET.Element:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ScenarioFormatError(f"not well-formed XML: {exc}") from None
    if root.tag != expected_tag:
        raise ScenarioFormatError(
            f"expected root element <{expected_tag}>, found <{root.tag}>"
        )
    return root


def _to_bytes(root: ET.Element) -> bytes:
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def write_atomic(path: Union[str, Path], data: bytes) -> None:
    """Write a file atomically: temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


## Ontology XML


def ontology_to_element(ontology: Ontology, version: bool = False) -> ET.Element:
    elem = ET.Element("ontology")
    if version:
        elem.set("version", FORMAT_VERSION)
    for concept in sorted(ontology.concepts):
        ET.SubElement(elem, "concept", name=concept)
    for child, parent in sorted(ontology.subclass_of):
        ET.SubElement(elem, "subclassOf", child=child, parent=parent)
    return elem


def ontology_from_element(elem: ET.Element, version: bool = False) -> Ontology:
    if version:
        _check_version(elem)
        _check_attrs(elem, {"version"})
    else:
        _check_attrs(elem, set())
    _check_children(elem, {"concept", "subclassOf"})
    concepts = set()
    edges = set()
    for child in elem:
        if child.tag == "concept":
            _check_attrs(child, {"name"})
            concepts.add(_req(child, "name"))
        else:
            _check_attrs(child, {"child", "parent"})
            edges.add((_req(child, "child"), _req(child, "parent")))
    try:
        return Ontology(frozenset(concepts), frozenset(edges))
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from None


def parse_ontology(data: Union[bytes, str]) -> Ontology:
    return ontology_from_element(_parse_root(data, "ontology"), version=True)


def serialize_ontology(ontology: Ontology) -> bytes:
    return _to_bytes(ontology_to_element(ontology, version=True))


## Protocol XML


def protocol_to_element(protocol: Protocol) -> ET.Element:
    elem = ET.Element("protocol", id=protocol.id)
    if protocol.context_profile.attributes:
        profile = ET.SubElement(elem, "contextProfile")
        for attr in protocol.context_profile.attributes:
            ET.SubElement(
                profile,
                "contextAttr",
                name=attr.name,
                value=format_value(attr.value),
                kind=attr.kind,
                visibility=attr.visibility,
            )
    states = ET.SubElement(elem, "states")
    finals = set(protocol.finals)
    for state in protocol.states:
        node = ET.SubElement(states, "state", id=state)
        if state in finals:
            node.set("final", "true")
    ET.SubElement(elem, "initial", ref=protocol.initial)
    alphabet = ET.SubElement(elem, "alphabet")
    for label in protocol.alphabet:
        node = ET.SubElement(alphabet, "label", id=label.id, kind=label.kind)
        if not label.is_tau:
            node.set("op", label.operation or "")
            node.set("dir", label.direction or "")
        if label.guard != TRUE:
            node.set("guard", format_expression(label.guard))
        for payload in label.payload:
            if isinstance(payload, Var):
                arg = ET.SubElement(node, "arg", name=payload.name, type=payload.type)
                if payload.concept is not None:
                    arg.set("concept", payload.concept)
                if payload.is_context:
                    arg.set("context", "true")
            elif is_literal(payload):
                ET.SubElement(node, "arg", literal=format_value(literal_value(payload)))
            else:
                ET.SubElement(node, "arg", expr=format_expression(payload))
    transitions = ET.SubElement(elem, "transitions")
    for t in protocol.transitions:
        ET.SubElement(
            transitions,
            "transition",
            **{"from": t.source, "label": t.label_id, "to": t.target},
        )
    return elem


def protocol_from_element(elem: ET.Element) -> tuple[Protocol, Optional[int]]:
    _check_attrs(elem, {"id", "instances"})
    _check_children(
        elem, {"contextProfile", "states", "initial", "alphabet", "transitions"}
    )
    protocol_id = _req(elem, "id")
    instances: Optional[int] = None
    if elem.get("instances") is not None:
        try:
            instances = int(elem.get("instances", ""))
        except ValueError:
            raise ScenarioFormatError(
                f"protocol {protocol_id}: instances must be an integer"
            ) from None
        if instances < 1:
            raise ScenarioFormatError(f"protocol {protocol_id}: instances must be >= 1")

    attributes: list[ContextAttribute] = []
    profile_elem = elem.find("contextProfile")
    if profile_elem is not None:
        _check_attrs(profile_elem, set())
        _check_children(profile_elem, {"contextAttr"})
        for node in profile_elem:
            _check_attrs(node, {"name", "value", "kind", "visibility"})
            try:
                value = parse_value(_req(node, "value"))
            except ExpressionError as exc:
                raise ScenarioFormatError(f"protocol {protocol_id}: {exc}") from None
            attributes.append(
                ContextAttribute(
                    _req(node, "name"), value, _req(node, "kind"), _req(node, "visibility")
                )
            )
    profile = ContextProfile(tuple(attributes))

    states_elem = elem.find("states")
    if states_elem is None:
        raise ScenarioFormatError(f"protocol {protocol_id}: missing <states>")
    _check_children(states_elem, {"state"})
    states: list[str] = []
    finals: list[str] = []
    for node in states_elem:
        _check_attrs(node, {"id", "final"})
        sid = _req(node, "id")
        states.append(sid)
        final = node.get("final")
        if final is not None:
            if final not in ("true", "false"):
                raise ScenarioFormatError(
                    f"protocol {protocol_id}: state {sid}: final must be true or false"
                )
            if final == "true":
                finals.append(sid)

    initial_elem = elem.find("initial")
    if initial_elem is None:
        raise ScenarioFormatError(f"protocol {protocol_id}: missing <initial>")
    _check_attrs(initial_elem, {"ref"})
    initial = _req(initial_elem, "ref")

    # Types seen anywhere in the protocol, used to type guard variables.
    var_types: dict[str, str] = {}
    context_types: dict[str, str] = {
        a.name: value_type(a.value) for a in attributes if a.kind == "dynamic"
    }

    alphabet_elem = elem.find("alphabet")
    if alphabet_elem is None:
        raise ScenarioFormatError(f"protocol {protocol_id}: missing <alphabet>")
    _check_children(alphabet_elem, {"label"})
    parsed_labels: list[tuple[ET.Element, str, str]] = []
    for node in alphabet_elem:
        _check_attrs(node, {"id", "kind", "op", "dir", "guard"})
        _check_children(node, {"arg"})
        label_id = _req(node, "id")
        kind = _req(node, "kind")
        if kind not in ("tau", "event"):
            raise ScenarioFormatError(
                f"protocol {protocol_id}: label {label_id}: kind must be tau or event"
            )
        parsed_labels.append((node, label_id, kind))
        for arg in node:
            if arg.get("name") is not None and arg.get("type") is not None:
                var_types.setdefault(arg.get("name", ""), arg.get("type", ""))

    labels: list[Label] = []
    for node, label_id, kind in parsed_labels:
        where = f"protocol {protocol_id}: label {label_id}"
        guard_text = node.get("guard")
        try:
            guard = (
                TRUE
                if guard_text is None
                else parse_expression(guard_text, var_types, context_types)
            )
        except ExpressionError as exc:
            raise ScenarioFormatError(f"{where}: bad guard: {exc}") from None
        if kind == "tau":
            if node.get("op") or node.get("dir") or len(node):
                raise ScenarioFormatError(
                    f"{where}: tau labels take no operation, direction or payload"
                )
            labels.append(Label(label_id, "tau", guard))
            continue
        operation = _req(node, "op")
        direction = _req(node, "dir")
        if direction not in ("emission", "reception"):
            raise ScenarioFormatError(
                f"{where}: dir must be emission or reception"
            )
        payload = []
        for arg in node:
            payload.append(_parse_arg(arg, where, var_types, context_types))
        labels.append(
            Label(label_id, "event", guard, operation, direction, tuple(payload))
        )

    transitions_elem = elem.find("transitions")
    if transitions_elem is None:
        raise ScenarioFormatError(f"protocol {protocol_id}: missing <transitions>")
    _check_children(transitions_elem, {"transition"})
    transitions: list[Transition] = []
    for node in transitions_elem:
        _check_attrs(node, {"from", "label", "to"})
        transitions.append(
            Transition(_req(node, "from"), _req(node, "label"), _req(node, "to"))
        )

    protocol = Protocol(
        id=protocol_id,
        alphabet=tuple(labels),
        states=tuple(states),
        initial=initial,
        finals=tuple(finals),
        transitions=tuple(transitions),
        context_profile=profile,
    )
    protocol = _with_signature(protocol)
    problems = validate_protocol(protocol)
    if problems:
        raise ScenarioFormatError(
            f"protocol {protocol_id} is not well formed: "
            + "; ".join(str(p) for p in problems)
        )
    return protocol, instances


def _with_signature(protocol: Protocol) -> Protocol:
    return dataclasses.replace(protocol, signature=infer_signature(protocol))


def _parse_arg(
    arg: ET.Element,
    where: str,
    var_types: Mapping[str, str],
    context_types: Mapping[str, str],
):
    _check_attrs(arg, {"name", "type", "concept", "context", "literal", "expr"})
    if arg.get("literal") is not None:
        if arg.get("name") or arg.get("type") or arg.get("concept") or arg.get("context"):
            raise ScenarioFormatError(f"{where}: literal args take no other attributes")
        try:
            return lit(parse_value(arg.get("literal", "")))
        except ExpressionError as exc:
            raise ScenarioFormatError(f"{where}: {exc}") from None
    if arg.get("expr") is not None:
        try:
            return parse_expression(arg.get("expr", ""), var_types, context_types)
        except ExpressionError as exc:
            raise ScenarioFormatError(f"{where}: {exc}") from None
    name = _req(arg, "name")
    vtype = _req(arg, "type")
    is_context = False
    context = arg.get("context")
    if context is not None:
        if context not in ("true", "false"):
            raise ScenarioFormatError(f"{where}: context must be true or false")
        is_context = context == "true"
    return Var(name, vtype, is_context=is_context, concept=arg.get("concept"))


def parse_protocol(data: Union[bytes, str]) -> Protocol:
    protocol, _ = protocol_from_element(_parse_root(data, "protocol"))
    return protocol


## Scenario XML


def parse_scenario(
    data: Union[bytes, str], base_path: Optional[Union[str, Path]] = None
) -> Scenario:
    root = _parse_root(data, "scenario")
    _check_version(root)
    _check_attrs(root, {"version"})
    _check_children(root, {"ontology", "clients", "services", "composition", "contexts"})

    ontology_elem = root.find("ontology")
    if ontology_elem is None:
        raise ScenarioFormatError("scenario is missing <ontology>")
    ontology = ontology_from_element(ontology_elem)

    clients_elem = root.find("clients")
    if clients_elem is None:
        raise ScenarioFormatError("scenario is missing <clients>")
    _check_children(clients_elem, {"protocol"})
    clients: list[Protocol] = []
    for node in clients_elem:
        protocol, instances = protocol_from_element(node)
        if instances is not None:
            raise ScenarioFormatError(
                f"client protocol {protocol.id}: instances applies to services only"
            )
        clients.append(protocol)
    if not clients:
        raise ScenarioFormatError("scenario declares no client protocols")

    services: list[Protocol] = []
    instance_counts: list[tuple[str, int]] = []
    services_elem = root.find("services")
    if services_elem is not None:
        _check_children(services_elem, {"protocol"})
        for node in services_elem:
            protocol, instances = protocol_from_element(node)
            services.append(protocol)
            if instances is not None and instances != 1:
                instance_counts.append((protocol.id, instances))

    ids = [p.id for p in clients + services]
    if len(ids) != len(set(ids)):
        raise ScenarioFormatError(f"duplicate protocol ids: {sorted(ids)}")

    composition_elem = root.find("composition")
    if composition_elem is None:
        raise ScenarioFormatError("scenario is missing <composition>")
    _check_attrs(composition_elem, {"expr"})
    loader = _deps_loader(base_path)
    try:
        composition = parse_composition(_req(composition_elem, "expr"), loader)
    except CompositionSyntaxError as exc:
        raise ScenarioFormatError(str(exc)) from None

    client_ids = {p.id for p in clients}
    for pid in leaf_ids(composition):
        if pid not in client_ids:
            raise ScenarioFormatError(
                f"composition references {pid!r}, which is not a client protocol"
            )

    binds: list[tuple[str, tuple[tuple[str, Value], ...]]] = []
    contexts_elem = root.find("contexts")
    if contexts_elem is not None:
        _check_children(contexts_elem, {"context"})
        for node in contexts_elem:
            _check_attrs(node, {"protocol"})
            _check_children(node, {"bind"})
            pid = _req(node, "protocol")
            if pid not in set(ids):
                raise ScenarioFormatError(f"<context> references unknown protocol {pid!r}")
            pairs = []
            for bind in node:
                _check_attrs(bind, {"var", "value"})
                try:
                    pairs.append((_req(bind, "var"), parse_value(_req(bind, "value"))))
                except ExpressionError as exc:
                    raise ScenarioFormatError(f"context for {pid}: {exc}") from None
            binds.append((pid, tuple(pairs)))

    return Scenario(
        tuple(clients),
        tuple(services),
        ontology,
        composition,
        tuple(binds),
        tuple(instance_counts),
    )


def serialize_scenario(scenario: Scenario) -> bytes:
    root = ET.Element("scenario", version=FORMAT_VERSION)
    root.append(ontology_to_element(scenario.ontology))
    clients = ET.SubElement(root, "clients")
    for protocol in scenario.clients:
        clients.append(protocol_to_element(protocol))
    services = ET.SubElement(root, "services")
    counts = dict(scenario.instances)
    for protocol in scenario.services:
        elem = protocol_to_element(protocol)
        if counts.get(protocol.id, 1) != 1:
            elem.set("instances", str(counts[protocol.id]))
        services.append(elem)
    ET.SubElement(root, "composition", expr=format_composition(scenario.composition))
    if scenario.binds:
        contexts = ET.SubElement(root, "contexts")
        for pid, pairs in scenario.binds:
            node = ET.SubElement(contexts, "context", protocol=pid)
            for var, value in pairs:
                ET.SubElement(node, "bind", var=var, value=format_value(value))
    return _to_bytes(root)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_bytes(), base_path=path.parent)


def _deps_loader(
    base_path: Optional[Union[str, Path]]
) -> Callable[[str], tuple[LabelDependency, ...]]:
    def load(ref: str) -> tuple[LabelDependency, ...]:
        if base_path is None:
            raise ScenarioFormatError(
                f"composition references dependency file {ref!r} but the scenario "
                "was parsed without a base path"
            )
        target = Path(base_path) / ref
        if not target.exists():
            raise ScenarioFormatError(f"dependency file not found: {target}")
        deps = parse_dependency_set(target.read_bytes())
        if deps.stage == Stage.CANDIDATES:
            raise ScenarioFormatError(
                f"dependency file {ref!r} holds unordered candidates; "
                "select and orient them first"
            )
        return deps.items

    return load


## Dependency set XML


def serialize_dependency_set(deps: DependencySet) -> bytes:
    root = ET.Element("dependencySet", version=FORMAT_VERSION, stage=deps.stage.value)
    if deps.stage == Stage.CANDIDATES:
        for pair in deps.items:
            ET.SubElement(root, "pair", left=str(pair.left), right=str(pair.right))
    else:
        for dep in deps.items:
            ET.SubElement(
                root, "dep", dominant=str(dep.dominant), dominated=str(dep.dominated)
            )
    return _to_bytes(root)


def parse_dependency_set(data: Union[bytes, str]) -> DependencySet:
    root = _parse_root(data, "dependencySet")
    _check_version(root)
    _check_attrs(root, {"version", "stage"})
    stage_text = _req(root, "stage")
    try:
        stage = Stage(stage_text)
    except ValueError:
        raise ScenarioFormatError(f"unknown dependency stage {stage_text!r}") from None
    if stage == Stage.CANDIDATES:
        _check_children(root, {"pair"})
        pairs = []
        for node in root:
            _check_attrs(node, {"left", "right"})
            pairs.append(
                LabelPair(
                    _parse_qualified(_req(node, "left")),
                    _parse_qualified(_req(node, "right")),
                )
            )
        return DependencySet(stage, tuple(pairs))
    _check_children(root, {"dep"})
    deps = []
    for node in root:
        _check_attrs(node, {"dominant", "dominated"})
        deps.append(
            LabelDependency(
                _parse_qualified(_req(node, "dominant")),
                _parse_qualified(_req(node, "dominated")),
            )
        )
    return DependencySet(stage, tuple(deps))


def _parse_qualified(text: str) -> QualifiedLabel:
    try:
        return QualifiedLabel.parse(text)
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from None


## Verification report XML


def serialize_report(report: DeadlockReport) -> bytes:
    root = ET.Element("verificationReport", version=FORMAT_VERSION)
    for item in report.flagged:
        node = ET.SubElement(root, "flagged", kind=item.kind.value)
        ET.SubElement(
            node, "dep", dominant=str(item.first.dominant), dominated=str(item.first.dominated)
        )
        ET.SubElement(
            node, "dep", dominant=str(item.second.dominant), dominated=str(item.second.dominated)
        )
        explanation = ET.SubElement(node, "explanation")
        explanation.text = item.explanation
    for warning in report.chain_warnings:
        node = ET.SubElement(root, "chainWarning")
        node.text = warning
    return _to_bytes(root)


## JSON forms (shared by the CLI --json output and the HTTP API)


def candidates_jsonable(candidates: Sequence[Candidate]) -> dict:
    return {
        "stage": "candidates",
        "pairs": [
            {
                "left": str(c.pair.left),
                "right": str(c.pair.right),
                "matches": [
                    {
                        "leftArg": m.left_arg,
                        "rightArg": m.right_arg,
                        "degree": m.degree.value,
                        "type": m.type,
                    }
                    for m in c.matches
                ],
            }
            for c in candidates
        ],
    }


def dependencies_jsonable(stage: Stage, deps: Sequence[LabelDependency]) -> dict:
    return {
        "stage": stage.value,
        "dependencies": [
            {"dominant": str(d.dominant), "dominated": str(d.dominated)}
            for d in sorted(deps, key=dependency_key)
        ],
    }


def report_jsonable(report: DeadlockReport) -> dict:
    return {
        "consistent": report.is_empty,
        "flagged": [
            {
                "kind": f.kind.value,
                "first": {"dominant": str(f.first.dominant), "dominated": str(f.first.dominated)},
                "second": {
                    "dominant": str(f.second.dominant),
                    "dominated": str(f.second.dominated),
                },
                "explanation": f.explanation,
            }
            for f in report.flagged
        ],
        "chainWarnings": list(report.chain_warnings),
    }


def merge_reports(reports: Sequence[tuple[tuple[str, str], DeadlockReport]]) -> DeadlockReport:
    flagged: list[FlaggedPair] = []
    warnings: list[str] = []
    for _, report in reports:
        flagged.extend(report.flagged)
        warnings.extend(report.chain_warnings)
    return DeadlockReport(tuple(flagged), tuple(warnings))


def protocol_jsonable(protocol: Protocol) -> dict:
    labels = []
    for label in protocol.alphabet:
        payload = []
        for p in label.payload:
            if isinstance(p, Var):
                payload.append(
                    {
                        "name": p.name,
                        "type": p.type,
                        "context": p.is_context,
                        "concept": p.concept_name,
                    }
                )
            else:
                payload.append({"expr": format_expression(p)})
        labels.append(
            {
                "id": label.id,
                "kind": label.kind,
                "operation": label.operation,
                "direction": label.direction,
                "guard": format_expression(label.guard),
                "payload": payload,
                "display": str(label),
            }
        )
    return {
        "id": protocol.id,
        "states": [
            {"id": s, "final": s in set(protocol.finals)} for s in protocol.states
        ],
        "initial": protocol.initial,
        "labels": labels,
        "transitions": [
            {"from": t.source, "label": t.label_id, "to": t.target}
            for t in protocol.transitions
        ],
        "contextProfile": [
            {
                "name": a.name,
                "value": format_value(a.value),
                "kind": a.kind,
                "visibility": a.visibility,
            }
            for a in protocol.context_profile.attributes
        ],
    }


def exploration_jsonable(result: ExplorationResult) -> dict:
    return {
        "states": result.state_count,
        "edges": len(result.edges),
        "completions": len(result.completions),
        "deadlocks": len(result.deadlocks),
        "truncated": result.truncated,
    }


def trace_jsonable(trace: TraceResult) -> dict:
    return {
        "steps": [
            {
                "choice": s.choice,
                "kind": s.tag.kind,
                "fired": [str(q) for q in s.tag.fired],
                "operation": s.tag.operation,
                "description": s.tag.description,
            }
            for s in trace.steps
        ],
        "enabled": [
            {
                "index": i,
                "kind": tag.kind,
                "fired": [str(q) for q in tag.fired],
                "operation": tag.operation,
                "description": tag.description,
            }
            for i, tag in enumerate(trace.enabled)
        ],
        "blocked": [
            {"label": str(b.label), "blocking": [str(d) for d in b.blocking]}
            for b in trace.blocked
        ],
        "completed": trace.completed,
    }


## Fixtures shipped with the package


def fixture_path(name: str) -> Path:
    path = Path(__file__).parent / "fixtures" / name
    if not path.exists():
        raise FileNotFoundError(f"no fixture named {name!r}")
    return path


def load_fixture(name: str) -> Scenario:
    return load_scenario(fixture_path(name))
