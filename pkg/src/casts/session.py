"""Analysis sessions: a stateful walk through the dependency pipeline.

A session wraps one scenario and advances through fixed stages:

    loaded -> analyzed -> selected -> extended -> verified -> exploring

Candidate detection moves a session to analyzed. Applying a selection
eagerly runs extension and verification, so it lands on verified.
Stepping the simulator moves it to exploring. Re-applying a selection
invalidates everything downstream.

Only inputs are persisted (scenario, selection choices, schedule);
derived data is recomputed on load, so saved sessions can never go
stale against the engine.
"""

from __future__ import annotations

import uuid
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .composition import (
    CompositionExpression,
    Par,
    TraceResult,
    leaf_ids,
    par_nodes,
    run_trace,
    verify_expression,
)
from .dependency import (
    Candidate,
    LabelDependency,
    Order,
    SelectionError,
    apply_selection,
    candidate_details,
    dependency_key,
    extended_label_dependencies,
)
from .model import Protocol
from .scenario import (
    FORMAT_VERSION,
    Scenario,
    ScenarioFormatError,
    _check_attrs,
    _check_children,
    _check_version,
    _parse_root,
    _req,
    _to_bytes,
    parse_scenario,
    serialize_scenario,
)
from .verification import DeadlockReport

STAGES = ("loaded", "analyzed", "selected", "extended", "verified", "exploring")


class StageError(RuntimeError):
    """An operation was requested out of stage order."""

    def __init__(self, needed: str, current: str, operation: str):
        super().__init__(
            f"{operation} needs stage {needed!r} but the session is at {current!r}"
        )
        self.needed = needed
        self.current = current


@dataclass(frozen=True)
class ParGroup:
    """One analyzable protocol pair under a parallel composition node."""

    index: int
    par_index: int
    left: str
    right: str
    candidates: tuple[Candidate, ...]


@dataclass(frozen=True)
class Choice:
    group: int
    pair: int
    order: Order


def attach_dependencies(
    expr: CompositionExpression,
    groups: Sequence[ParGroup],
    dependencies: Sequence[LabelDependency],
) -> CompositionExpression:
    """Place each dependency on the parallel node whose analyzed pair it
    belongs to. Parallel nodes are numbered in post-order, matching
    ``par_nodes``."""
    by_par: dict[int, set[LabelDependency]] = {}
    for group in groups:
        pair_protocols = {group.left, group.right}
        for dep in dependencies:
            span = {dep.dominant.protocol_id, dep.dominated.protocol_id}
            if span <= pair_protocols:
                by_par.setdefault(group.par_index, set()).add(dep)

    counter = [0]

    def rebuild(node: CompositionExpression) -> CompositionExpression:
        if isinstance(node, Par):
            left = rebuild(node.left)
            right = rebuild(node.right)
            index = counter[0]
            counter[0] += 1
            deps = tuple(
                sorted(by_par.get(index, set()) | set(node.deps), key=dependency_key)
            )
            return Par(left, right, deps, node.ref)
        if hasattr(node, "left"):
            return type(node)(rebuild(node.left), rebuild(node.right))
        return node

    return rebuild(expr)


class Session:
    """One scenario's pipeline state. Not thread safe by itself; the
    HTTP layer serializes access per session."""

    def __init__(
        self,
        scenario: Scenario,
        session_id: Optional[str] = None,
    ):
        self.id = session_id or uuid.uuid4().hex
        self.scenario = scenario
        self._analyzed = False
        self._groups: tuple[ParGroup, ...] = ()
        self._choices: Optional[tuple[Choice, ...]] = None
        self._selected: tuple[LabelDependency, ...] = ()
        self._extended: tuple[LabelDependency, ...] = ()
        self._reports: list[tuple[tuple[str, str], DeadlockReport]] = []
        self._schedule: list[int] = []
        self._force = False

    ## Stage machinery

    @property
    def stage(self) -> str:
        if self._schedule:
            return "exploring"
        if self._choices is not None:
            return "verified"
        if self._analyzed:
            return "analyzed"
        return "loaded"

    def _require(self, needed: str, operation: str) -> None:
        if STAGES.index(self.stage) < STAGES.index(needed):
            raise StageError(needed, self.stage, operation)

    ## Pipeline operations

    def protocols(self) -> dict[str, Protocol]:
        return self.scenario.protocol_map()

    def analyze(self) -> tuple[ParGroup, ...]:
        """Detect candidate dependency pairs for every parallel pair."""
        if not self._analyzed:
            groups: list[ParGroup] = []
            protocols = self.protocols()
            for par_index, par in enumerate(par_nodes(self.scenario.composition)):
                for left in leaf_ids(par.left):
                    for right in leaf_ids(par.right):
                        groups.append(
                            ParGroup(
                                index=len(groups),
                                par_index=par_index,
                                left=left,
                                right=right,
                                candidates=candidate_details(
                                    protocols[left],
                                    protocols[right],
                                    self.scenario.ontology,
                                ),
                            )
                        )
            self._groups = tuple(groups)
            self._analyzed = True
        return self._groups

    def groups(self) -> tuple[ParGroup, ...]:
        self._require("analyzed", "listing candidates")
        return self._groups

    def select(self, choices: Sequence[Choice]) -> None:
        """Orient chosen candidates, then eagerly extend and verify.

        Replacing the selection drops any exploration progress.
        """
        self._require("analyzed", "applying a selection")
        protocols = self.protocols()
        per_group: dict[int, list[tuple[int, Order]]] = {}
        seen: set[tuple[int, int]] = set()
        for choice in choices:
            if choice.group < 0 or choice.group >= len(self._groups):
                raise SelectionError(f"group index {choice.group} out of range")
            if (choice.group, choice.pair) in seen:
                raise SelectionError(
                    f"candidate {choice.pair} in group {choice.group} selected twice"
                )
            seen.add((choice.group, choice.pair))
            per_group.setdefault(choice.group, []).append((choice.pair, choice.order))

        selected: list[LabelDependency] = []
        extended: list[LabelDependency] = []
        for group in self._groups:
            picks = per_group.get(group.index, [])
            group_selected = apply_selection(group.candidates, picks)
            group_extended = extended_label_dependencies(
                protocols[group.left], protocols[group.right], group_selected
            )
            selected.extend(group_selected)
            extended.extend(group_extended)

        extended_set = tuple(sorted(set(extended), key=dependency_key))
        expr = attach_dependencies(
            self.scenario.composition, self._groups, extended_set
        )
        reports = verify_expression(expr, protocols)

        self._choices = tuple(choices)
        self._selected = tuple(sorted(set(selected), key=dependency_key))
        self._extended = extended_set
        self._reports = reports
        self._schedule = []
        self._force = False

    def selected(self) -> tuple[LabelDependency, ...]:
        self._require("verified", "reading the selection")
        return self._selected

    def extended(self) -> tuple[LabelDependency, ...]:
        self._require("verified", "reading the extended set")
        return self._extended

    def verification(self) -> list[tuple[tuple[str, str], DeadlockReport]]:
        self._require("verified", "reading the verification report")
        return self._reports

    def composed_expression(self) -> CompositionExpression:
        """The composition with each parallel node carrying its share of
        the extended dependency set."""
        if self._choices is None:
            return self.scenario.composition
        return attach_dependencies(
            self.scenario.composition, self._groups, self._extended
        )

    def run(self, schedule: Optional[Sequence[int]] = None) -> TraceResult:
        return run_trace(
            self.composed_expression(),
            self.protocols(),
            self.scenario.service_actives(),
            self.scenario.client_environments(),
            self._schedule if schedule is None else schedule,
            force=self._force,
        )

    def step(self, choice: int, force: bool = False) -> TraceResult:
        """Advance the simulator by one canonical successor choice."""
        self._require("verified", "stepping the simulator")
        if force:
            self._force = True
        result = self.run(list(self._schedule) + [choice])
        self._schedule.append(choice)
        return result

    def trace(self, force: bool = False) -> TraceResult:
        self._require("verified", "reading the trace")
        if force:
            self._force = True
        return self.run()

    def reset_trace(self) -> None:
        self._require("verified", "resetting the trace")
        self._schedule = []
        self._force = False

    ## Persistence: inputs only, derived data is recomputed on load

    def save(self) -> bytes:
        root = ET.Element("session", version=FORMAT_VERSION, id=self.id, stage=self.stage)
        scenario_root = ET.fromstring(serialize_scenario(self.scenario))
        root.append(scenario_root)
        if self._choices is not None:
            selection = ET.SubElement(root, "selection")
            for choice in self._choices:
                ET.SubElement(
                    selection,
                    "choice",
                    group=str(choice.group),
                    pair=str(choice.pair),
                    order=choice.order.value,
                )
        if self._schedule or self._force:
            schedule = ET.SubElement(root, "schedule")
            if self._force:
                schedule.set("force", "true")
            for choice in self._schedule:
                ET.SubElement(schedule, "step", choice=str(choice))
        return _to_bytes(root)

    @classmethod
    def load(cls, data: Union[bytes, str]) -> "Session":
        root = _parse_root(data, "session")
        _check_version(root)
        _check_attrs(root, {"version", "id", "stage"})
        _check_children(root, {"scenario", "selection", "schedule"})
        stage = _req(root, "stage")
        if stage not in STAGES:
            raise ScenarioFormatError(f"unknown session stage {stage!r}")
        scenario_elem = root.find("scenario")
        if scenario_elem is None:
            raise ScenarioFormatError("session is missing <scenario>")
        scenario = parse_scenario(ET.tostring(scenario_elem))
        session = cls(scenario, session_id=_req(root, "id"))

        selection_elem = root.find("selection")
        if stage != "loaded":
            session.analyze()
        if selection_elem is not None:
            _check_children(selection_elem, {"choice"})
            choices = []
            for node in selection_elem:
                _check_attrs(node, {"group", "pair", "order"})
                try:
                    order = Order(_req(node, "order"))
                except ValueError:
                    raise ScenarioFormatError(
                        f"unknown selection order {node.get('order')!r}"
                    ) from None
                try:
                    choices.append(
                        Choice(int(_req(node, "group")), int(_req(node, "pair")), order)
                    )
                except ValueError:
                    raise ScenarioFormatError(
                        "<choice> group and pair must be integers"
                    ) from None
            try:
                session.select(choices)
            except (SelectionError, StageError) as exc:
                raise ScenarioFormatError(f"saved selection does not apply: {exc}") from None

        schedule_elem = root.find("schedule")
        if schedule_elem is not None:
            _check_attrs(schedule_elem, {"force"})
            _check_children(schedule_elem, {"step"})
            if schedule_elem.get("force") == "true":
                session._force = True
            steps = []
            for node in schedule_elem:
                _check_attrs(node, {"choice"})
                try:
                    steps.append(int(_req(node, "choice")))
                except ValueError:
                    raise ScenarioFormatError("<step> choice must be an integer") from None
            for choice in steps:
                session.step(choice, force=session._force)

        if session.stage != stage:
            raise ScenarioFormatError(
                f"session replay reached stage {session.stage!r}, file says {stage!r}"
            )
        return session

    @classmethod
    def from_xml(cls, scenario_xml: Union[bytes, str]) -> "Session":
        return cls(parse_scenario(scenario_xml))
