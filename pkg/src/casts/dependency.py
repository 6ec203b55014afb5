"""Data dependency detection between two protocols, selection, extension.

Two concurrent client protocols may touch the same device data through
different operations. Candidate dependencies are found by comparing every
argument of every event label of one protocol against every argument of the
other: a pair of labels is a candidate when some argument pair has a
non-fail concept match and identical declared types. The scan is quadratic
in labels times arguments per protocol.

Candidates carry no direction. A human (or the session API) then picks the
pairs that are real dependencies and orients each one: the dominant label
must execute before the dominated one. The oriented set is extended with
the dominant label's possible predecessors so that the runtime gate can
release the dominated side as early as its real precondition allows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .expr import Var, static_type
from .model import Label, Protocol, QualifiedLabel, previous_labels, require_valid
from .ontology import MatchDegree, Ontology, degree_match


class SelectionError(ValueError):
    """Raised for out-of-range or duplicate selection indices."""


class DependencyError(ValueError):
    """Raised when dependency labels do not resolve against the protocols."""


class Order(enum.Enum):
    LEFT_FIRST = "leftFirst"
    RIGHT_FIRST = "rightFirst"


class Stage(enum.Enum):
    CANDIDATES = "candidates"
    SELECTED = "selected"
    EXTENDED = "extended"


@dataclass(frozen=True)
class ArgumentMatch:
    """One matching argument pair supporting a candidate."""

    left_arg: str
    right_arg: str
    degree: MatchDegree
    type: str


@dataclass(frozen=True)
class LabelPair:
    left: QualifiedLabel
    right: QualifiedLabel

    def __str__(self) -> str:
        return f"({self.left}, {self.right})"


@dataclass(frozen=True)
class Candidate:
    pair: LabelPair
    matches: tuple[ArgumentMatch, ...]


@dataclass(frozen=True)
class LabelDependency:
    """An oriented dependency: dominant executes before dominated."""

    dominant: QualifiedLabel
    dominated: QualifiedLabel

    def __str__(self) -> str:
        return f"{self.dominant} > {self.dominated}"


@dataclass(frozen=True)
class DependencySet:
    stage: Stage
    items: tuple  # LabelPair for candidates, LabelDependency afterwards

    def __post_init__(self) -> None:
        expected = LabelPair if self.stage == Stage.CANDIDATES else LabelDependency
        for item in self.items:
            if not isinstance(item, expected):
                raise DependencyError(
                    f"stage {self.stage.value} cannot hold {type(item).__name__}"
                )


def _pair_key(pair: LabelPair) -> tuple:
    return (pair.left.protocol_id, pair.left.label_id, pair.right.protocol_id, pair.right.label_id)


def dependency_key(dep: LabelDependency) -> tuple:
    return (
        dep.dominant.protocol_id,
        dep.dominant.label_id,
        dep.dominated.protocol_id,
        dep.dominated.label_id,
    )


def _argument_concept(expr) -> Union[str, None]:
    """Ontology concept of a payload element; literals have none."""
    if isinstance(expr, Var):
        return expr.concept_name
    return None


def candidate_details(
    first: Protocol, second: Protocol, ontology: Ontology
) -> tuple[Candidate, ...]:
    """All candidate label pairs with the argument matches that support them."""
    require_valid(first)
    require_valid(second)
    found: list[Candidate] = []
    for lp1 in first.alphabet:
        if lp1.is_tau:
            continue
        for lp2 in second.alphabet:
            if lp2.is_tau:
                continue
            matches: list[ArgumentMatch] = []
            for a1 in lp1.payload:
                c1 = _argument_concept(a1)
                if c1 is None:
                    continue
                for a2 in lp2.payload:
                    c2 = _argument_concept(a2)
                    if c2 is None:
                        continue
                    if static_type(a1) != static_type(a2):
                        continue
                    degree = degree_match(c1, c2, ontology)
                    if degree == MatchDegree.FAIL:
                        continue
                    matches.append(
                        ArgumentMatch(a1.name, a2.name, degree, static_type(a1))
                    )
            if matches:
                pair = LabelPair(first.qualified(lp1), second.qualified(lp2))
                found.append(Candidate(pair, tuple(matches)))
    found.sort(key=lambda c: _pair_key(c.pair))
    return tuple(found)


def pairs_label_dependencies(
    first: Protocol, second: Protocol, ontology: Ontology
) -> tuple[LabelPair, ...]:
    """Candidate dependency pairs between two protocols, canonically ordered."""
    return tuple(c.pair for c in candidate_details(first, second, ontology))


def apply_selection(
    candidates: Sequence[Union[LabelPair, Candidate]],
    choices: Iterable[tuple[int, Order]],
) -> tuple[LabelDependency, ...]:
    """Turn chosen candidate pairs into oriented dependencies.

    Each choice names a candidate by position and says which side executes
    first. leftFirst makes the pair's left label dominant.
    """
    out: list[LabelDependency] = []
    seen: set[int] = set()
    for index, order in choices:
        if index < 0 or index >= len(candidates):
            raise SelectionError(f"candidate index {index} out of range")
        if index in seen:
            raise SelectionError(f"candidate index {index} selected twice")
        seen.add(index)
        item = candidates[index]
        pair = item.pair if isinstance(item, Candidate) else item
        if order == Order.LEFT_FIRST:
            out.append(LabelDependency(pair.left, pair.right))
        else:
            out.append(LabelDependency(pair.right, pair.left))
    out.sort(key=dependency_key)
    return tuple(out)


def _protocol_for(
    qualified: QualifiedLabel, first: Protocol, second: Protocol
) -> Protocol:
    if qualified.protocol_id == first.id:
        return first
    if qualified.protocol_id == second.id:
        return second
    raise DependencyError(f"label {qualified} references neither protocol")


def resolve_label(
    qualified: QualifiedLabel, first: Protocol, second: Protocol
) -> Label:
    protocol = _protocol_for(qualified, first, second)
    if not protocol.has_label(qualified.label_id):
        raise DependencyError(f"label {qualified} does not exist")
    return protocol.label(qualified.label_id)


def extended_label_dependencies(
    first: Protocol,
    second: Protocol,
    selected: Sequence[LabelDependency],
) -> tuple[LabelDependency, ...]:
    """Close the selected set over the dominant side's predecessors.

    For every dependency (f > s), any label that can execute before f in
    f's protocol also dominates s. The dominated side is left alone. The
    result is deduplicated and canonically ordered.
    """
    out: set[LabelDependency] = set()
    for dep in selected:
        resolve_label(dep.dominant, first, second)
        resolve_label(dep.dominated, first, second)
        out.add(dep)
        protocol = _protocol_for(dep.dominant, first, second)
        for prev in previous_labels(dep.dominant.label_id, protocol):
            out.add(LabelDependency(protocol.qualified(prev), dep.dominated))
    return tuple(sorted(out, key=dependency_key))
