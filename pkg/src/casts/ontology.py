"""Domain ontologies and the four-valued concept matching used for
dependency detection.

An ontology here is just a concept set with an acyclic subclass relation
(multiple parents allowed). Subsumption is reachability over that relation.
Matching two concepts yields one of four degrees, ordered from best to
worst: exact, plugIn, subsume, fail.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)


class OntologyError(ValueError):
    """Raised for malformed ontologies or unknown concepts in subsumes."""


class MatchDegree(enum.Enum):
    EXACT = "exact"
    PLUGIN = "plugIn"
    SUBSUME = "subsume"
    FAIL = "fail"

    @property
    def rank(self) -> int:
        order = {"exact": 3, "plugIn": 2, "subsume": 1, "fail": 0}
        return order[self.value]

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Ontology:
    concepts: frozenset[str]
    subclass_of: frozenset[tuple[str, str]]  # (child, parent) edges

    def __post_init__(self) -> None:
        for child, parent in self.subclass_of:
            if child not in self.concepts or parent not in self.concepts:
                raise OntologyError(
                    f"subclass edge ({child}, {parent}) references unknown concept"
                )
        self._check_acyclic()

    def _check_acyclic(self) -> None:
        parents: dict[str, list[str]] = {}
        for child, parent in self.subclass_of:
            parents.setdefault(child, []).append(parent)
        # Colourless DFS cycle check over the child -> parent edges.
        state: dict[str, int] = {}  # 1 = on stack, 2 = done

        def visit(node: str, trail: list[str]) -> None:
            state[node] = 1
            for parent in parents.get(node, ()):
                if state.get(parent) == 1:
                    raise OntologyError(
                        f"subclass relation contains a cycle through {parent!r}"
                    )
                if state.get(parent) != 2:
                    visit(parent, trail + [parent])
            state[node] = 2

        for concept in sorted(self.concepts):
            if state.get(concept) != 2:
                visit(concept, [concept])

    def has(self, concept: str) -> bool:
        return concept in self.concepts

    def parents(self, concept: str) -> frozenset[str]:
        return frozenset(p for c, p in self.subclass_of if c == concept)

    def is_direct_subclass(self, child: str, parent: str) -> bool:
        return (child, parent) in self.subclass_of


def subsumes(ancestor: str, descendant: str, ontology: Ontology) -> bool:
    """True when ``descendant`` is ``ancestor`` or below it in the hierarchy."""
    for concept in (ancestor, descendant):
        if not ontology.has(concept):
            raise OntologyError(f"unknown concept {concept!r}")
    if ancestor == descendant:
        return True
    frontier = [descendant]
    seen = {descendant}
    while frontier:
        current = frontier.pop()
        for parent in ontology.parents(current):
            if parent == ancestor:
                return True
            if parent not in seen:
                seen.add(parent)
                frontier.append(parent)
    return False


def degree_match(offered: str, wanted: str, ontology: Ontology) -> MatchDegree:
    """Semantic compatibility of an offered concept against a wanted one.

    exact: identical concepts, or offered is a direct subclass of wanted.
    plugIn: wanted subsumes offered at distance two or more.
    subsume: offered strictly subsumes wanted.
    fail: everything else, including concepts missing from the ontology.
    """
    if not ontology.has(offered) or not ontology.has(wanted):
        missing = [c for c in (offered, wanted) if not ontology.has(c)]
        log.debug("degree_match: unknown concept(s) %s, returning fail", missing)
        return MatchDegree.FAIL
    if offered == wanted or ontology.is_direct_subclass(offered, wanted):
        return MatchDegree.EXACT
    if subsumes(wanted, offered, ontology):
        return MatchDegree.PLUGIN
    if subsumes(offered, wanted, ontology):
        return MatchDegree.SUBSUME
    return MatchDegree.FAIL
