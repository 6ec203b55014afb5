"""Deadlock analysis of an oriented dependency set.

Two oriented dependencies can contradict each other in two ways. A mutual
conflict is direct: each one's dominant is the other's dominated, so
neither label may ever fire. A crossed conflict is indirect: each
dependency's dominated label precedes the other's dominant label inside its
own protocol, so every order of execution blocks one side. Both kinds are
reported per unordered pair, once.

Longer cyclic chains of dominance are reported as warnings but are not part
of the flagged set.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .model import Protocol, QualifiedLabel, previous_labels
from .dependency import DependencyError, LabelDependency, dependency_key, resolve_label


class DeadlockKind(enum.Enum):
    MUTUAL = "mutual"
    CROSSED = "crossed"


@dataclass(frozen=True)
class FlaggedPair:
    first: LabelDependency
    second: LabelDependency
    kind: DeadlockKind
    explanation: str


@dataclass(frozen=True)
class DeadlockReport:
    flagged: tuple[FlaggedPair, ...]
    chain_warnings: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.flagged


def _precedes(
    earlier: QualifiedLabel, later: QualifiedLabel, first: Protocol, second: Protocol
) -> bool:
    """True when ``earlier`` can occur before ``later`` in the same protocol."""
    if earlier.protocol_id != later.protocol_id:
        return False
    protocol = first if later.protocol_id == first.id else second
    prev = previous_labels(later.label_id, protocol)
    return any(l.id == earlier.label_id for l in prev)


def label_dependency_verification(
    first: Protocol,
    second: Protocol,
    dependencies: Sequence[LabelDependency],
) -> DeadlockReport:
    """Check an extended dependency set for mutual and crossed conflicts."""
    deps = sorted(set(dependencies), key=dependency_key)
    for dep in deps:
        resolve_label(dep.dominant, first, second)
        resolve_label(dep.dominated, first, second)
    flagged: list[FlaggedPair] = []
    for i, dp in enumerate(deps):
        for dg in deps[i + 1 :]:
            if dp.dominant == dg.dominated and dp.dominated == dg.dominant:
                flagged.append(
                    FlaggedPair(
                        dp,
                        dg,
                        DeadlockKind.MUTUAL,
                        f"{dp} and {dg} require each other's dominant to wait",
                    )
                )
                continue
            crossed = _precedes(dg.dominated, dp.dominant, first, second) and _precedes(
                dp.dominated, dg.dominant, first, second
            )
            if crossed:
                flagged.append(
                    FlaggedPair(
                        dp,
                        dg,
                        DeadlockKind.CROSSED,
                        f"the dominated label of each of {dp} and {dg} precedes "
                        f"the other's dominant label",
                    )
                )
    return DeadlockReport(tuple(flagged), _chain_warnings(deps))


def _chain_warnings(deps: Sequence[LabelDependency]) -> tuple[str, ...]:
    """Simple dominance cycles longer than two labels, as human warnings."""
    edges: dict[QualifiedLabel, set[QualifiedLabel]] = {}
    for dep in deps:
        edges.setdefault(dep.dominant, set()).add(dep.dominated)
    cycles: set[tuple[QualifiedLabel, ...]] = set()

    def walk(start: QualifiedLabel, node: QualifiedLabel, path: list[QualifiedLabel]) -> None:
        for nxt in edges.get(node, ()):
            if nxt == start:
                if len(path) > 2:
                    # Canonical rotation so each cycle is reported once.
                    names = tuple(path)
                    pivot = min(range(len(names)), key=lambda k: str(names[k]))
                    cycles.add(names[pivot:] + names[:pivot])
            elif nxt not in path and str(nxt) > str(start):
                walk(start, nxt, path + [nxt])

    for node in sorted(edges, key=str):
        walk(node, node, [node])
    out = []
    for cycle in sorted(cycles, key=lambda c: tuple(str(n) for n in c)):
        chain = " > ".join(str(n) for n in cycle)
        out.append(f"dominance chain forms a cycle: {chain} > {str(cycle[0])}")
    return tuple(out)
