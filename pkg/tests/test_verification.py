from __future__ import annotations

import pytest

from casts.dependency import LabelDependency
from casts.expr import TRUE
from casts.model import Label, Protocol, QualifiedLabel, Transition
from casts.verification import (
    DeadlockKind,
    label_dependency_verification,
)


def chain(pid: str, n: int) -> Protocol:
    """Linear protocol with labels l1..ln."""
    labels = tuple(
        Label(f"l{i}", "event", TRUE, f"op{i}", "emission", ()) for i in range(1, n + 1)
    )
    return Protocol(
        id=pid,
        alphabet=labels,
        states=tuple(f"s{i}" for i in range(n + 1)),
        initial="s0",
        finals=(f"s{n}",),
        transitions=tuple(
            Transition(f"s{i}", f"l{i+1}", f"s{i+1}") for i in range(n)
        ),
    )


def dep(a: str, b: str) -> LabelDependency:
    return LabelDependency(QualifiedLabel.parse(a), QualifiedLabel.parse(b))


def test_mutual_deadlock_detected():
    p, q = chain("p", 2), chain("q", 2)
    report = label_dependency_verification(
        p, q, [dep("p:l1", "q:l1"), dep("q:l1", "p:l1")]
    )
    assert len(report.flagged) == 1
    assert report.flagged[0].kind is DeadlockKind.MUTUAL
    assert not report.is_empty


def test_crossed_deadlock_detected():
    p, q = chain("p", 2), chain("q", 2)
    # q:l2 waits on p:l1 while p:l2 waits on q:l1; each dominated label
    # precedes the other pair's dominant in its own protocol
    report = label_dependency_verification(
        p, q, [dep("q:l2", "p:l1"), dep("p:l2", "q:l1")]
    )
    assert [f.kind for f in report.flagged] == [DeadlockKind.CROSSED]


def test_mutual_takes_priority_over_crossed():
    p, q = chain("p", 2), chain("q", 2)
    report = label_dependency_verification(
        p, q, [dep("p:l1", "q:l1"), dep("q:l1", "p:l1")]
    )
    assert all(f.kind is DeadlockKind.MUTUAL for f in report.flagged)


def test_consistent_sets_pass():
    p, q = chain("p", 3), chain("q", 3)
    report = label_dependency_verification(
        p, q, [dep("p:l1", "q:l2"), dep("p:l2", "q:l3")]
    )
    assert report.is_empty
    assert report.flagged == ()


def test_duplicates_do_not_flag():
    p, q = chain("p", 2), chain("q", 2)
    report = label_dependency_verification(
        p, q, [dep("p:l1", "q:l1"), dep("p:l1", "q:l1")]
    )
    assert report.is_empty


def test_independent_labels_do_not_cross():
    p, q = chain("p", 2), chain("q", 2)
    # dominated labels do not precede the other dominant (l1 never follows l2)
    report = label_dependency_verification(
        p, q, [dep("q:l1", "p:l2"), dep("p:l1", "q:l2")]
    )
    assert report.is_empty


def test_chain_warning_for_longer_cycles():
    p, q = chain("p", 3), chain("q", 3)
    # dominance cycle of length four: p:l1 > q:l1 > p:l2 > q:l2 > p:l1
    deps = [
        dep("p:l1", "q:l1"),
        dep("q:l1", "p:l2"),
        dep("p:l2", "q:l2"),
        dep("q:l2", "p:l1"),
    ]
    report = label_dependency_verification(p, q, deps)
    assert report.chain_warnings
    assert all("cycle" in w for w in report.chain_warnings)
    # chain warnings do not flag pairs by themselves
    assert all(
        f.kind in (DeadlockKind.MUTUAL, DeadlockKind.CROSSED) for f in report.flagged
    )


def test_flagged_explanations_mention_both_dependencies():
    p, q = chain("p", 2), chain("q", 2)
    report = label_dependency_verification(
        p, q, [dep("p:l1", "q:l1"), dep("q:l1", "p:l1")]
    )
    text = report.flagged[0].explanation
    assert "p:l1" in text and "q:l1" in text
