from __future__ import annotations

import logging

import pytest

from casts.ontology import MatchDegree, Ontology, OntologyError, degree_match, subsumes


@pytest.fixture
def payments() -> Ontology:
    concepts = {
        "thing",
        "paymentData",
        "account",
        "credit",
        "currentAccount",
        "funds",
        "balance",
    }
    edges = {
        ("paymentData", "thing"),
        ("account", "paymentData"),
        ("credit", "paymentData"),
        ("currentAccount", "account"),
        ("funds", "credit"),
        ("balance", "funds"),
    }
    return Ontology(frozenset(concepts), frozenset(edges))


def test_rejects_cycles():
    with pytest.raises(OntologyError):
        Ontology(frozenset({"a", "b"}), frozenset({("a", "b"), ("b", "a")}))


def test_rejects_unknown_edge_endpoints():
    with pytest.raises(OntologyError):
        Ontology(frozenset({"a"}), frozenset({("a", "ghost")}))


def test_subsumes_is_reflexive_and_transitive(payments):
    assert subsumes("balance", "balance", payments)
    assert subsumes("credit", "balance", payments)
    assert subsumes("thing", "balance", payments)
    assert not subsumes("balance", "credit", payments)
    assert not subsumes("account", "credit", payments)


def test_subsumes_requires_known_concepts(payments):
    with pytest.raises(OntologyError):
        subsumes("ghost", "balance", payments)


def test_degree_exact_on_equal_and_direct_subclass(payments):
    assert degree_match("account", "account", payments) is MatchDegree.EXACT
    assert degree_match("currentAccount", "account", payments) is MatchDegree.EXACT
    # direct subclass the other way is not exact
    assert degree_match("account", "currentAccount", payments) is MatchDegree.SUBSUME


def test_degree_plugin_needs_depth_two_or_more(payments):
    assert degree_match("balance", "credit", payments) is MatchDegree.PLUGIN
    assert degree_match("balance", "paymentData", payments) is MatchDegree.PLUGIN


def test_degree_subsume_when_offered_is_more_general(payments):
    assert degree_match("credit", "balance", payments) is MatchDegree.SUBSUME
    assert degree_match("thing", "account", payments) is MatchDegree.SUBSUME


def test_degree_fail_for_siblings(payments):
    assert degree_match("account", "credit", payments) is MatchDegree.FAIL


def test_unknown_concepts_fail_with_diagnostic(payments, caplog):
    with caplog.at_level(logging.DEBUG, logger="casts.ontology"):
        assert degree_match("mystery", "account", payments) is MatchDegree.FAIL
    assert any("mystery" in record.message for record in caplog.records)


def test_degree_rank_ordering():
    ranks = [
        MatchDegree.EXACT.rank,
        MatchDegree.PLUGIN.rank,
        MatchDegree.SUBSUME.rank,
        MatchDegree.FAIL.rank,
    ]
    assert ranks == sorted(ranks, reverse=True)
    assert str(MatchDegree.PLUGIN) == "plugIn"
