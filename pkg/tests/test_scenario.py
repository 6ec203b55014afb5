from __future__ import annotations

import pytest

from casts.dependency import Stage
from casts.expr import TRUE, Var
from casts.ontology import subsumes
from casts.scenario import (
    ScenarioFormatError,
    fixture_path,
    load_fixture,
    load_scenario,
    parse_dependency_set,
    parse_ontology,
    parse_scenario,
    serialize_dependency_set,
    serialize_ontology,
    serialize_scenario,
    write_atomic,
)

SCENARIO_FIXTURES = [
    "road-info.casts.xml",
    "planning-hotel.casts.xml",
    "loop.casts.xml",
    "mismatch.casts.xml",
]
DEPS_FIXTURES = [
    "road-selected.deps.xml",
    "road-extended.deps.xml",
    "planning-selected.deps.xml",
    "planning-extended.deps.xml",
    "loop-ping.deps.xml",
    "loop-done.deps.xml",
]


@pytest.fixture
def planning_text() -> str:
    return fixture_path("planning-hotel.casts.xml").read_text()


def mutate(text: str, old: str, new: str) -> bytes:
    assert old in text, f"mutation anchor {old!r} not found"
    return text.replace(old, new).encode()


## Fixture loading


def test_fixtures_load(road, planning, loop_scn):
    assert [p.id for p in road.clients] == ["rc", "ac", "mc"]
    assert [p.id for p in road.services] == ["rs", "es", "ms"]
    assert [p.id for p in planning.clients] == ["pc", "hc"]
    assert loop_scn.client("lc").initial == "s0"
    with pytest.raises(ScenarioFormatError, match="no client protocol"):
        loop_scn.client("ls")


def test_fixture_path_rejects_unknown_names():
    with pytest.raises(FileNotFoundError):
        fixture_path("does-not-exist.xml")


@pytest.mark.parametrize("name", SCENARIO_FIXTURES)
def test_scenario_round_trip_is_byte_stable(name):
    data = fixture_path(name).read_bytes()
    scenario = parse_scenario(data, base_path=fixture_path(name).parent)
    once = serialize_scenario(scenario)
    assert once == data
    assert serialize_scenario(parse_scenario(once)) == once


@pytest.mark.parametrize("name", DEPS_FIXTURES)
def test_dependency_set_round_trip_is_byte_stable(name):
    data = fixture_path(name).read_bytes()
    assert serialize_dependency_set(parse_dependency_set(data)) == data


def test_parsed_protocols_carry_signatures(road):
    rc = road.client("rc")
    assert rc.signature.operations
    profile = rc.signature.get("reqRoute")
    assert profile is not None and profile.role == "required"


## Strict parsing


def test_rejects_malformed_xml():
    with pytest.raises(ScenarioFormatError, match="not well-formed"):
        parse_scenario(b"<scenario version='1'>")


def test_rejects_wrong_root_element():
    with pytest.raises(ScenarioFormatError, match="expected root element"):
        parse_scenario(b"<protocol id='x' />")


def test_rejects_missing_and_unsupported_version(planning_text):
    with pytest.raises(ScenarioFormatError, match="missing required attribute"):
        parse_scenario(mutate(planning_text, ' version="1"', ""))
    with pytest.raises(ScenarioFormatError, match="not supported"):
        parse_scenario(mutate(planning_text, 'version="1"', 'version="9"'))


def test_rejects_unknown_attributes_and_elements(planning_text):
    with pytest.raises(ScenarioFormatError, match="unknown attribute"):
        parse_scenario(mutate(planning_text, 'version="1"', 'version="1" extra="x"'))
    with pytest.raises(ScenarioFormatError, match="unknown child"):
        parse_scenario(mutate(planning_text, "<clients>", "<wat /><clients>"))


def test_rejects_duplicate_protocol_ids(planning_text):
    with pytest.raises(ScenarioFormatError, match="duplicate protocol ids"):
        parse_scenario(mutate(planning_text, '<protocol id="hc">', '<protocol id="pc">'))


def test_rejects_missing_sections(planning_text):
    with pytest.raises(ScenarioFormatError, match="missing <ontology>"):
        parse_scenario(b'<scenario version="1"><clients /></scenario>')
    with pytest.raises(ScenarioFormatError, match="missing <clients>"):
        parse_scenario(b'<scenario version="1"><ontology /></scenario>')
    with pytest.raises(ScenarioFormatError, match="no client protocols"):
        parse_scenario(
            b'<scenario version="1"><ontology /><clients />'
            b'<composition expr="x" /></scenario>'
        )
    with pytest.raises(ScenarioFormatError, match="missing <composition>"):
        parse_scenario(mutate(planning_text, '<composition expr="pc ||[] hc" />', ""))


def test_composition_must_reference_clients_only(planning_text):
    with pytest.raises(ScenarioFormatError, match="not a client protocol"):
        parse_scenario(mutate(planning_text, 'expr="pc ||[] hc"', 'expr="pc ||[] ps"'))
    with pytest.raises(ScenarioFormatError, match="not a client protocol"):
        parse_scenario(mutate(planning_text, 'expr="pc ||[] hc"', 'expr="pc ||[] zz"'))


def test_composition_syntax_errors_are_wrapped(planning_text):
    with pytest.raises(ScenarioFormatError, match="parenthes"):
        parse_scenario(mutate(planning_text, 'expr="pc ||[] hc"', 'expr="pc . a + b"'))


def test_instances_validation(planning_text):
    with pytest.raises(ScenarioFormatError, match="services only"):
        parse_scenario(
            mutate(planning_text, '<protocol id="pc">', '<protocol id="pc" instances="2">')
        )
    with pytest.raises(ScenarioFormatError, match="must be >= 1"):
        parse_scenario(
            mutate(planning_text, '<protocol id="ps">', '<protocol id="ps" instances="0">')
        )
    with pytest.raises(ScenarioFormatError, match="must be an integer"):
        parse_scenario(
            mutate(planning_text, '<protocol id="ps">', '<protocol id="ps" instances="x">')
        )


def test_state_final_must_be_boolean(planning_text):
    with pytest.raises(ScenarioFormatError, match="final must be true or false"):
        parse_scenario(mutate(planning_text, 'final="true"', 'final="yes"'))


def test_tau_labels_take_no_event_parts(planning_text):
    broken = mutate(
        planning_text,
        '<label id="l_ps1" kind="event" op="reqPlan" dir="emission">',
        '<label id="l_ps1" kind="tau" op="reqPlan" dir="emission">',
    )
    with pytest.raises(ScenarioFormatError, match="tau labels take no"):
        parse_scenario(broken)


def test_label_kind_and_direction_are_checked(planning_text):
    with pytest.raises(ScenarioFormatError, match="kind must be tau or event"):
        parse_scenario(mutate(planning_text, 'kind="event" op="reqPlan"', 'kind="evnt" op="reqPlan"'))
    with pytest.raises(ScenarioFormatError, match="dir must be emission or reception"):
        parse_scenario(mutate(planning_text, 'dir="emission"', 'dir="send"'))


def test_broken_protocol_structure_is_reported(planning_text):
    with pytest.raises(ScenarioFormatError, match="not well formed"):
        parse_scenario(mutate(planning_text, '<initial ref="s0" />', '<initial ref="nope" />'))


def test_context_binds_must_reference_known_protocols(planning_text):
    with pytest.raises(ScenarioFormatError, match="unknown protocol 'zz'"):
        parse_scenario(mutate(planning_text, '<context protocol="pc">', '<context protocol="zz">'))
    with pytest.raises(ScenarioFormatError, match="context for pc"):
        parse_scenario(mutate(planning_text, "value=\"'GranVia-3'\"", 'value="not a value"'))


def test_bad_guard_is_reported(planning_text):
    broken = mutate(
        planning_text,
        '<label id="l_ps1" kind="event" op="reqPlan" dir="emission">',
        '<label id="l_ps1" kind="event" op="reqPlan" dir="emission" guard="eq(">',
    )
    with pytest.raises(ScenarioFormatError, match="bad guard"):
        parse_scenario(broken)


def test_literal_args_take_no_variable_attributes(planning_text):
    broken = mutate(
        planning_text,
        '<arg name="address" type="Address" />',
        '<arg literal="3" name="address" />',
    )
    with pytest.raises(ScenarioFormatError, match="literal args take no other"):
        parse_scenario(broken)


def test_arg_context_flag_must_be_boolean(planning_text):
    broken = mutate(
        planning_text,
        '<arg name="address" type="Address" />',
        '<arg name="address" type="Address" context="maybe" />',
    )
    with pytest.raises(ScenarioFormatError, match="context must be true or false"):
        parse_scenario(broken)


## Dependency file references in compositions


def test_composition_dependency_refs_resolve_against_base_path(tmp_path, planning_text):
    deps = fixture_path("planning-selected.deps.xml").read_bytes()
    write_atomic(tmp_path / "chosen.deps.xml", deps)
    write_atomic(
        tmp_path / "scn.xml", mutate(planning_text, "||[]", "||[chosen.deps.xml]")
    )
    scenario = load_scenario(tmp_path / "scn.xml")
    par = scenario.composition
    assert len(par.deps) == 2
    assert par.ref == "chosen.deps.xml"


def test_composition_dependency_ref_requires_base_path(planning_text):
    with pytest.raises(ScenarioFormatError, match="without a base path"):
        parse_scenario(mutate(planning_text, "||[]", "||[chosen.deps.xml]"))


def test_composition_dependency_ref_must_exist(tmp_path, planning_text):
    write_atomic(tmp_path / "scn.xml", mutate(planning_text, "||[]", "||[gone.xml]"))
    with pytest.raises(ScenarioFormatError, match="dependency file not found"):
        load_scenario(tmp_path / "scn.xml")


def test_composition_rejects_unordered_candidate_files(tmp_path, planning_text):
    candidates = (
        b'<?xml version=\'1.0\' encoding=\'utf-8\'?>\n'
        b'<dependencySet version="1" stage="candidates">\n'
        b'  <pair left="pc:l_ps1" right="hc:l_hs2" />\n'
        b"</dependencySet>\n"
    )
    write_atomic(tmp_path / "raw.deps.xml", candidates)
    write_atomic(tmp_path / "scn.xml", mutate(planning_text, "||[]", "||[raw.deps.xml]"))
    with pytest.raises(ScenarioFormatError, match="unordered candidates"):
        load_scenario(tmp_path / "scn.xml")


## Dependency set files


def test_dependency_set_parses_stage_and_items():
    deps = parse_dependency_set(fixture_path("road-extended.deps.xml").read_bytes())
    assert deps.stage is Stage.EXTENDED
    assert [str(d) for d in deps.items] == [
        "ac:l_ac1 > mc:l_mc4",
        "ac:l_ac2 > mc:l_mc4",
        "ac:l_ac3 > mc:l_mc4",
        "ac:l_ac4 > mc:l_mc4",
    ]


def test_dependency_set_rejects_unknown_stage():
    bad = b'<dependencySet version="1" stage="later"><dep dominant="a:x" dominated="b:y" /></dependencySet>'
    with pytest.raises(ScenarioFormatError, match="unknown dependency stage"):
        parse_dependency_set(bad)


def test_dependency_set_children_must_match_stage():
    mixed = (
        b'<dependencySet version="1" stage="candidates">'
        b'<dep dominant="a:x" dominated="b:y" /></dependencySet>'
    )
    with pytest.raises(ScenarioFormatError, match="unknown child"):
        parse_dependency_set(mixed)
    mixed = (
        b'<dependencySet version="1" stage="selected">'
        b'<pair left="a:x" right="b:y" /></dependencySet>'
    )
    with pytest.raises(ScenarioFormatError, match="unknown child"):
        parse_dependency_set(mixed)


def test_dependency_set_rejects_unqualified_labels():
    bad = (
        b'<dependencySet version="1" stage="selected">'
        b'<dep dominant="justalabel" dominated="b:y" /></dependencySet>'
    )
    with pytest.raises(ScenarioFormatError, match="protocol:label"):
        parse_dependency_set(bad)


## Ontology files


def test_ontology_standalone_round_trip(road):
    data = serialize_ontology(road.ontology)
    again = parse_ontology(data)
    assert serialize_ontology(again) == data
    assert subsumes("contextInfo", "traffic", again)


def test_ontology_rejects_unknown_children():
    bad = b'<ontology version="1"><klass name="x" /></ontology>'
    with pytest.raises(ScenarioFormatError, match="unknown child"):
        parse_ontology(bad)


## Runtime views


def test_initial_environment_overlays_binds_on_profile(road):
    rc = road.client("rc")
    env = road.initial_environment(rc)
    assert env.lookup("loc") == "36.7,-4.4"  # from the context profile
    assert env.lookup("dest") == "Malaga"  # from the scenario binds
    envs = road.client_environments()
    assert set(envs) == {"rc", "ac", "mc"}


def test_binds_override_profile_values(planning_text):
    text = mutate(
        planning_text,
        '<protocol id="pc">',
        '<protocol id="pc"><contextProfile>'
        '<contextAttr name="address" value="\'Nowhere\'" kind="static" visibility="public" />'
        "</contextProfile>",
    ).decode()
    scenario = parse_scenario(text.encode())
    env = scenario.initial_environment(scenario.client("pc"))
    assert env.lookup("address") == "GranVia-3"


def test_service_actives_expand_instances(planning_text):
    scenario = parse_scenario(
        mutate(planning_text, '<protocol id="ps">', '<protocol id="ps" instances="3">')
    )
    actives = scenario.service_actives()
    assert [a.protocol.id for a in actives] == ["ps#1", "ps#2", "ps#3", "hs"]
    # expanded instances keep the original behaviour
    assert all(a.state == "p0" for a in actives[:3])


def test_instances_of_one_keep_the_plain_id(planning_text):
    scenario = parse_scenario(
        mutate(planning_text, '<protocol id="ps">', '<protocol id="ps" instances="1">')
    )
    assert [a.protocol.id for a in scenario.service_actives()] == ["ps", "hs"]


def test_service_environments_come_from_profile_and_binds(planning):
    actives = planning.service_actives()
    ps = next(a for a in actives if a.protocol.id == "ps")
    assert ps.env.lookup("area") == "map-sector-7"


## Atomic writes


def test_write_atomic_replaces_and_leaves_no_droppings(tmp_path):
    target = tmp_path / "out.xml"
    write_atomic(target, b"first")
    write_atomic(target, b"second")
    assert target.read_bytes() == b"second"
    assert [p.name for p in tmp_path.iterdir()] == ["out.xml"]


## Argument parsing details


def test_context_args_parse_as_context_variables(road):
    rc = road.client("rc")
    args = rc.label("l_rc1").payload
    assert isinstance(args[1], Var)
    assert args[1].is_context
    assert args[1].name == "loc"


def test_guards_survive_round_trips(road):
    es = next(p for p in road.services if p.id == "es")
    data = serialize_scenario(road)
    assert b"guard=" in data
    label = es.label("l_es2a")
    assert label.guard != TRUE
    again = parse_scenario(data)
    es2 = next(p for p in again.services if p.id == "es")
    assert es2.label("l_es2a").guard == label.guard
    # the constant-true guard is left implicit in the file
    assert b'guard="true' not in data
