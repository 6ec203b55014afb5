"""End-to-end acceptance gate.

One test per advertised guarantee, goldens first, properties after.
Golden values come from the packaged fixtures; property tests compare
the engine against the deliberately naive implementations in oracles.py.
"""

from __future__ import annotations

import math
import random
import time

from casts.composition import (
    Leaf,
    Par,
    completed_traces,
    explore,
    inject_dependencies,
    verify_expression,
)
from casts.dependency import (
    LabelDependency,
    candidate_details,
    dependency_key,
    extended_label_dependencies,
)
from casts.expr import TRUE, EvaluationError, Var, format_expression
from casts.model import (
    Label,
    Protocol,
    QualifiedLabel,
    Transition,
    label_in_loop,
    previous_labels,
)
from casts.ontology import MatchDegree, Ontology, degree_match
from casts.scenario import (
    fixture_path,
    load_fixture,
    parse_dependency_set,
    parse_scenario,
    serialize_dependency_set,
    serialize_scenario,
)
from casts.semantics import (
    Environment,
    communicate,
    dynamic_update,
    eval_context,
    eval_regular,
    initial_active,
    step_protocol,
)
from casts.session import Choice, Session
from casts.verification import DeadlockKind
from oracles import (
    ExprGen,
    interleaving_language,
    naive_context,
    naive_regular,
    oracle_label_in_loop,
    oracle_previous_labels,
    random_protocol,
)


def dep(text: str) -> LabelDependency:
    dominant, _, dominated = text.partition(" > ")
    return LabelDependency(
        QualifiedLabel.parse(dominant), QualifiedLabel.parse(dominated)
    )


def load_deps(name: str) -> tuple[LabelDependency, ...]:
    return parse_dependency_set(fixture_path(name).read_bytes()).items


def test_criterion_01_road_candidate_detection():
    scenario = load_fixture("road-info.casts.xml")
    started = time.perf_counter()
    candidates = candidate_details(
        scenario.client("ac"), scenario.client("mc"), scenario.ontology
    )
    elapsed = time.perf_counter() - started
    assert {(str(c.pair.left), str(c.pair.right)) for c in candidates} == {
        ("ac:l_ac4", "mc:l_mc4"),
        ("ac:l_ac5", "mc:l_mc5"),
    }
    assert elapsed < 1.0


def test_criterion_02_planning_candidate_detection():
    scenario = load_fixture("planning-hotel.casts.xml")
    started = time.perf_counter()
    candidates = candidate_details(
        scenario.client("pc"), scenario.client("hc"), scenario.ontology
    )
    elapsed = time.perf_counter() - started
    assert {(str(c.pair.left), str(c.pair.right)) for c in candidates} == {
        ("pc:l_ps1", "hc:l_hs2"),
        ("pc:l_ps2", "hc:l_hs1"),
    }
    assert elapsed < 1.0


def test_criterion_03_extension_closures():
    road = load_fixture("road-info.casts.xml")
    extended = extended_label_dependencies(
        road.client("ac"), road.client("mc"), [dep("ac:l_ac4 > mc:l_mc4")]
    )
    assert set(extended) == {
        dep("ac:l_ac1 > mc:l_mc4"),
        dep("ac:l_ac2 > mc:l_mc4"),
        dep("ac:l_ac3 > mc:l_mc4"),
        dep("ac:l_ac4 > mc:l_mc4"),
    }
    assert set(extended) == set(load_deps("road-extended.deps.xml"))

    planning = load_fixture("planning-hotel.casts.xml")
    extended = extended_label_dependencies(
        planning.client("pc"),
        planning.client("hc"),
        load_deps("planning-selected.deps.xml"),
    )
    assert set(extended) == {
        dep("hc:l_hs1 > pc:l_ps1"),
        dep("hc:l_hs2 > pc:l_ps1"),
        dep("pc:l_ps1 > hc:l_hs1"),
        dep("pc:l_ps2 > hc:l_hs1"),
    }
    assert set(extended) == set(load_deps("planning-extended.deps.xml"))


def test_criterion_04_deadlock_verification_goldens():
    planning = load_fixture("planning-hotel.casts.xml")
    expr = inject_dependencies(
        planning.composition, load_deps("planning-extended.deps.xml")
    )
    ((pair, report),) = verify_expression(expr, planning.protocol_map())
    assert pair == ("hc", "pc")
    assert [(f.kind, str(f.first), str(f.second)) for f in report.flagged] == [
        (DeadlockKind.MUTUAL, "hc:l_hs1 > pc:l_ps1", "pc:l_ps1 > hc:l_hs1"),
        (DeadlockKind.CROSSED, "hc:l_hs2 > pc:l_ps1", "pc:l_ps2 > hc:l_hs1"),
    ]

    road = load_fixture("road-info.casts.xml")
    expr = inject_dependencies(road.composition, load_deps("road-extended.deps.xml"))
    ((pair, report),) = verify_expression(expr, road.protocol_map())
    assert pair == ("ac", "mc")
    assert report.is_empty
    assert not report.flagged and not report.chain_warnings


def test_criterion_05_degree_of_match_triple():
    ontology = load_fixture("road-info.casts.xml").ontology
    assert degree_match("currentAccount", "account", ontology) is MatchDegree.EXACT
    assert degree_match("balance", "credit", ontology) is MatchDegree.PLUGIN
    assert degree_match("album", "museum", ontology) is MatchDegree.FAIL


def test_criterion_06_dynamic_semantics_properties():
    started = time.perf_counter()

    # Late binding: a dynamic context update between enablement and the
    # communication changes what the receiver gets; the sender keeps its
    # own environment.
    from casts.model import ContextAttribute, ContextProfile

    sender_proto = Protocol(
        id="snd",
        alphabet=(
            Label(
                "send",
                "event",
                TRUE,
                "share",
                "emission",
                (Var("spot", "Geo", is_context=True), Var("x", "Int")),
            ),
        ),
        states=("s0", "s1"),
        initial="s0",
        finals=("s1",),
        transitions=(Transition("s0", "send", "s1"),),
        context_profile=ContextProfile(
            (ContextAttribute("spot", "start", "dynamic", "public"),)
        ),
    )
    receiver_proto = Protocol(
        id="rcv",
        alphabet=(
            Label(
                "recv",
                "event",
                TRUE,
                "share",
                "reception",
                (Var("where", "Geo"), Var("n", "Int")),
            ),
        ),
        states=("r0", "r1"),
        initial="r0",
        finals=("r1",),
        transitions=(Transition("r0", "recv", "r1"),),
    )
    sender = initial_active(
        sender_proto, Environment.from_dict({"spot": "start", "x": 7})
    )
    receiver = initial_active(receiver_proto)
    ((emit, sender_next),) = step_protocol(sender)
    ((receive, receiver_next),) = step_protocol(receiver)
    moved = sender.with_env(
        dynamic_update(sender.env, Var("spot", "Geo", is_context=True), "moved")
    )
    new_sender, new_receiver = communicate(
        moved, emit, sender_next.with_env(moved.env), receiver, receive, receiver_next
    )
    assert new_receiver.env.lookup("where") == "moved"
    assert new_receiver.env.lookup("n") == 7
    # communication never mutates the sender's environment
    assert new_sender.env == moved.env
    assert sender.env.lookup("spot") == "start"
    assert receiver.env.bindings == ()

    # Two-stage evaluation equals the substituting oracle on 1,000 random
    # expressions of depth <= 4: same errors, same results, same types.
    rng = random.Random(424242)
    ground = 0
    for case in range(1000):
        gen = ExprGen(rng)
        expr = gen.gen(rng.choice(("int", "bool")), 4)
        env = Environment.from_dict(gen.env)
        try:
            expected = naive_regular(gen.env, expr)
        except EvaluationError:
            expected = None
        try:
            actual = eval_regular(env, expr)
        except EvaluationError:
            actual = None
        assert (expected is None) == (actual is None), f"case {case}"
        if expected is None:
            continue
        assert format_expression(actual) == format_expression(expected), f"case {case}"
        try:
            expected_value = naive_context(gen.env, expected)
        except EvaluationError:
            expected_value = None
        try:
            actual_value = eval_context(env, actual)
        except EvaluationError:
            actual_value = None
        assert (expected_value is None) == (actual_value is None), f"case {case}"
        if expected_value is not None:
            assert actual_value == expected_value, f"case {case}"
            assert type(actual_value) is type(expected_value), f"case {case}"
            ground += 1
    assert ground > 100

    # previous_labels and label_in_loop equal the transitive-closure
    # oracle on 200 random protocols with up to 8 states.
    for index in range(200):
        protocol = random_protocol(rng, f"r{index}", max_states=8)
        for label in protocol.alphabet:
            got = {prev.id for prev in previous_labels(label.id, protocol)}
            assert got == oracle_previous_labels(protocol, label.id), protocol.id
            assert label_in_loop(label.id, protocol) == oracle_label_in_loop(
                protocol, label.id
            ), protocol.id

    assert time.perf_counter() - started < 30.0


def test_criterion_07_composition_soundness():
    road = load_fixture("road-info.casts.xml")
    extended = load_deps("road-extended.deps.xml")
    expr = inject_dependencies(road.composition, extended)
    started = time.perf_counter()
    result = explore(
        expr, road.protocol_map(), road.service_actives(), road.client_environments()
    )
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0
    assert result.state_count < 10_000
    assert result.deadlocks == ()
    assert len(result.completions) >= 1

    # every completed trace respects every (non-loop) dependency: the
    # dominated label never fires before its dominant
    traces = completed_traces(result)
    assert traces
    for trace in traces:
        fired = [str(q) for tag in trace for q in tag.fired]
        for item in extended:
            dominant, dominated = str(item.dominant), str(item.dominated)
            assert dominant in fired and dominated in fired
            assert fired.index(dominant) < fired.index(dominated)

    planning = load_fixture("planning-hotel.casts.xml")
    expr = inject_dependencies(
        planning.composition, load_deps("planning-extended.deps.xml")
    )
    started = time.perf_counter()
    result = explore(
        expr,
        planning.protocol_map(),
        planning.service_actives(),
        planning.client_environments(),
        force=True,
    )
    assert time.perf_counter() - started < 5.0
    assert result.state_count < 10_000
    assert len(result.deadlocks) >= 1
    assert result.completions == ()


def test_criterion_08_unconstrained_interleaving_oracle():
    rng = random.Random(88)
    started = time.perf_counter()
    for index in range(50):
        first = random_protocol(rng, f"a{index}", max_states=5, acyclic=True)
        second = random_protocol(rng, f"b{index}", max_states=5, acyclic=True)
        expr = Par(Leaf(first.id), Leaf(second.id))
        result = explore(expr, {first.id: first, second.id: second})
        assert not result.truncated
        engine = {
            tuple(tag.fired[0].label_id for tag in trace)
            for trace in completed_traces(result)
        }
        assert engine == interleaving_language(first, second), index
    assert time.perf_counter() - started < 30.0


def _scaled_protocol(pid: str, labels: int, salt: int) -> Protocol:
    alphabet = []
    transitions = []
    for j in range(labels):
        payload = tuple(
            Var(
                f"a{j}_{i}",
                f"T{(j * 17 + i * 5 + salt) % 10}",
                concept=f"c{(j * 17 + i * 5 + salt) % 10}",
            )
            for i in range(3)
        )
        alphabet.append(Label(f"l{j}", "event", TRUE, f"op{j % 6}", "emission", payload))
        transitions.append(Transition(f"s{j}", f"l{j}", f"s{j + 1}"))
    return Protocol(
        id=pid,
        alphabet=tuple(alphabet),
        states=tuple(f"s{i}" for i in range(labels + 1)),
        initial="s0",
        finals=(f"s{labels}",),
        transitions=tuple(transitions),
    )


def test_criterion_09_candidate_detection_scaling():
    """Doubling the total label count multiplies detection time by about
    four: the label-pair/argument-pair scan is quadratic."""
    ontology = Ontology(
        frozenset({"thing", *(f"c{i}" for i in range(10))}),
        frozenset((f"c{i}", "thing") for i in range(10)),
    )
    sizes = (50, 100, 200, 400, 800)
    timings = []
    for total in sizes:
        first = _scaled_protocol("p", total // 2, salt=0)
        second = _scaled_protocol("q", total // 2, salt=3)
        calls = max(1, 800 // total)
        best = math.inf
        for _ in range(3):
            started = time.perf_counter()
            for _ in range(calls):
                candidate_details(first, second, ontology)
            best = min(best, (time.perf_counter() - started) / calls)
        timings.append(best)

    xs = [math.log(n) for n in sizes]
    ys = [math.log(t) for t in timings]
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / sum(
        (x - mean_x) ** 2 for x in xs
    )
    assert 1.5 <= slope <= 2.5, f"scaling exponent {slope:.2f} outside 2.0 +/- 0.5"


def test_criterion_10_round_trip_properties():
    for name in (
        "road-info.casts.xml",
        "planning-hotel.casts.xml",
        "loop.casts.xml",
        "mismatch.casts.xml",
    ):
        path = fixture_path(name)
        data = path.read_bytes()
        assert serialize_scenario(parse_scenario(data, base_path=path.parent)) == data

    for name in (
        "road-selected.deps.xml",
        "road-extended.deps.xml",
        "planning-selected.deps.xml",
        "planning-extended.deps.xml",
        "loop-ping.deps.xml",
        "loop-done.deps.xml",
    ):
        data = fixture_path(name).read_bytes()
        assert serialize_dependency_set(parse_dependency_set(data)) == data

    # session files at every observable stage
    from casts.dependency import Order

    fresh = Session.from_xml(fixture_path("road-info.casts.xml").read_bytes())
    assert Session.load(fresh.save()).save() == fresh.save()

    fresh.analyze()
    fresh.select([Choice(0, 0, Order.LEFT_FIRST)])
    assert Session.load(fresh.save()).save() == fresh.save()

    fresh.step(0)
    fresh.step(0)
    assert Session.load(fresh.save()).save() == fresh.save()

    flagged = Session.from_xml(fixture_path("planning-hotel.casts.xml").read_bytes())
    flagged.analyze()
    flagged.select(
        [Choice(0, 0, Order.RIGHT_FIRST), Choice(0, 1, Order.LEFT_FIRST)]
    )
    flagged.trace(force=True)
    assert Session.load(flagged.save()).save() == flagged.save()
