import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from coverkit.automata import SINK, BuchiSpec, Transducer, make_problem
from coverkit.buchi import (COVER, DOMINATE, FANOUT, INF, INIT_ONE, PER_DIRECTION, RANK_DEC, RANK_FIN,
                            RANK_INIT, SINK_DEC, SINK_FIN, SUPPORT, WeightRanking,
                            build_buchi_cover_generator, lift_weights, project_generator, sink_ranks,
                            solve_realizability, validate_weight_ranking, verify_generator)
from coverkit.search import CERTIFIED, NO_CERTIFICATE, solve_weight_ranking
from coverkit.simple import solve_weights
from coverkit.trees import FREE, CoverGenerator, NodeState, build_cover_generator, materialize_prefix
from helpers import buchi_fig2, buchi_specs, fig, random_buchi, random_transducer


def accept_all(inputs, outputs):
    return BuchiSpec(tuple(inputs), tuple(outputs), ("s",),
                     {("s", u, o): "s" for u in inputs for o in outputs}, "s", frozenset({"s"}))


@pytest.fixture(scope="module")
def example():
    d, b = fig("fig2"), buchi_fig2()
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 4)
    assert dec.status == CERTIFIED
    return d, b, p, dec.certificate


def mutate(c, sw=None, tw=None, rank=None):
    def upd(base, new):
        out = dict(base)
        for k, v in (new or {}).items():
            if v is None:
                out.pop(k, None)
            else:
                out[k] = v
        return out
    return WeightRanking(c.memory, c.initial_memory, upd(c.state_weight, sw),
                         upd(c.trans_weight, tw), upd(c.rank, rank), c.literal_initial)


def ids(d, b, p, c):
    return {v.condition for v in validate_weight_ranking(d, b, p, c)}


# -- the example certificate ---------------------------------------------------

def test_example_needs_memory():
    d, b = fig("fig2"), buchi_fig2()
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 1)
    assert dec.status == NO_CERTIFICATE
    assert dec.certificate is None
    # the memoryless search was exhaustive, not cut off by the weight bound
    assert all(e["exhaustive"] for e in dec.stats["tried"])
    assert "not a proof" in dec.to_json()["note"]


def test_example_certificate(example):
    d, b, p, c = example
    assert len(c.memory) == 2  # minimal memory size found by the search, pinned
    assert validate_weight_ranking(d, b, p, c) == []
    doc = json.loads(json.dumps(c.to_json()))
    assert WeightRanking.from_json(doc) == mutate(c, rank={k: None for k, v in c.rank.items() if v == INF})


def test_example_generator(example):
    d, b, p, c = example
    g = build_buchi_cover_generator(d, b, p, c)
    for depth in range(9):
        rep = verify_generator(g, d, b, p, depth)
        assert rep.ok, rep.to_json()
    t = materialize_prefix(g, 2)
    level3 = [path for path in t.level(2) if t.states[path] != FREE
              and (t.states[path].core, t.labels[path]) == ("q0", "c")]
    assert sorted(level3) == [("beta", "alpha"), ("beta", "beta")]
    assert len({t.states[x] for x in level3}) == 2
    # both copies continue with b in direction alpha
    for x in level3:
        assert t.labels[x + ("alpha",)] == "b" if x + ("alpha",) in t.labels else True
    t3 = materialize_prefix(g, 3)
    for x in level3:
        assert t3.labels[x + ("alpha",)] == "b"


def test_rerouted_sink_edge_breaks_acceptance(example):
    d, b, p, c = example
    g = build_buchi_cover_generator(d, b, p, c)
    # send a sink node into a non-accepting sink loop: C -(alpha, b)-> Ba -(beta, b)-> DB is
    # accepting, so build the loop by hand over the non-accepting states C and Bb
    loop_c = NodeState(SINK, 0, "C", "m0", "c")
    loop_b = NodeState(SINK, 0, "Bb", "m0", "b")
    children = dict(g.children)
    labels = dict(g.labels)
    children[loop_c] = (loop_b, loop_b)
    children[loop_b] = (loop_c, loop_c)
    labels[loop_c], labels[loop_b] = "c", "b"
    sink_nodes = [n for n in g.nodes if n.core == SINK]
    victim = sink_nodes[0]
    children[victim] = tuple(loop_b if i == 1 else kid for i, kid in enumerate(children[victim]))
    nodes = g.nodes + (loop_c, loop_b)
    bad = CoverGenerator(g.directions, g.root, nodes, children, labels)
    rep = verify_generator(bad, d, b, p, 4)
    assert not rep.acceptance_ok
    assert any("Bb" in n for n in rep.bad_cycle) and any("/C/" in n for n in rep.bad_cycle)


def test_simple_generator_against_accept_all():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), d.alphabet)
    p = make_problem(d, spec=b)
    g = build_cover_generator(d, 2, solve_weights(d, 2).certificate)
    rep = verify_generator(g, d, b, p, 6)
    assert rep.coverage_ok and rep.acceptance_ok


def test_blocked_edge_is_reported():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), d.alphabet)
    trans = {k: v for k, v in b.trans.items() if k[2] != "a"}
    b2 = BuchiSpec(b.inputs, b.outputs, b.states, trans, b.initial, b.accepting)
    p = make_problem(d, spec=b2)
    g = build_cover_generator(d, 2, solve_weights(d, 2).certificate)
    rep = verify_generator(g, d, b2, p, 3)
    assert rep.blocked and not rep.acceptance_ok


# -- one targeted mutation per condition -------------------------------------

A = ("q1", "Ba", "m0")
E = ("q0", "C", "m1")
ROOT = ("q0", "C", "m0")


def test_mutation_init_one(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, sw={ROOT: 2})) == {INIT_ONE}


def test_mutation_support(example):
    d, b, p, c = example
    # Bb only allows c, but q1 -y-> q2 outputs a
    assert ids(d, b, p, mutate(c, tw={("q1", "Bb", "m0", "y", "alpha", "m0"): 1})) == {SUPPORT}


def test_mutation_fanout(example):
    d, b, p, c = example
    got = ids(d, b, p, mutate(c, tw={ROOT + ("x", "alpha", "m0"): 3}))
    # per-direction budgets sum to the fan-out budget, so FANOUT never fires alone
    assert FANOUT in got and PER_DIRECTION in got


def test_mutation_per_direction():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), d.alphabet)
    p = make_problem(d, spec=b)
    c = lift_weights(d, b, p, solve_weights(d, 2).certificate)
    # q1 has weight 2 and one free slot in direction u1; overfill u0 instead
    got = ids(d, b, p, mutate(c, tw={("q1", "s", "m0", "x", "u0", "m0"): 2}))
    assert got == {PER_DIRECTION}


def test_mutation_dominate(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, sw={A: 2})) == {DOMINATE}


def test_mutation_cover(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, tw={A + ("z", "alpha", "m0"): None})) == {COVER}


def test_mutation_rank_init(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, rank={ROOT: None})) == {RANK_INIT}


def test_mutation_rank_dec(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, rank={E: 1})) == {RANK_DEC}


def test_mutation_rank_fin(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, rank={("q4", "D", "m0"): None})) == {RANK_FIN}


def test_mutation_sink_dec(example):
    d, b, p, c = example
    assert ids(d, b, p, mutate(c, rank={(SINK, "Bb", "m0"): 0})) == {SINK_DEC}


def test_mutation_sink_fin(example):
    d, b, p, c = example
    # an accepting dead end, unreachable from the example
    trans = dict(b.trans)
    b2 = BuchiSpec(b.inputs, b.outputs, b.states + ("Z",), trans, b.initial, b.accepting | {"Z"})
    p2 = make_problem(d, spec=b2)
    assert validate_weight_ranking(d, b2, p2, c) == []
    assert ids(d, b2, p2, mutate(c, rank={(SINK, "Z", "m0"): 0})) == {SINK_FIN}


def test_all_zero_certificate():
    d, b = fig("fig2"), buchi_fig2()
    p = make_problem(d, spec=b)
    c = WeightRanking(("m0",), "m0", {}, {}, {})
    got = ids(d, b, p, c)
    assert {INIT_ONE, RANK_INIT} <= got


def test_keys_outside_declared_sets(example):
    d, b, p, c = example
    with pytest.raises(ValueError, match="outside"):
        validate_weight_ranking(d, b, p, mutate(c, sw={("q0", "nope", "m0"): 1}))


def test_alphabet_mismatch():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), ("a", "b"))
    with pytest.raises(ValueError):
        make_problem(d, spec=b)


def test_literal_initial_anchor():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), d.alphabet)
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 1, literal_initial=True)
    assert dec.certified and dec.certificate.literal_initial
    assert dec.certificate.to_json()["anchor"] == "initial"
    assert validate_weight_ranking(d, b, p, dec.certificate) == []


# -- realizability --------------------------------------------------------------

def test_realizability_accept_all():
    b = accept_all(("u0", "u1"), ("a", "b"))
    res = solve_realizability(b, b.inputs, "u0")
    assert res.realizable and set(res.ranks.values()) == {0}


def test_realizability_blocked_direction():
    trans = {("s0", "u0", "a"): "s0"}
    b = BuchiSpec(("u0", "u1"), ("a",), ("s0",), trans, "s0", frozenset({"s0"}))
    assert not solve_realizability(b, b.inputs, "u0").realizable


def test_realizability_example():
    b = buchi_fig2()
    res = solve_realizability(b, b.inputs, "alpha")
    assert res.realizable
    assert res.ranks["Bb"] == 2 and res.ranks["D"] == 0
    assert max(res.ranks.values()) <= len(b.states)


def test_non_accepting_loop_unrealizable():
    b = BuchiSpec(("u0",), ("a",), ("s0",), {("s0", "u0", "a"): "s0"}, "s0", frozenset())
    res = solve_realizability(b, b.inputs, "u0")
    assert not res.realizable and res.ranks["s0"] == INF


def _stub(b, letter):
    return Transducer(("x",), tuple(b.outputs), ("q0",), {}, "q0", {"q0": letter})


def test_realizability_matches_stub_search():
    rng = random.Random(3)
    for _ in range(50):
        b = random_buchi(rng, rng.randint(1, 4))
        res = solve_realizability(b, b.inputs, b.inputs[0])
        via_stub = any(
            solve_weight_ranking(d, b, make_problem(d, spec=b), 1).certified
            for d in (_stub(b, o) for o in b.outputs)
        )
        assert res.realizable == via_stub


# -- lifting ---------------------------------------------------------------------

@pytest.mark.parametrize("name, k", [("fig1", 2), ("fig2", 2), ("fig4", 2), ("fig3", 3)])
def test_lifted_certificate_projects_to_simple_generator(name, k):
    d = fig(name)
    dirs = tuple(f"u{i}" for i in range(k))
    b = accept_all(dirs, d.alphabet)
    p = make_problem(d, spec=b)
    w = solve_weights(d, k).certificate
    c = lift_weights(d, b, p, w)
    assert validate_weight_ranking(d, b, p, c) == []
    assert set(c.rank.values()) == {0}
    g = build_buchi_cover_generator(d, b, p, c)
    simple = build_cover_generator(d, k, w)
    assert project_generator(g).dumps() == simple.dumps()
    assert verify_generator(g, d, b, p, 5).ok


def test_search_on_accept_all_is_memoryless():
    d = fig("fig2")
    b = accept_all(("u0", "u1"), d.alphabet)
    dec = solve_weight_ranking(d, b, make_problem(d, spec=b), 3)
    assert dec.certified and len(dec.certificate.memory) == 1
    assert set(dec.certificate.rank.values()) <= {0, 1}


def test_single_loop_generator():
    d = Transducer(("x",), ("a",), ("q0",), {("q0", "x"): "q0"}, "q0", {"q0": "a"})
    b = accept_all(("u0",), ("a",))
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 1)
    g = build_buchi_cover_generator(d, b, p, dec.certificate)
    assert len(g.nodes) == 1 and g.children[g.root] == (g.root,)


def test_invalid_certificate_rejected_by_builder(example):
    d, b, p, c = example
    with pytest.raises(ValueError):
        build_buchi_cover_generator(d, b, p, mutate(c, sw={A: 2}))


# -- search bounds and soundness ----------------------------------------------

def test_weight_cap_overflow():
    d, b = fig("fig2"), buchi_fig2()
    with pytest.raises(OverflowError):
        solve_weight_ranking(d, b, make_problem(d, spec=b), 1, weight_cap=2 ** 64)


def test_step_budget_gives_no_certificate(monkeypatch):
    d, b = fig("fig2"), buchi_fig2()
    monkeypatch.setenv("COVERKIT_STEP_BUDGET", "30")
    dec = solve_weight_ranking(d, b, make_problem(d, spec=b), 4)
    assert dec.status == NO_CERTIFICATE
    assert dec.stats["tried"][-1].get("budgetExhausted")


def test_decision_has_no_refutation_status():
    d, b = fig("fig2"), buchi_fig2()
    dec = solve_weight_ranking(d, b, make_problem(d, spec=b), 1)
    assert dec.status in (CERTIFIED, NO_CERTIFICATE)
    assert "uncoverable" not in json.dumps(dec.to_json()).lower()


def _random_instance(seed):
    rng = random.Random(seed)
    d = random_transducer(rng, rng.randint(1, 3), ("a", "b"), density=0.6, max_out=2)
    b = random_buchi(rng, rng.randint(1, 3), ("u0", "u1"), ("a", "b"), density=0.8, accepting=0.5)
    return d, b


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_memoryless_certificates_respect_bounds(seed):
    d, b = _random_instance(seed)
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 1, budget=20000)
    if not dec.certified:
        return
    c = dec.certificate
    assert max(c.state_weight.values()) <= 2 ** (len(d.states) * len(b.states))
    assert max((r for r in c.rank.values() if r != INF), default=0) <= len(d.states) * len(b.states)
    g = build_buchi_cover_generator(d, b, p, c)
    rep = verify_generator(g, d, b, p, 6)
    assert rep.ok, rep.to_json()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 9))
def test_memory_certificates_verify(seed):
    d, b = _random_instance(seed)
    p = make_problem(d, spec=b)
    dec = solve_weight_ranking(d, b, p, 2, budget=20000)
    if dec.certified:
        g = build_buchi_cover_generator(d, b, p, dec.certificate)
        assert verify_generator(g, d, b, p, 5).ok


@settings(max_examples=50, deadline=None)
@given(buchi_specs())
def test_sink_ranks_satisfy_sink_rules(b):
    ranks = sink_ranks(b, b.inputs)
    for s, r in ranks.items():
        if r == INF:
            continue
        for u in b.inputs:
            succ = [ranks[t] for o in b.outputs if (t := b.step(s, u, o)) is not None]
            if s in b.accepting:
                assert any(x != INF for x in succ)
            else:
                assert any(x < r for x in succ)
