"""Combined weight-rankings: validation, realizability, witness generators, verification.

A class is a triple ``(q, s, m)``: a transducer state, the DBW state reached
after reading the node's (direction, letter), and a memory value.  Weights
count how many tree nodes of a class carry each run; ranks bound how long a
path may avoid accepting DBW states.  The sink ``q⊥`` marks subtrees that no
longer cover the transducer and only keep the DBW happy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import networkx as nx

from .automata import (SINK, BuchiSpec, CoverProblem, Transducer, initial_spec_state,
                       require_deterministic)
from .simple import Violation, WeightDistribution, validate_weights
from .trees import FREE, CoverGenerator, NodeState, check_coverage, materialize_prefix, reachable_nodes

INF = math.inf

INIT_ONE = "INIT_ONE"
SUPPORT = "SUPPORT"
FANOUT = "FANOUT"
PER_DIRECTION = "PER_DIRECTION"
DOMINATE = "DOMINATE"
COVER = "COVER"
RANK_INIT = "RANK_INIT"
RANK_DEC = "RANK_DEC"
RANK_FIN = "RANK_FIN"
SINK_DEC = "SINK_DEC"
SINK_FIN = "SINK_FIN"
CONDITIONS = (INIT_ONE, SUPPORT, FANOUT, PER_DIRECTION, DOMINATE, COVER,
              RANK_INIT, RANK_DEC, RANK_FIN, SINK_DEC, SINK_FIN)


def _rank_json(r):
    return "inf" if r == INF else r


def _rank_parse(v):
    if v == "inf":
        return INF
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ValueError(f"rank must be a nonnegative integer or 'inf', got {v!r}")
    return v


@dataclass(frozen=True)
class WeightRanking:
    """Sparse certificate: absent weights are 0 and absent ranks are infinite."""

    memory: tuple[str, ...]
    initial_memory: str
    state_weight: Mapping[tuple[str, str, str], int]
    trans_weight: Mapping[tuple[str, str, str, str, str, str], int]
    rank: Mapping[tuple[str, str, str], float]
    literal_initial: bool = False

    def w(self, c) -> int:
        return self.state_weight.get(c, 0)

    def d(self, c):
        return self.rank.get(c, INF)

    def to_json(self) -> dict:
        return {
            "memory": list(self.memory),
            "initialMemory": self.initial_memory,
            "anchor": "initial" if self.literal_initial else "post-initial",
            "stateWeight": {"/".join(k): v for k, v in self.state_weight.items() if v},
            "transWeight": {"/".join(k): v for k, v in self.trans_weight.items() if v},
            "rank": {"/".join(k): _rank_json(v) for k, v in self.rank.items() if v != INF},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WeightRanking":
        def split(key, n):
            parts = key.split("/")
            if len(parts) != n:
                raise ValueError(f"key {key!r} should have {n} '/'-separated parts")
            return tuple(parts)

        try:
            memory = tuple(doc["memory"])
            sw = {split(k, 3): int(v) for k, v in doc.get("stateWeight", {}).items()}
            tw = {split(k, 6): int(v) for k, v in doc.get("transWeight", {}).items()}
            rk = {split(k, 3): _rank_parse(v) for k, v in doc.get("rank", {}).items()}
            m0 = doc.get("initialMemory", memory[0] if memory else None)
        except (KeyError, AttributeError, TypeError) as exc:
            raise ValueError(f"malformed weight-ranking certificate: {exc}") from None
        anchor = doc.get("anchor", "post-initial")
        if anchor not in ("initial", "post-initial"):
            raise ValueError(f"unknown anchor {anchor!r}")
        return cls(memory, m0, sw, tw, rk, anchor == "initial")


# -- realizability -----------------------------------------------------------

@dataclass(frozen=True)
class Realizability:
    realizable: bool
    ranks: Mapping[str, float]
    root_letter: str | None = None

    def to_json(self, b: BuchiSpec | None = None) -> dict:
        states = b.states if b is not None else sorted(self.ranks)
        return {
            "realizable": self.realizable,
            "rootLetter": self.root_letter,
            "rank": {s: _rank_json(self.ranks[s]) for s in states},
        }


def sink_ranks(b: BuchiSpec, branching) -> dict[str, float]:
    """Least ranks for the sink rules: a Buchi game won by the tree builder.

    Accepting winners get rank 0.  A non-accepting state gets rank ``i`` when
    it first enters the attractor of the accepting winners at layer ``i``.
    """
    dirs = tuple(branching)
    acc = set(b.accepting)

    def cpre(target: set) -> set:
        return {s for s in b.states
                if all(any(b.step(s, u, o) in target for o in b.outputs) for u in dirs)}

    z = set(b.states)
    while True:
        base = acc & cpre(z)
        layers = [base]
        y = set(base)
        while True:
            new = (cpre(y) - acc) - y
            if not new:
                break
            layers.append(new)
            y |= new
        if y == z:
            break
        z = y
    ranks = {s: INF for s in b.states}
    for i, layer in enumerate(layers):
        for s in layer:
            ranks[s] = i
    return ranks


def solve_realizability(b: BuchiSpec, branching, root: str) -> Realizability:
    ranks = sink_ranks(b, branching)
    for o in b.outputs:
        s = b.step(b.initial, root, o)
        if s is not None and ranks[s] != INF:
            return Realizability(True, ranks, o)
    return Realizability(False, ranks, None)


# -- validation --------------------------------------------------------------

def _check_keys(d: Transducer, b: BuchiSpec, p: CoverProblem, c: WeightRanking) -> None:
    if tuple(b.inputs) != tuple(p.branching):
        raise ValueError("spec inputs differ from the branching set")
    if not set(d.alphabet) <= set(b.outputs):
        raise ValueError("spec outputs do not include the transducer alphabet")
    if not c.memory or c.initial_memory not in c.memory:
        raise ValueError("memory must be nonempty and contain the initial memory")
    Q, S, M = set(d.states), set(b.states), set(c.memory)
    dirs, ups = set(d.directions), set(p.branching)
    for (q, s, m) in c.state_weight:
        if q not in Q or s not in S or m not in M:
            raise ValueError(f"state weight key {q}/{s}/{m} outside the declared sets")
    for (q, s, m, psi, u, m2) in c.trans_weight:
        if q not in Q or s not in S or m not in M or psi not in dirs or u not in ups or m2 not in M:
            raise ValueError(f"transition weight key {q}/{s}/{m}/{psi}/{u}/{m2} outside the declared sets")
    for (q, s, m) in c.rank:
        if (q not in Q and q != SINK) or s not in S or m not in M:
            raise ValueError(f"rank key {q}/{s}/{m} outside the declared sets")


def _target(d, b, q, s, psi, u):
    t = d.trans.get((q, psi))
    if t is None:
        return None
    s2 = b.step(s, u, d.label[t])
    return None if s2 is None else (t, s2)


def validate_weight_ranking(d: Transducer, b: BuchiSpec, p: CoverProblem,
                            c: WeightRanking) -> list[Violation]:
    """Every violated condition of the certificate; an empty list means valid.

    Beyond the per-tuple conditions, two joint conditions are checked.
    DOMINATE is evaluated per (class, psi, target class): the children sent
    there over all directions and memories must be at least the target's
    weight, and a target that receives children must have positive weight.
    COVER requires that the root class sends children along every
    transition of the initial state, and that whenever a class sends
    children along psi, the target classes together send children along
    every transition of the psi-successor.
    """
    require_deterministic(d)
    _check_keys(d, b, p, c)
    out: list[Violation] = []
    ups = p.branching
    k = len(ups)
    acc = b.accepting
    m0 = c.initial_memory
    s_init = initial_spec_state(d, b, p, c.literal_initial)
    root = (d.initial, s_init, m0)

    if s_init is None:
        out.append(Violation(INIT_ONE, (d.initial, "-", m0), None, 1,
                             "the root letter is rejected by the Buchi spec"))
        out.append(Violation(RANK_INIT, (d.initial, "-", m0), None, None,
                             "the root letter is rejected by the Buchi spec"))
    else:
        if c.w(root) != 1:
            out.append(Violation(INIT_ONE, root, c.w(root), 1, f"w{root}={c.w(root)}, expected 1"))
        if c.d(root) == INF:
            out.append(Violation(RANK_INIT, root, "inf", None, f"rank of {root} is infinite"))

    # group positive transition weights by source class
    groups: dict[tuple, list] = {}
    for key, v in c.trans_weight.items():
        if v < 0:
            raise ValueError(f"negative weight at {'/'.join(key)}")
        if v == 0:
            continue
        q, s, m, psi, u, m2 = key
        tgt = _target(d, b, q, s, psi, u)
        if tgt is None:
            out.append(Violation(SUPPORT, key, v, 0,
                                 f"weight {v} on a transition that is not defined in both machines"))
            continue
        groups.setdefault((q, s, m), []).append((psi, u, m2, tgt + (m2,), v))
    for cls_, v in c.state_weight.items():
        if v < 0:
            raise ValueError(f"negative weight at {'/'.join(cls_)}")

    classes = sorted(set(groups) | {k_ for k_, v in c.state_weight.items() if v > 0})
    for C in classes:
        wc = c.w(C)
        gs = groups.get(C, [])
        total = sum(g[4] for g in gs)
        if k * wc < total:
            out.append(Violation(FANOUT, C, k * wc, total, f"{k}*w{C}={k * wc} < outgoing sum {total}"))
        for u in ups:
            su = sum(g[4] for g in gs if g[1] == u)
            if su > wc:
                out.append(Violation(PER_DIRECTION, C + (u,), wc, su,
                                     f"direction {u} uses {su} children but w{C}={wc}"))
        agg: dict[tuple, int] = {}
        for psi, u, m2, T, v in gs:
            agg[psi, T] = agg.get((psi, T), 0) + v
        for (psi, T), v in sorted(agg.items()):
            wt = c.w(T)
            if v < wt or wt < 1:
                out.append(Violation(DOMINATE, C + (psi,) + T, v, wt,
                                     f"{v} children along {psi} to {T} but its weight is {wt}"
                                     if wt >= 1 else f"children sent to {T} which has weight 0"))

    def covered(C) -> set:
        return {g[0] for g in groups.get(C, [])}

    if s_init is not None:
        have = covered(root)
        for psi, _ in d.successors(d.initial):
            if psi not in have:
                out.append(Violation(COVER, root + (psi,), None, None,
                                     f"root class sends no child along {psi}"))
    for C in classes:
        if c.w(C) <= 0:
            continue
        targets_by_psi: dict[str, set] = {}
        for psi, u, m2, T, v in groups.get(C, []):
            targets_by_psi.setdefault(psi, set()).add(T)
        for psi, Ts in sorted(targets_by_psi.items()):
            q2 = d.trans[C[0], psi]
            have = set().union(*(covered(T) for T in Ts))
            for psi2, _ in d.successors(q2):
                if psi2 not in have:
                    out.append(Violation(COVER, C + (psi, psi2), None, None,
                                         f"no target of {C} along {psi} continues along {psi2}"))

    def best_sink(s, u, below=None):
        """Least sink rank reachable from s in direction u (inf if none)."""
        best = INF
        for o in b.outputs:
            s2 = b.step(s, u, o)
            if s2 is None:
                continue
            for m in c.memory:
                best = min(best, c.d((SINK, s2, m)))
        return best

    for key in sorted(c.rank):
        r = c.rank[key]
        if r == INF:
            continue
        q, s, m = key
        final = s in acc
        if q == SINK:
            for u in ups:
                bs = best_sink(s, u)
                if final and bs == INF:
                    out.append(Violation(SINK_FIN, key + (u,), "inf", None,
                                         f"no letter in direction {u} keeps a finite sink rank"))
                elif not final and not bs < r:
                    out.append(Violation(SINK_DEC, key + (u,), _rank_json(bs), r,
                                         f"no letter in direction {u} lowers the sink rank below {r}"))
            continue
        cid = RANK_FIN if final else RANK_DEC
        wc = c.w(key)
        gs = groups.get(key, [])
        for u in ups:
            su = 0
            for psi, u2, m2, T, v in gs:
                if u2 != u:
                    continue
                su += v
                rt = c.d(T)
                if (final and rt == INF) or (not final and not rt < r):
                    out.append(Violation(cid, key + (psi, u, m2), _rank_json(rt), r,
                                         f"target {T} has rank {_rank_json(rt)} against {r}"))
            if su < wc:
                bs = best_sink(s, u)
                if (final and bs == INF) or (not final and not bs < r):
                    out.append(Violation(cid, key + (u,), _rank_json(bs), r,
                                         f"leftover children in direction {u} have no usable sink letter"))
    return out


# -- lifting simple certificates ---------------------------------------------

def lift_weights(d: Transducer, b: BuchiSpec, p: CoverProblem, w: WeightDistribution) -> WeightRanking:
    """Turn a weight distribution into a memoryless weight-ranking.

    Needs a spec that accepts everything: total, all states accepting, and
    successor independent of the direction.  All ranks are 0.
    """
    if set(b.accepting) != set(b.states):
        raise ValueError("lifting needs every spec state to be accepting")
    for s in b.states:
        for o in b.outputs:
            succ = {b.step(s, u, o) for u in b.inputs}
            if None in succ or len(succ) != 1:
                raise ValueError("lifting needs a total spec whose successor ignores the direction")
    bad = validate_weights(d, p.branching, w)
    if bad:
        raise ValueError("invalid weight distribution: " + str(bad[0]))
    m0 = "m0"
    s_init = initial_spec_state(d, b, p)
    sw, tw = {}, {}
    todo, seen = [(d.initial, s_init)], {(d.initial, s_init)}
    while todo:
        q, s = todo.pop(0)
        wq = w.state_weight[q]
        sw[q, s, m0] = wq
        pos = 0
        for psi, t in d.successors(q):
            for _ in range(w.trans_weight[q, psi]):
                u = p.branching[pos // wq]
                key = (q, s, m0, psi, u, m0)
                tw[key] = tw.get(key, 0) + 1
                pos += 1
            s2 = b.step(s, p.branching[0], d.label[t])
            if (t, s2) not in seen:
                seen.add((t, s2))
                todo.append((t, s2))
    rank = {(q, s, m0): 0 for (q, s, _) in sw}
    rank.update({(SINK, s, m0): 0 for s in b.states})
    return WeightRanking((m0,), m0, sw, tw, rank)


# -- witness generator -------------------------------------------------------

def _sink_choice(b: BuchiSpec, c: WeightRanking, s: str, u: str):
    best = None
    for o in b.outputs:
        s2 = b.step(s, u, o)
        if s2 is None:
            continue
        for m in c.memory:
            r = c.d((SINK, s2, m))
            if r != INF and (best is None or r < best[0]):
                best = (r, s2, m, o)
    return best


def build_buchi_cover_generator(d: Transducer, b: BuchiSpec, p: CoverProblem,
                                c: WeightRanking) -> CoverGenerator:
    """Copy-indexed witness tree for a valid weight-ranking.

    For each direction, the copies of a class are handed out in copy order
    to the positive groups ``(psi, m')`` in direction then memory order; the
    target copy is a running counter per (psi, target class) that continues
    across directions.  Copies left over in a direction go to the sink with
    the smallest finite rank (ties by letter order, then memory order), and
    sink nodes pick their children the same way.
    """
    bad = validate_weight_ranking(d, b, p, c)
    if bad:
        raise ValueError("invalid weight-ranking: " + "; ".join(map(str, bad[:3])))
    ups = p.branching
    s_init = initial_spec_state(d, b, p, c.literal_initial)
    dorder = {psi: i for i, psi in enumerate(d.directions)}
    morder = {m: i for i, m in enumerate(c.memory)}
    plans: dict[tuple, dict] = {}

    def plan(C):
        if C in plans:
            return plans[C]
        q, s, m = C
        counters: dict[tuple, int] = {}
        per_dir = {}
        for u in ups:
            slots = []
            keys = sorted(((psi, m2) for (q1, s1, mm, psi, u1, m2), v in c.trans_weight.items()
                           if (q1, s1, mm) == C and u1 == u and v > 0),
                          key=lambda x: (dorder[x[0]], morder[x[1]]))
            for psi, m2 in keys:
                t, s2 = _target(d, b, q, s, psi, u)
                T = (t, s2, m2)
                for _ in range(c.trans_weight[q, s, m, psi, u, m2]):
                    n = counters.get((psi, T), 0)
                    counters[psi, T] = n + 1
                    slots.append(NodeState(t, n % c.w(T), s2, m2))
            per_dir[u] = slots
        plans[C] = per_dir
        return per_dir

    children: dict[NodeState, tuple] = {}
    labels: dict[NodeState, str] = {}
    root = NodeState(d.initial, 0, s_init, c.initial_memory)
    todo = [root]
    labels[root] = d.label[d.initial]
    while todo:
        n = todo.pop()
        if n in children:
            continue
        kids = []
        for u in ups:
            if n.core == SINK:
                _, s2, m2, o = _sink_choice(b, c, n.spec, u)
                kid = NodeState(SINK, 0, s2, m2, o)
                labels[kid] = o
            else:
                slots = plan((n.core, n.spec, n.mem))[u]
                if n.copy < len(slots):
                    kid = slots[n.copy]
                    labels[kid] = d.label[kid.core]
                else:
                    _, s2, m2, o = _sink_choice(b, c, n.spec, u)
                    kid = NodeState(SINK, 0, s2, m2, o)
                    labels[kid] = o
            kids.append(kid)
            if kid not in children:
                todo.append(kid)
        children[n] = tuple(kids)
    nodes = reachable_nodes(root, children)
    return CoverGenerator(ups, root, nodes, {n: children[n] for n in nodes},
                          {n: labels[n] for n in nodes})


def project_generator(g: CoverGenerator) -> CoverGenerator:
    """Forget spec and memory; sink subtrees become FREE."""
    def proj(n):
        if n == FREE or n.core == SINK:
            return FREE
        return NodeState(n.core, n.copy)

    children, labels = {}, {}
    for n in g.nodes:
        pn = proj(n)
        if pn == FREE:
            continue
        kids = tuple(proj(x) for x in g.children[n])
        if pn in children and children[pn] != kids:
            raise ValueError(f"projection is not a function at {pn.ident}")
        children[pn] = kids
        labels[pn] = g.labels[n]
    root = proj(g.root)
    nodes = reachable_nodes(root, children)
    return CoverGenerator(g.directions, root, nodes, {n: children[n] for n in nodes},
                          {n: labels[n] for n in nodes})


# -- verification ------------------------------------------------------------

@dataclass
class VerifyReport:
    depth: int
    missing: list = field(default_factory=list)
    blocked: list = field(default_factory=list)
    bad_cycle: list = field(default_factory=list)
    product_size: int = 0

    @property
    def coverage_ok(self) -> bool:
        return not self.missing

    @property
    def acceptance_ok(self) -> bool:
        return not self.blocked and not self.bad_cycle

    @property
    def ok(self) -> bool:
        return self.coverage_ok and self.acceptance_ok

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "coverage": {"ok": self.coverage_ok, "missing": ["".join(w) for w in self.missing]},
            "acceptance": {"ok": self.acceptance_ok, "productStates": self.product_size,
                           "blocked": self.blocked, "nonAcceptingCycle": self.bad_cycle},
        }


def verify_generator(g: CoverGenerator, d: Transducer, b: BuchiSpec, p: CoverProblem,
                     depth: int, fill: str | None = None, literal_initial: bool = False) -> VerifyReport:
    """Check coverage up to ``depth`` and acceptance of every infinite path.

    Acceptance is decided on the product of the generator with the DBW: the
    tree is accepted iff no edge is rejected and no cycle reachable from the
    root avoids accepting states, i.e. the non-accepting part of the product
    has no cyclic strongly connected component.
    """
    if fill is None:
        fill = d.alphabet[0]
    rep = VerifyReport(depth)
    rep.missing = check_coverage(materialize_prefix(g, depth, fill), d)

    def name(n, s):
        return ("FREE" if n == FREE else n.ident) + "@" + s

    s0 = b.initial if literal_initial else b.step(b.initial, p.root, g.labels[g.root])
    if s0 is None:
        rep.blocked.append({"from": "root", "dir": p.root, "letter": g.labels[g.root]})
        return rep
    graph = nx.DiGraph()
    start = (g.root, s0)
    graph.add_node(start)
    todo = [start]
    while todo:
        n, s = todo.pop()
        for i, u in enumerate(g.directions):
            kid = FREE if n == FREE else g.children[n][i]
            letter = fill if kid == FREE else g.labels[kid]
            s2 = b.step(s, u, letter)
            if s2 is None:
                rep.blocked.append({"from": name(n, s), "dir": u, "letter": letter})
                continue
            nxt = (kid, s2)
            if nxt not in graph:
                graph.add_node(nxt)
                todo.append(nxt)
            graph.add_edge((n, s), nxt)
    rep.product_size = graph.number_of_nodes()
    sub = graph.subgraph([x for x in graph if x[1] not in b.accepting])
    bad = []
    for comp in nx.strongly_connected_components(sub):
        if len(comp) > 1 or any(sub.has_edge(x, x) for x in comp):
            bad.append(sorted(name(*x) for x in comp))
    if bad:
        rep.bad_cycle = min(bad)
    rep.blocked.sort(key=lambda e: (e["from"], e["dir"]))
    return rep
