"""Bounded search for combined weight-rankings.

The search is a depth-first construction over classes ``(q, s, m)`` in the
order they are discovered from the root class.  When a class is taken off
the queue it receives a weight (ascending, never more than the children
its parents already send it) and then a plan: for each direction, how
many of its copies go to each group ``(psi, m')`` and how many are left to
the sink.  Pruning uses the joint conditions the validator checks:

* children sent to an already weighted class must reach its weight,
* non-accepting classes may not form a cycle of positive transitions
  (ranks must strictly decrease along them),
* the targets of a class along ``psi`` must be able to continue every
  transition of the ``psi``-successor,
* leftover copies need a direction whose sink is winning.

Ranks are not searched: once every class has a plan, the least ranks are
computed directly and compared with the rank bound.  A result of
NO_CERTIFICATE_WITHIN_BOUNDS says only that these bounds were exhausted.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .automata import SINK, BuchiSpec, CoverProblem, Transducer, initial_spec_state, require_deterministic
from .buchi import INF, WeightRanking, sink_ranks, validate_weight_ranking
from .oracle import step_budget

CERTIFIED = "CERTIFIED"
NO_CERTIFICATE = "NO_CERTIFICATE_WITHIN_BOUNDS"
DEFAULT_WEIGHT_CLAMP = 1 << 16
MAX_INT = 2 ** 63 - 1


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class BuchiCoverDecision:
    status: str
    certificate: WeightRanking | None = None
    stats: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_json(self) -> dict:
        out = {"status": self.status, "stats": self.stats}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        else:
            out["note"] = ("no certificate was found within the explored bounds; "
                           "this is not a proof that no covering tree exists")
        return out


def _compositions(groups: list, total: int, allow_leftover: bool):
    """Count vectors over ``groups`` summing to at most ``total``; fullest first."""
    n = len(groups)
    out = []

    def rec(i, rem, acc):
        if i == n:
            if rem == 0 or allow_leftover:
                out.append(tuple((g, c) for g, c in zip(groups, acc) if c))
            return
        for c in range(rem, -1, -1):
            acc.append(c)
            rec(i + 1, rem - c, acc)
            acc.pop()

    rec(0, total, [])
    return out


class _Search:
    def __init__(self, d, b, p, memories, W, R, sink, budget, literal_initial):
        self.d, self.b, self.p = d, b, p
        self.mem = memories
        self.W, self.R = W, R
        self.sink = sink
        self.budget = budget
        self.steps = 0
        self.cap_hit = False
        self.literal_initial = literal_initial
        self.acc = b.accepting
        self.s_init = initial_spec_state(d, b, p, literal_initial)
        self.root = (d.initial, self.s_init, memories[0])
        self.queue = [self.root]
        self.index = {self.root: 0}
        self.limit = {self.root: 1}
        self.weight: dict = {}
        self.plan: dict = {}
        self.targets: dict = {}  # class -> {psi: set of target classes}
        self.covers: dict = {}  # class -> set of psi sent
        self.edges: dict = {}  # non-accepting class -> set of non-accepting targets
        self.max_mem = 0
        self.solution = None
        # least sink rank reachable from s in direction u
        self.sink_min = {}
        for s in b.states:
            for u in p.branching:
                best = INF
                for o in b.outputs:
                    s2 = b.step(s, u, o)
                    if s2 is not None:
                        best = min(best, sink[s2])
                self.sink_min[s, u] = best
        self.midx = {m: i for i, m in enumerate(memories)}
        self._can: dict = {}

    # -- search -------------------------------------------------------------

    def run(self):
        if self.s_init is None:
            return None
        self.rec(0)
        return self.solution

    def rec(self, i) -> bool:
        if i == len(self.queue):
            return self.leaf()
        # non-accepting classes first: their rank and cycle constraints fail
        # early, before the mostly free accepting part is enumerated
        C = min((c for c in self.queue if c not in self.plan and c not in self.weight),
                key=lambda c: (c[1] in self.acc, self.index[c]))
        if i == 0:
            weights = [1]
        else:
            lim = self.limit[C]
            if lim > self.W:
                self.cap_hit = True
            weights = range(1, min(lim, self.W) + 1)
        for w in weights:
            self.weight[C] = w
            for plan in self.plans(C, w):
                self.steps += 1
                if self.steps > self.budget:
                    raise SearchBudgetExceeded(f"step budget {self.budget} exhausted")
                undo = self.apply(C, plan)
                if undo is None:
                    continue
                if self.cover_ok(C, i) and self.rec(i + 1):
                    return True
                self.revert(C, undo)
            del self.weight[C]
        return False

    def plans(self, C, w):
        q, s, m = C
        d, b = self.d, self.b
        top = min(len(self.mem) - 1, self.max_mem + w * len(self.p.branching))
        per_dir = []
        for u in self.p.branching:
            groups = []
            for psi, t in d.successors(q):
                if b.step(s, u, d.label[t]) is None:
                    continue
                for mi in range(top + 1):
                    groups.append((psi, self.mem[mi]))
            opts = _compositions(groups, w, self.sink_min[s, u] != INF)
            if not opts:
                return
            per_dir.append(opts)
        for combo in itertools.product(*per_dir):
            # canonical memory naming: fresh memories appear in index order
            nxt = self.max_mem + 1
            ok = True
            for part in combo:
                for (psi, m2), _ in part:
                    mi = self.midx[m2]
                    if mi > self.max_mem:
                        if mi > nxt:
                            ok = False
                            break
                        if mi == nxt:
                            nxt += 1
                if not ok:
                    break
            if ok:
                yield combo

    def apply(self, C, plan):
        q, s, m = C
        d, b = self.d, self.b
        agg: dict = {}
        for u, part in zip(self.p.branching, plan):
            for (psi, m2), c in part:
                t = d.trans[q, psi]
                T = (t, b.step(s, u, d.label[t]), m2)
                agg[psi, T] = agg.get((psi, T), 0) + c
        by_T: dict = {}
        for (psi, T), v in agg.items():
            by_T[T] = min(by_T.get(T, v), v)
        # domination against weighted classes
        for T, v in by_T.items():
            if T in self.weight and v < self.weight[T]:
                return None
        # rank: no cycle among non-accepting classes
        new_edges = set()
        if s not in self.acc:
            for T in by_T:
                if T[1] not in self.acc:
                    if T == C or self._reaches(T, C):
                        return None
                    new_edges.add(T)
        undo = {"qlen": len(self.queue), "limits": {}, "max_mem": self.max_mem}
        for T, v in by_T.items():
            if T in self.weight:
                continue
            if T in self.limit:
                if v < self.limit[T]:
                    undo["limits"][T] = self.limit[T]
                    self.limit[T] = v
            else:
                self.index[T] = len(self.queue)
                self.queue.append(T)
                self.limit[T] = v
        if new_edges:
            self.edges[C] = new_edges
        targets: dict = {}
        for psi, T in agg:
            targets.setdefault(psi, set()).add(T)
            mi = self.midx[T[2]]
            if mi > self.max_mem:
                self.max_mem = mi
        self.targets[C] = targets
        self.covers[C] = set(targets)
        self.plan[C] = plan
        return undo

    def revert(self, C, undo):
        for T in self.queue[undo["qlen"]:]:
            del self.limit[T], self.index[T]
        del self.queue[undo["qlen"]:]
        for T, v in undo["limits"].items():
            self.limit[T] = v
        self.edges.pop(C, None)
        del self.targets[C], self.covers[C], self.plan[C]
        self.max_mem = undo["max_mem"]

    def _reaches(self, src, dst) -> bool:
        stack, seen = [src], {src}
        while stack:
            x = stack.pop()
            if x == dst:
                return True
            for y in self.edges.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return False

    def can_cover(self, T) -> frozenset:
        """Transitions an unplanned class could still send children along."""
        got = self._can.get(T)
        if got is None:
            t, s, _ = T
            got = frozenset(psi for psi, t2 in self.d.successors(t)
                            if any(self.b.step(s, u, self.d.label[t2]) is not None
                                   for u in self.p.branching))
            self._can[T] = got
        return got

    def cover_ok(self, C, i) -> bool:
        """Can every cover obligation still be met?

        An obligation (P, psi) asks the targets of P along psi to continue
        every transition of the psi-successor.  Planned targets contribute
        what they send; unplanned ones contribute what the Buchi spec lets them
        send, limited to |dirs| * (their weight bound) transitions.
        """
        d = self.d
        if i == 0:
            need = {psi for psi, _ in d.successors(d.initial)}
            if not need <= self.covers[C]:
                return False
        k = len(self.p.branching)
        for P, by_psi in self.targets.items():
            for psi, Ts in by_psi.items():
                q2 = d.trans[P[0], psi]
                missing = {psi2 for psi2, _ in d.successors(q2)}
                open_ = []
                for T in Ts:
                    if T in self.covers:
                        missing -= self.covers[T]
                    else:
                        open_.append(T)
                if not missing:
                    continue
                if not open_:
                    return False
                reach = set()
                room = 0
                clipped = False
                for T in open_:
                    reach |= self.can_cover(T)
                    room += k * min(self.limit[T], self.W)
                    clipped |= self.limit[T] > self.W
                if not missing <= reach:
                    return False
                if len(missing) > room:
                    # a larger weight bound might have left room
                    self.cap_hit |= clipped
                    return False
        return True

    def leaf(self) -> bool:
        ranks: dict = {}

        def rank(C):
            if C in ranks:
                return ranks[C]
            q, s, m = C
            if s in self.acc:
                ranks[C] = 0
                return 0
            best = 0
            for u, part in zip(self.p.branching, self.plan[C]):
                used = 0
                for (psi, m2), c in part:
                    used += c
                    t = self.d.trans[q, psi]
                    best = max(best, rank((t, self.b.step(s, u, self.d.label[t]), m2)))
                if used < self.weight[C]:
                    best = max(best, self.sink_min[s, u])
            ranks[C] = best + 1
            return best + 1

        for C in self.queue:
            if rank(C) > self.R:
                return False
        self.solution = ranks
        return True

    def certificate(self) -> WeightRanking:
        tw = {}
        for C, plan in self.plan.items():
            for u, part in zip(self.p.branching, plan):
                for (psi, m2), c in part:
                    tw[C + (psi, u, m2)] = c
        rank = dict(self.solution)
        for s in self.b.states:
            if self.sink[s] != INF:
                for m in self.mem:
                    rank[SINK, s, m] = self.sink[s]
        return WeightRanking(tuple(self.mem), self.mem[0], dict(self.weight), tw, rank,
                             self.literal_initial)


def default_weight_cap(d: Transducer, b: BuchiSpec, p: CoverProblem, clamp: int = DEFAULT_WEIGHT_CLAMP) -> int:
    k, n = len(p.branching), len(d.states) * len(b.states)
    if k > 1 and n * math.log2(k) > clamp.bit_length():
        return clamp
    return min(k ** n, clamp)


def solve_weight_ranking(d: Transducer, b: BuchiSpec, p: CoverProblem, max_memory: int = 1,
                         weight_cap: int | None = None, *, budget: int | None = None,
                         literal_initial: bool = False) -> BuchiCoverDecision:
    """Iterative deepening over memory size and a doubling weight bound.

    For each memory size the weight bound doubles from 1 until the search
    finds a certificate, reaches the cap, or completes without any class
    having been offered more children than the bound allowed; in the last
    case larger bounds cannot change the outcome and the memory size is
    exhausted.
    """
    require_deterministic(d)
    if max_memory < 1:
        raise ValueError("max_memory must be at least 1")
    cap = default_weight_cap(d, b, p) if weight_cap is None else weight_cap
    if cap > MAX_INT:
        raise OverflowError(f"weight cap {cap} exceeds the 64-bit integer range")
    if cap < 1:
        raise ValueError("weight cap must be positive")
    budget = step_budget(budget)
    sink = sink_ranks(b, p.branching)
    nq, ns = len(d.states), len(b.states)
    tried = []
    steps = 0
    for n in range(1, max_memory + 1):
        memories = tuple(f"m{i}" for i in range(n))
        R = nq * ns if n == 1 else (nq + 1) * ns * n
        W = 1
        while True:
            srch = _Search(d, b, p, memories, W, R, sink, budget - steps, literal_initial)
            try:
                found = srch.run()
            except SearchBudgetExceeded:
                steps += srch.steps
                tried.append({"memory": n, "maxWeight": W, "maxRank": R, "exhaustive": False,
                              "nodes": srch.steps, "budgetExhausted": True})
                return BuchiCoverDecision(NO_CERTIFICATE, None,
                                          {"tried": tried, "nodes": steps, "weightCap": cap,
                                           "budget": budget})
            steps += srch.steps
            tried.append({"memory": n, "maxWeight": W, "maxRank": R, "exhaustive": not srch.cap_hit,
                          "nodes": srch.steps})
            if found is not None:
                cert = srch.certificate()
                bad = validate_weight_ranking(d, b, p, cert)
                if bad:
                    raise AssertionError("search produced an invalid certificate: " + str(bad[0]))
                return BuchiCoverDecision(CERTIFIED, cert, {"tried": tried, "nodes": steps})
            if not srch.cap_hit or W >= cap:
                break
            W = min(2 * W, cap)
    return BuchiCoverDecision(NO_CERTIFICATE, None, {"tried": tried, "nodes": steps, "weightCap": cap})
