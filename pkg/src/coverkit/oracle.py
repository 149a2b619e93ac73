"""Certificate-free coverability checks that work on runs instead of states.

A tree covering the words of length up to ``n + 1`` must, at level ``i``,
hold at least one node per run of length ``i + 1``.  Because each run has a
unique parent run, the nodes of a run ``r`` own all children that can carry
extensions of ``r``: ``k * count(r)`` of them.  Working bottom-up, the least
number of nodes a run needs is

    need(r) = max(1, ceil(sum of need(r') over one-step extensions r' / k))

with need = 1 at the last level.  A labeling of levels ``0..n`` exists iff
need(root run) <= 1, and any such count assignment is realized by a real
tree by handing out children greedily.  Nothing here looks at weights or
merges runs that end in the same state, which is what makes the check an
independent cross-reference for the weight fixpoint.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

from .automata import Transducer, branching_directions, require_deterministic

DEFAULT_BUDGET = 2_000_000


class BudgetExceeded(RuntimeError):
    """The configured step budget or per-level run cap was hit."""


class CyclicTransducerError(ValueError):
    pass


def step_budget(explicit: int | None = None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("COVERKIT_STEP_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


@dataclass(frozen=True)
class LevelProfile:
    branching: int
    depth: int
    per_run_count: dict = field(repr=False)  # run (tuple of states) -> least count
    feasible: bool = True

    def capacity(self, level: int) -> int:
        return self.branching ** level

    def demand(self, level: int) -> int:
        return sum(c for r, c in self.per_run_count.items() if len(r) == level + 1)

    def runs(self, level: int) -> int:
        return sum(1 for r in self.per_run_count if len(r) == level + 1)

    def to_json(self) -> dict:
        return {
            "branching": self.branching,
            "depth": self.depth,
            "feasible": self.feasible,
            "levels": [
                {"level": i, "runs": self.runs(i), "demand": self.demand(i),
                 "capacity": self.capacity(i)}
                for i in range(self.depth + 1)
            ],
        }


def level_profile(d: Transducer, branching, depth: int, *, budget: int | None = None,
                  run_cap: int = 200_000) -> LevelProfile:
    """Least per-run node counts for a tree prefix of the given depth."""
    require_deterministic(d)
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    k = len(branching_directions(branching))
    budget = step_budget(budget)
    order = {q: i for i, q in enumerate(d.states)}

    def key(r):  # lexicographic by labels, then by declared state order
        return tuple(d.label[q] for q in r), tuple(order[q] for q in r)

    levels = [[(d.initial,)]]
    steps = 1
    for _ in range(depth):
        nxt = []
        for r in levels[-1]:
            for _, t in d.successors(r[-1]):
                nxt.append(r + (t,))
        steps += len(nxt)
        if len(nxt) > run_cap or steps > budget:
            raise BudgetExceeded(f"run enumeration exceeded its budget at level {len(levels)}")
        nxt.sort(key=key)
        levels.append(nxt)

    need: dict[tuple, int] = {r: 1 for r in levels[-1]}
    for lvl in range(depth - 1, -1, -1):
        acc: dict[tuple, int] = {}
        for r in levels[lvl + 1]:
            acc[r[:-1]] = acc.get(r[:-1], 0) + need[r]
        for r in levels[lvl]:
            need[r] = max(1, -(-acc.get(r, 0) // k))
    return LevelProfile(k, depth, need, need[(d.initial,)] <= 1)


def oracle_tree_search(d: Transducer, branching, depth: int, *, budget: int | None = None,
                       run_cap: int = 200_000) -> bool:
    """True iff levels ``0..depth`` of some tree cover every word of length <= depth+1.

    For a cyclic transducer this is only a necessary condition for coverability.
    """
    return level_profile(d, branching, depth, budget=budget, run_cap=run_cap).feasible


def oracle_coverable_acyclic(d: Transducer, branching, *, budget: int | None = None) -> bool:
    """Exact coverability for transducers without reachable cycles."""
    if not d.is_acyclic():
        raise CyclicTransducerError("transducer has a reachable cycle")
    # the longest run has at most |reachable| states
    return oracle_tree_search(d, branching, len(d.reachable()) - 1, budget=budget)
