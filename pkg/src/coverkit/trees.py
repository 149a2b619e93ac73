"""Finite-state witness trees: generators, prefixes, coverage and DOT export."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

from .automata import SINK, Transducer, branching_directions, language_upto
from .simple import WeightDistribution, validate_weights

FREE = "FREE"


class NodeState(NamedTuple):
    """Generator state.  ``spec``/``mem`` are None for simple generators;
    ``letter`` is only set on sink nodes, whose label is not given by ``core``."""

    core: str
    copy: int
    spec: str | None = None
    mem: str | None = None
    letter: str | None = None

    @property
    def ident(self) -> str:
        parts = [self.core]
        if self.spec is not None:
            parts += [self.spec, str(self.mem)]
        if self.letter is not None:
            parts.append(self.letter)
        return "/".join(parts) + f"#{self.copy}"


@dataclass(frozen=True)
class CoverGenerator:
    directions: tuple[str, ...]
    root: NodeState
    nodes: tuple[NodeState, ...]
    children: Mapping[NodeState, tuple]  # one entry per direction: NodeState or FREE
    labels: Mapping[NodeState, str]

    def to_json(self) -> dict:
        return {
            "directions": list(self.directions),
            "root": self.root.ident,
            "nodes": [
                {"id": n.ident, "core": n.core, "copy": n.copy, "spec": n.spec,
                 "mem": n.mem, "letter": n.letter, "label": self.labels[n]}
                for n in self.nodes
            ],
            "children": {
                n.ident: [c if c == FREE else c.ident for c in self.children[n]]
                for n in self.nodes
            },
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, doc: dict) -> "CoverGenerator":
        by_id = {}
        labels = {}
        for e in doc["nodes"]:
            n = NodeState(e["core"], int(e["copy"]), e.get("spec"), e.get("mem"), e.get("letter"))
            by_id[e["id"]] = n
            labels[n] = e["label"]
        children = {by_id[i]: tuple(FREE if c == FREE else by_id[c] for c in cs)
                    for i, cs in doc["children"].items()}
        nodes = tuple(by_id[e["id"]] for e in doc["nodes"])
        return cls(tuple(doc["directions"]), by_id[doc["root"]], nodes, children, labels)


def reachable_nodes(root: NodeState, children: Mapping) -> tuple[NodeState, ...]:
    order, seen = [root], {root}
    queue = deque(order)
    while queue:
        n = queue.popleft()
        for c in children[n]:
            if c != FREE and c not in seen:
                seen.add(c)
                order.append(c)
                queue.append(c)
    return tuple(order)


def build_cover_generator(d: Transducer, branching, w: WeightDistribution) -> CoverGenerator:
    """Copy-indexed witness tree for a valid weight distribution.

    The ``|dirs| * w(q)`` children of the copies of ``q`` are enumerated
    direction-major (direction, then copy).  Transitions in direction order
    each take ``w(q, psi)`` consecutive slots; the target copy is a running
    counter modulo ``w(target)``, so every copy of the target is reached.
    Remaining slots are FREE.
    """
    bad = validate_weights(d, branching, w)
    if bad:
        raise ValueError("invalid weight distribution: " + "; ".join(map(str, bad[:3])))
    dirs = branching_directions(branching)
    children: dict[NodeState, tuple] = {}
    for q in d.reachable():
        wq = w.state_weight[q]
        slots: list = [FREE] * (len(dirs) * wq)
        pos = 0
        for psi, t in d.successors(q):
            wt = w.state_weight[t]
            for i in range(w.trans_weight[q, psi]):
                slots[pos] = NodeState(t, i % wt)
                pos += 1
        for c in range(wq):
            children[NodeState(q, c)] = tuple(slots[u * wq + c] for u in range(len(dirs)))
    root = NodeState(d.initial, 0)
    nodes = reachable_nodes(root, children)
    return CoverGenerator(dirs, root, nodes, {n: children[n] for n in nodes},
                          {n: d.label[n.core] for n in nodes})


@dataclass(frozen=True)
class TreePrefix:
    depth: int
    directions: tuple[str, ...]
    root_direction: str
    labels: Mapping[tuple, str]  # path of directions -> letter
    states: Mapping[tuple, object]  # path -> NodeState or FREE

    def words(self) -> set[tuple]:
        """Prefix labels: the letters read from the root to each node."""
        out = set()
        stack = [((), (self.labels[()],))]
        while stack:
            path, word = stack.pop()
            out.add(word)
            if len(path) < self.depth:
                for u in self.directions:
                    p = path + (u,)
                    stack.append((p, word + (self.labels[p],)))
        return out

    def level(self, i: int) -> list[tuple]:
        return [p for p in self.labels if len(p) == i]


def materialize_prefix(g: CoverGenerator, depth: int, fill: str | None = None,
                       root_direction: str | None = None) -> TreePrefix:
    """Unfold ``g`` to ``depth``; FREE subtrees are labeled ``fill`` throughout."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if fill is None:
        fill = min(g.labels.values(), default="")
    labels: dict[tuple, str] = {(): g.labels[g.root]}
    states: dict[tuple, object] = {(): g.root}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for path in frontier:
            n = states[path]
            for i, u in enumerate(g.directions):
                p = path + (u,)
                c = FREE if n == FREE else g.children[n][i]
                states[p] = c
                labels[p] = fill if c == FREE else g.labels[c]
                nxt.append(p)
        frontier = nxt
    return TreePrefix(depth, g.directions, root_direction or g.directions[0], labels, states)


def check_coverage(t: TreePrefix, d: Transducer) -> list[tuple]:
    """Words of ``d`` up to length ``depth + 1`` missing from ``t`` (sorted)."""
    have = t.words()
    return sorted(w for w in language_upto(d, t.depth + 1) if w not in have)


def runs_per_level(t: TreePrefix) -> dict[int, dict[tuple, int]]:
    """For each level, how many nodes carry each run of core states."""
    out: dict[int, dict[tuple, int]] = {}
    runs = {(): (t.states[()].core,)}
    for path in sorted(t.states, key=len):
        if path:
            s = t.states[path]
            parent = runs.get(path[:-1])
            if s == FREE or parent is None or s.core == SINK:
                continue
            runs[path] = parent + (s.core,)
        out.setdefault(len(path), {})
        r = runs[path]
        out[len(path)][r] = out[len(path)].get(r, 0) + 1
    return out


def prefix_to_dot(t: TreePrefix, name: str = "tree") -> Iterator[str]:
    """DOT lines for a prefix; FREE nodes and sink nodes are dashed."""
    yield f"digraph {json.dumps(name)} {{"
    yield "  node [shape=circle];"
    ids = {}
    for i, path in enumerate(sorted(t.labels, key=lambda p: (len(p), p))):
        ids[path] = f"n{i}"
        s = t.states[path]
        style = ""
        if s == FREE or s.core == SINK:
            style = ", style=dashed"
        yield f"  n{i} [label={json.dumps(t.labels[path])}{style}];"
    for path, nid in ids.items():
        if path:
            yield f"  {ids[path[:-1]]} -> {nid} [label={json.dumps(path[-1])}];"
    yield "}"
