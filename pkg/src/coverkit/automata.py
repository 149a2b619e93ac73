"""Transducers, deterministic Buchi specs, and the constructions shared by the solvers.

A transducer is a finite graph whose edges carry direction names and whose
nodes carry output letters.  Its language is the set of finite words read
along paths from the initial state.  All symbol sets are ordered tuples and
every iteration below follows declared order, so outputs are reproducible.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

SINK = "q⊥"
"""Pseudo-state for tree regions that only maintain realizability."""

Word = tuple  # tuple of output symbols


class FixtureError(ValueError):
    """A fixture document is malformed."""


class NondeterministicError(ValueError):
    """A solver was handed a nondeterministic transducer."""


def _ordered_unique(items: Iterable[str], what: str) -> tuple[str, ...]:
    out = tuple(items)
    if len(set(out)) != len(out):
        raise FixtureError(f"duplicate entry in {what}: {list(out)}")
    for item in out:
        if not isinstance(item, str) or not item:
            raise FixtureError(f"{what} entries must be non-empty strings, got {item!r}")
        if "/" in item:
            raise FixtureError(f"'/' is reserved in identifiers ({what}: {item!r})")
    return out


@dataclass(frozen=True)
class Transducer:
    directions: tuple[str, ...]
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    trans: Mapping[tuple[str, str], str]
    initial: str
    label: Mapping[str, str]
    _succ: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.initial not in self.states:
            raise FixtureError(f"initial state {self.initial!r} is not declared")
        if SINK in self.states:
            raise FixtureError(f"{SINK!r} is reserved")
        for q in self.states:
            if self.label.get(q) not in self.alphabet:
                raise FixtureError(f"state {q!r} has label {self.label.get(q)!r} outside the alphabet")
        dirs = set(self.directions)
        for (q, psi), t in self.trans.items():
            if q not in self.label or t not in self.label:
                raise FixtureError(f"transition {q}-{psi}->{t} references an undeclared state")
            if psi not in dirs:
                raise FixtureError(f"transition {q}-{psi}->{t} uses undeclared direction {psi!r}")
        succ = {
            q: tuple((psi, self.trans[q, psi]) for psi in self.directions if (q, psi) in self.trans)
            for q in self.states
        }
        object.__setattr__(self, "_succ", succ)

    def successors(self, q: str) -> tuple[tuple[str, str], ...]:
        """Defined ``(direction, target)`` pairs of ``q`` in declared direction order."""
        return self._succ[q]

    @property
    def full(self) -> bool:
        return len(self.trans) == len(self.states) * len(self.directions)

    @property
    def deterministic(self) -> bool:
        return validate_determinism(self)[0]

    def max_out_degree(self) -> int:
        return max((len(self._succ[q]) for q in self.states), default=0)

    def reachable(self) -> tuple[str, ...]:
        seen = {self.initial}
        order = [self.initial]
        queue = deque(order)
        while queue:
            q = queue.popleft()
            for _, t in self._succ[q]:
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return tuple(order)

    def is_acyclic(self) -> bool:
        """True iff no cycle is reachable from the initial state."""
        colour: dict[str, int] = {}
        stack = [(self.initial, iter(self._succ[self.initial]))]
        colour[self.initial] = 1
        while stack:
            q, it = stack[-1]
            for _, t in it:
                c = colour.get(t, 0)
                if c == 1:
                    return False
                if c == 0:
                    colour[t] = 1
                    stack.append((t, iter(self._succ[t])))
                    break
            else:
                colour[q] = 2
                stack.pop()
        return True

    def to_json(self) -> dict:
        return {
            "directions": list(self.directions),
            "alphabet": list(self.alphabet),
            "states": [{"id": q, "label": self.label[q]} for q in self.states],
            "initial": self.initial,
            "transitions": [
                {"from": q, "dir": psi, "to": t}
                for q in self.states
                for psi, t in self._succ[q]
            ],
        }


@dataclass(frozen=True)
class BuchiSpec:
    """Deterministic Buchi automaton over (input, output) pairs.

    ``trans`` maps ``(state, input, output)`` to the unique successor; a
    missing key means the letter is rejected from that state.
    """

    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    states: tuple[str, ...]
    trans: Mapping[tuple[str, str, str], str]
    initial: str
    accepting: frozenset

    def __post_init__(self):
        if self.initial not in self.states:
            raise FixtureError(f"initial state {self.initial!r} is not declared")
        if not set(self.accepting) <= set(self.states):
            raise FixtureError("accepting states must be declared states")
        ins, outs, sts = set(self.inputs), set(self.outputs), set(self.states)
        for (s, u, o), t in self.trans.items():
            if s not in sts or t not in sts or u not in ins or o not in outs:
                raise FixtureError(f"transition {s}-({u},{o})->{t} references undeclared symbols")

    def step(self, s: str, upsilon: str, sigma: str) -> str | None:
        return self.trans.get((s, upsilon, sigma))

    def to_json(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "states": list(self.states),
            "initial": self.initial,
            "accepting": [s for s in self.states if s in self.accepting],
            "transitions": [
                {"from": s, "input": u, "output": o, "to": self.trans[s, u, o]}
                for s in self.states
                for u in self.inputs
                for o in self.outputs
                if (s, u, o) in self.trans
            ],
        }


@dataclass(frozen=True)
class CoverProblem:
    machine: Transducer
    branching: tuple[str, ...]
    root: str
    spec: BuchiSpec | None = None

    def __post_init__(self):
        if not self.branching:
            raise ValueError("branching set must be nonempty")
        if len(set(self.branching)) != len(self.branching):
            raise ValueError("branching directions must be distinct")
        if self.root not in self.branching:
            raise ValueError(f"root direction {self.root!r} is not a branching direction")
        if self.spec is not None:
            if tuple(self.spec.inputs) != tuple(self.branching):
                raise ValueError("spec inputs must equal the branching set")
            missing = set(self.machine.alphabet) - set(self.spec.outputs)
            if missing:
                raise ValueError(f"spec outputs lack transducer letters {sorted(missing)}")


def branching_directions(branching: int | Sequence[str]) -> tuple[str, ...]:
    """``3`` becomes ``('u0', 'u1', 'u2')``; explicit sequences pass through."""
    if isinstance(branching, int):
        if branching < 1:
            raise ValueError("branching size must be positive")
        return tuple(f"u{i}" for i in range(branching))
    dirs = tuple(branching)
    if not dirs:
        raise ValueError("branching set must be nonempty")
    return dirs


def make_problem(machine: Transducer, branching: int | Sequence[str] | None = None,
                 root: str | None = None, spec: BuchiSpec | None = None) -> CoverProblem:
    if branching is None:
        if spec is None:
            raise ValueError("branching is required without a spec")
        branching = spec.inputs
    dirs = branching_directions(branching)
    return CoverProblem(machine, dirs, root if root is not None else dirs[0], spec)


# -- parsing -----------------------------------------------------------------

def _load(text_or_doc) -> dict:
    if isinstance(text_or_doc, Mapping):
        return dict(text_or_doc)
    try:
        doc = json.loads(text_or_doc)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise FixtureError("fixture document must be a JSON object")
    return doc


def _require(doc: dict, key: str):
    if key not in doc:
        raise FixtureError(f"missing key {key!r}")
    return doc[key]


def parse_transducer(text_or_doc) -> Transducer:
    doc = _load(text_or_doc)
    directions = _ordered_unique(_require(doc, "directions"), "directions")
    alphabet = _ordered_unique(_require(doc, "alphabet"), "alphabet")
    states, label = [], {}
    for i, entry in enumerate(_require(doc, "states")):
        try:
            q, lab = entry["id"], entry["label"]
        except (KeyError, TypeError):
            raise FixtureError(f"states[{i}] needs 'id' and 'label'") from None
        if lab not in alphabet:
            raise FixtureError(f"states[{i}] ({q!r}) has label {lab!r} outside the alphabet")
        states.append(q)
        label[q] = lab
    states = _ordered_unique(states, "states")
    trans: dict[tuple[str, str], str] = {}
    for i, entry in enumerate(doc.get("transitions", [])):
        try:
            key, target = (entry["from"], entry["dir"]), entry["to"]
        except (KeyError, TypeError):
            raise FixtureError(f"transitions[{i}] needs 'from', 'dir' and 'to'") from None
        if key in trans:
            raise FixtureError(f"transitions[{i}]: duplicate transition for state {key[0]!r} direction {key[1]!r}")
        trans[key] = target
    return Transducer(directions, alphabet, states, trans, _require(doc, "initial"), label)


def parse_buchi(text_or_doc) -> BuchiSpec:
    doc = _load(text_or_doc)
    inputs = _ordered_unique(_require(doc, "inputs"), "inputs")
    outputs = _ordered_unique(_require(doc, "outputs"), "outputs")
    states = _ordered_unique(_require(doc, "states"), "states")
    trans: dict[tuple[str, str, str], str] = {}
    for i, entry in enumerate(doc.get("transitions", [])):
        try:
            key, target = (entry["from"], entry["input"], entry["output"]), entry["to"]
        except (KeyError, TypeError):
            raise FixtureError(f"transitions[{i}] needs 'from', 'input', 'output' and 'to'") from None
        if key in trans:
            raise FixtureError(f"transitions[{i}]: duplicate transition for {key}")
        trans[key] = target
    return BuchiSpec(inputs, outputs, states, trans, _require(doc, "initial"),
                     frozenset(doc.get("accepting", [])))


def load_transducer(path) -> Transducer:
    with open(path, encoding="utf-8") as fh:
        return parse_transducer(fh.read())


def load_buchi(path) -> BuchiSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_buchi(fh.read())


# -- basic constructions -----------------------------------------------------

def validate_determinism(m: Transducer) -> tuple[bool, tuple[str, str, str] | None]:
    """Return ``(True, None)`` or ``(False, (state, dir1, dir2))``.

    The witness names two directions of ``state`` that lead to distinct
    successors carrying the same label.
    """
    for q in m.states:
        seen: dict[str, tuple[str, str]] = {}
        for psi, t in m.successors(q):
            lab = m.label[t]
            if lab in seen and seen[lab][1] != t:
                return False, (q, seen[lab][0], psi)
            seen.setdefault(lab, (psi, t))
    return True, None


def determinize_transducer(m: Transducer) -> Transducer:
    """Subset construction on the reachable part of ``m``.

    Output states are the sets of input states reachable by a common label
    sequence, named ``{q1,q2}`` with members in declared order.  The
    successors of a set are grouped by label (alphabet order) and get one
    direction each, so the direction set is as large as the biggest fan-out.
    """
    order = {q: i for i, q in enumerate(m.states)}

    def name(subset) -> str:
        members = sorted(subset, key=order.__getitem__)
        return members[0] if len(members) == 1 and _singletons_only else "{" + ",".join(members) + "}"

    # Try the cheap case first: if every reachable subset is a singleton we
    # keep the original state names.
    _singletons_only = True
    start = frozenset([m.initial])
    subsets = [start]
    index = {start: 0}
    edges: list[list[frozenset]] = []
    i = 0
    while i < len(subsets):
        cur = subsets[i]
        by_label: dict[str, set[str]] = {}
        for q in sorted(cur, key=order.__getitem__):
            for _, t in m.successors(q):
                by_label.setdefault(m.label[t], set()).add(t)
        out = []
        for lab in m.alphabet:
            if lab in by_label:
                nxt = frozenset(by_label[lab])
                if len(nxt) > 1:
                    _singletons_only = False
                if nxt not in index:
                    index[nxt] = len(subsets)
                    subsets.append(nxt)
                out.append(nxt)
        edges.append(out)
        i += 1

    width = max((len(e) for e in edges), default=0)
    directions = list(m.directions[:width])
    k = 0
    while len(directions) < width:
        cand = f"d{k}"
        if cand not in directions:
            directions.append(cand)
        k += 1
    names = [name(s) for s in subsets]
    label = {names[j]: m.label[next(iter(s))] for j, s in enumerate(subsets)}
    trans = {}
    for j, out in enumerate(edges):
        for psi, nxt in zip(directions, out):
            trans[names[j], psi] = names[index[nxt]]
    return Transducer(tuple(directions), m.alphabet, tuple(names), trans, names[0], label)


def language_upto(m: Transducer, max_len: int) -> set[Word]:
    """All path labels of length 1..max_len, as tuples of letters."""
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    words: set[Word] = set()
    # frontier holds (word, set of states reachable by that word)
    frontier = {(m.label[m.initial],): {m.initial}}
    for _ in range(max_len):
        words.update(frontier)
        nxt: dict[Word, set[str]] = {}
        for w, qs in frontier.items():
            for q in qs:
                for _, t in m.successors(q):
                    nxt.setdefault(w + (m.label[t],), set()).add(t)
        frontier = nxt
    return words


def runs_upto(m: Transducer, max_len: int) -> list[tuple[str, ...]]:
    """Runs (state sequences) of length 1..max_len, shortest first."""
    runs, level = [], [(m.initial,)]
    for _ in range(max_len):
        runs.extend(level)
        level = [r + (t,) for r in level for _, t in m.successors(r[-1])]
    return runs


def initial_spec_state(d: Transducer, b: BuchiSpec, p: CoverProblem,
                       literal_initial: bool = False) -> str | None:
    """DBW state that anchors the root of a witness tree.

    By default the root letter ``(root direction, L(q0))`` is consumed, giving
    ``delta(s0, (u0, L(q0)))``.  ``literal_initial`` anchors at ``s0`` itself.
    """
    if literal_initial:
        return b.initial
    return b.step(b.initial, p.root, d.label[d.initial])


class NonblockingResult(NamedTuple):
    ok: bool
    state: str | None = None
    direction: str | None = None
    word: Word | None = None


def product_nonblocking_check(d: Transducer, b: BuchiSpec, p: CoverProblem) -> NonblockingResult:
    """Check that every word of ``d`` can be read by ``b`` under some inputs.

    Explores pairs ``(q, S)`` where ``S`` is the set of DBW states reachable
    on the current word under some choice of tree directions.  Fails at the
    first transducer step that empties ``S``.  The check is monotone in
    ``b``: adding DBW transitions only grows the sets.
    """
    root_state = b.step(b.initial, p.root, d.label[d.initial])
    if root_state is None:
        return NonblockingResult(False, d.initial, "root", (d.label[d.initial],))
    start = (d.initial, frozenset([root_state]))
    seen = {start}
    queue = deque([(start, (d.label[d.initial],))])
    while queue:
        (q, ss), word = queue.popleft()
        for psi, t in d.successors(q):
            sigma = d.label[t]
            nxt = frozenset(
                s2 for s in ss for u in p.branching
                if (s2 := b.step(s, u, sigma)) is not None
            )
            if not nxt:
                return NonblockingResult(False, q, psi, word + (sigma,))
            key = (t, nxt)
            if key not in seen:
                seen.add(key)
                queue.append((key, word + (sigma,)))
    return NonblockingResult(True)


def require_deterministic(d: Transducer) -> None:
    ok, witness = validate_determinism(d)
    if not ok:
        q, p1, p2 = witness
        raise NondeterministicError(
            f"transducer is nondeterministic at state {q!r} (directions {p1!r}, {p2!r}); determinize it first")


def format_word(word: Word) -> str:
    if all(len(x) == 1 for x in word):
        return "".join(word)
    return " ".join(word)
