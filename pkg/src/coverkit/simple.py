"""Simple coverability: weight distributions, their validation, and the least fixpoint."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .automata import Transducer, branching_directions, require_deterministic

INIT_ONE = "INIT_ONE"
FANOUT = "FANOUT"
DOMINATE = "DOMINATE"
POSITIVE = "POSITIVE"


@dataclass(frozen=True)
class WeightDistribution:
    state_weight: Mapping[str, int]
    trans_weight: Mapping[tuple[str, str], int]

    def to_json(self, d: Transducer | None = None) -> dict:
        states = d.states if d is not None else sorted(self.state_weight)
        keys = ([(q, psi) for q in d.states for psi, _ in d.successors(q)]
                if d is not None else sorted(self.trans_weight))
        return {
            "stateWeight": {q: self.state_weight[q] for q in states if q in self.state_weight},
            "transWeight": {f"{q}/{psi}": self.trans_weight[q, psi] for q, psi in keys
                            if (q, psi) in self.trans_weight},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "WeightDistribution":
        try:
            sw = {str(q): int(v) for q, v in doc["stateWeight"].items()}
            tw = {}
            for key, v in doc["transWeight"].items():
                q, sep, psi = key.rpartition("/")
                if not sep:
                    raise ValueError(f"transition key {key!r} is not of the form state/dir")
                tw[q, psi] = int(v)
        except (KeyError, AttributeError, TypeError) as exc:
            raise ValueError(f"malformed weight certificate: {exc}") from None
        return cls(sw, tw)


@dataclass(frozen=True)
class Violation:
    condition: str
    where: tuple
    lhs: object = None
    rhs: object = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"condition": self.condition, "where": list(self.where)}
        if self.lhs is not None:
            out["lhs"] = self.lhs
        if self.rhs is not None:
            out["rhs"] = self.rhs
        if self.detail:
            out["detail"] = self.detail
        return out

    def __str__(self):
        where = "/".join(str(x) for x in self.where)
        return f"{self.condition} at {where}: {self.detail}"


@dataclass(frozen=True)
class CoverDecision:
    coverable: bool
    certificate: WeightDistribution | None = None
    obstruction: tuple = ()
    reason: str = ""
    rounds: int = 0

    def to_json(self, d: Transducer | None = None) -> dict:
        out = {"coverable": self.coverable, "rounds": self.rounds}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json(d)
        else:
            out["reason"] = self.reason
            out["obstruction"] = [{"state": q, "weight": w} for q, w in self.obstruction]
        return out


def weight_cap(k: int, n: int) -> int:
    return k ** n


def validate_weights(d: Transducer, branching, w: WeightDistribution) -> list[Violation]:
    """Return every violated weight condition (empty list means valid).

    Only the part of ``d`` reachable from the initial state is constrained;
    entries for unreachable states are accepted as given.  Raises
    ``ValueError`` when ``w`` names a transition that ``d`` does not have or
    omits a weight the check needs.
    """
    require_deterministic(d)
    k = len(branching_directions(branching))
    for q, psi in w.trans_weight:
        if (q, psi) not in d.trans:
            raise ValueError(f"weight given for undefined transition {q}/{psi}")
    for q in w.state_weight:
        if q not in d.label:
            raise ValueError(f"weight given for undeclared state {q!r}")
    out: list[Violation] = []

    def sw(q):
        if q not in w.state_weight:
            raise ValueError(f"missing state weight for {q!r}")
        return w.state_weight[q]

    def tw(q, psi):
        if (q, psi) not in w.trans_weight:
            raise ValueError(f"missing transition weight for {q}/{psi}")
        return w.trans_weight[q, psi]

    if sw(d.initial) != 1:
        out.append(Violation(INIT_ONE, (d.initial,), sw(d.initial), 1,
                             f"w({d.initial})={sw(d.initial)}, expected 1"))
    for q in d.reachable():
        total = 0
        for psi, t in d.successors(q):
            v = tw(q, psi)
            total += v
            if v <= 0:
                out.append(Violation(POSITIVE, (q, psi), v, 0, f"w({q},{psi})={v} is not positive"))
            if v < sw(t):
                out.append(Violation(DOMINATE, (q, psi, t), v, sw(t),
                                     f"w({q},{psi})={v} < w({t})={sw(t)}"))
        if k * sw(q) < total:
            out.append(Violation(FANOUT, (q,), k * sw(q), total,
                                 f"{k}*w({q})={k * sw(q)} < outgoing sum {total}"))
    return out


def solve_weights(d: Transducer, branching) -> CoverDecision:
    """Least weight distribution by Kleene iteration from all ones.

    Each round recomputes ``W(q) = ceil(sum of successor weights / k)`` for
    every reachable state (1 for states with no successors).  The iteration
    stops as soon as ``W(q0)`` exceeds 1 or some weight exceeds ``k**|Q|``;
    the recorded updates then form the obstruction.
    """
    require_deterministic(d)
    dirs = branching_directions(branching)
    k = len(dirs)
    reach = d.reachable()
    cap = weight_cap(k, len(d.states))
    W = {q: 1 for q in reach}
    trace: list[tuple[str, int]] = []
    rounds = 0
    while True:
        rounds += 1
        new = {}
        for q in reach:
            s = sum(W[t] for _, t in d.successors(q))
            new[q] = max(1, -(-s // k))
        changed = [q for q in reach if new[q] != W[q]]
        if not changed:
            break
        for q in changed:
            trace.append((q, new[q]))
        W = new
        if W[d.initial] > 1:
            return CoverDecision(False, None, tuple(trace), "initial weight forced above 1", rounds)
        over = [q for q in changed if W[q] > cap]
        if over:
            return CoverDecision(False, None, tuple(trace),
                                 f"weight of {over[0]!r} exceeds the bound {cap}", rounds)
    state_weight = {q: W.get(q, 1) for q in d.states}
    trans_weight = {(q, psi): state_weight[t] for q in d.states for psi, t in d.successors(q)}
    return CoverDecision(True, WeightDistribution(state_weight, trans_weight), (), "", rounds)


def minimal_branching(d: Transducer) -> int:
    """Least branching size at which ``d`` is coverable."""
    require_deterministic(d)
    top = max(1, min(len(d.alphabet), d.max_out_degree()))
    for k in range(1, top + 1):
        if solve_weights(d, k).coverable:
            return k
    # unreachable in theory: at k >= |alphabet| every state needs weight 1
    raise AssertionError("no coverable branching size found")
