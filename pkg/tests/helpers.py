"""Random instance generators and fixture shortcuts shared by the tests."""
import random

from hypothesis import strategies as st

from coverkit import fixture_path, load_buchi, load_transducer
from coverkit.automata import BuchiSpec, Transducer

DIRS = ("x", "y", "z", "w")


def fig(name):
    return load_transducer(fixture_path(f"{name}.json"))


def buchi_fig2():
    return load_buchi(fixture_path("buchi_fig2.json"))


def random_transducer(rng: random.Random, n: int, alphabet=("a", "b", "c"), *,
                      acyclic=False, deterministic=True, density=0.5, max_out=3) -> Transducer:
    states = tuple(f"q{i}" for i in range(n))
    label = {q: rng.choice(alphabet) for q in states}
    trans = {}
    for i, q in enumerate(states):
        pool = list(states[i + 1:] if acyclic else states)
        rng.shuffle(pool)
        used_labels = set()
        out = 0
        for t in pool:
            if out >= max_out or rng.random() > density:
                continue
            if deterministic and label[t] in used_labels:
                continue
            used_labels.add(label[t])
            trans[q, DIRS[out]] = t
            out += 1
    return Transducer(DIRS[:max_out], tuple(alphabet), states, trans, states[0], label)


def random_nondeterministic(rng: random.Random, n: int, alphabet=("a", "b")) -> Transducer:
    """Out-degree up to 3 with labels drawn freely, so clashes are common."""
    return random_transducer(rng, n, alphabet, deterministic=False, density=0.6, max_out=3)


def random_buchi(rng: random.Random, n: int, inputs=("u0", "u1"), outputs=("a", "b"), *,
                 density=0.7, accepting=0.4) -> BuchiSpec:
    states = tuple(f"s{i}" for i in range(n))
    trans = {}
    for s in states:
        for u in inputs:
            for o in outputs:
                if rng.random() < density:
                    trans[s, u, o] = rng.choice(states)
    acc = frozenset(s for s in states if rng.random() < accepting)
    return BuchiSpec(tuple(inputs), tuple(outputs), states, trans, states[0], acc)


@st.composite
def transducers(draw, max_states=5, alphabet=("a", "b", "c"), acyclic=False):
    n = draw(st.integers(1, max_states))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    density = draw(st.sampled_from([0.3, 0.5, 0.8]))
    return random_transducer(random.Random(seed), n, alphabet, acyclic=acyclic, density=density)


@st.composite
def buchi_specs(draw, max_states=4, inputs=("u0", "u1"), outputs=("a", "b")):
    n = draw(st.integers(1, max_states))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_buchi(random.Random(seed), n, inputs, outputs,
                        density=draw(st.sampled_from([0.5, 0.8, 1.0])))
