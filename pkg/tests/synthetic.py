"""Synthetic datasets sampled from planted theories."""

import random

from lpadlearn import parse_bias, parse_theory
from lpadlearn.logic import Atom, Const, MegaExample

PLANTED = """\
t(X):0.9 :- a(X).
t(X):0.8 :- b(X), c(X).
"""

PLANTED_BIAS = """\
modeh(*, t(+obj)).
modeb(*, a(+obj)).
modeb(*, b(+obj)).
modeb(*, c(+obj)).
modeb(*, d(+obj)).
"""

TARGETS = frozenset({("t", 1)})


def planted_theory():
    return parse_theory(PLANTED)


def planted_bias():
    return parse_bias(PLANTED_BIAS)


def planted_examples(n_examples=200, n_objects=3, p_background=0.5, seed=0, offset=0):
    """Mega-examples whose ``t`` facts are sampled from the planted theory."""
    rng = random.Random(seed)
    out = []
    for e in range(n_examples):
        facts, negs = [], []
        for j in range(n_objects):
            x = Const(f"o{j}")
            bg = {p: rng.random() < p_background for p in "abcd"}
            facts.extend(Atom(p, (x,)) for p in "abcd" if bg[p])
            fire_a = bg["a"] and rng.random() < 0.9
            fire_bc = bg["b"] and bg["c"] and rng.random() < 0.8
            t = Atom("t", (x,))
            (facts if fire_a or fire_bc else negs).append(t)
        out.append(MegaExample(f"m{offset + e}", tuple(facts), tuple(negs)))
    return out
