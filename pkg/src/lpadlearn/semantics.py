"""Explanation finding and the exhaustive distribution-semantics oracle.

:class:`Prover` finds a covering set of explanations for a ground query by
depth-bounded SLD resolution (leftmost literal, clauses in theory order)
against the facts of a mega-example and the clauses of a theory.  The
enumeration functions compute the same quantities by summing over every
selection, and are only meant for small programs and tests.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .logic import (
    Atom,
    Clause,
    Const,
    FactIndex,
    MegaExample,
    Renamer,
    Theory,
    Var,
    apply_subst,
    clause_variables,
    constants_of,
    head_variables,
    is_ground,
    resolve,
    term_variables,
    unify,
)
from .params import ParamTable

STANDARD = "standard"
APPROXIMATE = "approximate"
MODES = (STANDARD, APPROXIMATE)

DEFAULT_CAP = 2 ** 20


@dataclass(frozen=True, slots=True, order=True)
class AtomicChoice:
    """Selection of head ``head`` (0-based; ``len(heads)`` is null) for one
    grounding of clause ``clause``.  ``grounding`` holds the values of the
    clause's key variables: all of them under standard semantics, the head
    ones under approximate semantics."""

    clause: int
    grounding: Tuple
    head: int

    @property
    def unit(self) -> Tuple[int, Tuple]:
        return (self.clause, self.grounding)

    def __str__(self) -> str:
        g = ",".join(map(str, self.grounding))
        return f"(C{self.clause},[{g}],{self.head})"


Explanation = FrozenSet[AtomicChoice]


def is_consistent(choices: Iterable[AtomicChoice]) -> bool:
    seen = {}
    for c in choices:
        if seen.setdefault(c.unit, c.head) != c.head:
            return False
    return True


def sorted_choices(expl: Explanation) -> List[AtomicChoice]:
    return sorted(expl, key=lambda c: (c.clause, tuple(map(str, c.grounding)), c.head))


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown semantics mode {mode!r}")


def _key_variables(clause: Clause, mode: str) -> Tuple[Var, ...]:
    return head_variables(clause) if mode == APPROXIMATE else clause_variables(clause)


def herbrand_universe(theory: Theory, world: MegaExample, extra: Iterable[Atom] = ()) -> Tuple[Const, ...]:
    atoms = itertools.chain(
        (a for c in theory for a in c.head_atoms),
        (l.atom for c in theory for l in c.body),
        world.facts,
        world.negatives,
        extra,
    )
    return constants_of(atoms)


class Prover:
    """Explanation finder for one theory, reusable across worlds and queries."""

    def __init__(self, theory: Theory, mode: str = STANDARD,
                 depth_bound: Optional[int] = None, closed_world=()):
        _check_mode(mode)
        if depth_bound is not None and depth_bound < 1:
            raise ValueError("depth bound must be >= 1")
        self.theory = theory
        self.mode = mode
        self.depth_bound = depth_bound
        self.closed_world = frozenset(closed_world)
        self._by_head: Dict[Tuple[str, int], list] = {}
        self._compiled = []
        for c in theory:
            for l in c.body:
                if not l.positive:
                    raise ValueError(f"negative body literal in clause {c.id} is not supported")
            all_vars = clause_variables(c)
            key_vars = _key_variables(c, mode)
            entry = (c, all_vars, key_vars, c.is_deterministic)
            self._compiled.append(entry)
            for k, h in enumerate(c.head_atoms):
                self._by_head.setdefault(h.signature, []).append((entry, k))

    def explain(self, world: MegaExample, query: Atom) -> List[Explanation]:
        """Covering set of explanations of ground ``query`` in ``world``.

        Explanations are returned deduplicated in discovery order.
        """
        renamer = Renamer()
        found: Dict[Explanation, None] = {}
        universe = None
        goals = ((query, 0),)
        for s, choices in self._solve(goals, {}, (), world.index, renamer):
            raw = [(cid, tuple(resolve(v, s) for v in key), k) for cid, key, k in choices]
            free: Dict[Var, None] = {}
            for _, key, _ in raw:
                for t in key:
                    term_variables(t, free)
            if not free:
                groundings = [raw]
            else:
                # clause variables left unbound range over the universe
                if universe is None:
                    universe = herbrand_universe(self.theory, world, (query,))
                groundings = []
                for vals in itertools.product(universe, repeat=len(free)):
                    b = dict(zip(free, vals))
                    groundings.append([(cid, tuple(resolve(t, b) for t in key), k)
                                       for cid, key, k in raw])
            for g in groundings:
                expl = {}
                ok = True
                for cid, key, k in g:
                    prev = expl.setdefault((cid, key), k)
                    if prev != k:
                        ok = False
                        break
                if ok:
                    found.setdefault(frozenset(AtomicChoice(cid, key, k) for (cid, key), k in expl.items()))
        return list(found)

    def _solve(self, goals, s, choices, facts: FactIndex, renamer: Renamer):
        if not goals:
            yield s, choices
            return
        (g, d), rest = goals[0], goals[1:]
        for f in facts.candidates(g, s):
            s2 = unify(g, f, s)
            if s2 is not None:
                yield from self._solve(rest, s2, choices, facts, renamer)
        if g.signature in self.closed_world:
            return
        if self.depth_bound is not None and d >= self.depth_bound:
            return
        for (c, all_vars, key_vars, det), k in self._by_head.get(g.signature, ()):
            ren = renamer.rename(all_vars)
            s2 = unify(g, apply_subst(c.head_atoms[k], ren), s)
            if s2 is None:
                continue
            if det:
                ch = choices
            else:
                ch = choices + ((c.id, tuple(ren[v] for v in key_vars), k),)
            body = tuple((apply_subst(l.atom, ren), d + 1) for l in c.body)
            yield from self._solve(body + rest, s2, ch, facts, renamer)


def find_explanations(theory: Theory, world: MegaExample, query: Atom,
                      depth_bound: Optional[int] = None, mode: str = STANDARD,
                      closed_world=()) -> List[Explanation]:
    return Prover(theory, mode, depth_bound, closed_world).explain(world, query)


# ------------------------------------------------------------------ oracle


@dataclass
class _Unit:
    clause: int
    key: Tuple
    heads: Tuple[Atom, ...]
    bodies: List[Tuple[Atom, ...]]


def _body_matches(body: Sequence[Atom], model: FactIndex, world: FactIndex, closed):
    """All substitutions making every body atom true in ``model``."""
    substs = [{}]
    for b in body:
        source = world if b.signature in closed else model
        nxt = []
        for s in substs:
            for f in source.candidates(b, s):
                s2 = unify(b, f, s)
                if s2 is not None:
                    nxt.append(s2)
        substs = nxt
        if not substs:
            break
    return substs


class Grounding:
    """Relevant groundings of a theory in a world.

    A grounding is relevant when its body can be true in some instance;
    the others never fire and marginalize out of every query probability.
    """

    def __init__(self, theory: Theory, world: MegaExample, mode: str = STANDARD,
                 closed_world=(), extra: Iterable[Atom] = ()):
        _check_mode(mode)
        for c in theory:
            if any(not l.positive for l in c.body):
                raise ValueError("negative body literals are not supported")
        self.theory = theory
        self.mode = mode
        self.world = world
        closed = frozenset(closed_world)
        self.closed = closed
        universe = herbrand_universe(theory, world, extra)

        # atoms true in at least one instance
        possible = list(world.facts)
        possible_set = set(possible)
        while True:
            idx = FactIndex(possible)
            added = False
            for c in theory:
                for s in _body_matches([l.atom for l in c.body], idx, world.index, closed):
                    for s3 in self._extend(c, s, universe):
                        for h in c.head_atoms:
                            a = apply_subst(h, s3)
                            if a not in possible_set:
                                possible_set.add(a)
                                possible.append(a)
                                added = True
            if not added:
                break
        idx = FactIndex(possible)

        self.units: List[_Unit] = []
        self.rules: List[Tuple[Atom, List[Tuple[Atom, ...]]]] = []
        for c in theory:
            key_vars = _key_variables(c, mode)
            units: Dict[Tuple, _Unit] = {}
            for s in _body_matches([l.atom for l in c.body], idx, world.index, closed):
                for s3 in self._extend(c, s, universe):
                    key = tuple(resolve(v, s3) for v in key_vars)
                    u = units.get(key)
                    if u is None:
                        u = units[key] = _Unit(c.id, key, tuple(apply_subst(h, s3) for h in c.head_atoms), [])
                    body = tuple(apply_subst(l.atom, s3) for l in c.body)
                    if body not in u.bodies:
                        u.bodies.append(body)
            if c.is_deterministic:
                for u in units.values():
                    self.rules.append((u.heads[0], u.bodies))
            else:
                self.units.extend(units.values())

    @staticmethod
    def _extend(c: Clause, s, universe):
        """Ground the head-only variables of ``c`` over the universe."""
        free = [v for v in clause_variables(c) if not is_ground(v, s)]
        if not free:
            yield s
            return
        for vals in itertools.product(universe, repeat=len(free)):
            s3 = dict(s)
            s3.update(zip(free, vals))
            yield s3

    def n_selections(self, params: ParamTable) -> int:
        return math.prod(params.n_values(u.clause) for u in self.units)

    def least_model(self, selection: Sequence[int]) -> FrozenSet[Atom]:
        rules = list(self.rules)
        for u, v in zip(self.units, selection):
            if v < len(u.heads):
                rules.append((u.heads[v], u.bodies))
        model = set(self.world.facts)
        changed = True
        while changed:
            changed = False
            for head, bodies in rules:
                if head in model:
                    continue
                if any(all(b in model for b in body) for body in bodies):
                    model.add(head)
                    changed = True
        return frozenset(model)


@dataclass(frozen=True)
class Instance:
    """A selection: the head chosen for every relevant grounding."""

    grounding: Grounding
    selection: Tuple[int, ...]

    def choices(self) -> List[AtomicChoice]:
        return [AtomicChoice(u.clause, u.key, v) for u, v in zip(self.grounding.units, self.selection)]

    def model(self) -> FrozenSet[Atom]:
        return self.grounding.least_model(self.selection)

    def entails(self, query: Atom) -> bool:
        return query in self.model()


def enumerate_instances(theory: Theory, world: MegaExample, mode: str = STANDARD,
                        params: Optional[ParamTable] = None, closed_world=(),
                        cap: int = DEFAULT_CAP, extra: Iterable[Atom] = ()) -> List[Tuple[Instance, float]]:
    params = params or ParamTable.from_theory(theory)
    g = Grounding(theory, world, mode, closed_world, extra)
    n = g.n_selections(params)
    if n > cap:
        raise OverflowError(f"{n} selections exceed the enumeration cap {cap}")
    dists = [params.value_probs(u.clause) for u in g.units]
    out = []
    for sel in itertools.product(*(range(len(d)) for d in dists)):
        p = 1.0
        for d, v in zip(dists, sel):
            p *= d[v]
        out.append((Instance(g, sel), p))
    return out


def brute_force_prob(theory: Theory, world: MegaExample, query: Atom, mode: str = STANDARD,
                     params: Optional[ParamTable] = None, closed_world=(),
                     cap: int = DEFAULT_CAP) -> float:
    """Sum of the probabilities of the instances whose least model has ``query``."""
    total = 0.0
    for inst, p in enumerate_instances(theory, world, mode, params, closed_world, cap, (query,)):
        if inst.entails(query):
            total += p
    return total


def _bit_prob(v: int, k: int, pi: float) -> float:
    """P(bit k = 1) when the multi-valued variable takes value v."""
    if k < v:
        return 0.0
    if k == v:
        return 1.0
    return pi


def brute_force_expectations(theory: Theory, world: MegaExample, query: Atom,
                             mode: str = STANDARD, params: Optional[ParamTable] = None,
                             groundings=None, negated: bool = False, closed_world=(),
                             cap: int = DEFAULT_CAP) -> Dict[Tuple[int, int], Tuple[float, float]]:
    """Expected bit counts ``(E[c_ik0 | Q], E[c_ik1 | Q])`` by enumeration.

    ``groundings`` restricts the sum to the given ``(clause, key)`` units
    (default: every relevant grounding).  With ``negated`` the conditioning
    event is the query being false.
    """
    params = params or ParamTable.from_theory(theory)
    insts = enumerate_instances(theory, world, mode, params, closed_world, cap, (query,))
    units = insts[0][0].grounding.units if insts else []
    wanted = None if groundings is None else set(groundings)
    sums: Dict[Tuple[int, int], List[float]] = {}
    for u in units:
        if wanted is None or (u.clause, u.key) in wanted:
            for k in range(params.n_bits(u.clause)):
                sums.setdefault((u.clause, k), [0.0, 0.0])
    pq = 0.0
    for inst, p in insts:
        if inst.entails(query) == negated:
            continue
        pq += p
        for u, v in zip(units, inst.selection):
            if wanted is not None and (u.clause, u.key) not in wanted:
                continue
            bits = params.bits(u.clause)
            for k, pi in enumerate(bits):
                p1 = _bit_prob(v, k, pi)
                acc = sums[(u.clause, k)]
                acc[1] += p * p1
                acc[0] += p * (1.0 - p1)
    if pq <= 0.0:
        raise ZeroDivisionError("conditioning event has probability zero")
    return {key: (e0 / pq, e1 / pq) for key, (e0, e1) in sums.items()}
