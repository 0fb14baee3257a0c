"""EM parameter learning with expectations computed on query BDDs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .bdd import BDD, ZERO, build_query_bdd, expectations
from .logic import Atom, MegaExample, Theory
from .params import ParamTable
from .semantics import STANDARD, Prover

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-10


@dataclass(frozen=True)
class EmSettings:
    depth_bound: Optional[int] = 3   # D
    max_iter: Optional[int] = None   # NEM, None for unbounded
    epsilon: float = 1e-4
    delta: float = 1e-5
    mode: str = STANDARD
    closed_world: frozenset = frozenset()

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0:
            raise ValueError("epsilon and delta must be positive")
        if self.max_iter is not None and self.max_iter < 0:
            raise ValueError("NEM must be >= 0")


@dataclass
class QueryBDD:
    bdd: BDD
    positive: bool
    weight: int = 1
    query: Optional[Atom] = None

    def signature(self):
        """Structural key: equal keys give identical E-step contributions."""
        m = self.bdd.manager
        nodes = m.reachable(self.bdd.node)
        pos = {0: -1, 1: -2}
        for i, n in enumerate(nodes):
            pos[n] = i
        shape = tuple((m._lvl[n], pos[m._hi[n]], pos[m._lo[n]]) for n in nodes)
        variables = tuple((v.clause, v.bit, v.grounding) for v in m.vars)
        return (self.positive, variables, shape, pos[self.bdd.node])

    def groundings_per_clause(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for cid, _ in self.bdd.manager.units():
            out[cid] = out.get(cid, 0) + 1
        return out


class CountAccumulator:
    """Expected bit counts ``E[c_ik0]`` and ``E[c_ik1]`` summed over queries."""

    def __init__(self):
        self.counts: Dict[Tuple[int, int], List[float]] = {}

    def add(self, key, e0: float, e1: float) -> None:
        acc = self.counts.setdefault(key, [0.0, 0.0])
        acc[0] += e0
        acc[1] += e1

    def merge(self, other: "CountAccumulator") -> "CountAccumulator":
        for key, (e0, e1) in other.counts.items():
            self.add(key, e0, e1)
        return self

    def e0(self, key) -> float:
        return self.counts.get(key, (0.0, 0.0))[0]

    def e1(self, key) -> float:
        return self.counts.get(key, (0.0, 0.0))[1]

    def __len__(self) -> int:
        return len(self.counts)


def _as_query(item) -> QueryBDD:
    if isinstance(item, QueryBDD):
        return item
    bdd, positive = item[0], item[1]
    return QueryBDD(bdd, positive, item[2] if len(item) > 2 else 1)


def query_contribution(q: QueryBDD, params: ParamTable) -> Tuple[float, Dict[Tuple[int, int], Tuple[float, float]]]:
    """Log-likelihood term and conditional expected counts for one query."""
    p, eta = expectations(q.bdd, params)
    counts = {}
    if q.positive:
        ll = math.log(max(p, PROB_FLOOR))
        if p > 0.0:
            for key, (e0, e1) in eta.items():
                counts[key] = (e0 / p, e1 / p)
    else:
        neg = 1.0 - p
        ll = math.log(max(neg, PROB_FLOOR))
        if neg > 0.0:
            # P(X = x, not Q) = P(X = x) - P(X = x, Q) over the declared groundings
            n_ground = q.groundings_per_clause()
            for (i, k), (e0, e1) in eta.items():
                pi = params[(i, k)]
                n = n_ground[i]
                counts[(i, k)] = (max(n * (1.0 - pi) - e0, 0.0) / neg,
                                  max(n * pi - e1, 0.0) / neg)
    return ll, counts


def expectation_step(bdds: Iterable, params: ParamTable) -> Tuple[float, CountAccumulator]:
    ll = 0.0
    acc = CountAccumulator()
    for item in bdds:
        q = _as_query(item)
        term, counts = query_contribution(q, params)
        ll += q.weight * term
        for key, (e0, e1) in counts.items():
            acc.add(key, q.weight * e0, q.weight * e1)
    return ll, acc


def maximization_step(acc: CountAccumulator, params: ParamTable) -> ParamTable:
    new = params.copy()
    for key, (e0, e1) in acc.counts.items():
        total = e0 + e1
        if total > 0.0:
            new[key] = e1 / total
    return new


def derivation_world(example: MegaExample, targets) -> MegaExample:
    """The example's facts minus those of the query predicates."""
    return example.without_predicates(targets)


def build_bdds(theory: Theory, data: Sequence[MegaExample], targets,
               settings: EmSettings, params: Optional[ParamTable] = None,
               group: bool = True) -> List[QueryBDD]:
    """One BDD per target example; identical diagrams are merged by weight."""
    params = params or ParamTable.from_theory(theory)
    prover = Prover(theory, settings.mode, settings.depth_bound, settings.closed_world)
    out: List[QueryBDD] = []
    groups: Dict = {}
    for ex in data:
        world = derivation_world(ex, targets)
        for atom, positive in ex.examples_for(targets):
            q = QueryBDD(build_query_bdd(prover.explain(world, atom), params), positive, 1, atom)
            if not group:
                out.append(q)
                continue
            sig = q.signature()
            hit = groups.get(sig)
            if hit is None:
                groups[sig] = q
                out.append(q)
            else:
                hit.weight += 1
    return out


@dataclass
class EmResult:
    ll: float
    theory: Theory
    params: ParamTable
    iterations: int
    trace: List[Tuple[float, Dict[int, Tuple[float, ...]]]] = field(default_factory=list)
    used_clauses: Set[int] = field(default_factory=set)

    def trace_csv(self) -> str:
        rows = ["iter,LL"]
        rows.extend(f"{i},{ll!r}" for i, (ll, _) in enumerate(self.trace))
        return "\n".join(rows) + "\n"


def emblem_fit(theory: Theory, data: Sequence[MegaExample], targets,
               settings: EmSettings = EmSettings(), bdds: Optional[List[QueryBDD]] = None) -> EmResult:
    """Run EM from the theory's current annotations.

    The loop stops when the LL gain drops below ``epsilon`` or below the
    fraction ``delta`` of ``-LL``, or after ``max_iter`` M-steps.  The
    returned LL is the likelihood of the returned parameters.
    """
    targets = set(targets)
    params = ParamTable.from_theory(theory)
    if bdds is None:
        bdds = build_bdds(theory, data, targets, settings, params)
    used = set()
    for q in bdds:
        if q.bdd.node != ZERO:
            used.update(cid for cid, _ in q.bdd.manager.units())
    ll = -math.inf
    n = 0
    trace = []
    while True:
        ll0 = ll
        ll, acc = expectation_step(bdds, params)
        trace.append((ll, params.as_dict()))
        log.debug("iter %d LL=%.6f", n, ll)
        if ll - ll0 < settings.epsilon or ll - ll0 < -ll * settings.delta:
            break
        if settings.max_iter is not None and n >= settings.max_iter:
            break
        params = maximization_step(acc, params)
        n += 1
    return EmResult(ll, params.apply_to(theory), params, n, trace, used)


def emblem(theory: Theory, data: Sequence[MegaExample], targets,
           settings: EmSettings = EmSettings()) -> Tuple[float, Theory]:
    res = emblem_fit(theory, data, targets, settings)
    return res.ll, res.theory
