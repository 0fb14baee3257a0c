"""Structure learning: bottom clauses, beam search over clauses, greedy theory search.

The clause search builds bottom clauses from sampled examples, refines
them by adding one body literal (or dropping one head disjunct) at a time,
and scores each refinement by the LL of an EM run on the one-clause
theory.  Range-restricted refinements are collected in a target list and
a background list; the theory search then adds target clauses greedily
while the LL improves, appends the background clauses and refits.
"""

from __future__ import annotations

import bisect
import itertools
import logging
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

from .emblem import EmSettings, emblem_fit
from .logic import (
    Atom,
    Clause,
    Literal,
    MegaExample,
    ModeDeclaration,
    Placemarker,
    Theory,
    Var,
    atom_is_ground,
    atom_variables,
    clause_variables,
    is_range_restricted,
    apply_subst,
    unify,
)
from .parsing import format_clause
from .semantics import STANDARD

log = logging.getLogger(__name__)

PRUNE_TOL = 1e-9

# command-line / config names of the search parameters
PARAM_NAMES = {
    "NInt": "n_int", "NS": "n_s", "NA": "n_a", "NI": "n_i", "NV": "n_v",
    "NB": "n_b", "NTC": "n_tc", "NBC": "n_bc", "D": "depth_bound",
    "NEM": "max_iter", "epsilon": "epsilon", "delta": "delta",
    "semantics": "mode", "seed": "seed",
}


@dataclass(frozen=True)
class SearchParams:
    n_int: int = 1
    n_s: int = 1
    n_a: int = 1
    n_i: int = 10
    n_v: Optional[int] = 4
    n_b: int = 10
    n_tc: int = 50
    n_bc: int = 0
    depth_bound: Optional[int] = 3
    max_iter: Optional[int] = None
    epsilon: float = 1e-4
    delta: float = 1e-5
    mode: str = STANDARD
    closed_world: frozenset = frozenset()
    targets: frozenset = frozenset()
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        for name in ("n_int", "n_s", "n_a", "n_b", "n_tc"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_i < 0 or self.n_bc < 0:
            raise ValueError("NI and NBC must be >= 0")
        if self.n_v is not None and self.n_v < 1:
            raise ValueError("NV must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def em_settings(self) -> EmSettings:
        return EmSettings(self.depth_bound, self.max_iter, self.epsilon, self.delta,
                          self.mode, self.closed_world)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["closed_world"] = sorted(f"{p}/{a}" for p, a in self.closed_world)
        d["targets"] = sorted(f"{p}/{a}" for p, a in self.targets)
        return d


class ModedLiteral(NamedTuple):
    literal: Literal
    inputs: Tuple[Var, ...]  # variables in +type positions

    def __str__(self):
        return str(self.literal)


class BeamEntry(NamedTuple):
    clause: Clause
    remaining: Tuple[ModedLiteral, ...]
    score: float


@dataclass
class BottomClause:
    head: Tuple[Tuple[Atom, float], ...]
    body: Tuple[Literal, ...]
    allowed: Tuple[ModedLiteral, ...]


@dataclass
class SearchReport:
    params: dict = field(default_factory=dict)
    beam_sizes: List[dict] = field(default_factory=list)
    n_scored: int = 0
    target_clauses: List[dict] = field(default_factory=list)
    background_clauses: List[dict] = field(default_factory=list)
    accepted: List[dict] = field(default_factory=list)
    ll_trajectory: List[float] = field(default_factory=list)
    final_ll: Optional[float] = None
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


# ------------------------------------------------------------------ helpers


def _var_name(i: int) -> str:
    letter = chr(ord("A") + i % 26)
    return letter if i < 26 else f"{letter}{i // 26}"


def canonical_key(c: Clause):
    return (tuple(str(a) for a in c.head_atoms), tuple(sorted(str(l) for l in c.body)))


def insert_sorted(entry, score: float, lst: list, cap: Optional[int]) -> list:
    """Insert ``entry`` by descending score; equal scores keep insertion order.

    ``lst`` holds entries with a ``score`` attribute (or ``(item, score)``
    pairs); returns the new list truncated to ``cap``.
    """
    if cap is not None and cap <= 0:
        return []
    if isinstance(entry, BeamEntry):
        entry = entry._replace(score=score)
        keys = [-e.score for e in lst]
    else:
        entry = (entry, score)
        keys = [-e[1] for e in lst]
    pos = bisect.bisect_right(keys, -score)
    out = lst[:pos] + [entry] + lst[pos:]
    if cap is not None and len(out) > cap:
        out = out[:cap]
    return out


def _insert_unique(entry: BeamEntry, lst: List[BeamEntry], cap) -> List[BeamEntry]:
    key = canonical_key(entry.clause)
    for i, e in enumerate(lst):
        if canonical_key(e.clause) == key:
            if e.score >= entry.score:
                return lst
            lst = lst[:i] + lst[i + 1:]
            break
    return insert_sorted(entry, entry.score, lst, cap)


def _schema_goal(schema: Atom) -> Atom:
    """Schema with placemarkers replaced by distinct variables."""
    args = []
    for i, t in enumerate(schema.args):
        args.append(Var(f"_S{i}") if isinstance(t, Placemarker) else t)
    return Atom(schema.pred, tuple(args))


def _matches(atom: Atom, schema: Atom) -> bool:
    return unify(_schema_goal(schema), atom) is not None


def schema_answers(schema: Atom, world: MegaExample) -> List[Atom]:
    goal = _schema_goal(schema)
    return [f for f in world.index.by_signature(goal.signature) if unify(goal, f) is not None]


def multihead_answers(decl: ModeDeclaration, world: MegaExample) -> List[Tuple[Atom, ...]]:
    """Groundings of the shared head atoms induced by an example fact."""
    out: Dict[Tuple[Atom, ...], None] = {}
    for a in decl.shared_atoms:
        for f in world.index.by_signature(a.signature):
            s = unify(a, f)
            if s is None:
                continue
            heads = tuple(apply_subst(b, s) for b in decl.shared_atoms)
            if all(atom_is_ground(h) for h in heads):
                out.setdefault(heads)
    return list(out)


# ------------------------------------------------------------------ bottom clauses


def _find_head_decl(heads: Sequence[Atom], bias: Sequence[ModeDeclaration]) -> ModeDeclaration:
    for d in bias:
        if d.kind == "body" or len(d.schemas) != len(heads):
            continue
        if all(_matches(h, s) for h, s in zip(heads, d.schemas)):
            return d
    raise ValueError("no head declaration matches " + ", ".join(map(str, heads)))


def saturation(head, recall, n_s: int, world: MegaExample, bias: Sequence[ModeDeclaration],
               decl: Optional[ModeDeclaration] = None) -> BottomClause:
    """Bottom clause of ``head`` (an atom or tuple of atoms) in ``world``.

    ``recall`` is the head declaration's recall; the answer cap per body
    goal is the recall of each body declaration.
    """
    heads = (head,) if isinstance(head, Atom) else tuple(head)
    decl = decl or _find_head_decl(heads, bias)
    in_terms: Dict[str, Dict] = {}

    def add_term(t, typ):
        in_terms.setdefault(typ, {}).setdefault(t)

    for h, s in zip(heads, decl.schemas):
        for t, pm in zip(h.args, s.args):
            if isinstance(pm, Placemarker) and pm.kind == "+":
                add_term(t, pm.type)

    body_decls = [d for d in bias if d.kind == "body"]
    if decl.kind == "multihead":
        allowed = set(decl.allowed_body_preds)
        body_decls = [d for d in body_decls if d.schema.signature in allowed]
    head_set = set(heads)
    ground_body: Dict[Tuple[Atom, Atom], None] = {}  # (ground literal, schema)

    for _ in range(n_s):
        for d in body_decls:
            schema = d.schema
            in_pos = [(i, pm.type) for i, pm in enumerate(schema.args)
                      if isinstance(pm, Placemarker) and pm.kind == "+"]
            pools = [list(in_terms.get(typ, {})) for _, typ in in_pos]
            base = list(_schema_goal(schema).args)
            for combo in itertools.product(*pools):
                args = list(base)
                for (i, _), t in zip(in_pos, combo):
                    args[i] = t
                goal = Atom(schema.pred, tuple(args))
                n_found = 0
                for f in world.index.candidates(goal, {}):
                    if d.recall is not None and n_found >= d.recall:
                        break
                    if unify(goal, f) is None:
                        continue
                    n_found += 1
                    for t, pm in zip(f.args, schema.args):
                        if isinstance(pm, Placemarker) and pm.kind in ("-", "-#"):
                            add_term(t, pm.type)
                    if f not in head_set:
                        ground_body.setdefault((f, schema))

    names: Dict = {}

    def var_for(t):
        v = names.get(t)
        if v is None:
            v = names[t] = Var(_var_name(len(names)))
        return v

    def variabilize(atom: Atom, schema: Atom):
        args, inputs = [], []
        for t, pm in zip(atom.args, schema.args):
            if isinstance(pm, Placemarker) and pm.kind in ("+", "-"):
                v = var_for(t)
                args.append(v)
                if pm.kind == "+":
                    inputs.append(v)
            else:
                args.append(t)
        return Atom(atom.pred, tuple(args)), tuple(inputs)

    n = len(heads)
    prob = 0.5 if n == 1 else 1.0 / (n + 1)
    vhead = tuple((variabilize(h, s)[0], prob) for h, s in zip(heads, decl.schemas))
    allowed_lits: Dict[Literal, ModedLiteral] = {}
    for f, schema in ground_body:
        a, inputs = variabilize(f, schema)
        allowed_lits.setdefault(Literal(a), ModedLiteral(Literal(a), inputs))
    allowed_lits = list(allowed_lits.values())
    return BottomClause(vhead, tuple(m.literal for m in allowed_lits), tuple(allowed_lits))


def initial_beams(params: SearchParams, data: Sequence[MegaExample],
                  bias: Sequence[ModeDeclaration], rng: random.Random) -> List[Tuple[Tuple[str, int], List[BeamEntry]]]:
    """One beam per head predicate, seeded with empty-body clauses scored -inf."""
    if not any(d.kind != "body" for d in bias):
        raise ValueError("the language bias has no head declaration")
    if not data:
        raise ValueError("no training examples")
    beams: Dict[Tuple[str, int], List[BeamEntry]] = {}
    for decl in bias:
        if decl.kind == "body":
            continue
        sig = decl.schemas[0].signature
        beam = beams.setdefault(sig, [])
        produced = 0
        for _ in range(params.n_int):
            ex = rng.choice(data)
            if decl.kind == "head":
                answers = [(a,) for a in schema_answers(decl.schema, ex)]
            else:
                answers = multihead_answers(decl, ex)
            for _ in range(params.n_a):
                if not answers:
                    continue
                heads = rng.choice(answers)
                bc = saturation(heads, decl.recall, params.n_s, ex, bias, decl)
                clause = Clause(0, bc.head, ())
                beam.insert(0, BeamEntry(clause, bc.allowed, -math.inf))
                produced += 1
        if not produced:
            log.warning("no examples match head declaration %s", ", ".join(map(str, decl.schemas)))
    return [(sig, beam) for sig, beam in beams.items()]


# ------------------------------------------------------------------ refinement


def _head_disjuncts(c: Clause) -> int:
    return len(c.head) + (1 if c.has_null else 0)


def clause_refinements(entry, n_v: Optional[int]) -> List[Tuple[Clause, Tuple[ModedLiteral, ...]]]:
    """Refinements of ``(clause, remaining)``: one extra body literal, or one
    head disjunct fewer for clauses with three or more disjuncts."""
    clause, remaining = entry[0], entry[1]
    refs = []
    cvars = set(clause_variables(clause))
    present = set(clause.body)
    for i, ml in enumerate(remaining):
        lit = ml.literal
        if lit in present:
            continue
        lvars = atom_variables([lit.atom])
        if not cvars.intersection(lvars):
            continue
        if not set(ml.inputs) <= cvars:
            continue
        nvar = len(cvars.union(lvars))
        if n_v is not None and nvar >= n_v:
            continue
        refined = Clause(clause.id, clause.head, clause.body + (lit,))
        refs.append((refined, remaining[:i] + remaining[i + 1:]))
    if _head_disjuncts(clause) >= 3 and len(clause.head) >= 2:
        total = sum(clause.annotations)
        for k in range(len(clause.head)):
            rest = [h for j, h in enumerate(clause.head) if j != k]
            rest_total = sum(p for _, p in rest)
            if rest_total > 0:
                head = tuple((a, p * total / rest_total) for a, p in rest)
            else:
                head = tuple((a, total / len(rest)) for a, _ in rest)
            refs.append((Clause(clause.id, head, clause.body), remaining))
    return refs


# ------------------------------------------------------------------ scoring


def score_clause(clause: Clause, data: Sequence[MegaExample], settings: EmSettings) -> Tuple[float, Clause]:
    """LL and fitted clause from EM on the one-clause theory.

    The queries are the examples of every predicate in the clause head.
    """
    if any(not l.positive for l in clause.body):
        raise ValueError("negative literals are not allowed in learned clauses")
    targets = {a.signature for a in clause.head_atoms}
    res = emblem_fit(Theory.of([clause]), data, targets, settings)
    return res.ll, res.theory[0]


_WORKER = {}


def _init_worker(data, settings):
    _WORKER["data"] = data
    _WORKER["settings"] = settings


def _score_in_worker(clause):
    return score_clause(clause, _WORKER["data"], _WORKER["settings"])


class _Scorer:
    def __init__(self, data, settings: EmSettings, jobs: int = 1):
        self.data = data
        self.settings = settings
        self.cache: Dict = {}
        self.pool = None
        if jobs > 1:
            self.pool = ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(data, settings))
        self.n_scored = 0

    def score(self, clauses: Sequence[Clause]) -> List[Tuple[float, Clause]]:
        keys = [(canonical_key(c), c.annotations) for c in clauses]
        todo = []
        for k, c in zip(keys, clauses):
            if k not in self.cache and k not in dict(todo):
                todo.append((k, c))
        if todo:
            if self.pool is not None:
                results = list(self.pool.map(_score_in_worker, [c for _, c in todo]))
            else:
                results = [score_clause(c, self.data, self.settings) for _, c in todo]
            for (k, _), r in zip(todo, results):
                self.cache[k] = r
            self.n_scored += len(todo)
        return [self.cache[k] for k in keys]

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


# ------------------------------------------------------------------ searches


def _describe(e: BeamEntry) -> dict:
    return {"clause": format_clause(e.clause), "LL": e.score}


def clause_search(params: SearchParams, data: Sequence[MegaExample], bias: Sequence[ModeDeclaration],
                  rng: random.Random, report: Optional[SearchReport] = None
                  ) -> Tuple[List[BeamEntry], List[BeamEntry]]:
    """Beam search in the space of clauses; returns the target and background lists."""
    targets = set(params.targets)
    tc: List[BeamEntry] = []
    bc: List[BeamEntry] = []
    if params.n_i == 0:
        return tc, bc
    scorer = _Scorer(data, params.em_settings(), params.jobs)
    try:
        for sig, beam in initial_beams(params, data, bias, rng):
            steps = 1
            while steps <= params.n_i and beam:
                new_beam: List[BeamEntry] = []
                while beam:
                    entry = beam.pop(0)
                    refs = clause_refinements(entry, params.n_v)
                    scored = scorer.score([c for c, _ in refs])
                    for (_, lits), (ll, fitted) in zip(refs, scored):
                        fitted = fitted.with_id(0)
                        e = BeamEntry(fitted, lits, ll)
                        new_beam = _insert_unique(e, new_beam, params.n_b)
                        if is_range_restricted(fitted):
                            if any(a.signature in targets for a in fitted.head_atoms):
                                tc = _insert_unique(e, tc, params.n_tc)
                            else:
                                bc = _insert_unique(e, bc, params.n_bc)
                if report is not None:
                    report.beam_sizes.append({"predicate": f"{sig[0]}/{sig[1]}",
                                              "iteration": steps, "size": len(new_beam)})
                beam = new_beam
                steps += 1
    finally:
        scorer.close()
    if report is not None:
        report.n_scored += scorer.n_scored
        report.target_clauses = [_describe(e) for e in tc]
        report.background_clauses = [_describe(e) for e in bc]
    return tc, bc


def theory_search(tc: Sequence[BeamEntry], bc: Sequence[BeamEntry], params: SearchParams,
                  data: Sequence[MegaExample], report: Optional[SearchReport] = None) -> Theory:
    """Greedy search in the space of theories over the ranked target clauses."""
    settings = params.em_settings()
    targets = set(params.targets)
    th: List[Clause] = []
    th_ll = -math.inf
    for entry in tc:
        cand = Theory.of(th + [entry.clause])
        res = emblem_fit(cand, data, targets, settings)
        if res.ll > th_ll:
            th, th_ll = list(res.theory), res.ll
            if report is not None:
                report.accepted.append({"clause": format_clause(entry.clause), "LL": res.ll})
                report.ll_trajectory.append(res.ll)
    th.extend(e.clause for e in bc)
    if not th:
        if report is not None:
            report.final_ll = None
        return Theory()
    res = emblem_fit(Theory.of(th), data, targets, settings)
    kept = [c for c in res.theory
            if (c.id in res.used_clauses or c.is_deterministic)
            and any(p > PRUNE_TOL for p in c.annotations)]
    if report is not None:
        report.final_ll = res.ll
    return Theory.of(kept)


def slipcover(params: SearchParams, data: Sequence[MegaExample], bias: Sequence[ModeDeclaration],
              report: Optional[SearchReport] = None) -> Theory:
    """Clause search followed by theory search; deterministic given ``params.seed``."""
    start = time.perf_counter()
    if report is not None:
        report.params = params.to_dict()
    rng = random.Random(params.seed)
    tc, bc = clause_search(params, data, bias, rng, report)
    theory = theory_search(tc, bc, params, data, report)
    if report is not None:
        report.wall_clock = time.perf_counter() - start
    return theory
