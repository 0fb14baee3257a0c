"""Terms, atoms, annotated disjunctive clauses, substitutions and unification.

Substitutions are plain dicts mapping :class:`Var` to terms in triangular
form (a binding may point at another bound variable); :func:`walk` and
:func:`resolve` dereference them.  All term and clause values are
immutable and hashable.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

ANNOTATION_TOL = 1e-12

_PLAIN_NAME = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def _format_name(name) -> str:
    if isinstance(name, (int, float)):
        return repr(name)
    if _PLAIN_NAME.match(name) or name == "[]":
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    value: Union[str, int, float]

    def __str__(self) -> str:
        return _format_name(self.value)


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: Tuple["Term", ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("compound terms need at least one argument")

    def __str__(self) -> str:
        return f"{_format_name(self.functor)}({','.join(map(str, self.args))})"


@dataclass(frozen=True, slots=True)
class Placemarker:
    """Mode-declaration argument: ``+type``, ``-type``, ``#type`` or ``-#type``."""

    kind: str
    type: str

    KINDS = ("+", "-", "#", "-#")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown placemarker {self.kind}{self.type}")

    def __str__(self) -> str:
        return f"{self.kind}{self.type}"


Term = Union[Var, Const, Compound, Placemarker]
Subst = Dict[Var, "Term"]


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: Tuple[Term, ...] = ()

    @property
    def signature(self) -> Tuple[str, int]:
        return (self.pred, len(self.args))

    def __str__(self) -> str:
        if not self.args:
            return _format_name(self.pred)
        return f"{_format_name(self.pred)}({','.join(map(str, self.args))})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"\\+ {self.atom}"


@dataclass(frozen=True, slots=True)
class Clause:
    """Annotated disjunctive clause ``h1:p1 ; ... ; hn:pn :- b1, ..., bm``.

    When the annotations sum to less than one the head implicitly carries a
    null atom with the remaining mass.
    """

    id: int
    head: Tuple[Tuple[Atom, float], ...]
    body: Tuple[Literal, ...] = ()

    def __post_init__(self):
        if not self.head:
            raise ValueError("clause head must be non-empty")
        total = 0.0
        for _, p in self.head:
            if not (0.0 <= p <= 1.0):
                raise ValueError(f"annotation {p} outside [0, 1]")
            total += p
        if total > 1.0 + ANNOTATION_TOL:
            raise ValueError(f"head annotations sum to {total} > 1")

    @property
    def head_atoms(self) -> Tuple[Atom, ...]:
        return tuple(a for a, _ in self.head)

    @property
    def annotations(self) -> Tuple[float, ...]:
        return tuple(p for _, p in self.head)

    @property
    def has_null(self) -> bool:
        return sum(self.annotations) < 1.0 - ANNOTATION_TOL

    @property
    def n_values(self) -> int:
        """Number of values of the clause's choice variable, null included."""
        return len(self.head) + (1 if self.has_null else 0)

    @property
    def is_deterministic(self) -> bool:
        return self.n_values == 1

    def with_id(self, cid: int) -> "Clause":
        return Clause(cid, self.head, self.body)

    def with_annotations(self, probs: Iterable[float]) -> "Clause":
        return Clause(self.id, tuple(zip(self.head_atoms, probs)), self.body)

    def __str__(self) -> str:
        from .parsing import format_clause

        return format_clause(self)


@dataclass(frozen=True)
class Theory:
    clauses: Tuple[Clause, ...] = ()

    def __post_init__(self):
        for i, c in enumerate(self.clauses):
            if c.id != i:
                raise ValueError(f"clause ids must be 0..n-1 in order, got {c.id} at {i}")

    @classmethod
    def of(cls, clauses: Iterable[Clause]) -> "Theory":
        """Build a theory renumbering clause ids in order."""
        return cls(tuple(c.with_id(i) for i, c in enumerate(clauses)))

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __getitem__(self, i: int) -> Clause:
        return self.clauses[i]


@dataclass(frozen=True)
class ModeDeclaration:
    kind: str  # "head", "multihead" or "body"
    recall: Optional[int]  # None stands for "*"
    schemas: Tuple[Atom, ...]
    shared_atoms: Tuple[Atom, ...] = ()
    allowed_body_preds: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        if self.kind not in ("head", "multihead", "body"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if self.recall is not None and self.recall < 1:
            raise ValueError("recall must be a positive integer or '*'")
        if self.kind == "multihead" and len(self.schemas) != len(self.shared_atoms):
            raise ValueError("multihead declaration needs as many atoms as schemas")
        if self.kind != "multihead" and len(self.schemas) != 1:
            raise ValueError("modeh/modeb declarations carry exactly one schema")

    @property
    def schema(self) -> Atom:
        return self.schemas[0]


class FactIndex:
    """Ground facts indexed by predicate signature and first argument."""

    def __init__(self, facts: Iterable[Atom]):
        self._by_sig: Dict[Tuple[str, int], list] = {}
        self._by_first: Dict[Tuple[str, int, Term], list] = {}
        self._set = set()
        for f in facts:
            if f in self._set:
                continue
            self._set.add(f)
            self._by_sig.setdefault(f.signature, []).append(f)
            if f.args:
                self._by_first.setdefault((f.pred, len(f.args), f.args[0]), []).append(f)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self._set

    def __len__(self) -> int:
        return len(self._set)

    def signatures(self):
        return self._by_sig.keys()

    def by_signature(self, sig: Tuple[str, int]) -> list:
        return self._by_sig.get(sig, [])

    def candidates(self, goal: Atom, subst: Mapping) -> list:
        """Facts that may unify with ``goal`` under ``subst``."""
        if goal.args:
            first = walk(goal.args[0], subst)
            if not isinstance(first, Var) and is_ground(first, subst):
                return self._by_first.get((goal.pred, len(goal.args), resolve(first, subst)), [])
        return self._by_sig.get(goal.signature, [])


@dataclass(frozen=True)
class MegaExample:
    """One interpretation: positive ground facts plus explicit negatives."""

    name: str
    facts: Tuple[Atom, ...] = ()
    negatives: Tuple[Atom, ...] = ()

    def __post_init__(self):
        both = set(self.facts) & set(self.negatives)
        if both:
            raise ValueError(
                f"contradictory example {self.name}: "
                + ", ".join(sorted(map(str, both)))
            )

    @cached_property
    def index(self) -> FactIndex:
        return FactIndex(self.facts)

    @cached_property
    def negative_set(self):
        return frozenset(self.negatives)

    def without_predicates(self, sigs) -> "MegaExample":
        """Copy with the positive facts of the given predicates removed."""
        sigs = set(sigs)
        return MegaExample(
            self.name,
            tuple(f for f in self.facts if f.signature not in sigs),
            self.negatives,
        )

    def examples_for(self, sigs) -> Iterator[Tuple[Atom, bool]]:
        """Yield ``(atom, positive)`` for the facts and negatives of ``sigs``."""
        sigs = set(sigs)
        for f in self.facts:
            if f.signature in sigs:
                yield f, True
        for f in self.negatives:
            if f.signature in sigs:
                yield f, False


# ---------------------------------------------------------------- substitution


def walk(t: Term, s: Mapping) -> Term:
    while isinstance(t, Var):
        nxt = s.get(t)
        if nxt is None:
            return t
        t = nxt
    return t


def resolve(t: Term, s: Mapping) -> Term:
    """Apply ``s`` to ``t`` exhaustively."""
    t = walk(t, s)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(resolve(a, s) for a in t.args))
    return t


def is_ground(t: Term, s: Mapping = None) -> bool:
    if s:
        t = walk(t, s)
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a, s) for a in t.args)
    return True


def atom_is_ground(a: Atom) -> bool:
    return all(is_ground(t) for t in a.args)


def _occurs(v: Var, t: Term, s: Mapping) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Compound):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def _unify_terms(a: Term, b: Term, s: Subst) -> bool:
    """Extend ``s`` in place; returns False on clash."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = walk(x, s)
        y = walk(y, s)
        if x == y:
            continue
        if isinstance(x, Var):
            if _occurs(x, y, s):
                return False
            s[x] = y
        elif isinstance(y, Var):
            if _occurs(y, x, s):
                return False
            s[y] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return False
            stack.extend(zip(x.args, y.args))
        else:
            return False
    return True


def unify(a: Atom, b: Atom, s: Optional[Mapping] = None) -> Optional[Subst]:
    """Most general unifier of two atoms extending ``s``, or ``None``."""
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    out = dict(s) if s else {}
    for x, y in zip(a.args, b.args):
        if not _unify_terms(x, y, out):
            return None
    return out


def apply_subst(x, s: Mapping):
    """Apply a substitution to a term, atom, literal or clause."""
    if isinstance(x, Atom):
        if not s:
            return x
        return Atom(x.pred, tuple(resolve(t, s) for t in x.args))
    if isinstance(x, Literal):
        return Literal(apply_subst(x.atom, s), x.positive)
    if isinstance(x, Clause):
        return Clause(
            x.id,
            tuple((apply_subst(a, s), p) for a, p in x.head),
            tuple(apply_subst(l, s) for l in x.body),
        )
    return resolve(x, s)


# ---------------------------------------------------------------- variables


def term_variables(t: Term, out: Dict[Var, None]) -> None:
    if isinstance(t, Var):
        out.setdefault(t)
    elif isinstance(t, Compound):
        for a in t.args:
            term_variables(a, out)


def atom_variables(atoms: Iterable[Atom]) -> Tuple[Var, ...]:
    """Distinct variables in order of first occurrence."""
    out: Dict[Var, None] = {}
    for a in atoms:
        for t in a.args:
            term_variables(t, out)
    return tuple(out)


def head_variables(c: Clause) -> Tuple[Var, ...]:
    return atom_variables(c.head_atoms)


def clause_variables(c: Clause) -> Tuple[Var, ...]:
    return atom_variables(itertools.chain(c.head_atoms, (l.atom for l in c.body)))


def is_range_restricted(c: Clause) -> bool:
    """True iff every head variable occurs in a positive body literal."""
    body_vars = set(atom_variables(l.atom for l in c.body if l.positive))
    return all(v in body_vars for v in head_variables(c))


def term_constants(t: Term, out: Dict) -> None:
    if isinstance(t, Const):
        out.setdefault(t)
    elif isinstance(t, Compound):
        for a in t.args:
            term_constants(a, out)


def constants_of(atoms: Iterable[Atom]) -> Tuple[Const, ...]:
    out: Dict = {}
    for a in atoms:
        for t in a.args:
            term_constants(t, out)
    return tuple(out)


class Renamer:
    """Fresh-variable supply used to rename clauses apart."""

    def __init__(self, prefix: str = "_G"):
        self._counter = itertools.count()
        self._prefix = prefix

    def fresh(self) -> Var:
        return Var(f"{self._prefix}{next(self._counter)}")

    def rename(self, variables: Iterable[Var]) -> Dict[Var, Var]:
        return {v: self.fresh() for v in variables}
