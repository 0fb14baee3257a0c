"""Reduced ordered BDDs over binary-encoded clause choice variables.

Nodes are integers owned by a :class:`BDDManager`; ``0`` and ``1`` are the
Zero and One terminals.  A level ordering is fixed by declaration order.
Public functions take and return :class:`BDD` handles, which pair a node
with its manager so that operands from different managers are caught.

Expected counts follow the forward/backward scheme: for a node ``n`` on
bit ``X_ijk`` the ``x``-edge carries ``F(n) * pi_ikx * B(child_x(n))``.
Edges that jump over levels also carry mass through the skipped bits;
that mass is recorded in a difference array over levels and split
``(1 - pi, pi)`` between the two values of each skipped bit.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .params import ParamTable, binary_params  # noqa: F401  (re-exported)
from .semantics import Explanation, sorted_choices

ZERO = 0
ONE = 1
AND = "and"
OR = "or"

sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@dataclass(frozen=True, slots=True)
class BinaryVar:
    clause: int
    grounding: int  # index of the grounding among this clause's, first-encounter order
    bit: int
    key: Tuple  # grounding key of the originating atomic choice

    def label(self) -> str:
        return f"X{self.clause}_{self.grounding}_{self.bit}"


class BDDManager:
    """Unique table, operation cache and variable order for a set of BDDs."""

    def __init__(self):
        big = 1 << 60
        self._lvl: List[int] = [big, big]
        self._hi: List[int] = [ZERO, ONE]
        self._lo: List[int] = [ZERO, ONE]
        self._unique: Dict[Tuple[int, int, int], int] = {}
        self._cache: Dict[Tuple[str, int, int], int] = {}
        self.vars: List[BinaryVar] = []
        self._units: Dict[Tuple[int, Tuple], List[int]] = {}
        self._n_groundings: Dict[int, int] = {}

    # -- variables
    @property
    def num_levels(self) -> int:
        return len(self.vars)

    def units(self) -> Dict[Tuple[int, Tuple], List[int]]:
        """Declared groundings ``(clause, key)`` mapped to their bit levels."""
        return self._units

    def declare(self, units: Iterable[Tuple[int, Tuple]], params: ParamTable) -> None:
        """Declare the bits of new groundings, grouped per ``(clause, grounding, bit)``."""
        new = []
        for cid, key in units:
            if (cid, key) in self._units:
                continue
            j = self._n_groundings.get(cid, 0)
            self._n_groundings[cid] = j + 1
            self._units[(cid, key)] = []
            new.append((cid, j, key))
        new.sort(key=lambda t: (t[0], t[1]))
        for cid, j, key in new:
            levels = self._units[(cid, key)]
            for k in range(params.n_bits(cid)):
                levels.append(len(self.vars))
                self.vars.append(BinaryVar(cid, j, k, key))

    # -- nodes
    def level(self, n: int) -> int:
        return self.num_levels if n <= ONE else self._lvl[n]

    def high(self, n: int) -> int:
        return self._hi[n]

    def low(self, n: int) -> int:
        return self._lo[n]

    def var_of(self, n: int) -> BinaryVar:
        return self.vars[self._lvl[n]]

    def mk(self, level: int, hi: int, lo: int) -> int:
        if hi == lo:
            return hi
        key = (level, hi, lo)
        n = self._unique.get(key)
        if n is None:
            n = len(self._lvl)
            self._lvl.append(level)
            self._hi.append(hi)
            self._lo.append(lo)
            self._unique[key] = n
        return n

    def literal(self, level: int, positive: bool = True) -> int:
        return self.mk(level, ONE, ZERO) if positive else self.mk(level, ZERO, ONE)

    def cube(self, literals: Iterable[Tuple[int, bool]]) -> int:
        """Conjunction of ``(level, polarity)`` literals on distinct levels."""
        node = ONE
        for lvl, pos in sorted(literals, reverse=True):
            node = self.mk(lvl, node, ZERO) if pos else self.mk(lvl, ZERO, node)
        return node

    def apply(self, op: str, a: int, b: int) -> int:
        if op == AND:
            if a == ZERO or b == ZERO:
                return ZERO
            if a == ONE:
                return b
            if b == ONE or a == b:
                return a
        elif op == OR:
            if a == ONE or b == ONE:
                return ONE
            if a == ZERO:
                return b
            if b == ZERO or a == b:
                return a
        else:
            raise ValueError(f"unknown operator {op!r}")
        if a > b:
            a, b = b, a
        key = (op, a, b)
        r = self._cache.get(key)
        if r is not None:
            return r
        la, lb = self._lvl[a], self._lvl[b]
        lvl = min(la, lb)
        a1, a0 = (self._hi[a], self._lo[a]) if la == lvl else (a, a)
        b1, b0 = (self._hi[b], self._lo[b]) if lb == lvl else (b, b)
        r = self.mk(lvl, self.apply(op, a1, b1), self.apply(op, a0, b0))
        self._cache[key] = r
        return r

    def reachable(self, root: int) -> List[int]:
        """Internal nodes reachable from ``root`` sorted by level."""
        seen = set()
        stack = [root]
        while stack:
            n = stack.pop()
            if n <= ONE or n in seen:
                continue
            seen.add(n)
            stack.append(self._hi[n])
            stack.append(self._lo[n])
        return sorted(seen, key=lambda n: (self._lvl[n], n))

    def check_reduced(self) -> bool:
        """Full scan of the reduction invariants."""
        seen = set()
        for n in range(2, len(self._lvl)):
            lvl, hi, lo = self._lvl[n], self._hi[n], self._lo[n]
            if hi == lo or (lvl, hi, lo) in seen:
                return False
            if self._lvl[hi] <= lvl or self._lvl[lo] <= lvl:
                return False
            seen.add((lvl, hi, lo))
        return True


@dataclass(frozen=True)
class BDD:
    manager: BDDManager
    node: int

    @property
    def is_one(self) -> bool:
        return self.node == ONE

    @property
    def is_zero(self) -> bool:
        return self.node == ZERO

    def __len__(self) -> int:
        return len(self.manager.reachable(self.node))


def combine(op: str, a: BDD, b: BDD, manager: Optional[BDDManager] = None) -> BDD:
    if a.manager is not b.manager or (manager is not None and manager is not a.manager):
        raise ValueError("BDDs belong to different managers")
    return BDD(a.manager, a.manager.apply(op, a.node, b.node))


def choice_literals(levels: Sequence[int], value: int) -> List[Tuple[int, bool]]:
    """Bit literals encoding ``X = value`` for a variable with bits ``levels``."""
    out = [(levels[k], False) for k in range(min(value, len(levels)))]
    if value < len(levels):
        out.append((levels[value], True))
    return out


def build_query_bdd(explanations: Sequence[Explanation], params: ParamTable,
                    manager: Optional[BDDManager] = None) -> BDD:
    """BDD of the disjunction of the explanations' bit conjunctions."""
    manager = manager or BDDManager()
    ordered = [sorted_choices(e) for e in explanations]
    units = {}
    for choices in ordered:
        for c in choices:
            units.setdefault(c.unit)
    manager.declare(units, params)
    declared = manager.units()
    root = ZERO
    for choices in ordered:
        lits = []
        for c in choices:
            lits.extend(choice_literals(declared[c.unit], c.head))
        root = manager.apply(OR, root, manager.cube(lits))
        if root == ONE:
            break
    return BDD(manager, root)


def _pi(manager: BDDManager, params: ParamTable, n: int) -> float:
    v = manager.vars[manager._lvl[n]]
    return params[(v.clause, v.bit)]


def get_backward(root: BDD, params: ParamTable) -> Dict[int, float]:
    """Mass of the paths from each node to the One terminal."""
    m = root.manager
    back = {ZERO: 0.0, ONE: 1.0}
    for n in reversed(m.reachable(root.node)):
        pi = _pi(m, params, n)
        back[n] = pi * back[m._hi[n]] + (1.0 - pi) * back[m._lo[n]]
    if root.node <= ONE:
        return {root.node: back[root.node]}
    return back


def get_forward(root: BDD, params: ParamTable) -> Dict[int, float]:
    """Mass of the paths from the root to each reachable node."""
    m = root.manager
    fwd = {root.node: 1.0}
    for n in m.reachable(root.node):
        f = fwd.get(n, 0.0)
        pi = _pi(m, params, n)
        fwd[m._hi[n]] = fwd.get(m._hi[n], 0.0) + f * pi
        fwd[m._lo[n]] = fwd.get(m._lo[n], 0.0) + f * (1.0 - pi)
    return fwd


def sigma_table(root: BDD, params: ParamTable, forward=None, backward=None) -> List[float]:
    """Per-level difference array of the mass crossing skipped levels."""
    m = root.manager
    n_levels = m.num_levels
    sigma = [0.0] * (n_levels + 1)
    if root.node == ZERO:
        return sigma
    fwd = forward if forward is not None else get_forward(root, params)
    back = backward if backward is not None else get_backward(root, params)
    top = m.level(root.node)
    if top > 0:
        sigma[0] += back[root.node]
        sigma[top] -= back[root.node]
    for n in m.reachable(root.node):
        lvl = m._lvl[n]
        pi = _pi(m, params, n)
        for child, w in ((m._hi[n], pi), (m._lo[n], 1.0 - pi)):
            lc = m.level(child)
            if lc > lvl + 1:
                e = fwd[n] * w * back[child]
                sigma[lvl + 1] += e
                sigma[lc] -= e
    return sigma


def expectations(root: BDD, params: ParamTable) -> Tuple[float, Dict[Tuple[int, int], List[float]]]:
    """``P(Q)`` and unnormalized counts ``eta[(i, k)] = [eta0, eta1]``.

    Counts cover every bit declared in the manager; divide by ``P(Q)`` to
    get ``E[c_ikx | Q]``.
    """
    m = root.manager
    eta: Dict[Tuple[int, int], List[float]] = {}
    for v in m.vars:
        eta.setdefault((v.clause, v.bit), [0.0, 0.0])
    if root.node == ZERO:
        return 0.0, eta
    fwd = get_forward(root, params)
    back = get_backward(root, params)
    for n in m.reachable(root.node):
        v = m.vars[m._lvl[n]]
        pi = params[(v.clause, v.bit)]
        acc = eta[(v.clause, v.bit)]
        acc[1] += fwd[n] * pi * back[m._hi[n]]
        acc[0] += fwd[n] * (1.0 - pi) * back[m._lo[n]]
    sigma = sigma_table(root, params, fwd, back)
    t = 0.0
    for lvl, v in enumerate(m.vars):
        t += sigma[lvl]
        pi = params[(v.clause, v.bit)]
        acc = eta[(v.clause, v.bit)]
        acc[0] += t * (1.0 - pi)
        acc[1] += t * pi
    return back[root.node], eta


def to_dot(root: BDD, name: str = "bdd") -> str:
    """Graphviz text: solid 1-edges, dashed 0-edges."""
    m = root.manager
    lines = [f"digraph {name} {{", '  node [shape=ellipse];',
             '  t1 [shape=box,label="1"];', '  t0 [shape=box,label="0"];']

    def ref(n):
        return "t1" if n == ONE else "t0" if n == ZERO else f"n{n}"

    nodes = m.reachable(root.node)
    for n in nodes:
        lines.append(f'  n{n} [label="{m.var_of(n).label()}"];')
    for n in nodes:
        lines.append(f"  n{n} -> {ref(m._hi[n])};")
        lines.append(f"  n{n} -> {ref(m._lo[n])} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
