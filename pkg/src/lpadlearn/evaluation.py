"""Scoring of test examples, ROC/PR curves and their areas, cross-validation."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
import statistics
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .bdd import build_query_bdd, get_backward
from .emblem import EmSettings, derivation_world
from .logic import Atom, Const, MegaExample, Theory
from .params import ParamTable
from .semantics import Prover

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoredExample:
    query: Atom
    positive: bool
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score for {self.query}")


CurvePoint = Tuple[float, float]


def query_probability(prover: Prover, world: MegaExample, query: Atom, params: ParamTable) -> float:
    bdd = build_query_bdd(prover.explain(world, query), params)
    return get_backward(bdd, params)[bdd.node]


def _closed_world_atoms(world: MegaExample, targets) -> List[Atom]:
    """Ground target atoms over the example's constants, minus its positives."""
    consts: Dict[Const, None] = {}
    for f in world.facts + world.negatives:
        for t in f.args:
            if isinstance(t, Const):
                consts.setdefault(t)
    pos = set(world.facts)
    out = []
    for pred, arity in sorted(targets):
        for args in itertools.product(list(consts), repeat=arity):
            a = Atom(pred, tuple(args))
            if a not in pos:
                out.append(a)
    return out


def score_examples(theory: Theory, world: MegaExample, targets, settings: EmSettings = EmSettings(),
                   closed_world: bool = False) -> List[ScoredExample]:
    """Probability of each target example of ``world`` under ``theory``.

    Positives are the example's target facts and negatives its explicit
    ``neg`` facts; with ``closed_world`` every other ground target atom
    over the example's constants is added as a negative too.
    """
    targets = set(targets)
    params = ParamTable.from_theory(theory)
    prover = Prover(theory, settings.mode, settings.depth_bound, settings.closed_world)
    dworld = derivation_world(world, targets)
    out = []
    seen = set()
    for atom, positive in world.examples_for(targets):
        seen.add(atom)
        out.append(ScoredExample(atom, positive, query_probability(prover, dworld, atom, params)))
    if closed_world:
        for atom in _closed_world_atoms(world, targets):
            if atom not in seen:
                out.append(ScoredExample(atom, False, query_probability(prover, dworld, atom, params)))
    return out


def _threshold_groups(examples: Sequence[ScoredExample]) -> List[Tuple[int, int]]:
    """(positives, negatives) per distinct score, highest score first."""
    groups: Dict[float, List[int]] = {}
    for e in examples:
        g = groups.setdefault(e.score, [0, 0])
        g[0 if e.positive else 1] += 1
    return [tuple(groups[s]) for s in sorted(groups, reverse=True)]


def _counts(examples) -> Tuple[int, int]:
    p = sum(1 for e in examples if e.positive)
    return p, len(examples) - p


def aucroc(examples: Sequence[ScoredExample]) -> Tuple[float, List[CurvePoint]]:
    """ROC area by the trapezoid rule over tie-grouped thresholds."""
    p, n = _counts(examples)
    if p == 0 or n == 0:
        raise ValueError("ROC needs at least one positive and one negative example")
    points = [(0.0, 0.0)]
    tp = fp = 0
    area = 0.0
    for gp, gn in _threshold_groups(examples):
        area += gn * (tp + gp / 2.0)
        tp += gp
        fp += gn
        points.append((fp / n, tp / p))
    return area / (p * n), points


def _pr_segment_area(tp: int, fp: int, dtp: int, dfp: int, n_pos: int) -> float:
    """Area under the interpolated PR curve between two operating points.

    Between (tp, fp) and (tp + dtp, fp + dfp) false positives grow linearly
    with true positives, so precision is ``x / (x + fp + s(x - tp))``.
    """
    if dtp == 0:
        return 0.0
    s = dfp / dtp
    c = 1.0 + s
    a = fp - s * tp  # fp(x) = a + s x
    d0 = tp + fp
    if d0 == 0:
        return dtp / (c * n_pos)
    # integral of x / (c x + a) from tp to tp + dtp
    integral = dtp / c - (a / (c * c)) * math.log((d0 + c * dtp) / d0)
    return integral / n_pos


def aucpr(examples: Sequence[ScoredExample], with_points: int = 0) -> Tuple[float, List[CurvePoint]]:
    """Area under the PR curve with interpolation between operating points.

    ``with_points`` adds that many interpolated points inside each segment
    of the returned curve (the area is always exact).
    """
    p, _ = _counts(examples)
    if p == 0:
        raise ValueError("PR needs at least one positive example")
    groups = _threshold_groups(examples)
    tp = fp = 0
    area = 0.0
    points: List[CurvePoint] = []
    for gp, gn in groups:
        if tp == 0 and fp == 0 and gp > 0:
            points.append((0.0, gp / (gp + gn)))
        area += _pr_segment_area(tp, fp, gp, gn, p)
        for j in range(1, with_points + 1):
            x = tp + gp * j / (with_points + 1)
            y = fp + gn * j / (with_points + 1)
            if x + y > 0:
                points.append((x / p, x / (x + y)))
        tp += gp
        fp += gn
        if tp + fp > 0 and (tp > 0 or points):
            points.append((tp / p, tp / (tp + fp)))
    return area, points


def min_aucpr(skew: float) -> float:
    """Smallest PR area achievable when a fraction ``skew`` of examples is positive."""
    if not 0.0 < skew < 1.0:
        raise ValueError("skew must lie in (0, 1)")
    return 1.0 + (1.0 - skew) * math.log(1.0 - skew) / skew


def aucnpr(area: float, skew: float) -> float:
    """PR area rescaled so that the minimum achievable area maps to 0 and 1 to 1."""
    if area < 0:
        raise ValueError("area must be non-negative")
    lo = min_aucpr(skew)
    return (area - lo) / (1.0 - lo)


# ------------------------------------------------------------------ export


def curve_csv(points: Sequence[CurvePoint], kind: str) -> str:
    """``x,y`` rows; the header names the curve type."""
    names = {"roc": ("fpr", "tpr"), "pr": ("recall", "precision")}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names.get(kind, (f"{kind}_x", f"{kind}_y")))
    for x, y in points:
        w.writerow([repr(float(x)), repr(float(y))])
    return buf.getvalue()


# ------------------------------------------------------------------ cross-validation


@dataclass
class CvResult:
    folds: List[dict]
    aggregate: dict
    pooled: dict
    roc_points: List[CurvePoint]
    pr_points: List[CurvePoint]
    theories: List[Theory]

    def to_dict(self) -> dict:
        return {"folds": self.folds, "aggregate": self.aggregate, "pooled": self.pooled}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _metrics(scored: Sequence[ScoredExample]) -> dict:
    p, n = _counts(scored)
    row = {"n_pos": p, "n_neg": n, "AUCROC": None, "AUCPR": None, "AUCNPR": None}
    if p and n:
        row["AUCROC"] = aucroc(scored)[0]
        row["AUCPR"] = aucpr(scored)[0]
        row["AUCNPR"] = aucnpr(row["AUCPR"], p / (p + n))
    return row


def cross_validate(folds: Sequence[Sequence[MegaExample]], params, bias,
                   closed_world: bool = False, learner=None) -> CvResult:
    """Train on all folds but one, test on the held-out fold, for each fold.

    ``learner(params, train, bias)`` returns a theory (structure search by
    default).  Folds whose test set lacks positives or negatives are
    skipped with a warning.
    """
    from .search import slipcover

    if len(folds) < 2:
        raise ValueError("cross-validation needs at least two folds")
    learner = learner or slipcover
    settings = params.em_settings()
    rows, pooled, theories = [], [], []
    for i, test in enumerate(folds):
        scored = []
        train = [ex for j, f in enumerate(folds) if j != i for ex in f]
        theory = learner(params, train, bias)
        for ex in test:
            scored.extend(score_examples(theory, ex, params.targets, settings, closed_world))
        p, n = _counts(scored)
        if p == 0 or n == 0:
            log.warning("fold %d has no %s examples, skipped", i, "positive" if p == 0 else "negative")
            continue
        row = _metrics(scored)
        row["fold"] = i
        rows.append(row)
        pooled.extend(scored)
        theories.append(theory)
    agg = {}
    for key in ("AUCROC", "AUCPR", "AUCNPR"):
        vals = [r[key] for r in rows]
        agg[key] = {
            "mean": statistics.fmean(vals) if vals else None,
            "stdev": statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else None),
        }
    pooled_row = _metrics(pooled) if pooled else {}
    roc_pts = aucroc(pooled)[1] if pooled else []
    pr_pts = aucpr(pooled)[1] if pooled else []
    return CvResult(rows, agg, pooled_row, roc_pts, pr_pts, theories)
