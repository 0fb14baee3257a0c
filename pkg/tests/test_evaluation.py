import math
import random

import pytest
from hypothesis import given, settings, strategies as st

import synthetic
from metric_oracles import pr_by_thresholds, roc_by_pairs
from lpadlearn.evaluation import (
    ScoredExample, aucnpr, aucpr, aucroc, cross_validate, curve_csv, min_aucpr, score_examples,
)
from lpadlearn.logic import MegaExample
from lpadlearn.parsing import parse_atom, parse_theory
from lpadlearn.search import SearchParams


def _scored(pos, neg):
    out = [ScoredExample(parse_atom(f"p({i})"), True, s) for i, s in enumerate(pos)]
    out += [ScoredExample(parse_atom(f"n({i})"), False, s) for i, s in enumerate(neg)]
    return out


def test_score_examples_stromboli(stromboli):
    ex = MegaExample("w", (parse_atom("eruption"),), (parse_atom("earthquake"),))
    scored = score_examples(stromboli, ex, {("eruption", 0), ("earthquake", 0)})
    by_atom = {str(s.query): s for s in scored}
    assert by_atom["eruption"].score == pytest.approx(0.588)
    assert by_atom["eruption"].positive and not by_atom["earthquake"].positive


def test_score_examples_trivial_cases():
    theory = parse_theory("q(a).\nt(X):0.5 :- r(X).")
    ex = MegaExample("w", (parse_atom("q(a)"),), (parse_atom("t(a)"),))
    (s,) = score_examples(theory, ex, {("t", 1)})
    assert s.score == 0.0
    (s,) = score_examples(theory, MegaExample("w", (parse_atom("q(a)"),)), {("q", 1)})
    assert s.score == 1.0


def test_score_examples_closed_world_negatives():
    theory = parse_theory("t(X):0.5 :- a(X).")
    ex = MegaExample("w", (parse_atom("a(x)"), parse_atom("a(y)"), parse_atom("t(x)")))
    scored = score_examples(theory, ex, {("t", 1)}, closed_world=True)
    assert [(str(s.query), s.positive) for s in scored] == [("t(x)", True), ("t(y)", False)]


def test_aucroc_examples():
    assert aucroc(_scored([0.9, 0.8], [0.2, 0.1]))[0] == 1.0
    assert aucroc(_scored([0.5, 0.5], [0.5, 0.5, 0.5]))[0] == 0.5
    assert aucroc(_scored([0.9, 0.4], [0.6, 0.1]))[0] == pytest.approx(0.75)


def test_aucroc_degenerate():
    with pytest.raises(ValueError):
        aucroc(_scored([0.1], []))
    with pytest.raises(ValueError):
        aucroc(_scored([], [0.1]))


def test_aucpr_examples():
    assert aucpr(_scored([0.9, 0.8], [0.2, 0.1]))[0] == pytest.approx(1.0)
    area, _ = aucpr(_scored([0.1], [0.9, 0.8, 0.7]))
    assert area == pytest.approx(1 - 3 * math.log(4 / 3), abs=1e-12)
    assert area == pytest.approx(pr_by_thresholds([0.1], [0.9, 0.8, 0.7]), abs=1e-9)
    # all ties: precision is the skew everywhere
    assert aucpr(_scored([0.3] * 2, [0.3] * 6))[0] == pytest.approx(0.25)


def test_aucpr_needs_positives():
    with pytest.raises(ValueError):
        aucpr(_scored([], [0.2]))


def test_aucnpr_anchors():
    for skew in (0.1, 0.5, 0.9):
        assert aucnpr(1.0, skew) == pytest.approx(1.0)
        assert aucnpr(min_aucpr(skew), skew) == pytest.approx(0.0, abs=1e-12)


def test_aucnpr_errors():
    for skew in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            aucnpr(0.5, skew)
    with pytest.raises(ValueError):
        aucnpr(-0.1, 0.5)


def test_min_aucpr_is_attained_by_worst_ranking():
    # all positives ranked below all negatives
    for n_pos, n_neg in [(1, 1), (2, 6), (5, 5), (9, 1)]:
        area, _ = aucpr(_scored([0.1 - i * 1e-3 for i in range(n_pos)],
                                [0.9 - i * 1e-3 for i in range(n_neg)]))
        skew = n_pos / (n_pos + n_neg)
        # the interpolated worst curve approaches the continuous minimum from above
        assert area >= min_aucpr(skew) - 1e-12


def test_aucnpr_reference_value():
    assert aucnpr(0.95, 0.66) == pytest.approx(0.91, abs=0.02)


def test_curves_in_unit_square():
    rng = random.Random(0)
    ex = _scored([rng.random() for _ in range(10)], [rng.random() for _ in range(10)])
    roc = aucroc(ex)[1]
    pr = aucpr(ex, with_points=3)[1]
    xs = [x for x, _ in roc]
    assert xs == sorted(xs) and roc[0] == (0.0, 0.0) and roc[-1] == (1.0, 1.0)
    recalls = [x for x, _ in pr]
    assert recalls == sorted(recalls)
    for x, y in roc + pr:
        assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0


def test_curve_csv_header():
    text = curve_csv([(0.0, 0.0), (1.0, 1.0)], "roc")
    assert text.splitlines() == ["fpr,tpr", "0.0,0.0", "1.0,1.0"]
    assert curve_csv([], "pr").splitlines() == ["recall,precision"]


scores = st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0])


@st.composite
def score_sets(draw):
    n = draw(st.integers(2, 12))
    n_pos = draw(st.integers(1, n - 1))
    vals = draw(st.lists(st.one_of(scores, st.floats(0, 1)), min_size=n, max_size=n))
    return vals[:n_pos], vals[n_pos:]


@settings(max_examples=300, deadline=None)
@given(score_sets())
def test_areas_match_oracles(ps):
    pos, neg = ps
    ex = _scored(pos, neg)
    assert aucroc(ex)[0] == pytest.approx(roc_by_pairs(pos, neg), abs=1e-9)
    assert aucpr(ex)[0] == pytest.approx(pr_by_thresholds(pos, neg), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(score_sets())
def test_roc_transform_invariance(ps):
    pos, neg = ps
    base = aucroc(_scored(pos, neg))[0]
    # strictly increasing and exact in floating point: cube of the rank
    rank = {v: i for i, v in enumerate(sorted(set(pos) | set(neg)))}
    f = lambda s: float(rank[s] ** 3) - 7.5
    assert aucroc(_scored([f(s) for s in pos], [f(s) for s in neg]))[0] == pytest.approx(base, abs=1e-12)
    flipped = aucroc(_scored([-s for s in pos], [-s for s in neg]))[0]
    assert flipped == pytest.approx(1 - base, abs=1e-12)


def _learnable_folds(n_folds, n_per_fold=8, seed=0):
    """Deterministic rule t(X) <- a(X)."""
    rng = random.Random(seed)
    folds = []
    for f in range(n_folds):
        exs = []
        for e in range(n_per_fold):
            facts, negs = [], []
            for j in range(3):
                x = f"o{j}"
                if rng.random() < 0.5:
                    facts += [parse_atom(f"a({x})"), parse_atom(f"t({x})")]
                else:
                    facts.append(parse_atom(f"b({x})"))
                    negs.append(parse_atom(f"t({x})"))
            exs.append(MegaExample(f"f{f}e{e}", tuple(facts), tuple(negs)))
        folds.append(exs)
    return folds


def _params():
    return SearchParams(n_int=2, n_a=2, n_i=2, targets=synthetic.TARGETS, seed=1)


BIAS = synthetic.planted_bias()


def test_cross_validate_identical_folds():
    fold = _learnable_folds(1)[0]
    res = cross_validate([fold, fold], _params(), BIAS)
    assert [r["AUCROC"] for r in res.folds] == [1.0, 1.0]
    assert res.aggregate["AUCROC"]["stdev"] == 0.0


def test_cross_validate_shape_and_aggregate():
    res = cross_validate(_learnable_folds(5), _params(), BIAS)
    assert len(res.folds) == 5 and res.pooled["n_pos"] > 0
    col = [r["AUCPR"] for r in res.folds]
    mean = sum(col) / len(col)
    sd = math.sqrt(sum((v - mean) ** 2 for v in col) / (len(col) - 1))
    assert res.aggregate["AUCPR"]["mean"] == pytest.approx(mean)
    assert res.aggregate["AUCPR"]["stdev"] == pytest.approx(sd)
    assert '"folds"' in res.to_json()


def test_cross_validate_skips_fold_without_positives(caplog):
    folds = _learnable_folds(3)
    folds[2] = [MegaExample(e.name, tuple(f for f in e.facts if f.pred != "t"),
                            e.negatives + tuple(f for f in e.facts if f.pred == "t")) for e in folds[2]]
    res = cross_validate(folds, _params(), BIAS)
    assert [r["fold"] for r in res.folds] == [0, 1]
    assert "fold 2" in caplog.text


def test_cross_validate_needs_two_folds():
    with pytest.raises(ValueError):
        cross_validate(_learnable_folds(1), _params(), BIAS)
