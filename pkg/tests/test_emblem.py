import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from randprog import enumeration_em, random_em_problem
from lpadlearn.emblem import (
    CountAccumulator, EmSettings, build_bdds, emblem, emblem_fit, expectation_step, maximization_step,
)
from lpadlearn.logic import MegaExample
from lpadlearn.params import ParamTable
from lpadlearn.parsing import parse_atom, parse_theory

EXACT = dict(epsilon=1e-300, delta=1e-300, depth_bound=None)


def _objects(n_pos, n_neg):
    facts, negs = [], []
    for i in range(n_pos + n_neg):
        facts.append(parse_atom(f"a(o{i})"))
        (facts if i < n_pos else negs).append(parse_atom(f"t(o{i})"))
    return [MegaExample("m", tuple(facts), tuple(negs))]


def test_fully_observed_clause_learns_frequency():
    theory = parse_theory("t(X):0.5 :- a(X).")
    res = emblem_fit(theory, _objects(7, 3), {("t", 1)}, EmSettings(max_iter=20))
    assert res.theory[0].annotations[0] == pytest.approx(0.7, abs=1e-9)
    assert res.ll == pytest.approx(7 * math.log(0.7) + 3 * math.log(0.3), abs=1e-9)


def test_zero_iterations_returns_input():
    theory = parse_theory("t(X):0.5 :- a(X).")
    res = emblem_fit(theory, _objects(7, 3), {("t", 1)}, EmSettings(max_iter=0))
    assert res.iterations == 0
    assert res.theory[0].annotations == (0.5,)
    assert res.ll == pytest.approx(10 * math.log(0.5))


def test_returned_ll_matches_returned_params():
    theory = parse_theory("t(X):0.3 ; s(X):0.3 :- a(X).\nt(X):0.4 :- b(X).")
    ex = MegaExample("m", tuple(map(parse_atom, ["a(1)", "b(1)", "a(2)", "t(1)", "s(2)"])),
                     (parse_atom("t(2)"),))
    targets = {("t", 1)}
    for n in range(4):
        res = emblem_fit(theory, [ex], targets, EmSettings(max_iter=n, **EXACT))
        check = emblem_fit(res.theory, [ex], targets, EmSettings(max_iter=0))
        assert check.ll == pytest.approx(res.ll, abs=1e-9)


def test_only_negatives_drive_parameter_down():
    theory = parse_theory("t(X):0.5 :- a(X).")
    res = emblem_fit(theory, _objects(0, 4), {("t", 1)}, EmSettings(max_iter=5))
    assert res.theory[0].annotations[0] < 1e-6


def test_emblem_wrapper(stromboli):
    theory = parse_theory("t(X):0.5 :- a(X).")
    ll, th = emblem(theory, _objects(1, 1), {("t", 1)})
    assert th[0].annotations[0] == pytest.approx(0.5)
    assert ll == pytest.approx(2 * math.log(0.5))


def test_grouped_and_single_bdds_agree():
    rng = random.Random(5)
    theory, data, targets = random_em_problem(rng, n_examples=6)
    s = EmSettings(depth_bound=None)
    grouped = build_bdds(theory, data, targets, s)
    single = build_bdds(theory, data, targets, s, group=False)
    assert sum(q.weight for q in grouped) == len(single)
    params = ParamTable.from_theory(theory)
    ll1, acc1 = expectation_step(grouped, params)
    ll2, acc2 = expectation_step(single, params)
    assert ll1 == pytest.approx(ll2, abs=1e-12)
    for key in acc2.counts:
        assert acc1.e0(key) == pytest.approx(acc2.e0(key)) and acc1.e1(key) == pytest.approx(acc2.e1(key))


def test_expectation_step_accepts_pairs():
    theory = parse_theory("t(X):0.5 :- a(X).")
    data = _objects(2, 1)
    bdds = build_bdds(theory, data, {("t", 1)}, EmSettings(), group=False)
    params = ParamTable.from_theory(theory)
    ll, acc = expectation_step([(q.bdd, q.positive) for q in bdds], params)
    assert ll == pytest.approx(3 * math.log(0.5))
    # positives: bit 0 set; negative: complement of the explained mass
    assert acc.e1((0, 0)) == pytest.approx(2.0) and acc.e0((0, 0)) == pytest.approx(1.0)


def test_maximization_keeps_unobserved_parameters():
    theory = parse_theory("t:0.2.\ns:0.4.")
    params = ParamTable.from_theory(theory)
    acc = CountAccumulator()
    acc.add((0, 0), 1.0, 3.0)
    new = maximization_step(acc, params)
    assert new[(0, 0)] == pytest.approx(0.75) and new[(1, 0)] == pytest.approx(0.4)


def test_trace_csv():
    theory = parse_theory("t(X):0.5 :- a(X).")
    res = emblem_fit(theory, _objects(3, 1), {("t", 1)}, EmSettings(max_iter=3, **EXACT))
    lines = res.trace_csv().splitlines()
    assert lines[0] == "iter,LL" and len(lines) == len(res.trace) + 1


def test_settings_validation():
    with pytest.raises(ValueError):
        EmSettings(epsilon=0)
    with pytest.raises(ValueError):
        EmSettings(max_iter=-1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_ll_never_decreases(seed):
    theory, data, targets = random_em_problem(random.Random(seed))
    res = emblem_fit(theory, data, targets, EmSettings(max_iter=8, **EXACT))
    lls = [ll for ll, _ in res.trace]
    assert all(b >= a - 1e-8 for a, b in zip(lls, lls[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_matches_enumeration_em(seed):
    theory, data, targets = random_em_problem(random.Random(seed))
    s = EmSettings(max_iter=4, **EXACT)
    res = emblem_fit(theory, data, targets, s)
    ref = enumeration_em(theory, data, targets, s, n_iter=4)
    assert len(res.trace) <= len(ref)
    for (ll, p), (ll_ref, p_ref) in zip(res.trace, ref):
        assert ll == pytest.approx(ll_ref, abs=1e-7)
        for cid in p:
            assert p[cid] == pytest.approx(p_ref[cid], abs=1e-7)
