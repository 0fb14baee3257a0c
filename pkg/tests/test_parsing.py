import pytest
from hypothesis import given, strategies as st

from lpadlearn.logic import Atom, Clause, Const, Literal, Placemarker, Theory, Var
from lpadlearn.parsing import (
    ParseError, parse_atom, parse_bias, parse_examples, parse_theory, serialize_examples,
    serialize_theory,
)

STROMBOLI = """\
eruption:0.6 ; earthquake:0.3 :- sudden_energy_release, fault_rupture(X).
sudden_energy_release:0.7.
fault_rupture(southwest_northeast).
fault_rupture(east_west).
"""


def test_parse_stromboli():
    t = parse_theory(STROMBOLI)
    assert len(t) == 4
    c = t[0]
    assert c.annotations == (0.6, 0.3) and c.has_null
    assert [l.atom.pred for l in c.body] == ["sudden_energy_release", "fault_rupture"]
    assert t[2].is_deterministic


def test_comments_and_whitespace():
    t = parse_theory("% comment\np :- q.  % trailing\n\nq:0.5.\n")
    assert [c.head_atoms[0].pred for c in t] == ["p", "q"]


def test_round_trip_text():
    text = serialize_theory(parse_theory(STROMBOLI))
    assert serialize_theory(parse_theory(text)) == text
    assert text.splitlines()[0] == "eruption:0.6 ; earthquake:0.3 :- sudden_energy_release, fault_rupture(X)."


def test_annotation_errors():
    with pytest.raises(ParseError):
        parse_theory("p:0.7 ; q:0.5.")
    with pytest.raises(ParseError):
        parse_theory("p:0.7 ; q.")
    with pytest.raises(ParseError):
        parse_theory("p:0.5 :- q")


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse_theory("p.\nq(a :- r.")
    assert err.value.line == 2


def test_negative_literals_parse():
    c = parse_theory("p(X):0.5 :- q(X), \\+ r(X).")[0]
    assert [l.positive for l in c.body] == [True, False]


def test_parse_bias_single_and_multi():
    bias = parse_bias("""
modeh(*,advisedby(+person,+person)).
modeh(*,[advisedby(+person,+person),tempadvisedby(+person,+person)],
  [advisedby(A,B),tempadvisedby(A,B)],
  [professor/1,student/1,hasposition/2]).
modeb(3,courselevel(+course, -level)).
modeb(*,courselevel(+course, #level)).
determination(foo/1, bar/2).
""")
    assert [d.kind for d in bias] == ["head", "multihead", "body", "body"]
    assert bias[0].recall is None
    assert bias[1].allowed_body_preds == (("professor", 1), ("student", 1), ("hasposition", 2))
    assert bias[2].recall == 3
    assert bias[2].schema.args == (Placemarker("+", "course"), Placemarker("-", "level"))
    assert bias[3].schema.args[1] == Placemarker("#", "level")


def test_parse_bias_output_constant():
    d = parse_bias("modeb(*, atm(+drug, -#element)).")[0]
    assert d.schema.args[1] == Placemarker("-#", "element")


def test_multihead_length_mismatch():
    with pytest.raises(ParseError):
        parse_bias("modeh(*,[p(+t),q(+t)],[p(A)],[r/1]).")


EXAMPLES = """\
begin(model(m1)).
advisedby(p2, p1).
professor(p1).
neg(advisedby(p1, p2)).
end(model(m1)).
begin(model(m2)).
student(p3).
end(model(m2)).
"""


def test_parse_examples():
    exs = parse_examples(EXAMPLES)
    assert [e.name for e in exs] == ["m1", "m2"]
    assert exs[0].negatives == (parse_atom("advisedby(p1, p2)"),)
    assert parse_atom("professor(p1)") in exs[0].facts


def test_examples_round_trip():
    exs = parse_examples(EXAMPLES)
    assert parse_examples(serialize_examples(exs)) == exs


@pytest.mark.parametrize("bad", [
    "p(a).\n",
    "begin(model(m)).\np(a).\n",
    "begin(model(m)).\np(a).\nend(model(n)).\n",
    "begin(model(m)).\np(X).\nend(model(m)).\n",
    "begin(model(m)).\np(a).\nneg(p(a)).\nend(model(m)).\n",
])
def test_malformed_examples(bad):
    with pytest.raises(ParseError):
        parse_examples(bad)


preds = st.sampled_from(["p", "q", "r"])
consts = st.sampled_from(["a", "b", "c"]).map(Const)
variables = st.sampled_from(["X", "Y"]).map(Var)
atoms = st.builds(lambda p, args: Atom(p, tuple(args)), preds,
                  st.lists(st.one_of(consts, variables), max_size=2))


@st.composite
def clauses(draw):
    n = draw(st.integers(1, 3))
    heads = draw(st.lists(atoms, min_size=n, max_size=n))
    weights = draw(st.lists(st.integers(1, 9), min_size=n + 1, max_size=n + 1))
    tot = sum(weights)
    probs = [w / tot for w in weights[:n]]
    body = draw(st.lists(atoms.map(Literal), max_size=2))
    return Clause(0, tuple(zip(heads, probs)), tuple(body))


@given(st.lists(clauses(), min_size=1, max_size=4))
def test_serialize_parse_round_trip(cls):
    theory = Theory.of(cls)
    back = parse_theory(serialize_theory(theory))
    assert len(back) == len(theory)
    for c1, c2 in zip(theory, back):
        assert c1.head_atoms == c2.head_atoms and c1.body == c2.body
        for p1, p2 in zip(c1.annotations, c2.annotations):
            assert abs(p1 - p2) <= 1e-5
    assert serialize_theory(parse_theory(serialize_theory(back))) == serialize_theory(back)
