"""Readers and writers for theory, language-bias and mega-example files.

All three formats are sequences of ``.``-terminated Prolog-style
statements; ``%`` starts a line comment.
"""

from __future__ import annotations

import re
from typing import List, Optional, Tuple

from .logic import (
    ANNOTATION_TOL,
    Atom,
    Clause,
    Compound,
    Const,
    Literal,
    MegaExample,
    ModeDeclaration,
    Placemarker,
    Theory,
    Var,
    atom_is_ground,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        loc = f"line {line}, column {col}: " if line else ""
        super().__init__(loc + message)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<num>\d+\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<end>\.(?=\s|%|$))
  | (?P<punct>:-|\\\+|-\#|[()\[\],;:/+\-\#*|])
    """,
    re.VERBOSE,
)


class _Tok:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def _tokenize(text: str) -> List[_Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            toks.append(_Tok(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str, placemarkers: bool = False):
        self.toks = _tokenize(text)
        self.i = 0
        self.placemarkers = placemarkers
        self.anon = 0

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("punct", "end") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        t = self.tok
        self.i += 1
        return t

    def at_eof(self) -> bool:
        return self.tok.kind == "eof"

    # grammar
    def name(self) -> str:
        t = self.tok
        if t.kind == "name":
            self.i += 1
            return t.text
        if t.kind == "quoted":
            self.i += 1
            return re.sub(r"\\(.)", r"\1", t.text[1:-1])
        raise self.error(f"expected a name, found {t.text or 'end of input'!r}")

    def number(self):
        t = self.tok
        if t.kind != "num":
            raise self.error(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        return float(t.text) if any(c in t.text for c in ".eE") else int(t.text)

    def term(self):
        t = self.tok
        if t.kind == "var":
            self.i += 1
            if t.text == "_":
                self.anon += 1
                return Var(f"_Anon{self.anon}")
            return Var(t.text)
        if t.kind == "num":
            return Const(self.number())
        if self.placemarkers and t.kind == "punct" and t.text in Placemarker.KINDS:
            self.i += 1
            nt = self.tok
            if nt.kind == "num" and t.text == "-":
                return Const(-self.number())
            if nt.kind not in ("name", "quoted"):
                raise self.error(f"unknown placemarker form {t.text}{nt.text}", t)
            return Placemarker(t.text, self.name())
        if t.kind == "punct" and t.text == "-" and self.toks[self.i + 1].kind == "num":
            self.i += 1
            return Const(-self.number())
        if t.kind == "punct" and t.text == "[":
            return self.list_term()
        name = self.name()
        if self.accept("("):
            args = self.term_list(")")
            return Compound(name, tuple(args))
        return Const(name)

    def list_term(self):
        self.expect("[")
        if self.accept("]"):
            return Const("[]")
        items = [self.term()]
        while self.accept(","):
            items.append(self.term())
        tail = self.term() if self.accept("|") else Const("[]")
        self.expect("]")
        out = tail
        for it in reversed(items):
            out = Compound(".", (it, out))
        return out

    def term_list(self, close: str):
        args = [self.term()]
        while self.accept(","):
            args.append(self.term())
        self.expect(close)
        return args

    def atom(self) -> Atom:
        t = self.tok
        if t.kind not in ("name", "quoted"):
            raise self.error(f"expected an atom, found {t.text or 'end of input'!r}")
        name = self.name()
        if self.accept("("):
            return Atom(name, tuple(self.term_list(")")))
        return Atom(name, ())

    def literal(self) -> Literal:
        if self.accept("\\+"):
            return Literal(self.atom(), False)
        if self.tok.kind == "name" and self.tok.text == "not" and self.toks[self.i + 1].text == "(":
            self.i += 2
            a = self.atom()
            self.expect(")")
            return Literal(a, False)
        return Literal(self.atom(), True)

    def clause(self, cid: int) -> Clause:
        start = self.tok
        head = []
        while True:
            h = self.atom()
            p = None
            if self.accept(":"):
                p = self.number()
            head.append((h, p))
            if not self.accept(";"):
                break
        body = []
        if self.accept(":-"):
            body.append(self.literal())
            while self.accept(","):
                body.append(self.literal())
        self.expect(".")
        if len(head) == 1 and head[0][1] is None:
            head = [(head[0][0], 1.0)]
        elif any(p is None for _, p in head):
            raise self.error("every disjunct of a disjunctive head needs an annotation", start)
        head = [(a, float(p)) for a, p in head]
        total = sum(p for _, p in head)
        if total > 1.0 + ANNOTATION_TOL:
            raise self.error(f"head annotations sum to {total:g} > 1", start)
        for _, p in head:
            if p < 0 or p > 1:
                raise self.error(f"annotation {p:g} outside [0, 1]", start)
        return Clause(cid, tuple(head), tuple(body))


# ---------------------------------------------------------------- theories


def parse_theory(text: str) -> Theory:
    p = _Parser(text)
    clauses = []
    while not p.at_eof():
        clauses.append(p.clause(len(clauses)))
    return Theory(tuple(clauses))


def parse_atom(text: str) -> Atom:
    """Parse a single atom, with an optional trailing full stop."""
    p = _Parser(text.strip())
    a = p.atom()
    p.accept(".")
    if not p.at_eof():
        raise p.error("trailing input after atom")
    return a


def format_prob(p: float) -> str:
    return f"{p:.6g}"


def format_clause(c: Clause) -> str:
    if c.is_deterministic and len(c.head) == 1:
        head = str(c.head[0][0])
    else:
        head = " ; ".join(f"{a}:{format_prob(p)}" for a, p in c.head)
    if c.body:
        return f"{head} :- {', '.join(map(str, c.body))}."
    return f"{head}."


def serialize_theory(theory: Theory) -> str:
    return "".join(format_clause(c) + "\n" for c in theory)


# ---------------------------------------------------------------- language bias


def _recall(p: _Parser) -> Optional[int]:
    if p.accept("*"):
        return None
    tok = p.tok
    r = p.number()
    if not isinstance(r, int) or r < 1:
        raise p.error("recall must be a positive integer or '*'", tok)
    return r


def _atom_list(p: _Parser) -> List[Atom]:
    p.expect("[")
    out = [p.atom()]
    while p.accept(","):
        out.append(p.atom())
    p.expect("]")
    return out


def _pred_list(p: _Parser) -> List[Tuple[str, int]]:
    p.expect("[")
    out = []
    if p.accept("]"):
        return out
    while True:
        name = p.name()
        p.expect("/")
        tok = p.tok
        ar = p.number()
        if not isinstance(ar, int):
            raise p.error("arity must be an integer", tok)
        out.append((name, ar))
        if not p.accept(","):
            break
    p.expect("]")
    return out


def _skip_statement(p: _Parser) -> None:
    depth = 0
    while not p.at_eof():
        t = p.tok
        p.i += 1
        if t.kind == "punct" and t.text in "([":
            depth += 1
        elif t.kind == "punct" and t.text in ")]":
            depth -= 1
        elif t.kind == "end" and depth <= 0:
            return
    raise p.error("unterminated statement")


def parse_bias(text: str) -> List[ModeDeclaration]:
    """Parse ``modeh``/``modeb`` declarations; other statements are skipped."""
    p = _Parser(text, placemarkers=True)
    decls = []
    while not p.at_eof():
        start = p.tok
        if start.kind != "name" or start.text not in ("modeh", "modeb"):
            _skip_statement(p)
            continue
        kind = "head" if p.name() == "modeh" else "body"
        p.expect("(")
        recall = _recall(p)
        p.expect(",")
        if kind == "head" and p.at("["):
            schemas = _atom_list(p)
            p.expect(",")
            shared = _atom_list(p)
            p.expect(",")
            preds = _pred_list(p)
            p.expect(")")
            p.expect(".")
            if len(schemas) != len(shared):
                raise p.error(
                    f"multihead declaration has {len(schemas)} schemas "
                    f"but {len(shared)} atoms", start)
            decls.append(ModeDeclaration("multihead", recall, tuple(schemas),
                                         tuple(shared), tuple(preds)))
        else:
            schema = p.atom()
            p.expect(")")
            p.expect(".")
            decls.append(ModeDeclaration(kind, recall, (schema,)))
    return decls


# ---------------------------------------------------------------- mega-examples


def _model_name(p: _Parser, marker: str) -> str:
    # expects: marker(model(Name)).
    p.expect("(")
    if p.name() != "model":
        raise p.error(f"expected {marker}(model(Name))")
    p.expect("(")
    t = p.term()
    p.expect(")")
    p.expect(")")
    p.expect(".")
    return str(t)


def parse_examples(text: str) -> List[MegaExample]:
    p = _Parser(text)
    out = []
    while not p.at_eof():
        start = p.tok
        if not (start.kind == "name" and start.text == "begin"):
            raise p.error("fact outside a begin(model(_)) ... end(model(_)) block")
        p.i += 1
        name = _model_name(p, "begin")
        facts, negs = [], []
        seen_f, seen_n = set(), set()
        while True:
            if p.at_eof():
                raise p.error(f"unterminated block for model {name}", start)
            t = p.tok
            a = p.atom()
            if a.pred == "end" and len(a.args) == 1 and isinstance(a.args[0], Compound) \
                    and a.args[0].functor == "model":
                p.expect(".")
                if str(a.args[0].args[0]) != name:
                    raise p.error(f"end marker does not match model {name}", t)
                break
            p.expect(".")
            if a.pred == "neg" and len(a.args) == 1:
                inner = a.args[0]
                if isinstance(inner, Compound):
                    a = Atom(inner.functor, inner.args)
                elif isinstance(inner, Const) and isinstance(inner.value, str):
                    a = Atom(inner.value, ())
                else:
                    raise p.error("neg/1 expects an atom", t)
                target, seen = negs, seen_n
            else:
                target, seen = facts, seen_f
            if not atom_is_ground(a):
                raise p.error(f"non-ground fact {a}", t)
            if a not in seen:
                seen.add(a)
                target.append(a)
        both = seen_f & seen_n
        if both:
            raise ParseError(
                f"contradictory example in model {name}: "
                + ", ".join(sorted(map(str, both))), start.line, start.col)
        out.append(MegaExample(name, tuple(facts), tuple(negs)))
    return out


def serialize_examples(examples) -> str:
    lines = []
    for ex in examples:
        lines.append(f"begin(model({ex.name})).")
        lines.extend(f"{a}." for a in ex.facts)
        lines.extend(f"neg({a})." for a in ex.negatives)
        lines.append(f"end(model({ex.name})).")
        lines.append("")
    return "\n".join(lines)
