"""Inference and learning for Logic Programs with Annotated Disjunctions.

The package provides exact query inference through binary decision
diagrams, EM parameter learning computed on those diagrams, structure
learning by beam search over clauses followed by a greedy theory search,
and PR/ROC evaluation.
"""

from .logic import (
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
    apply_subst,
    is_range_restricted,
    unify,
)
from .parsing import (
    ParseError,
    parse_atom,
    parse_bias,
    parse_examples,
    parse_theory,
    serialize_examples,
    serialize_theory,
)
from .semantics import (
    APPROXIMATE,
    STANDARD,
    brute_force_expectations,
    brute_force_prob,
    enumerate_instances,
    find_explanations,
)
from .bdd import (
    BDDManager,
    ParamTable,
    binary_params,
    build_query_bdd,
    combine,
    expectations,
    get_backward,
    get_forward,
)
from .emblem import EmSettings, emblem, emblem_fit
from .search import SearchParams, slipcover
from .evaluation import aucnpr, aucpr, aucroc, cross_validate, score_examples

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Clause",
    "Compound",
    "Const",
    "Literal",
    "MegaExample",
    "ModeDeclaration",
    "Placemarker",
    "Theory",
    "Var",
    "apply_subst",
    "is_range_restricted",
    "unify",
    "ParseError",
    "parse_atom",
    "parse_bias",
    "parse_examples",
    "parse_theory",
    "serialize_examples",
    "serialize_theory",
    "APPROXIMATE",
    "STANDARD",
    "brute_force_expectations",
    "brute_force_prob",
    "enumerate_instances",
    "find_explanations",
    "BDDManager",
    "ParamTable",
    "binary_params",
    "build_query_bdd",
    "combine",
    "expectations",
    "get_backward",
    "get_forward",
    "EmSettings",
    "emblem",
    "emblem_fit",
    "SearchParams",
    "slipcover",
    "aucnpr",
    "aucpr",
    "aucroc",
    "cross_validate",
    "score_examples",
]
