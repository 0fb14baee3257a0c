"""Command-line interface: ``learn``, ``prob`` and ``eval``.

Options may come from an INI file (``--config``) with one section per
command; keys use the same names as the flags (``NInt = 4``).  Flags
override the file.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from typing import Dict, List, Optional

from .evaluation import cross_validate, curve_csv, query_probability
from .logic import MegaExample, atom_is_ground
from .parsing import ParseError, parse_atom, parse_bias, parse_examples, parse_theory, serialize_theory
from .search import SearchParams, SearchReport, slipcover
from .semantics import APPROXIMATE, STANDARD, Prover
from .params import ParamTable

log = logging.getLogger("lpadlearn")

EXIT_OK, EXIT_INPUT, EXIT_SEARCH = 0, 1, 2

# flag -> (SearchParams field, converter)
SEARCH_OPTIONS = {
    "NInt": ("n_int", int),
    "NS": ("n_s", int),
    "NA": ("n_a", int),
    "NI": ("n_i", int),
    "NV": ("n_v", lambda s: None if str(s).lower() in ("none", "inf", "*") else int(s)),
    "NB": ("n_b", int),
    "NTC": ("n_tc", int),
    "NBC": ("n_bc", int),
    "D": ("depth_bound", lambda s: None if str(s).lower() in ("none", "inf", "*") else int(s)),
    "NEM": ("max_iter", lambda s: None if str(s).lower() in ("none", "inf", "*") else int(s)),
    "epsilon": ("epsilon", float),
    "delta": ("delta", float),
    "semantics": ("mode", str),
    "seed": ("seed", int),
    "jobs": ("jobs", int),
}

class InputError(Exception):
    pass


def _signatures(text: str):
    out = set()
    for item in str(text).replace(",", " ").split():
        name, _, arity = item.rpartition("/")
        if not name or not arity.isdigit():
            raise InputError(f"bad predicate indicator {item!r}, expected name/arity")
        out.add((name, int(arity)))
    return frozenset(out)


def _read(path: str) -> str:
    if not path:
        raise InputError("missing input file")
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from e


def _load_examples(paths) -> List[MegaExample]:
    out = []
    for p in paths:
        try:
            out.extend(parse_examples(_read(p)))
        except ParseError as e:
            raise InputError(f"{p}: {e}") from e
    return out


def _paths(value) -> List[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return str(value).split()


def _default_targets(bias):
    single = {d.schema.signature for d in bias if d.kind == "head"}
    if single:
        return frozenset(single)
    return frozenset(s.signature for d in bias if d.kind == "multihead" for s in d.schemas)


def effective_config(args: argparse.Namespace) -> Dict[str, object]:
    """Merge config-file section and flags; flags win."""
    conf: Dict[str, object] = {}
    if args.config:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case sensitive (NInt, NS, ...)
        try:
            with open(args.config, encoding="utf-8") as fh:
                cp.read_file(fh)
        except OSError as e:
            raise InputError(f"{args.config}: {e.strerror}") from e
        except configparser.Error as e:
            raise InputError(f"{args.config}: {e}") from e
        if cp.has_section(args.command):
            conf.update(cp[args.command])
        else:
            conf.update(cp.defaults())
    for key, value in vars(args).items():
        if key in ("command", "func", "config", "verbose") or value is None:
            continue
        conf[key] = value
    return conf


def _flag(conf, key) -> bool:
    v = conf.get(key, False)
    return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")


def search_params(conf: Dict[str, object], targets) -> SearchParams:
    kwargs = {}
    for flag, (name, conv) in SEARCH_OPTIONS.items():
        if flag in conf:
            try:
                kwargs[name] = conv(conf[flag])
            except ValueError as e:
                raise InputError(f"bad value for {flag}: {conf[flag]!r}") from e
    if kwargs.get("mode", STANDARD) not in (STANDARD, APPROXIMATE):
        raise InputError("semantics must be 'standard' or 'approximate'")
    if "closed_world" in conf:
        kwargs["closed_world"] = _signatures(conf["closed_world"])
    try:
        return SearchParams(targets=frozenset(targets), **kwargs)
    except ValueError as e:
        raise InputError(str(e)) from e


def _jsonable(conf):
    return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(conf.items())}


def _write(path: str, text: str) -> None:
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_bias(conf):
    try:
        bias = parse_bias(_read(conf.get("bias")))
    except ParseError as e:
        raise InputError(f"{conf.get('bias')}: {e}") from e
    if not any(d.kind != "body" for d in bias):
        raise InputError("the bias file has no modeh declaration")
    return bias


def cmd_learn(conf: Dict[str, object]) -> int:
    bias = _load_bias(conf)
    data = _load_examples(_paths(conf.get("data")))
    if not data:
        raise InputError("no training examples")
    targets = _signatures(conf["targets"]) if conf.get("targets") else _default_targets(bias)
    params = search_params(conf, targets)
    report = SearchReport()
    try:
        theory = slipcover(params, data, bias, report)
    except Exception as e:  # anything raised inside the search
        log.error("search failed: %s", e)
        return EXIT_SEARCH
    text = serialize_theory(theory)
    out = conf.get("output")
    if out:
        _write(str(out), text)
    else:
        sys.stdout.write(text)
    if conf.get("report"):
        body = {"config": _jsonable(conf), **report.to_dict()}
        _write(str(conf["report"]), json.dumps(body, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_prob(conf: Dict[str, object]) -> int:
    try:
        theory = parse_theory(_read(conf.get("theory")))
        query = parse_atom(str(conf["query"]))
    except ParseError as e:
        raise InputError(str(e)) from e
    if not atom_is_ground(query):
        raise InputError(f"query {query} is not ground")
    world = MegaExample("empty")
    if conf.get("data"):
        examples = _load_examples(_paths(conf["data"]))
        name = conf.get("model")
        if name:
            matches = [ex for ex in examples if ex.name == str(name)]
            if not matches:
                raise InputError(f"no model named {name!r}")
            world = matches[0]
        elif examples:
            world = examples[0]
    if conf.get("targets"):
        world = world.without_predicates(_signatures(conf["targets"]))
    mode = APPROXIMATE if _flag(conf, "approximate") else STANDARD
    if "semantics" in conf and not _flag(conf, "approximate"):
        mode = str(conf["semantics"])
        if mode not in (STANDARD, APPROXIMATE):
            raise InputError("semantics must be 'standard' or 'approximate'")
    depth = SEARCH_OPTIONS["D"][1](conf["D"]) if "D" in conf else None
    closed = _signatures(conf["closed_world"]) if conf.get("closed_world") else frozenset()
    prover = Prover(theory, mode, depth, closed)
    p = query_probability(prover, world, query, ParamTable.from_theory(theory))
    print(f"{p:.6f}")
    return EXIT_OK


def cmd_eval(conf: Dict[str, object]) -> int:
    bias = _load_bias(conf)
    fold_paths = _paths(conf.get("folds"))
    if len(fold_paths) < 2:
        raise InputError("eval needs at least two fold files")
    folds = [_load_examples([p]) for p in fold_paths]
    targets = _signatures(conf["targets"]) if conf.get("targets") else _default_targets(bias)
    params = search_params(conf, targets)
    try:
        res = cross_validate(folds, params, bias, closed_world=_flag(conf, "cw_negatives"))
    except InputError:
        raise
    except Exception as e:
        log.error("learning failed: %s", e)
        return EXIT_SEARCH
    out_dir = str(conf.get("output_dir") or ".")
    body = {"config": _jsonable(conf), **res.to_dict()}
    _write(os.path.join(out_dir, "metrics.json"), json.dumps(body, indent=2, sort_keys=True) + "\n")
    _write(os.path.join(out_dir, "roc.csv"), curve_csv(res.roc_points, "roc"))
    _write(os.path.join(out_dir, "pr.csv"), curve_csv(res.pr_points, "pr"))
    for row in res.folds:
        log.info("fold %d: AUCROC=%.4f AUCPR=%.4f", row["fold"], row["AUCROC"], row["AUCPR"])
    return EXIT_OK


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search parameters")
    for flag in SEARCH_OPTIONS:
        if flag == "semantics":
            g.add_argument("--semantics", choices=(STANDARD, APPROXIMATE))
        else:
            g.add_argument(f"--{flag}", dest=flag, metavar="N" if flag not in ("epsilon", "delta") else "X")
    g.add_argument("--targets", help="target predicates, e.g. 'advisedby/2'")
    g.add_argument("--closed-world", dest="closed_world",
                   help="predicates defined by the example facts only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpadlearn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn a theory from examples")
    p.add_argument("--config")
    p.add_argument("--bias")
    p.add_argument("--data", nargs="+")
    p.add_argument("--output", "-o")
    p.add_argument("--report")
    _add_search_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("prob", help="probability of a ground query")
    p.add_argument("query")
    p.add_argument("--config")
    p.add_argument("--theory")
    p.add_argument("--data", nargs="+")
    p.add_argument("--model")
    p.add_argument("--approximate", action="store_true", default=None)
    p.add_argument("--semantics", choices=(STANDARD, APPROXIMATE))
    p.add_argument("--D", dest="D")
    p.add_argument("--targets")
    p.add_argument("--closed-world", dest="closed_world")
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("eval", help="cross-validated learning and testing")
    p.add_argument("--config")
    p.add_argument("--bias")
    p.add_argument("--folds", nargs="+")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--cw-negatives", dest="cw_negatives", action="store_true", default=None,
                   help="also test on unlisted ground target atoms as negatives")
    _add_search_flags(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        conf = effective_config(args)
        return args.func(conf)
    except InputError as e:
        log.error("%s", e)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
