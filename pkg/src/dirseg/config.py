"""Run configuration: strict INI parsing and symbolic concentration overrides.

Override expressions are resolved per test sequence: ``n`` is the sequence
length, ``N1``/``M1`` are 1 / (smallest positive entry) of the transition /
emission point-estimate matrices.  A number directly followed by a symbol
multiplies it, so ``20n``, ``n/2`` and ``N1+1`` all work.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass

KNOWN_METHODS = ("viterbi", "sem", "smm", "bem", "vb", "em")

DEFAULT_C_VALUES = (1e6, 1.0, 0.8, 0.6, 0.4, 0.3, 0.2, 0.1, 0.005)

_SECTIONS = {
    "model": {"K", "alphabet", "p0"},
    "prior": {"mode", "N", "M", "floor", "cap"},
    "segmentation": {"methods", "n_initial", "max_iter", "seed", "applicability"},
    "evaluation": {"c"},
    "paths": {"train", "test", "priors", "output_dir"},
    "sample": {"mode", "model", "n_pairs", "length", "length_min", "length_max"},
}


class ConfigError(Exception):
    """Configuration file missing, malformed, or containing unknown keys."""


@dataclass(frozen=True)
class RunConfig:
    K: int | None = None
    alphabet: tuple[str, ...] = ()
    p0: str = "estimate"                 # "estimate" or comma-separated floats
    prior_mode: str = "empirical"        # empirical | override
    n_override: str | None = None
    m_override: str | None = None
    floor: float = 1e-6
    cap: float = 1e8
    methods: tuple[str, ...] = ("sem",)
    n_initial: int = 1000
    max_iter: int = 100
    seed: int = 0
    applicability: str = "strict"
    c_values: tuple[float, ...] = DEFAULT_C_VALUES
    train: str | None = None
    test: str | None = None
    priors: str | None = None
    output_dir: str = "out"
    sample_mode: str = "hmm"
    sample_model: str | None = None
    n_pairs: int = 0
    length_min: int = 0
    length_max: int = 0


def parse_config(path: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    kw = {}
    if cp.has_section("model"):
        sec = cp["model"]
        if "K" in sec:
            kw["K"] = _to_int(sec["K"], "model.K")
        if "alphabet" in sec:
            kw["alphabet"] = tuple(v.strip() for v in sec["alphabet"].split(",") if v.strip())
        if "p0" in sec:
            kw["p0"] = sec["p0"].strip()
    if cp.has_section("prior"):
        sec = cp["prior"]
        mode = sec.get("mode", "empirical").strip()
        if mode not in ("empirical", "override"):
            raise ConfigError("prior.mode must be 'empirical' or 'override'")
        kw["prior_mode"] = mode
        if "N" in sec:
            kw["n_override"] = sec["N"].strip()
        if "M" in sec:
            kw["m_override"] = sec["M"].strip()
        if "floor" in sec:
            kw["floor"] = _to_float(sec["floor"], "prior.floor")
        if "cap" in sec:
            kw["cap"] = _to_float(sec["cap"], "prior.cap")
        if mode == "override" and ("N" not in sec or "M" not in sec):
            raise ConfigError("prior.mode=override requires both N and M expressions")
    if cp.has_section("segmentation"):
        sec = cp["segmentation"]
        if "methods" in sec:
            methods = tuple(v.strip() for v in sec["methods"].split(",") if v.strip())
            unknown = set(methods) - set(KNOWN_METHODS)
            if unknown:
                raise ConfigError(f"unknown methods {sorted(unknown)}; "
                                  f"choose from {KNOWN_METHODS}")
            kw["methods"] = methods
        if "n_initial" in sec:
            kw["n_initial"] = _to_int(sec["n_initial"], "segmentation.n_initial")
        if "max_iter" in sec:
            kw["max_iter"] = _to_int(sec["max_iter"], "segmentation.max_iter")
        if "seed" in sec:
            kw["seed"] = _to_int(sec["seed"], "segmentation.seed")
        if "applicability" in sec:
            val = sec["applicability"].strip()
            if val not in ("strict", "warn"):
                raise ConfigError("segmentation.applicability must be strict or warn")
            kw["applicability"] = val
    if cp.has_section("evaluation"):
        sec = cp["evaluation"]
        if "c" in sec:
            cs = tuple(_to_float(v, "evaluation.c") for v in sec["c"].split(",") if v.strip())
            if any(c <= 0 for c in cs):
                raise ConfigError("evaluation.c values must be positive")
            kw["c_values"] = cs
    if cp.has_section("paths"):
        sec = cp["paths"]
        for key in ("train", "test", "priors", "output_dir"):
            if key in sec:
                kw[key] = sec[key].strip()
    if cp.has_section("sample"):
        sec = cp["sample"]
        if "mode" in sec:
            mode = sec["mode"].strip()
            if mode not in ("hmm", "hierarchical", "polya"):
                raise ConfigError("sample.mode must be hmm, hierarchical or polya")
            kw["sample_mode"] = mode
        if "model" in sec:
            kw["sample_model"] = sec["model"].strip()
        if "n_pairs" in sec:
            kw["n_pairs"] = _to_int(sec["n_pairs"], "sample.n_pairs")
        if "length" in sec:
            n = _to_int(sec["length"], "sample.length")
            kw["length_min"] = kw["length_max"] = n
        if "length_min" in sec:
            kw["length_min"] = _to_int(sec["length_min"], "sample.length_min")
        if "length_max" in sec:
            kw["length_max"] = _to_int(sec["length_max"], "sample.length_max")
    return RunConfig(**kw)


def _to_int(text, what) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {text!r}") from None


def _to_float(text, what) -> float:
    try:
        return float(str(text).strip())
    except ValueError:
        raise ConfigError(f"{what} must be a number, got {text!r}") from None


# -- symbolic override expressions -------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)|([A-Za-z]\w*)|([()+\-*/]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ConfigError(f"cannot parse override expression {text!r} at position {pos}")
        num, sym, op = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif sym is not None:
            tokens.append(("sym", sym))
        else:
            tokens.append(("op", op))
        pos = m.end()
    return tokens


def resolve_expression(text: str, **symbols) -> float:
    """Evaluate an override expression such as '20n', 'n/2' or 'N1+1'.

    Implicit multiplication between a number and a symbol is supported.
    Unknown symbols, or symbols without a value in this context, raise
    ConfigError.
    """
    tokens = _tokenize(text)
    expanded = []
    for tok in tokens:
        if expanded and expanded[-1][0] == "num" and tok[0] == "sym":
            expanded.append(("op", "*"))
        expanded.append(tok)
    state = {"pos": 0}

    def peek():
        return expanded[state["pos"]] if state["pos"] < len(expanded) else (None, None)

    def take():
        tok = peek()
        state["pos"] += 1
        return tok

    def factor():
        kind, val = take()
        if kind == "num":
            return val
        if kind == "sym":
            if val not in symbols or symbols[val] is None:
                raise ConfigError(f"override symbol {val!r} has no value in this context")
            return float(symbols[val])
        if kind == "op" and val == "-":
            return -factor()
        if kind == "op" and val == "(":
            out = expr()
            kind, val = take()
            if (kind, val) != ("op", ")"):
                raise ConfigError(f"unbalanced parentheses in {text!r}")
            return out
        raise ConfigError(f"unexpected token in override expression {text!r}")

    def term():
        out = factor()
        while peek() == ("op", "*") or peek() == ("op", "/"):
            _, op = take()
            rhs = factor()
            out = out * rhs if op == "*" else out / rhs
        return out

    def expr():
        out = term()
        while peek() == ("op", "+") or peek() == ("op", "-"):
            _, op = take()
            rhs = term()
            out = out + rhs if op == "+" else out - rhs
        return out

    value = expr()
    if state["pos"] != len(expanded):
        raise ConfigError(f"trailing garbage in override expression {text!r}")
    if value <= 0:
        raise ConfigError(f"override expression {text!r} resolved to a non-positive value")
    return float(value)
