"""Scenario files: named declarations plus an ordered list of checks to run on them.

A scenario is a JSON document::

    {
      "schema": 1,
      "name": "sphere-equator",
      "precision": 8,
      "declarations": {"s2": {"kind": "split", "model": "sphere_equator"}},
      "commands": [{"op": "glue-check", "target": "s2"}]
    }

Each command produces one result record.  A record's ``status`` is ``pass`` or
``fail``; any nonempty discrepancy makes it ``fail``.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping

import jsonschema

from . import matrix as mx
from .assembly import (
    AlgebraicCobordism,
    AssemblyError,
    BasisMismatch,
    FilteredEndomorphism,
    InvalidGamma,
    NotFilteredShape,
    assemble_fhat,
    congruence_order,
    invert_filtered,
    is_identity_mod,
    validate_gamma,
)
from .chain import (
    ChainComplex,
    ChainError,
    NotAChainMap,
    PrecisionExhausted,
    ShapeMismatch,
    WrongCoefficients,
    _entry_to_json,
    homology_string,
    homology_Z,
    novikov_ranks,
    verify_complex,
)
from .cobordism import (
    BadPartition,
    CobordismError,
    IdentityViolation,
    glue_check,
    setting_check,
    splitting_complex,
)
from .corpus import CORPUS, DOMAINS, SPLITS, circle, double_cylinder, points, square_block
from .dmt import (
    CellComplex,
    CircleFunction,
    DMTError,
    InvalidField,
    NotAlternating,
    VectorField,
    circle_morse,
    circle_novikov,
    extract_gamma,
    morse_complex,
    morse_values,
    ordered_morse_complex,
    random_matching,
    split_data,
    zgraded_complex,
)
from .rings import RingContext, RingError, format_element, parse_element

SCHEMA_VERSION = 1

KINDS = ("complex", "morse", "split", "domain", "gamma", "circle_function", "filtered", "square")
OPS = ("verify", "homology", "assemble", "glue-check", "unroll-compare", "invert", "setting-check")

SCHEMA = {
    "type": "object",
    "required": ["schema", "declarations", "commands"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "precision": {"type": "integer", "minimum": 1},
        "declarations": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["kind"],
                "properties": {"kind": {"enum": list(KINDS)}},
            },
        },
        "commands": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["op", "target"],
                "properties": {
                    "op": {"type": "string"},
                    "target": {"type": "string"},
                    "precision": {"type": "integer", "minimum": 1},
                    "stages": {"type": "integer", "minimum": 0},
                    "epsilon": {"type": ["string", "integer"]},
                    "expect": {},
                },
            },
        },
    },
}


class ScenarioError(Exception):
    """Any problem with the input itself; the command line maps these to exit code 2."""


class ParseError(ScenarioError):
    pass


class UnknownCommand(ScenarioError):
    pass


class NameResolution(ScenarioError):
    pass


# errors raised by the wrapped operations that mean "the input was unusable"
INPUT_ERRORS = (
    ShapeMismatch,
    BasisMismatch,
    NotAlternating,
    NotFilteredShape,
    PrecisionExhausted,
    WrongCoefficients,
    BadPartition,
    RingError,
)
# errors that mean "the mathematics did not check out"
CHECK_ERRORS = (IdentityViolation, InvalidGamma, NotAChainMap, InvalidField, CobordismError, AssemblyError, DMTError, ChainError)


@dataclass
class Square:
    complex: ChainComplex
    partition: dict[str, int]
    values: dict[str, Fraction]
    gap: Fraction


@dataclass
class Scenario:
    name: str
    precision: int | None
    declarations: dict[str, dict]
    commands: list[dict]
    seed: int = 0
    _cache: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "Scenario":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not JSON: {exc}") from None
        try:
            jsonschema.validate(obj, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ParseError(f"schema violation at {where}: {exc.message}") from None
        for cmd in obj["commands"]:
            if cmd["op"] not in OPS:
                raise UnknownCommand(f"unknown command {cmd['op']!r}")
            if cmd["target"] not in obj["declarations"]:
                raise NameResolution(f"command {cmd['op']} refers to undeclared {cmd['target']!r}")
        return cls(obj.get("name", ""), obj.get("precision"), obj["declarations"], obj["commands"], seed)

    @classmethod
    def load(cls, path: str, seed: int = 0) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc.strerror}") from None
        return cls.parse(text, seed)

    # -- declarations ------------------------------------------------------------------

    def kind(self, name: str) -> str:
        if name not in self.declarations:
            raise NameResolution(f"undeclared name {name!r}")
        return self.declarations[name]["kind"]

    def resolve(self, name: str):
        if name not in self._cache:
            decl = self.declarations.get(name)
            if decl is None:
                raise NameResolution(f"undeclared name {name!r}")
            try:
                self._cache[name] = BUILDERS[decl["kind"]](self, decl)
            except KeyError as exc:
                raise ParseError(f"declaration {name!r} is missing {exc}") from None
        return self._cache[name]


def _lookup(table: Mapping[str, Callable], key: str, what: str):
    if key not in table:
        raise NameResolution(f"unknown {what} {key!r}; choose from {sorted(table)}")
    return table[key]


def _build_complex(sc: Scenario, decl: dict) -> ChainComplex:
    return ChainComplex.from_json(decl["data"])


def _build_morse(sc: Scenario, decl: dict) -> ChainComplex:
    if "complex" in decl:
        k = _lookup(CORPUS, decl["complex"], "corpus complex")()
    else:
        k = CellComplex.from_json(decl["cells"])
    choice = decl.get("field", "empty")
    if choice == "empty":
        v = VectorField({})
    elif choice == "random":
        v = random_matching(k, random.Random(sc.seed))
    else:
        v = VectorField.from_json(choice)
    return morse_complex(k, v, decl.get("removed", ()))


def _build_split(sc: Scenario, decl: dict):
    make = _lookup(SPLITS, decl["model"], "splitting")
    kwargs = {}
    if "v_n" in decl:
        kwargs["v_n"] = VectorField.from_json(decl["v_n"])
    if "seed" in decl:
        kwargs["seed"] = decl["seed"]
    return make(**kwargs)


def _build_domain(sc: Scenario, decl: dict):
    return _lookup(DOMAINS, decl["model"], "fundamental domain")()


def _build_gamma(sc: Scenario, decl: dict) -> AlgebraicCobordism:
    if "domain" in decl:
        if sc.kind(decl["domain"]) != "domain":
            raise NameResolution(f"{decl['domain']!r} is not a domain")
        return extract_gamma(sc.resolve(decl["domain"]))
    return AlgebraicCobordism.from_json(decl["data"])


def _build_circle(sc: Scenario, decl: dict) -> CircleFunction:
    return CircleFunction.from_json(decl["data"])


def _build_filtered(sc: Scenario, decl: dict) -> FilteredEndomorphism:
    ctx = RingContext.from_json(decl["twist"]) if decl.get("twist") else RingContext()
    precision = decl.get("precision", sc.precision)
    if precision is None:
        raise ParseError("filtered endomorphisms need a stated precision")
    rows = [
        [parse_element(v, ctx) if isinstance(v, str) else ctx.constant(int(v)) for v in row]
        for row in decl["matrix"]
    ]
    return FilteredEndomorphism(decl["labels"], rows, precision, ctx)


SQUARE_BASES = {"circle": (circle, {"1": "0.1"}), "two_points": (lambda: points("p", "q"), {})}


def _build_square(sc: Scenario, decl: dict) -> Square:
    make, pairs = _lookup(SQUARE_BASES, decl["base"], "square base")
    k, v = make(), VectorField(pairs)
    sq, fld, removed = double_cylinder(k, v)
    crit = fld.critical(sq, removed)
    c = ordered_morse_complex(sq, fld, crit, removed)
    base = morse_values(k, v)
    values = {name: base[name.split("/")[1]] for name in crit}
    spread = sorted(set(base.values()))
    gap = min((b - a for a, b in zip(spread, spread[1:])), default=Fraction(1))
    for row, col, delta in decl.get("corrupt", ()):
        diffs = {i: c.diff(i).copy() for i in c.degree_range()}
        i, r = c.index(row)
        j, k_ = c.index(col)
        if j != i + 1:
            raise ParseError(f"cannot corrupt entry {row} <- {col}: degrees {i}, {j}")
        diffs[j][r, k_] += int(delta)
        c = c.like(c.basis, diffs)
    return Square(c, {name: square_block(name) for name in crit}, values, gap)


BUILDERS: dict[str, Callable[[Scenario, dict], Any]] = {
    "complex": _build_complex,
    "morse": _build_morse,
    "split": _build_split,
    "domain": _build_domain,
    "gamma": _build_gamma,
    "circle_function": _build_circle,
    "filtered": _build_filtered,
    "square": _build_square,
}


# -- commands -------------------------------------------------------------------------

def _precision(sc: Scenario, cmd: dict) -> int:
    n = cmd.get("precision", sc.precision)
    if n is None:
        raise ParseError(f"{cmd['op']} on {cmd['target']} needs a precision")
    return n


def _complex_of(sc: Scenario, cmd: dict) -> ChainComplex:
    target = cmd["target"]
    kind = sc.kind(target)
    obj = sc.resolve(target)
    if kind in ("complex", "morse"):
        return obj
    if kind == "circle_function":
        return circle_novikov(obj, _precision(sc, cmd)) if obj.winding else circle_morse(obj)
    if kind == "square":
        return obj.complex
    if kind == "split":
        return splitting_complex(split_data(obj)).complex
    raise NameResolution(f"{target!r} ({kind}) is not a complex")


def _entries(bad) -> list[list[int]]:
    return [list(map(int, t)) for t in bad]


def run_verify(sc: Scenario, cmd: dict) -> dict:
    kind = sc.kind(cmd["target"])
    if kind == "gamma":
        report = validate_gamma(sc.resolve(cmd["target"]), _precision(sc, cmd))
        return {"discrepancy": report}
    if kind == "split":
        s = split_data(sc.resolve(cmd["target"]))
        problems = s.validate() + splitting_complex(s).exactness_failures()
        return {"discrepancy": problems}
    c = _complex_of(sc, cmd)
    n = cmd.get("precision", c.precision)
    bad = verify_complex(c, n)
    return {"discrepancy": [
        {"degree": i, "row": c.labels(i - 2)[r].name, "column": c.labels(i)[k].name} for i, r, k in bad
    ]}


def run_homology(sc: Scenario, cmd: dict) -> dict:
    c = _complex_of(sc, cmd)
    if c.ring is None:
        text = homology_string(homology_Z(c))
        out: dict = {"homology": text}
        got = text
    else:
        n = _precision(sc, cmd)
        ranks = novikov_ranks(c, n)
        got = {str(i): ranks.get(i, 0) for i in sorted(ranks)}
        out = {"novikov_ranks": got, "precision": n}
    if "expect" in cmd and cmd["expect"] != got:
        out["discrepancy"] = [{"expected": cmd["expect"], "got": got}]
    return out


def run_assemble(sc: Scenario, cmd: dict) -> dict:
    if sc.kind(cmd["target"]) != "gamma":
        raise NameResolution(f"assemble needs a gamma, not {sc.kind(cmd['target'])}")
    g = sc.resolve(cmd["target"])
    n = _precision(sc, cmd)
    fh = assemble_fhat(g, n)
    ranks = novikov_ranks(fh, n)
    out = {"complex": fh.to_json(), "novikov_ranks": {str(i): ranks[i] for i in sorted(ranks)}}
    if "expect" in cmd:
        want = ChainComplex.from_json(cmd["expect"])
        if want != fh:
            out["discrepancy"] = [{"expected": cmd["expect"]}]
    return out


def run_glue(sc: Scenario, cmd: dict) -> dict:
    if sc.kind(cmd["target"]) != "split":
        raise NameResolution("glue-check needs a split declaration")
    s = split_data(sc.resolve(cmd["target"]))
    res = glue_check(s.phi, s.thetap, s.thetapp)
    return {"discrepancy": {str(i): [[_entry_to_json(v) for v in row] for row in m] for i, m in sorted(res.discrepancy.items())}}


def run_unroll(sc: Scenario, cmd: dict) -> dict:
    if sc.kind(cmd["target"]) != "domain":
        raise NameResolution("unroll-compare needs a domain declaration")
    fd = sc.resolve(cmd["target"])
    stages = cmd.get("stages")
    if stages is None:
        raise ParseError("unroll-compare needs a number of stages")
    g = extract_gamma(fd)
    per_stage, bad = [], []
    for ell in range(1, stages + 1):
        n = ell + 1
        order = congruence_order(assemble_fhat(g, n), zgraded_complex(fd, ell), n)
        per_stage.append({"stage": ell, "congruence_order": order})
        if order < n:
            bad.append({"stage": ell, "congruence_order": order, "required": n})
    final = per_stage[-1]["congruence_order"] if per_stage else 0
    return {"stages": per_stage, "congruence_order": final, "discrepancy": bad}


def run_invert(sc: Scenario, cmd: dict) -> dict:
    if sc.kind(cmd["target"]) != "filtered":
        raise NameResolution("invert needs a filtered declaration")
    t = sc.resolve(cmd["target"])
    n = cmd.get("precision", t.precision)
    inv = invert_filtered(t, n)
    bad = []
    if not is_identity_mod(mx.matmul(t.matrix, inv.matrix), n):
        bad.append("theta * inverse is not the identity")
    if not is_identity_mod(mx.matmul(inv.matrix, t.matrix), n):
        bad.append("inverse * theta is not the identity")
    return {
        "inverse": [[format_element(v) for v in row] for row in inv.matrix],
        "precision": n,
        "discrepancy": bad,
    }


def run_setting(sc: Scenario, cmd: dict) -> dict:
    if sc.kind(cmd["target"]) != "square":
        raise NameResolution("setting-check needs a square declaration")
    sq = sc.resolve(cmd["target"])
    eps = Fraction(cmd["epsilon"]) if "epsilon" in cmd else sq.gap
    report = setting_check(sq.complex, sq.partition, sq.values, eps)
    return {
        "epsilon": str(eps),
        "discrepancy": [
            {"upper": v.upper, "lower": v.lower, "sum": str(v.total), "gap": str(v.gap)} for v in report
        ],
    }


RUNNERS: dict[str, Callable[[Scenario, dict], dict]] = {
    "verify": run_verify,
    "homology": run_homology,
    "assemble": run_assemble,
    "glue-check": run_glue,
    "unroll-compare": run_unroll,
    "invert": run_invert,
    "setting-check": run_setting,
}


def run_command(sc: Scenario, cmd: dict, timing: bool = False) -> dict:
    """One result record; input problems propagate as :class:`ScenarioError`."""
    if cmd["op"] not in RUNNERS:
        raise UnknownCommand(f"unknown command {cmd['op']!r}")
    start = time.perf_counter()
    record: dict = {"op": cmd["op"], "target": cmd["target"]}
    try:
        record.update(RUNNERS[cmd["op"]](sc, cmd))
    except INPUT_ERRORS as exc:
        raise ParseError(f"{cmd['op']} on {cmd['target']}: {exc}") from None
    except CHECK_ERRORS as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        record["discrepancy"] = [record["error"]]
    record["status"] = "fail" if record.get("discrepancy") else "pass"
    record.setdefault("discrepancy", [])
    if timing:
        record["seconds"] = round(time.perf_counter() - start, 6)
    return record


def run_scenario(sc: Scenario, commands: list[dict] | None = None, timing: bool = False) -> dict:
    results = [run_command(sc, cmd, timing) for cmd in (sc.commands if commands is None else commands)]
    return {
        "schema": SCHEMA_VERSION,
        "scenario": sc.name,
        "seed": sc.seed,
        "status": "fail" if any(r["status"] == "fail" for r in results) else "pass",
        "results": results,
    }
