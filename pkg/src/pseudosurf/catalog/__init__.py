"""Machine-readable fixtures: sextets, relations, parameter domains.

Each fixture is a JSON file in ``data/`` holding a sextet document (the
format read by :func:`pseudosurf.zcr.sextet_from_document`), the parameter
defaults and domain constraints, and, for equations of the quasilinear
second-order form, the stated coefficients and the family spec that
generates them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Mapping

import sympy as sp

from ..errors import DomainViolation
from ..expr import DELTA, Z, instantiate_functions, symbol
from ..families import FamilySpec, PdeCoeffs, spec_from_dict
from ..jet import EvolutionRelation, quasilinear_relation
from ..parser import parse_expr
from ..zcr import FijSextet

FORM_QUASILINEAR = "form-(1.1)"
GENERIC_ZCR = "generic-ZCR"


@dataclass
class Fixture:
    name: str
    title: str
    cls: str
    params: dict
    constraints: list
    document: dict
    functions: tuple = ()
    coefficients: dict | None = None
    family: dict | None = None
    acceptance: list = field(default_factory=list)
    optional: bool = False

    @property
    def is_quasilinear(self) -> bool:
        return self.cls == FORM_QUASILINEAR

    def merged_params(self, params: Mapping | None = None) -> dict:
        out = dict(self.params)
        for k, v in (params or {}).items():
            if k not in out:
                raise DomainViolation(f"{self.name} has no parameter {k!r}; known: {', '.join(sorted(out))}")
            out[k] = v
        return out

    def to_dict(self) -> dict:
        out = {"name": self.name, "title": self.title, "class": self.cls, "optional": self.optional}
        if self.functions:
            out["functions"] = list(self.functions)
        out["params"] = self.params
        out["constraints"] = self.constraints
        out["sextet"] = self.document
        for key in ("coefficients", "family"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        out["acceptance"] = self.acceptance
        return out


@dataclass
class Instance:
    """A fixture with every parameter fixed."""

    fixture: Fixture
    params: dict
    sextet: FijSextet
    relation: EvolutionRelation
    coeffs: PdeCoeffs | None

    @property
    def name(self) -> str:
        return self.fixture.name


def _data_dir():
    return resources.files(__package__).joinpath("data")


@lru_cache(maxsize=None)
def _load_all() -> dict:
    out = {}
    for entry in sorted(_data_dir().iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            d = json.loads(entry.read_text())
            out[d["name"]] = Fixture(
                name=d["name"],
                title=d["title"],
                cls=d["class"],
                params=d.get("params", {}),
                constraints=d.get("constraints", []),
                document=d["sextet"],
                functions=tuple(d.get("functions", ())),
                coefficients=d.get("coefficients"),
                family=d.get("family"),
                acceptance=d.get("acceptance", []),
                optional=d.get("optional", False),
            )
    return out


def list_catalog(include_optional: bool = True) -> list[str]:
    return [n for n, f in _load_all().items() if include_optional or not f.optional]


def get_fixture(name: str) -> Fixture:
    try:
        return _load_all()[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(list_catalog())}") from None


def _split_params(fx: Fixture, params: Mapping):
    numeric, functions = {}, {}
    for k, v in params.items():
        if k in fx.functions:
            functions[k] = parse_expr(str(v))
        else:
            numeric[symbol(k)] = sp.Rational(str(v)) if isinstance(v, (int, float, str)) else sp.sympify(v)
    return numeric, functions


def check_constraints(fx: Fixture, params: Mapping) -> None:
    """Raise :class:`DomainViolation` naming the first violated constraint."""
    numeric, functions = _split_params(fx, params)
    for text in fx.constraints:
        ok = _constraint_holds(text, numeric, functions, fx.functions)
        if not ok:
            shown = ", ".join(f"{k}={v}" for k, v in params.items())
            raise DomainViolation(f"{fx.name}: constraint '{text}' violated for {shown}")
    if DELTA in numeric and numeric[DELTA] not in (1, -1):
        raise DomainViolation(f"{fx.name}: delta must be +1 or -1, got {numeric[DELTA]}")


def _constraint_holds(text, numeric, functions, declared) -> bool:
    text = text.strip()
    if text.endswith(" integer"):
        return bool(parse_expr(text[: -len(" integer")]).subs(numeric).is_integer)
    if text.endswith(" nonconstant"):
        e = instantiate_functions(parse_expr(text[: -len(" nonconstant")], declared), functions)
        return sp.simplify(sp.diff(e, Z)) != 0
    if " in {" in text:
        lhs, rhs = text.split(" in ")
        allowed = {sp.Rational(v.strip()) for v in rhs.strip("{} ").split(",")}
        return parse_expr(lhs).subs(numeric) in allowed
    for op in ("!=", ">=", "<=", ">", "<"):
        if op in text:
            lhs, rhs = text.split(op)
            value = (parse_expr(lhs) - parse_expr(rhs)).subs(numeric)
            if value.free_symbols:
                raise DomainViolation(f"constraint '{text}' depends on unset {sorted(map(str, value.free_symbols))}")
            return {
                "!=": value != 0,
                ">=": value >= 0,
                "<=": value <= 0,
                ">": value > 0,
                "<": value < 0,
            }[op]
    raise ValueError(f"cannot read constraint {text!r}")


def _fix(e, numeric, functions):
    return instantiate_functions(sp.sympify(e).subs(numeric), functions)


def instantiate_fixture(name: str, params: Mapping | None = None) -> tuple[FijSextet, EvolutionRelation]:
    """Concrete sextet and relation for ``name`` at ``params`` (defaults fill the rest)."""
    inst = instance(name, params)
    return inst.sextet, inst.relation


def instance(name: str, params: Mapping | None = None) -> Instance:
    from ..zcr import sextet_from_document

    fx = get_fixture(name)
    merged = fx.merged_params(params)
    check_constraints(fx, merged)
    numeric, functions = _split_params(fx, merged)

    doc = dict(fx.document)
    delta = doc.get("delta", 1)
    if isinstance(delta, str):
        doc["delta"] = None
    doc.pop("relation", None)
    f, _ = sextet_from_document(doc)
    f = f.instantiate(functions).subs(numeric)
    if f.delta is None:
        f = f.with_delta(int(numeric.get(DELTA, 1)))
    f.functions = tuple(n for n in f.functions if n not in functions)

    coeffs = None
    if fx.coefficients is not None:
        A, B, C = (
            f.close(_fix(parse_expr(fx.coefficients[k], fx.functions), numeric, functions)) for k in "ABC"
        )
        coeffs = PdeCoeffs(A, B, C, f.delta)
        relation = quasilinear_relation(A, B, C)
    else:
        r = fx.document["relation"]
        relation = EvolutionRelation(
            parse_expr(r["solved"]), _fix(parse_expr(r["rhs"], fx.functions), numeric, functions)
        )
    return Instance(fx, merged, f, relation, coeffs)


def family_spec(name: str, params: Mapping | None = None) -> FamilySpec | None:
    """The generating family spec with parameters and function choices fixed."""
    fx = get_fixture(name)
    if fx.family is None:
        return None
    merged = fx.merged_params(params)
    check_constraints(fx, merged)
    numeric, functions = _split_params(fx, merged)
    data = dict(fx.family)
    for key in ("delta", "sign"):
        if isinstance(data.get(key), str):
            data[key] = int(parse_expr(data[key]).subs(numeric))
    spec = spec_from_dict(data)
    for attr, value in vars(spec).items():
        if isinstance(value, sp.Basic):
            setattr(spec, attr, _fix(value, numeric, functions))
    return spec


def export_fixture(name: str) -> dict:
    return get_fixture(name).to_dict()
