"""Symbolic core: jet variables, parameters and abstract functions of ``z``.

Expressions are plain sympy expressions built from a fixed vocabulary:

* jet coordinates ``z, z_x, z_t, z_xx, z_xt, ...`` (real symbols whose name
  encodes the pair ``(a, b)`` of x- and t-derivative orders),
* real parameters (any other identifier, e.g. ``eta``, ``lambda``, ``delta``),
* abstract functions of ``z`` such as ``rho(z)`` and their derivatives
  ``Derivative(rho(z), z)``, printed as ``rho'(z)``.

sympy supplies the tree, the differentiation rules and polynomial
arithmetic; this module fixes the conventions on top of it (the sign
parameter ``delta`` with ``delta**2 == 1``, canonical rational form,
printing that round-trips through :func:`pseudosurf.parser.parse_expr`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import sympy as sp
from sympy.polys import polyconfig
from sympy.polys.polyerrors import HeuristicGCDFailed
from sympy.core.function import AppliedUndef
from sympy.printing.str import StrPrinter

Expr = sp.Expr

_JET_RE = re.compile(r"^z(?:_([xt]+))?$")

#: abstract function names understood by the parser without declaration
ABSTRACT_FUNCTIONS = frozenset(
    {
        "phi", "varphi", "psi", "chi", "rho", "ell", "alpha",
        "psi21", "psi22", "psi31", "psi32",
    }
)


@lru_cache(maxsize=None)
def symbol(name: str) -> sp.Symbol:
    """The unique real symbol used for ``name`` everywhere in the package."""
    return sp.Symbol(name, real=True)


@lru_cache(maxsize=None)
def function(name: str) -> sp.FunctionClass:
    return sp.Function(name, real=True)


Z = symbol("z")
DELTA = symbol("delta")


def jet_name(a: int, b: int) -> str:
    if a < 0 or b < 0:
        raise ValueError(f"negative derivative order ({a}, {b})")
    if a == 0 and b == 0:
        return "z"
    return "z_" + "x" * a + "t" * b


def jet(a: int, b: int = 0) -> sp.Symbol:
    """Jet coordinate for ``d^(a+b) z / dx^a dt^b``."""
    return symbol(jet_name(a, b))


def parse_jet_name(name: str) -> tuple[int, int] | None:
    """``'z_txx'`` -> ``(2, 1)``; ``None`` if ``name`` is not a jet coordinate."""
    m = _JET_RE.match(name)
    if m is None:
        return None
    letters = m.group(1) or ""
    return letters.count("x"), letters.count("t")


def jet_order(atom) -> tuple[int, int] | None:
    if isinstance(atom, sp.Symbol):
        return parse_jet_name(atom.name)
    return None


def is_jet(atom) -> bool:
    return jet_order(atom) is not None


Z_X = jet(1, 0)
Z_T = jet(0, 1)


def abstract(name: str, order: int = 0, arg: Expr = Z) -> Expr:
    """``name^(order)(arg)`` as a sympy expression."""
    app = function(name)(arg)
    if order == 0:
        return app
    if arg != Z:
        # chain rule is left to sympy; the derivative is taken in the argument
        u = sp.Dummy("u")
        return sp.Subs(sp.diff(function(name)(u), u, order), u, arg)
    return sp.Derivative(app, (Z, order))


@dataclass(frozen=True)
class VarRef:
    """Typed handle for a variable appearing in an expression."""

    kind: str  # "jet", "param" or "function"
    name: str
    order: tuple[int, int] | int = 0

    def __post_init__(self):
        if self.kind not in ("jet", "param", "function"):
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "jet" and min(self.order) < 0:
            raise ValueError("derivative orders must be non-negative")
        if self.kind == "function" and self.order < 0:
            raise ValueError("derivative orders must be non-negative")

    @property
    def atom(self) -> Expr:
        if self.kind == "jet":
            return jet(*self.order)
        if self.kind == "param":
            return symbol(self.name)
        return abstract(self.name, self.order)

    @classmethod
    def of(cls, atom) -> "VarRef":
        if isinstance(atom, VarRef):
            return atom
        if isinstance(atom, str):
            atom = symbol(atom)
        if isinstance(atom, sp.Symbol):
            order = parse_jet_name(atom.name)
            if order is not None:
                return cls("jet", jet_name(*order), order)
            return cls("param", atom.name)
        if isinstance(atom, AppliedUndef):
            return cls("function", atom.func.__name__, 0)
        if isinstance(atom, sp.Derivative) and isinstance(atom.expr, AppliedUndef):
            return cls("function", atom.expr.func.__name__, derivative_count(atom))
        raise TypeError(f"not a variable: {atom!r}")

    def __str__(self):
        if self.kind == "function":
            return self.name + "'" * self.order
        return self.name


def derivative_count(d: sp.Derivative) -> int:
    return sum(count for _, count in d.variable_count)


def as_atom(v) -> Expr:
    """Accept a VarRef, a name, or a sympy atom and return the sympy atom."""
    if isinstance(v, VarRef):
        return v.atom
    if isinstance(v, str):
        return symbol(v)
    return v


def diff(e: Expr, v) -> Expr:
    """Exact partial derivative; distinct jet coordinates are independent."""
    return sp.diff(sp.sympify(e), as_atom(v))


def free_jets(e: Expr) -> set[sp.Symbol]:
    return {s for s in sp.sympify(e).free_symbols if is_jet(s)}


def free_params(e: Expr) -> set[sp.Symbol]:
    return {s for s in sp.sympify(e).free_symbols if not is_jet(s)}


def abstract_atoms(e: Expr) -> set[Expr]:
    """Abstract function applications and their derivatives occurring in ``e``."""
    e = sp.sympify(e)
    found = set(e.atoms(AppliedUndef))
    found |= {d for d in e.atoms(sp.Derivative) if isinstance(d.expr, AppliedUndef)}
    return found


def abstract_names(e: Expr) -> set[str]:
    return {a.func.__name__ for a in sp.sympify(e).atoms(AppliedUndef)}


def total_order(e: Expr) -> int:
    orders = [sum(jet_order(s)) for s in free_jets(e)]
    return max(orders, default=0)


def substitute(e: Expr, values: Mapping) -> Expr:
    """Substitute parameters (by name or atom) with numbers or expressions."""
    mapping = {as_atom(k): sp.sympify(v) for k, v in values.items()}
    return sp.sympify(e).subs(mapping)


def instantiate_functions(e: Expr, choices: Mapping[str, Expr]) -> Expr:
    """Replace abstract functions by concrete expressions in ``z``.

    Derivatives such as ``rho'(z)`` are carried out on the replacement.
    """
    e = sp.sympify(e)
    if not choices:
        return e
    for name, body in choices.items():
        body = sp.sympify(body)
        e = e.subs(function(name), sp.Lambda(Z, body))
    return e.doit()


# ---------------------------------------------------------------------------
# normalization


def _is_radical(e) -> bool:
    return isinstance(e, sp.Pow) and not e.exp.is_Integer


def is_rational(e: Expr) -> bool:
    """True when ``e`` is a rational function of symbols and abstract atoms.

    Such expressions are compared exactly by :func:`normalize`; anything with
    radicals, ``abs`` or transcendental functions needs numeric sampling.
    """
    e = sp.sympify(e)
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Derivative) and isinstance(node.expr, AppliedUndef):
            continue
        if isinstance(node, AppliedUndef):
            continue
        if isinstance(node, sp.Function) or _is_radical(node):
            return False
        if isinstance(node, (sp.Subs, sp.Integral)):
            return False
    return True


def _reduce_delta_powers(e: Expr) -> Expr:
    return e.replace(
        lambda x: isinstance(x, sp.Pow) and x.base == DELTA and x.exp.is_Integer,
        lambda x: DELTA ** (int(x.exp) % 2),
    )


def _normalize_atoms(e: Expr) -> Expr:
    """Normalize the arguments of radicals and functions, bottom-up."""
    if e.is_Atom:
        return e
    if isinstance(e, AppliedUndef):
        return e.func(*[normalize(a) for a in e.args])
    if isinstance(e, sp.Derivative):
        return e
    if _is_radical(e):
        return sp.Pow(normalize(e.base), e.exp)
    if isinstance(e, sp.Function):
        return e.func(*[normalize(a) for a in e.args])
    return e.func(*[_normalize_atoms(a) for a in e.args])


def _cancel(e: Expr) -> Expr:
    try:
        return sp.cancel(e)
    except HeuristicGCDFailed:
        pass
    # the sparse heuristic gcd can fail with radical generators; retry densely
    num, den = sp.fraction(sp.together(e))
    (P, Q), _ = sp.parallel_poly_from_expr((sp.expand(num), sp.expand(den)))
    polyconfig.setup("USE_HEU_GCD", False)
    try:
        c, p, q = P.cancel(Q, include=False)
    finally:
        polyconfig.setup("USE_HEU_GCD", True)
    return c * p.as_expr() / q.as_expr()


def normalize(e: Expr) -> Expr:
    """Canonical rational form with ``delta**2 -> 1``.

    Numerator and denominator are expanded, common factors cancelled and the
    sign parameter is removed from the denominator.  Radicals, ``abs`` and
    transcendental subterms are treated as opaque generators (their arguments
    are normalized recursively).  ``normalize(a - b) == 0`` decides equality
    of rational expressions exactly.
    """
    e = sp.sympify(e)
    if e.is_Number:
        return e
    e = _normalize_atoms(e)
    e = _reduce_delta_powers(e)
    e = _cancel(e)
    if DELTA not in e.free_symbols:
        return e
    for _ in range(4):
        num, den = sp.fraction(e)
        num = _reduce_delta_powers(sp.expand(num))
        den = _reduce_delta_powers(sp.expand(den))
        c1 = den.coeff(DELTA, 1)
        if c1 == 0:
            e = _cancel(num / den)
            break
        c0 = sp.expand(den - c1 * DELTA)
        rest = sp.expand(c0**2 - c1**2)
        if rest == 0:
            e = _cancel(num / den)
            break
        num = _reduce_delta_powers(sp.expand(num * (c0 - c1 * DELTA)))
        e = _cancel(num / rest)
    num, den = sp.fraction(e)
    num = _reduce_delta_powers(sp.expand(num))
    return _cancel(num / den) if den != 1 else num


def equal_rational(a: Expr, b: Expr) -> bool:
    return normalize(sp.sympify(a) - sp.sympify(b)) == 0


# ---------------------------------------------------------------------------
# printing


class _GrammarPrinter(StrPrinter):
    def _print_Derivative(self, expr):
        if isinstance(expr.expr, AppliedUndef) and expr.variables == (Z,) * len(expr.variables):
            f = expr.expr
            args = ", ".join(self._print(a) for a in f.args)
            return f"{f.func.__name__}{chr(39) * derivative_count(expr)}({args})"
        return super()._print_Derivative(expr)

    def _print_log(self, expr):
        return f"ln({self._print(expr.args[0])})"

    def _print_Abs(self, expr):
        return f"abs({self._print(expr.args[0])})"

    def _print_Float(self, expr):
        return repr(float(expr))


_printer = _GrammarPrinter({"order": "lex"})


def to_text(e: Expr) -> str:
    """Render ``e`` in the package grammar (``^`` for powers, ``rho'(z)``)."""
    return _printer.doprint(sp.sympify(e)).replace("**", "^")
