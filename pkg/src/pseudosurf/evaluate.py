"""Numeric evaluation of symbolic expressions with domain checking.

An expression is compiled once into a tree of numpy closures.  Every
closure works on arrays of sample points, so the same compiled object
serves single-point evaluation (:func:`eval_at`), the admissible-point
sampler and the grid computations of the numeric lab.

Two failure modes are supported: ``strict`` raises on the first
inadmissible point, ``mask`` returns NaN there and reports a boolean mask.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef

from .errors import DomainError, SingularPoint, UnboundVariable, UninstantiatedFunction
from .expr import VarRef, as_atom, is_jet

#: denominators closer to zero than this make a point singular
DEN_TOL = 1e-8

Binding = Mapping


class _State:
    __slots__ = ("bad", "strict", "den_tol", "n")

    def __init__(self, n, strict, den_tol):
        self.n = n
        self.strict = strict
        self.den_tol = den_tol
        self.bad = np.zeros(n, dtype=bool)

    def flag(self, bad, exc, message):
        bad = np.broadcast_to(bad, (self.n,))
        if bad.any():
            if self.strict:
                raise exc(message)
            self.bad |= bad


def _safe(x, bad, fill=1.0):
    if np.ndim(x) == 0:
        return fill if bool(np.any(bad)) else x
    return np.where(bad, fill, x)


def _binding_key(k):
    if isinstance(k, str):
        from .parser import parse_expr

        return parse_expr(k)
    if isinstance(k, VarRef):
        return k.atom
    return as_atom(k)


def normalize_binding(values: Mapping) -> dict:
    return {_binding_key(k): v for k, v in values.items()}


_UNARY = {
    sp.sin: np.sin,
    sp.cos: np.cos,
    sp.exp: np.exp,
    sp.Abs: np.abs,
    sp.sign: np.sign,
    sp.atan: np.arctan,
    sp.sinh: np.sinh,
    sp.cosh: np.cosh,
    sp.tanh: np.tanh,
}


class CompiledExpr:
    """Vectorized evaluator for one expression."""

    def __init__(self, expr):
        self.expr = sp.sympify(expr)
        self._fn = self._build(self.expr)
        self.variables = _variables(self.expr)

    def __call__(self, binding: Mapping, *, strict: bool = True, den_tol: float = DEN_TOL):
        """Evaluate at the points in ``binding``.

        Returns the value array in strict mode and ``(value, ok_mask)`` in
        mask mode.
        """
        env = binding
        n = _batch_size(env)
        state = _State(n, strict, den_tol)
        value = np.broadcast_to(np.asarray(self._fn(env, state), dtype=float), (n,)).copy()
        if strict:
            return value
        ok = ~state.bad & np.isfinite(value)
        value[~ok] = np.nan
        return value, ok

    # -- construction -----------------------------------------------------

    def _build(self, e) -> Callable:
        if e.is_Number or e.is_NumberSymbol:
            if e in (sp.zoo, sp.oo, -sp.oo, sp.nan):
                raise SingularPoint(f"expression contains {e}")
            c = float(e)
            return lambda env, st: c
        if isinstance(e, sp.Symbol) or _is_abstract(e):
            return self._lookup(e)
        if isinstance(e, sp.Add):
            parts = [self._build(a) for a in e.args]
            return lambda env, st: sum(p(env, st) for p in parts)
        if isinstance(e, sp.Mul):
            parts = [self._build(a) for a in e.args]

            def mul(env, st):
                out = 1.0
                for p in parts:
                    out = out * p(env, st)
                return out

            return mul
        if isinstance(e, sp.Pow):
            return self._build_pow(e)
        if isinstance(e, sp.log):
            arg = self._build(e.args[0])

            def log(env, st):
                a = arg(env, st)
                bad = np.logical_not(a > 0)
                st.flag(bad, DomainError, f"ln of non-positive argument in {e}")
                return np.log(_safe(a, bad))

            return log
        if isinstance(e, sp.tan):
            arg = self._build(e.args[0])

            def tan(env, st):
                a = arg(env, st)
                c = np.cos(a)
                bad = np.abs(c) <= st.den_tol
                st.flag(bad, SingularPoint, f"tan pole in {e}")
                return np.sin(a) / _safe(c, bad)

            return tan
        if isinstance(e, sp.sech):
            arg = self._build(e.args[0])
            return lambda env, st: 1.0 / np.cosh(arg(env, st))
        if e.func in _UNARY:
            f = _UNARY[e.func]
            arg = self._build(e.args[0])
            return lambda env, st: f(arg(env, st))
        raise NotImplementedError(f"cannot evaluate {type(e).__name__}: {e}")

    def _lookup(self, atom):
        abstract = _is_abstract(atom)

        def lookup(env, st):
            try:
                return env[atom]
            except KeyError:
                if abstract:
                    raise UninstantiatedFunction(
                        f"abstract function {atom} must be instantiated before evaluation"
                    ) from None
                raise UnboundVariable(f"no value bound for {atom}") from None

        return lookup

    def _build_pow(self, e):
        base = self._build(e.base)
        exp = e.exp
        if exp.is_Integer:
            k = int(exp)
            if k >= 0:
                return lambda env, st: base(env, st) ** k

            def inv(env, st):
                b = base(env, st)
                bad = np.logical_not(np.abs(b) > st.den_tol)
                st.flag(bad, SingularPoint, f"vanishing denominator {e.base}")
                return _safe(b, bad) ** float(k)

            return inv
        if exp.is_Rational:
            r = float(exp)

            def root(env, st):
                b = base(env, st)
                bad = np.logical_not(b >= 0)
                st.flag(bad, DomainError, f"negative radicand {e.base}")
                if r < 0:
                    small = ~bad & np.logical_not(b > st.den_tol)
                    st.flag(small, SingularPoint, f"vanishing denominator {e.base}")
                    bad = bad | small
                return _safe(b, bad) ** r

            return root
        power = self._build(exp)

        def general(env, st):
            b = base(env, st)
            bad = np.logical_not(b > 0)
            st.flag(bad, DomainError, f"real power of non-positive base {e.base}")
            return np.exp(power(env, st) * np.log(_safe(b, bad)))

        return general


def _is_abstract(e) -> bool:
    return isinstance(e, AppliedUndef) or (
        isinstance(e, sp.Derivative) and isinstance(e.expr, AppliedUndef)
    )


def _variables(e):
    out = set(e.free_symbols)
    for node in sp.preorder_traversal(e):
        if _is_abstract(node):
            out.add(node)
    # symbols inside an abstract application are not independent inputs
    return out


def _batch_size(env) -> int:
    n = 1
    for v in env.values():
        size = np.size(v)
        if size != 1:
            if n not in (1, size):
                raise ValueError("binding arrays have inconsistent lengths")
            n = size
    return n


_cache: dict = {}


def compile_expr(e) -> CompiledExpr:
    """Compile (and memoize) an expression."""
    e = sp.sympify(e)
    c = _cache.get(e)
    if c is None:
        if len(_cache) > 20000:
            _cache.clear()
        c = _cache[e] = CompiledExpr(e)
    return c


def eval_at(e, binding: Mapping, *, digits: int | None = None, den_tol: float = DEN_TOL) -> float:
    """Evaluate ``e`` at one point.

    ``binding`` maps names, :class:`~pseudosurf.expr.VarRef` or sympy atoms
    to numbers.  With ``digits`` the value is recomputed in arbitrary
    precision after the double-precision domain checks have passed.
    """
    env = normalize_binding(binding)
    e = sp.sympify(e)
    value = float(compile_expr(e)(env, strict=True, den_tol=den_tol)[0])
    if digits is None:
        return value
    return sp.N(e.subs({k: sp.Rational(str(v)) if isinstance(v, float) else v for k, v in env.items()}), digits)


def eval_many(exprs, binding: Mapping, *, den_tol: float = DEN_TOL):
    """Evaluate several expressions in mask mode; returns (values, ok)."""
    env = normalize_binding(binding)
    n = _batch_size(env)
    ok = np.ones(n, dtype=bool)
    values = []
    for e in exprs:
        v, m = compile_expr(e)(env, strict=False, den_tol=den_tol)
        values.append(v)
        ok &= m
    return values, ok


def jet_symbols_of(exprs) -> set:
    out = set()
    for e in exprs:
        out |= {s for s in sp.sympify(e).free_symbols if is_jet(s)}
    return out
