"""Admissible random points for sampling-based identity checks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import sympy as sp

from .errors import SamplingError
from .evaluate import compile_expr, normalize_binding
from .expr import abstract_atoms, is_jet

#: magnitude below which a denominator disqualifies a sample point
SAMPLE_DEN_TOL = 1e-3

_REL_RE = re.compile(r"^(.*?)(>=|<=|!=|>|<)(.*)$")


@dataclass(frozen=True)
class Assumption:
    """``expr > 0`` (``strict``) or ``expr != 0`` on the working domain."""

    expr: sp.Expr
    nonzero_only: bool = False

    @classmethod
    def parse(cls, text: str, functions: Iterable[str] = ()) -> "Assumption":
        from .parser import parse_expr

        m = _REL_RE.match(text)
        if m is None:
            raise ValueError(f"assumption needs a relation (>, <, !=): {text!r}")
        lhs, op, rhs = m.groups()
        diff = parse_expr(lhs, functions) - parse_expr(rhs, functions)
        if op in (">", ">="):
            return cls(diff)
        if op in ("<", "<="):
            return cls(-diff)
        return cls(diff, nonzero_only=True)

    def holds(self, values: np.ndarray) -> np.ndarray:
        if self.nonzero_only:
            return np.abs(values) > SAMPLE_DEN_TOL
        return values > 0

    def __str__(self):
        from .expr import to_text

        return f"{to_text(self.expr)} {'!=' if self.nonzero_only else '>'} 0"


@dataclass
class PointSampler:
    """Uniform sampler that rejects inadmissible points.

    Free variables (jet coordinates, unbound parameters and unbound abstract
    function values) are drawn uniformly from ``ranges.get(name, (low, high))``.
    A candidate is kept when every watched expression evaluates without
    domain errors, every denominator exceeds ``den_tol`` in magnitude and
    every assumption holds.
    """

    low: float = -2.0
    high: float = 2.0
    den_tol: float = SAMPLE_DEN_TOL
    max_attempts: int = 1000
    ranges: dict = field(default_factory=dict)

    def sample(
        self,
        exprs: Iterable,
        n: int,
        rng: np.random.Generator,
        fixed: Mapping | None = None,
        assumptions: Iterable[Assumption] = (),
        extra_variables: Iterable = (),
    ) -> dict:
        exprs = [sp.sympify(e) for e in exprs]
        assumptions = list(assumptions)
        fixed = normalize_binding(fixed or {})
        watched = exprs + [a.expr for a in assumptions]
        free = set(extra_variables)
        for e in watched:
            free |= {s for s in e.free_symbols}
            free |= abstract_atoms(e)
        free = sorted(free - set(fixed), key=_sort_key)
        compiled = [compile_expr(e) for e in exprs]
        compiled_assumptions = [(a, compile_expr(a.expr)) for a in assumptions]

        kept: dict = {v: [] for v in free}
        have = 0
        tried = 0
        batch = max(8 * n, 64)
        cap = self.max_attempts * n
        while have < n:
            if tried >= cap:
                raise SamplingError(
                    f"found only {have} of {n} admissible points after {tried} candidates"
                )
            env = dict(fixed)
            for v in free:
                lo, hi = self.ranges.get(_sort_key(v), (self.low, self.high))
                env[v] = rng.uniform(lo, hi, batch)
            if not free:
                env["__n__"] = np.zeros(batch)
            ok = np.ones(batch, dtype=bool)
            for c in compiled:
                _, m = c(env, strict=False, den_tol=self.den_tol)
                ok &= m
            for a, c in compiled_assumptions:
                val, m = c(env, strict=False, den_tol=self.den_tol)
                ok &= m & a.holds(np.nan_to_num(val, nan=-1.0 if not a.nonzero_only else 0.0))
            tried += batch
            idx = np.flatnonzero(ok)[: n - have]
            for v in free:
                kept[v].append(env[v][idx])
            have += len(idx)
        points = {v: np.concatenate(kept[v]) for v in free}
        for k, val in fixed.items():
            points[k] = np.full(n, float(val)) if np.ndim(val) == 0 else np.asarray(val)
        return points


def _sort_key(atom) -> str:
    return str(atom)


def sample_points(exprs, n, seed=0, **kwargs) -> dict:
    """Convenience wrapper: ``PointSampler().sample`` with a seeded generator."""
    sampler_kwargs = {k: kwargs.pop(k) for k in ("low", "high", "den_tol", "max_attempts", "ranges") if k in kwargs}
    return PointSampler(**sampler_kwargs).sample(exprs, n, np.random.default_rng(seed), **kwargs)


def jet_variables(points: Mapping) -> list:
    return [k for k in points if isinstance(k, sp.Symbol) and is_jet(k)]


def intermediate_terms(e) -> list:
    """Every additive term occurring anywhere in ``e`` (for scale-aware tolerances)."""
    e = sp.sympify(e)
    out = []
    seen = set()
    for node in sp.preorder_traversal(e):
        if isinstance(node, sp.Add):
            for a in node.args:
                if a not in seen and not a.is_Number:
                    seen.add(a)
                    out.append(a)
    return out or [e]


def scaled_residual(e, env, den_tol=SAMPLE_DEN_TOL):
    """``|e| / (1 + max |intermediate term|)`` at each point, plus the raw values."""
    value, ok = compile_expr(e)(env, strict=False, den_tol=den_tol)
    scale = np.zeros_like(value)
    for t in intermediate_terms(e):
        v, m = compile_expr(t)(env, strict=False, den_tol=den_tol)
        scale = np.maximum(scale, np.where(m, np.abs(v), 0.0))
    return np.abs(value) / (1.0 + scale), value, ok


def identically_zero(
    e,
    *,
    n: int = 64,
    seed: int = 0,
    tol: float = 1e-9,
    fixed: Mapping | None = None,
    assumptions: Iterable[Assumption] = (),
    watch: Iterable = (),
) -> bool:
    """Decide ``e == 0`` on the working domain.

    Rational expressions are decided exactly by normalization; otherwise
    ``e`` is sampled at ``n`` admissible points and compared against
    ``tol`` relative to its largest intermediate term.
    """
    from .expr import is_rational, normalize

    e = sp.sympify(e)
    if fixed:
        e = e.subs(normalize_binding(fixed))
    ne = normalize(e)
    if ne == 0:
        return True
    if is_rational(ne):
        return False
    points = PointSampler().sample([e, *watch], n, np.random.default_rng(seed), assumptions=assumptions)
    rel, _, ok = scaled_residual(e, points)
    return bool(np.all(rel[ok] <= tol))
