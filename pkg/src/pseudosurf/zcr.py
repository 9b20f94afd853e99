"""1-forms, structure equations and the associated linear problems.

A sextet ``f_ij`` defines ``omega_i = f_i1 dx + f_i2 dt``.  With the
orientation ``dx ^ dt`` the structure equations

    d omega_1 = omega_3 ^ omega_2
    d omega_2 = omega_1 ^ omega_3
    d omega_3 = delta omega_1 ^ omega_2

have the coefficients (``D`` = total derivative)::

    r1 = D_x f12 - D_t f11 + f32 f21 - f31 f22
    r2 = D_x f22 - D_t f21 + f31 f12 - f32 f11
    r3 = D_x f32 - D_t f31 + delta (f21 f12 - f22 f11)

For sine-Gordon this gives ``r3 = sin(z) - z_xt``.  With ``Z = D_t X - D_x T
+ [X, T]`` the 2x2 problems satisfy

    sl(2,R):  Z = -1/2 [[r2, r1 - r3], [r1 + r3, -r2]]
    su(2):    Z = -1/2 [[i r2, r1 + i r3], [-r1 + i r3, -i r2]]

and the 3x3 problem ``Z = -[[0, r1, r2], [delta r1, 0, r3], [delta r2, -r3, 0]]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np
import sympy as sp

from .errors import KindMismatch, SingularPoint
from .evaluate import compile_expr, normalize_binding
from .expr import DELTA, Z, abstract_atoms, instantiate_functions, substitute, to_text
from .jet import EvolutionRelation, total_dt, total_dx
from .sampling import Assumption

NAMES = ("f11", "f12", "f21", "f22", "f31", "f32")


def close_derivatives(e, rules: Mapping[str, sp.Expr]):
    """Rewrite derivatives of ODE-defined functions using ``f' = rules[f]``."""
    if not rules:
        return e
    e = sp.sympify(e)
    for _ in range(32):
        targets = [
            d
            for d in e.atoms(sp.Derivative)
            if isinstance(d.expr, sp.core.function.AppliedUndef) and d.expr.func.__name__ in rules
        ]
        if not targets:
            return e
        e = e.xreplace({d: _closed_derivative(d.expr.func.__name__, d, rules) for d in targets})
    raise RuntimeError("derivative closure did not terminate")


def _closed_derivative(name, d, rules):
    order = sum(c for _, c in d.variable_count)
    value = rules[name]
    for _ in range(order - 1):
        value = close_derivatives(sp.diff(value, Z), rules)
    return value


@dataclass
class FijSextet:
    """The six coefficients of ``omega_1, omega_2, omega_3`` plus ``delta``.

    ``delta`` is +1 (pss) or -1 (ss); ``None`` keeps the symbol ``delta``.
    ``rules`` maps an abstract function name to an expression for its first
    derivative (functions defined by an ODE system); such functions are then
    treated as free values at each sample point.
    """

    f11: sp.Expr
    f12: sp.Expr
    f21: sp.Expr
    f22: sp.Expr
    f31: sp.Expr
    f32: sp.Expr
    delta: int | None = 1
    assumptions: tuple[Assumption, ...] = ()
    rules: dict = field(default_factory=dict)
    functions: tuple[str, ...] = ()

    def __post_init__(self):
        for name in NAMES:
            setattr(self, name, sp.sympify(getattr(self, name)))
        if self.delta not in (1, -1, None):
            raise ValueError("delta must be +1 or -1")
        self.assumptions = tuple(self.assumptions)
        self.rules = {k: sp.sympify(v) for k, v in self.rules.items()}

    # -- access ------------------------------------------------------------

    @property
    def entries(self) -> tuple:
        return tuple(getattr(self, n) for n in NAMES)

    def __getitem__(self, name):
        return getattr(self, name)

    @property
    def delta_expr(self):
        return DELTA if self.delta is None else sp.Integer(self.delta)

    def close(self, e):
        e = close_derivatives(e, self.rules)
        if self.delta is not None:
            e = e.subs(DELTA, self.delta)
        return e

    def map(self, fn) -> "FijSextet":
        return replace(self, **{n: fn(getattr(self, n)) for n in NAMES})

    def subs(self, values: Mapping) -> "FijSextet":
        out = self.map(lambda e: substitute(e, values))
        out.assumptions = tuple(Assumption(substitute(a.expr, values), a.nonzero_only) for a in self.assumptions)
        out.rules = {k: substitute(v, values) for k, v in self.rules.items()}
        return out

    def with_delta(self, delta: int) -> "FijSextet":
        out = self.subs({DELTA: delta})
        out.delta = delta
        return out

    def instantiate(self, choices: Mapping[str, sp.Expr]) -> "FijSextet":
        out = self.map(lambda e: instantiate_functions(e, choices))
        out.assumptions = tuple(
            Assumption(instantiate_functions(a.expr, choices), a.nonzero_only) for a in self.assumptions
        )
        out.rules = {k: instantiate_functions(v, choices) for k, v in self.rules.items() if k not in choices}
        return out

    def perturbed(self, name: str, eps) -> "FijSextet":
        return replace(self, **{name: getattr(self, name) + eps})

    def abstract_atoms(self) -> set:
        out = set()
        for e in self.entries:
            out |= abstract_atoms(e)
        return out

    def __repr__(self):
        body = ", ".join(f"{n}={to_text(getattr(self, n))}" for n in NAMES)
        return f"FijSextet({body}, delta={self.delta})"

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        out = {"delta": self.delta}
        out.update({n: to_text(getattr(self, n)) for n in NAMES})
        out["assumptions"] = [str(a) for a in self.assumptions]
        if self.rules:
            out["rules"] = {k: to_text(v) for k, v in self.rules.items()}
        if self.functions:
            out["functions"] = list(self.functions)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "FijSextet":
        from .parser import parse_expr

        functions = tuple(data.get("functions", ()))
        delta = data.get("delta", 1)
        return cls(
            *(parse_expr(str(data[n]), functions) for n in NAMES),
            delta=None if delta in (None, "delta") else int(delta),
            assumptions=tuple(Assumption.parse(a, functions) for a in data.get("assumptions", ())),
            rules={k: parse_expr(str(v), functions) for k, v in data.get("rules", {}).items()},
            functions=functions,
        )


def load_sextet(path) -> tuple[FijSextet, EvolutionRelation | None]:
    """Read a sextet file; returns the sextet and its optional relation."""
    data = json.loads(Path(path).read_text())
    return sextet_from_document(data)


def sextet_from_document(data: Mapping) -> tuple[FijSextet, EvolutionRelation | None]:
    f = FijSextet.from_dict(data)
    rel = None
    if data.get("relation"):
        r = data["relation"]
        rel = EvolutionRelation.parse(r["solved"], r["rhs"], functions=f.functions)
        if f.delta is not None:
            rel = EvolutionRelation(rel.solved, rel.rhs.subs(DELTA, f.delta), rel.max_order)
    return f, rel


def sextet_document(f: FijSextet, rel: EvolutionRelation | None = None) -> dict:
    out = f.to_dict()
    if rel is not None:
        out["relation"] = rel.to_dict()
    return out


# ---------------------------------------------------------------------------
# structure equations


@dataclass(frozen=True)
class StructureResidual:
    r1: sp.Expr
    r2: sp.Expr
    r3: sp.Expr

    def __iter__(self):
        return iter((self.r1, self.r2, self.r3))

    def reduce(self, rel: EvolutionRelation | None, close=lambda e: e) -> "StructureResidual":
        if rel is None:
            return StructureResidual(*(close(r) for r in self))
        return StructureResidual(*(close(rel.reduce(close(r))) for r in self))


def wedge(a1, a2, b1, b2):
    """dx^dt coefficient of (a1 dx + a2 dt) ^ (b1 dx + b2 dt)."""
    return a1 * b2 - a2 * b1


def exterior(c1, c2):
    """dx^dt coefficient of d(c1 dx + c2 dt)."""
    return total_dx(c2) - total_dt(c1)


def structure_residuals(f: FijSextet) -> StructureResidual:
    """Off-shell coefficients of the three structure equations."""
    d = f.delta_expr
    r1 = exterior(f.f11, f.f12) - wedge(f.f31, f.f32, f.f21, f.f22)
    r2 = exterior(f.f21, f.f22) - wedge(f.f11, f.f12, f.f31, f.f32)
    r3 = exterior(f.f31, f.f32) - d * wedge(f.f11, f.f12, f.f21, f.f22)
    return StructureResidual(*(f.close(r) for r in (r1, r2, r3)))


# ---------------------------------------------------------------------------
# linear problems

KINDS = ("sl2", "su2", "hat3x3")


@dataclass
class MatrixProblem:
    """``Omega = X dx + T dt``; su(2) entries are stored as real 4x4 blocks."""

    kind: str
    X: sp.Matrix
    T: sp.Matrix
    sextet: FijSextet

    @property
    def size(self) -> int:
        return 3 if self.kind == "hat3x3" else 2

    @property
    def algebra(self) -> str:
        return {"sl2": "sl(2,R)", "su2": "su(2)", "hat3x3": "so(3)" if self.sextet.delta == -1 else "so(2,1)"}[self.kind]


def _realify(P: sp.Matrix, Q: sp.Matrix) -> sp.Matrix:
    """Real form of the complex matrix P + iQ."""
    return sp.Matrix(sp.BlockMatrix([[P, -Q], [Q, P]]))


def _omega_matrices(kind, a1, a2, a3, delta):
    """Coefficient matrix of a single direction given omega coefficients."""
    half = sp.Rational(1, 2)
    if kind == "sl2":
        return half * sp.Matrix([[a2, a1 - a3], [a1 + a3, -a2]])
    if kind == "su2":
        P = half * sp.Matrix([[0, a1], [-a1, 0]])
        Q = half * sp.Matrix([[a2, a3], [a3, -a2]])
        return _realify(P, Q)
    return sp.Matrix([[0, a1, a2], [delta * a1, 0, a3], [delta * a2, -a3, 0]])


def build_matrix_problem(f: FijSextet, kind: str) -> MatrixProblem:
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if kind == "sl2" and f.delta != 1:
        raise KindMismatch("sl(2,R) problem requires delta = +1")
    if kind == "su2" and f.delta != -1:
        raise KindMismatch("su(2) problem requires delta = -1")
    d = f.delta_expr
    X = _omega_matrices(kind, f.f11, f.f21, f.f31, d)
    T = _omega_matrices(kind, f.f12, f.f22, f.f32, d)
    return MatrixProblem(kind, X, T, f)


def default_kind(f: FijSextet) -> str:
    return "sl2" if f.delta == 1 else "su2"


def zcr_matrix(p: MatrixProblem) -> sp.Matrix:
    """Off-shell ``D_t X - D_x T + [X, T]``."""
    X, T = p.X, p.T
    Z_ = X.applyfunc(total_dt) - T.applyfunc(total_dx) + X * T - T * X
    return Z_.applyfunc(p.sextet.close)


def zcr_residual(p: MatrixProblem, rel: EvolutionRelation | None) -> sp.Matrix:
    """``D_t X - D_x T + [X, T]`` reduced modulo ``rel``."""
    Z_ = zcr_matrix(p)
    if rel is None:
        return Z_
    return Z_.applyfunc(lambda e: p.sextet.close(rel.reduce(e)))


def residual_combination(kind: str, r: StructureResidual, delta=1) -> sp.Matrix:
    """The documented linear combination of (r1, r2, r3) equal to the ZCR residual."""
    r1, r2, r3 = r
    half = sp.Rational(1, 2)
    if kind == "sl2":
        return -half * sp.Matrix([[r2, r1 - r3], [r1 + r3, -r2]])
    if kind == "su2":
        P = -half * sp.Matrix([[0, r1], [-r1, 0]])
        Q = -half * sp.Matrix([[r2, r3], [r3, -r2]])
        return _realify(P, Q)
    return -sp.Matrix([[0, r1, r2], [delta * r1, 0, r3], [delta * r2, -r3, 0]])


# ---------------------------------------------------------------------------
# nondegeneracy


@dataclass
class NondegeneracyReport:
    values: np.ndarray
    singular: int
    degenerate: bool
    threshold: float

    def to_dict(self) -> dict:
        finite = self.values[np.isfinite(self.values)]
        return {
            "points": int(self.values.size),
            "singular_skipped": self.singular,
            "degenerate": self.degenerate,
            "min_abs": float(np.min(np.abs(finite))) if finite.size else None,
            "max_abs": float(np.max(np.abs(finite))) if finite.size else None,
        }


def metric_determinant(f: FijSextet) -> sp.Expr:
    """``f11 f22 - f12 f21``, the coefficient of omega_1 ^ omega_2."""
    return f.close(f.f11 * f.f22 - f.f12 * f.f21)


def check_nondegeneracy(f: FijSextet, points: Mapping, threshold: float = 1e-10) -> NondegeneracyReport:
    """Evaluate ``f11 f22 - f12 f21`` at ``points``; degenerate if all |w| < threshold."""
    env = normalize_binding(points)
    w, ok = compile_expr(metric_determinant(f))(env, strict=False)
    values = np.where(ok, w, np.nan)
    good = values[ok]
    degenerate = bool(good.size == 0 or np.all(np.abs(good) < threshold))
    return NondegeneracyReport(values, int((~ok).sum()), degenerate, threshold)


# ---------------------------------------------------------------------------
# transport around a grid cell


def _rk4_leg(mats: list[np.ndarray], V: np.ndarray, h: float) -> np.ndarray:
    """Integrate dV/ds = M(s) V across nodes ``mats`` spaced by ``h``.

    Midpoint values are the averages of neighbouring nodes.
    """
    for M0, M1 in zip(mats[:-1], mats[1:]):
        Mm = 0.5 * (M0 + M1)
        k1 = M0 @ V
        k2 = Mm @ (V + 0.5 * h * k1)
        k3 = Mm @ (V + 0.5 * h * k2)
        k4 = M1 @ (V + h * k3)
        V = V + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return V


def _matrix_field(M: sp.Matrix, env) -> np.ndarray:
    rows, cols = M.shape
    n = len(next(iter(env.values())))
    out = np.empty((n, rows, cols))
    for i in range(rows):
        for j in range(cols):
            try:
                out[:, i, j] = compile_expr(M[i, j])(env, strict=True)
            except SingularPoint as exc:
                raise SingularPoint(f"linear problem singular on the transport cell: {exc}") from None
    return out


def transport_check(p: MatrixProblem, grid, base: tuple[int, int], side: float) -> float:
    """Transport the identity around a square cell in both orders.

    Starting at grid node ``base = (it, ix)``, the fundamental matrix is
    carried along x then t and along t then x over a square of physical
    side ``side`` by RK4 with the grid step; returns the Frobenius norm of
    the difference of the two end values.
    """
    it, ix = base
    kx = int(round(side / grid.hx))
    kt = int(round(side / grid.ht))
    if it + kt >= grid.nt or ix + kx >= grid.nx:
        raise ValueError("transport cell does not fit in the grid")
    fields = grid.jet_fields()
    params = normalize_binding(grid.params)

    def along(rows, cols, M):
        env = {k: v[rows, cols] for k, v in fields.items()}
        for k, v in params.items():
            env[k] = np.full(len(env[next(iter(fields))]), float(v))
        return list(_matrix_field(M, env))

    xs = np.arange(ix, ix + kx + 1)
    ts = np.arange(it, it + kt + 1)
    size = p.X.shape[0]
    V0 = np.eye(size)
    bottom = along(np.full_like(xs, it), xs, p.X)
    right = along(ts, np.full_like(ts, ix + kx), p.T)
    left = along(ts, np.full_like(ts, ix), p.T)
    top = along(np.full_like(xs, it + kt), xs, p.X)
    v_xt = _rk4_leg(right, _rk4_leg(bottom, V0, grid.hx), grid.ht)
    v_tx = _rk4_leg(top, _rk4_leg(left, V0, grid.ht), grid.hx)
    return float(np.linalg.norm(v_xt - v_tx))
