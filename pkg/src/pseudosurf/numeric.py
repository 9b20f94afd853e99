"""Numerical solutions, induced metrics and curvature on grids.

Arrays are indexed ``[it, ix]``.  Jet fields are recomputed from ``z``
(and ``v = z_t`` when the grid comes from the solver) by finite
differences whenever they are requested.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
import sympy as sp

from .errors import BlowUp, EmptyMask, SingularCoefficient
from .evaluate import compile_expr, normalize_binding
from .expr import Z, Z_T, Z_X, jet, symbol
from .zcr import FijSextet

X_SYM = symbol("x")
T_SYM = symbol("t")


# ---------------------------------------------------------------------------
# finite differences

_D1 = {2: ([-1, 1], [-0.5, 0.5]), 4: ([-2, -1, 1, 2], [1 / 12, -2 / 3, 2 / 3, -1 / 12])}
_D2 = {2: ([-1, 0, 1], [1.0, -2.0, 1.0]), 4: ([-2, -1, 0, 1, 2], [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])}


def _stencil(a, h, axis, periodic, offsets, weights, power):
    if periodic:
        out = sum(w * np.roll(a, -k, axis=axis) for k, w in zip(offsets, weights))
        return out / h**power
    n = a.shape[axis]
    reach = max(abs(k) for k in offsets)
    out = np.full(a.shape, np.nan)
    core = [slice(None)] * a.ndim
    core[axis] = slice(reach, n - reach)
    acc = 0.0
    for k, w in zip(offsets, weights):
        sl = [slice(None)] * a.ndim
        sl[axis] = slice(reach + k, n - reach + k)
        acc = acc + w * a[tuple(sl)]
    out[tuple(core)] = acc / h**power
    return out


def _edges(a, h, axis, deriv, out, reach):
    """Second-order closures where the central stencil does not reach."""
    n = a.shape[axis]
    if n < 4:
        raise ValueError("need at least four points per axis for finite differences")
    bad = [*range(reach), *range(n - reach, n)]
    take = lambda i: np.take(a, i, axis=axis)
    for i in bad:
        if deriv == 1:
            if i == 0:
                val = (-3 * take(0) + 4 * take(1) - take(2)) / (2 * h)
            elif i == n - 1:
                val = (3 * take(n - 1) - 4 * take(n - 2) + take(n - 3)) / (2 * h)
            else:
                val = (take(i + 1) - take(i - 1)) / (2 * h)
        else:
            if i == 0:
                val = (2 * take(0) - 5 * take(1) + 4 * take(2) - take(3)) / h**2
            elif i == n - 1:
                val = (2 * take(n - 1) - 5 * take(n - 2) + 4 * take(n - 3) - take(n - 4)) / h**2
            else:
                val = (take(i + 1) - 2 * take(i) + take(i - 1)) / h**2
        idx = [slice(None)] * a.ndim
        idx[axis] = i
        out[tuple(idx)] = val
    return out


def fd(a: np.ndarray, h: float, axis: int, *, deriv: int = 1, order: int = 4, periodic: bool = False):
    """Central finite difference of ``a`` along ``axis``.

    Interior points use the centred stencil of the requested order;
    non-periodic edges fall back to second-order one-sided formulas.
    """
    a = np.asarray(a, dtype=float)
    table = _D1 if deriv == 1 else _D2
    if order not in table:
        raise ValueError(f"order must be 2 or 4, got {order}")
    offsets, weights = table[order]
    out = _stencil(a, h, axis, periodic, offsets, weights, deriv)
    if not periodic:
        out = _edges(a, h, axis, deriv, out, max(abs(k) for k in offsets))
    return out


# ---------------------------------------------------------------------------
# grids


@dataclass
class SolutionGrid:
    """Values of ``z`` (and optionally ``v = z_t``) on a uniform (t, x) grid."""

    x: np.ndarray
    t: np.ndarray
    z: np.ndarray
    v: np.ndarray | None = None
    bc: str = "periodic"
    params: dict = field(default_factory=dict)
    order: int = 4
    exact: dict | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.t = np.asarray(self.t, dtype=float)
        self.z = np.array(self.z, dtype=float)
        if self.z.shape != (self.t.size, self.x.size):
            raise ValueError(f"z has shape {self.z.shape}, expected {(self.t.size, self.x.size)}")
        if self.v is not None:
            self.v = np.array(self.v, dtype=float)
            if self.v.shape != self.z.shape:
                raise ValueError("v and z shapes differ")
        if self.bc not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        self.z.setflags(write=False)
        if self.v is not None:
            self.v.setflags(write=False)

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def nt(self) -> int:
        return self.t.size

    @property
    def hx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def ht(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    def dx(self, a, deriv=1, order=None):
        return fd(a, self.hx, 1, deriv=deriv, order=order or self.order, periodic=self.periodic)

    def dt(self, a, deriv=1, order=None):
        return fd(a, self.ht, 0, deriv=deriv, order=order or self.order, periodic=False)

    @cached_property
    def _fields(self) -> dict:
        if self.exact is not None:
            out = {k: np.array(v) for k, v in self.exact.items()}
        else:
            z = self.z
            zt = self.v if self.v is not None else self.dt(z)
            out = {
                Z: np.array(z),
                Z_X: self.dx(z),
                Z_T: np.array(zt),
                jet(2, 0): self.dx(z, 2),
                jet(1, 1): self.dx(zt),
                jet(0, 2): self.dt(zt),
            }
        for v in out.values():
            v.setflags(write=False)
        return out

    def jet_fields(self) -> dict:
        """Jet coordinate -> array; derivatives up to second order."""
        return self._fields

    def env(self) -> dict:
        """Jet fields plus broadcast parameter values, ready for evaluation."""
        out = dict(self.jet_fields())
        shape = self.z.shape
        for k, v in normalize_binding(self.params).items():
            out[k] = np.full(shape, float(v))
        return out

    @classmethod
    def from_expression(
        cls,
        expr,
        x_range,
        t_range,
        hx: float,
        ht: float | None = None,
        *,
        exact_jets: bool = False,
        params: Mapping | None = None,
        order: int = 4,
    ) -> "SolutionGrid":
        """Sample a closed-form ``z(x, t)`` on a grid (ranges inclusive).

        With ``exact_jets`` the jet fields come from symbolic
        differentiation instead of finite differences.
        """
        from .parser import parse_expr

        e = parse_expr(expr) if isinstance(expr, str) else sp.sympify(expr)
        ht = hx if ht is None else ht
        x = _axis(x_range, hx)
        t = _axis(t_range, ht)
        T, X = np.meshgrid(t, x, indexing="ij")
        env = {X_SYM: X.ravel(), T_SYM: T.ravel()}

        def ev(expr_):
            return compile_expr(expr_)(env).reshape(T.shape)

        exact = None
        if exact_jets:
            exact = {}
            for a in range(3):
                for b in range(3 - a):
                    exact[jet(a, b)] = ev(sp.diff(e, X_SYM, a, T_SYM, b))
        return cls(x, t, ev(e), bc="dirichlet", params=dict(params or {}), order=order, exact=exact)


def _axis(rng, h) -> np.ndarray:
    a, b = rng
    n = int(round((b - a) / h))
    if not math.isclose(a + n * h, b, rel_tol=0, abs_tol=1e-9 * max(1.0, abs(b))):
        raise ValueError(f"step {h} does not divide [{a}, {b}]")
    return a + h * np.arange(n + 1)


# ---------------------------------------------------------------------------
# solver


def _initial(f, x) -> np.ndarray:
    if callable(f):
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape).copy()
    from .parser import parse_expr

    e = parse_expr(f) if isinstance(f, str) else sp.sympify(f)
    return np.broadcast_to(compile_expr(e)({X_SYM: x}), x.shape).copy()


@dataclass
class _Rhs:
    A: Callable
    B: Callable
    C: Callable
    hx: float
    periodic: bool
    order: int
    params: dict
    den_tol: float

    def coeffs(self, z, v):
        zx = fd(z, self.hx, 0, order=self.order, periodic=self.periodic)
        env = {Z: z, Z_X: zx, Z_T: v, **self.params}
        vals = []
        for name, c in (("A", self.A), ("B", self.B), ("C", self.C)):
            val, ok = c(env, strict=False, den_tol=self.den_tol)
            if not ok.all():
                i = int(np.flatnonzero(~ok)[0])
                raise SingularCoefficient(f"coefficient {name} is singular at grid index {i} (z={z[i]:.6g})")
            vals.append(val)
        return vals

    def __call__(self, z, v):
        A, B, C = self.coeffs(z, v)
        zxx = fd(z, self.hx, 0, deriv=2, order=self.order, periodic=self.periodic)
        zxt = fd(v, self.hx, 0, order=self.order, periodic=self.periodic)
        acc = A * zxx + B * zxt + C
        if not self.periodic:
            acc[0] = acc[-1] = 0.0
        return v, acc


def stable_step(A, B, hx: float, cfl: float = 0.4) -> float:
    """``cfl * hx / max(1, sqrt|A| + |B|)`` over the current state."""
    speed = float(np.max(np.sqrt(np.abs(A)) + np.abs(B)))
    return cfl * hx / max(1.0, speed)


def solve_quasilinear(
    coeffs,
    z0,
    v0,
    *,
    x_range=(0.0, 2 * math.pi),
    nx: int = 256,
    t_end: float = 1.0,
    bc: str = "periodic",
    order: int = 4,
    cfl: float = 0.4,
    ht: float | None = None,
    params: Mapping | None = None,
    bound: float = 1e6,
    den_tol: float = 1e-8,
) -> SolutionGrid:
    """Method of lines for ``z_tt = A z_xx + B z_xt + C``.

    ``coeffs`` is a :class:`~pseudosurf.families.PdeCoeffs` (or any object
    with ``A``, ``B``, ``C``).  Periodic grids have ``nx`` points with
    spacing ``L/nx``; Dirichlet grids include both endpoints and hold the
    boundary values fixed.  The time step is fixed from the initial state
    by the CFL rule unless ``ht`` is given.  Every time level is stored.
    """
    if bc not in ("periodic", "dirichlet"):
        raise ValueError(f"unknown boundary condition {bc!r}")
    a, b = x_range
    if bc == "periodic":
        hx = (b - a) / nx
        x = a + hx * np.arange(nx)
    else:
        x = np.linspace(a, b, nx)
        hx = float(x[1] - x[0])
    env_params = {k: float(v) for k, v in normalize_binding(params or {}).items()}
    rhs = _Rhs(
        compile_expr(coeffs.A), compile_expr(coeffs.B), compile_expr(coeffs.C),
        hx, bc == "periodic", order, env_params, den_tol,
    )
    z = _initial(z0, x)
    v = _initial(v0, x)
    if bc == "dirichlet":
        v[0] = v[-1] = 0.0
    if ht is None:
        A, B, _ = rhs.coeffs(z, v)
        ht = stable_step(A, B, hx, cfl)
    steps = max(1, int(math.ceil(t_end / ht - 1e-12)))
    ht = t_end / steps
    zs = np.empty((steps + 1, x.size))
    vs = np.empty_like(zs)
    zs[0], vs[0] = z, v
    for n in range(steps):
        k1 = rhs(z, v)
        k2 = rhs(z + 0.5 * ht * k1[0], v + 0.5 * ht * k1[1])
        k3 = rhs(z + 0.5 * ht * k2[0], v + 0.5 * ht * k2[1])
        k4 = rhs(z + ht * k3[0], v + ht * k3[1])
        z = z + ht / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v = v + ht / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(v))) or max(np.max(np.abs(z)), np.max(np.abs(v))) > bound:
            partial = SolutionGrid(x, ht * np.arange(n + 1), zs[: n + 1], vs[: n + 1], bc, dict(params or {}), order)
            raise BlowUp(f"solution exceeded {bound:g} at t={ht * (n + 1):.6g}", grid=partial)
        zs[n + 1], vs[n + 1] = z, v
    return SolutionGrid(x, ht * np.arange(steps + 1), zs, vs, bc, dict(params or {}), order)


def pde_residual(coeffs, grid: SolutionGrid) -> np.ndarray:
    """``z_tt - A z_xx - B z_xt - C`` with grid jets (NaN where undefined)."""
    env = grid.env()
    flat = {k: np.asarray(v).ravel() for k, v in env.items()}
    vals = [compile_expr(c)(flat, strict=False)[0].reshape(grid.z.shape) for c in (coeffs.A, coeffs.B, coeffs.C)]
    j = grid.jet_fields()
    return j[jet(0, 2)] - vals[0] * j[jet(2, 0)] - vals[1] * j[jet(1, 1)] - vals[2]


# ---------------------------------------------------------------------------
# metric and curvature


@dataclass
class MetricSample:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    w: np.ndarray
    mask: np.ndarray
    cutoff: float
    singular: int

    @property
    def admissible(self) -> int:
        return int(self.mask.sum())


def _evaluate_on_grid(exprs, grid: SolutionGrid):
    env = {k: np.asarray(v).ravel() for k, v in grid.env().items()}
    ok = np.ones(grid.z.size, dtype=bool)
    out = []
    for e in exprs:
        val, m = compile_expr(e)(env, strict=False)
        out.append(val.reshape(grid.z.shape))
        ok &= m
    return out, ok.reshape(grid.z.shape)


def sample_metric(f: FijSextet, grid: SolutionGrid, rel_cutoff: float = 0.05) -> MetricSample:
    """Pointwise ``E, F, G`` of ``omega_1^2 + omega_2^2`` and ``w = f11 f22 - f12 f21``.

    Points where a coefficient is singular are masked and counted; points
    with ``|w| <= rel_cutoff * median|w|`` are masked as degenerate.
    """
    (f11, f12, f21, f22), ok = _evaluate_on_grid([f.close(e) for e in (f.f11, f.f12, f.f21, f.f22)], grid)
    E = f11**2 + f21**2
    F = f11 * f12 + f21 * f22
    G = f12**2 + f22**2
    w = f11 * f22 - f12 * f21
    aw = np.abs(w[ok])
    cutoff = rel_cutoff * float(np.median(aw)) if aw.size else 0.0
    mask = ok & (np.abs(np.nan_to_num(w)) > cutoff)
    return MetricSample(E, F, G, w, mask, cutoff, int((~ok).sum()))


@dataclass
class CurvatureReport:
    K: np.ndarray
    mask: np.ndarray
    target: float
    median_error: float
    max_error: float
    admissible: int

    def to_dict(self) -> dict:
        return {
            "target_K": self.target,
            "median_abs_K_minus_target": self.median_error,
            "max_abs_K_minus_target": self.max_error,
            "admissible_points": self.admissible,
        }


def brioschi(E, F, G, hx, ht, *, order=2, periodic=False) -> np.ndarray:
    """Gaussian curvature of ``E dx^2 + 2F dx dt + G dt^2`` by the Brioschi formula."""
    dx = lambda a, k=1: fd(a, hx, 1, deriv=k, order=order, periodic=periodic)
    dt = lambda a, k=1: fd(a, ht, 0, deriv=k, order=order, periodic=False)
    Eu, Ev, Fu, Fv, Gu, Gv = dx(E), dt(E), dx(F), dt(F), dx(G), dt(G)
    Evv, Guu, Fuv = dt(E, 2), dx(G, 2), dx(dt(F))
    m1 = np.array([
        [-Evv / 2 + Fuv - Guu / 2, Eu / 2, Fu - Ev / 2],
        [Fv - Gu / 2, E, F],
        [Gv / 2, F, G],
    ])
    zero = np.zeros_like(E)
    m2 = np.array([
        [zero, Ev / 2, Gu / 2],
        [Ev / 2, E, F],
        [Gu / 2, F, G],
    ])
    det = lambda m: np.linalg.det(np.moveaxis(m, (0, 1), (-2, -1)))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (det(m1) - det(m2)) / (E * G - F**2) ** 2


def curvature_estimate(ms: MetricSample, grid: SolutionGrid, delta: int = 1, *, order: int = 4, margin: int = 2):
    """Brioschi curvature at admissible interior points; target ``K = -delta``."""
    K = brioschi(ms.E, ms.F, ms.G, grid.hx, grid.ht, order=order, periodic=grid.periodic)
    mask = ms.mask.copy()
    # a point is usable only if its whole stencil is admissible
    for axis in (0, 1):
        if axis == 1 and grid.periodic:
            for s in (-1, 1):
                mask &= np.roll(ms.mask, s, axis=1)
            continue
        for s in (-1, 1):
            shifted = np.roll(ms.mask, s, axis=axis)
            mask &= shifted
    mask[:margin] = mask[-margin:] = False
    if not grid.periodic:
        mask[:, :margin] = mask[:, -margin:] = False
    mask &= np.isfinite(K)
    if not mask.any():
        raise EmptyMask("no admissible interior points for the curvature estimate")
    err = np.abs(K[mask] + delta)
    return CurvatureReport(K, mask, float(-delta), float(np.median(err)), float(np.max(err)), int(mask.sum()))


# ---------------------------------------------------------------------------
# grid structure residuals


@dataclass
class GridResiduals:
    r1: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    mask: np.ndarray

    def max_abs(self) -> dict:
        return {k: float(np.max(np.abs(getattr(self, k)[self.mask]))) for k in ("r1", "r2", "r3")}


def grid_residuals(f: FijSextet, grid: SolutionGrid, *, order: int = 2, margin: int = 2) -> GridResiduals:
    """Structure-equation residuals with total derivatives replaced by finite differences."""
    vals, ok = _evaluate_on_grid([f.close(e) for e in f.entries], grid)
    f11, f12, f21, f22, f31, f32 = vals
    d = float(f.delta if f.delta is not None else 1)
    dx = lambda a: fd(a, grid.hx, 1, order=order, periodic=grid.periodic)
    dt = lambda a: fd(a, grid.ht, 0, order=order)
    r1 = dx(f12) - dt(f11) + f32 * f21 - f31 * f22
    r2 = dx(f22) - dt(f21) + f31 * f12 - f32 * f11
    r3 = dx(f32) - dt(f31) + d * (f21 * f12 - f22 * f11)
    mask = ok.copy()
    for axis in (0, 1):
        for s in (-1, 1):
            mask &= np.roll(ok, s, axis=axis)
    mask[:margin] = mask[-margin:] = False
    if not grid.periodic:
        mask[:, :margin] = mask[:, -margin:] = False
    mask &= np.isfinite(r1) & np.isfinite(r2) & np.isfinite(r3)
    if not mask.any():
        raise EmptyMask("no admissible interior points for grid residuals")
    return GridResiduals(r1, r2, r3, mask)


# ---------------------------------------------------------------------------
# export

CSV_COLUMNS = ("x", "t", "z", "K", "w", "r1", "r2", "r3")


def write_csv(path, grid: SolutionGrid, *, K=None, w=None, residuals: GridResiduals | None = None, stride: int = 1):
    """Write one row per grid point (every ``stride``-th in each direction).

    Missing quantities and masked points are written as empty fields.
    """
    T, X = np.meshgrid(grid.t, grid.x, indexing="ij")
    cols = {"x": X, "t": T, "z": grid.z, "K": K, "w": w}
    if residuals is not None:
        for k in ("r1", "r2", "r3"):
            cols[k] = np.where(residuals.mask, getattr(residuals, k), np.nan)
    sl = (slice(None, None, stride), slice(None, None, stride))
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(CSV_COLUMNS)
        flat = {k: (None if cols.get(k) is None else np.asarray(cols[k])[sl].ravel()) for k in CSV_COLUMNS}
        n = flat["x"].size
        for i in range(n):
            out.writerow(["" if flat[k] is None or not np.isfinite(flat[k][i]) else repr(float(flat[k][i])) for k in CSV_COLUMNS])
