"""Constructive classification of quasilinear pss/ss equations.

Builders turn the free data of each branch (functions of ``z``, a function
``h(z, z_x, z_t)``, constants) into a sextet and the coefficients of

    z_tt = A z_xx + B z_xt + C.

:func:`verify_characterization` checks a (coefficients, sextet) pair
against the five compatibility equations directly; it shares no code path
with the builders beyond differentiation and evaluation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Union

import numpy as np
import sympy as sp

from .errors import (
    Delta0Vanishes,
    DeltaVanishes,
    DegenerateF11,
    HConstant,
    PsiVanishes,
    SamplingError,
    ShapeMismatch,
    SignAssumptionViolated,
    SpecInvariantViolated,
)
from .expr import (
    Z,
    Z_T,
    Z_X,
    abstract_names,
    free_jets,
    normalize,
    to_text,
)
from .jet import EvolutionRelation, quasilinear_relation
from .sampling import Assumption, PointSampler, identically_zero, scaled_residual
from .zcr import FijSextet

# ---------------------------------------------------------------------------
# specs


def _sym(e):
    from .parser import parse_expr

    return parse_expr(e) if isinstance(e, str) else sp.sympify(e)


def _check_delta(delta):
    if delta not in (1, -1):
        raise SpecInvariantViolated(f"delta must be +1 or -1, got {delta!r}")


def _check_sign(sign, what="sign"):
    if sign not in (1, -1):
        raise SpecInvariantViolated(f"{what} must be +1 or -1, got {sign!r}")


@dataclass
class CaseA:
    """Delta != 0: f2j, f3j affine in (z_x, z_t) with coefficients of z."""

    phi: sp.Expr
    varphi: sp.Expr
    psi21: sp.Expr
    psi22: sp.Expr
    psi31: sp.Expr
    psi32: sp.Expr
    delta: int = 1
    variant = "case_a"


@dataclass
class CaseB1:
    """Delta == 0, rho^2 != delta; ``sign`` is the sign of rho^2 - delta."""

    h: sp.Expr
    phi: sp.Expr
    rho: sp.Expr
    c1: sp.Expr
    c2: sp.Expr
    delta: int = 1
    sign: int = 1
    variant = "case_b1"


@dataclass
class CaseB2:
    """Delta == 0, rho = sign (forces delta = 1)."""

    h: sp.Expr
    phi: sp.Expr
    psi: sp.Expr
    chi: sp.Expr
    sign: int = 1
    variant = "case_b2"

    @property
    def delta(self):
        return 1


@dataclass
class Cor33:
    psi21: sp.Expr
    psi22: sp.Expr
    psi31: sp.Expr
    psi32: sp.Expr
    delta: int = 1
    variant = "cor33"


@dataclass
class Cor34:
    h: sp.Expr
    rho: sp.Expr
    m: sp.Expr
    eta: sp.Expr
    delta: int = 1
    sign: int = 1
    variant = "cor34"


@dataclass
class Cor35:
    h: sp.Expr
    psi: sp.Expr
    chi: sp.Expr
    sign: int = 1
    variant = "cor35"

    @property
    def delta(self):
        return 1


FamilySpec = Union[CaseA, CaseB1, CaseB2, Cor33, Cor34, Cor35]
VARIANTS = {cls.variant: cls for cls in (CaseA, CaseB1, CaseB2, Cor33, Cor34, Cor35)}
_INT_FIELDS = {"delta", "sign"}


def spec_from_dict(data: Mapping, params: Mapping | None = None) -> FamilySpec:
    """Build a spec from its JSON form; ``params`` substitutes named constants."""
    variant = str(data["variant"]).lower().replace("-", "_")
    aliases = {"a": "case_a", "b1": "case_b1", "b2": "case_b2", "case_a": "case_a"}
    variant = aliases.get(variant, variant)
    if variant not in VARIANTS:
        raise ValueError(f"unknown family variant {data['variant']!r}; expected one of {sorted(VARIANTS)}")
    cls = VARIANTS[variant]
    functions = data.get("functions", ())
    from .parser import parse_expr

    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            if f.default is not f.default_factory:  # has a default
                continue
            raise ValueError(f"{variant} spec is missing {f.name!r}")
        value = data[f.name]
        if f.name in _INT_FIELDS:
            kwargs[f.name] = int(value)
        else:
            e = parse_expr(str(value), functions)
            if params:
                e = e.subs({_sym(k): _sym(str(v)) for k, v in params.items()})
            kwargs[f.name] = e
    return cls(**kwargs)


def spec_to_dict(spec: FamilySpec) -> dict:
    out = {"variant": spec.variant}
    for f in fields(spec):
        v = getattr(spec, f.name)
        out[f.name] = v if f.name in _INT_FIELDS else to_text(v)
    return out


def load_spec(path) -> FamilySpec:
    return spec_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# coefficients


@dataclass
class PdeCoeffs:
    A: sp.Expr
    B: sp.Expr
    C: sp.Expr
    delta: int | None = 1

    def relation(self) -> EvolutionRelation:
        return quasilinear_relation(self.A, self.B, self.C)

    def to_dict(self) -> dict:
        return {"A": to_text(self.A), "B": to_text(self.B), "C": to_text(self.C), "delta": self.delta}

    def subs(self, values: Mapping) -> "PdeCoeffs":
        return PdeCoeffs(*(sp.sympify(e).subs(values) for e in (self.A, self.B, self.C)), self.delta)


@dataclass
class BuildResult:
    coeffs: PdeCoeffs
    sextet: FijSextet
    provenance: FamilySpec

    def to_dict(self) -> dict:
        return {
            "coefficients": self.coeffs.to_dict(),
            "sextet": self.sextet.to_dict(),
            "provenance": spec_to_dict(self.provenance),
        }


def _d(e, v):
    return sp.diff(e, v)


def compute_pde_coeffs(f: FijSextet, *, check: bool = True) -> PdeCoeffs:
    """A, B, C from the sextet (f11,zt must not vanish identically)."""
    a = f.close(_d(f.f11, Z_T))
    if check and _vanishes(a, f):
        raise DegenerateF11("f11 does not depend on z_t")
    delta_ = f.close(f.f32 * f.f21 - f.f31 * f.f22)
    A = f.close(_d(f.f12, Z_X)) / a
    B = f.close(-_d(f.f11, Z_X) + _d(f.f12, Z_T)) / a
    C = f.close(-Z_T * _d(f.f11, Z) + Z_X * _d(f.f12, Z) + delta_) / a
    return PdeCoeffs(*(f.close(normalize(e)) for e in (A, B, C)), f.delta)


def _vanishes(e, f: FijSextet | None = None, seed=0) -> bool:
    assumptions = f.assumptions if f is not None else ()
    watch = f.entries if f is not None else ()
    try:
        return identically_zero(e, seed=seed, assumptions=assumptions, watch=watch)
    except SamplingError as exc:
        raise SignAssumptionViolated(f"no admissible points on the declared domain: {exc}") from None


def _nonconstant(e) -> bool:
    return not _vanishes(sp.diff(e, Z))


def _finish(f: FijSextet, spec) -> BuildResult:
    f = f.map(lambda e: normalize(f.close(e)))
    f.assumptions = tuple(Assumption(f.close(a.expr), a.nonzero_only) for a in f.assumptions)
    return BuildResult(compute_pde_coeffs(f), f, spec)


def _matrix_f11_f12(left: sp.Matrix, delta, p21, p22, p31, p32, det):
    N = sp.Matrix([[_d(p21, Z), -_d(p22, Z)], [delta * _d(p31, Z), -delta * _d(p32, Z)]])
    v = left * N * sp.Matrix([Z_T, Z_X]) / det
    return v[0], v[1]


def build_case_a(spec: CaseA) -> BuildResult:
    _check_delta(spec.delta)
    phi, vphi = spec.phi, spec.varphi
    p21, p22, p31, p32 = spec.psi21, spec.psi22, spec.psi31, spec.psi32
    det = (vphi * p21 - phi * p31) * Z_T + (phi * p32 - vphi * p22) * Z_X + p32 * p21 - p22 * p31
    if _vanishes(det):
        raise DeltaVanishes("Delta vanishes identically; use case (b)")
    left = sp.Matrix([[-phi * Z_X - p21, vphi * Z_X + p31], [-phi * Z_T - p22, vphi * Z_T + p32]])
    f11, f12 = _matrix_f11_f12(left, spec.delta, p21, p22, p31, p32, det)
    f = FijSextet(
        f11, f12,
        phi * Z_X + p21, phi * Z_T + p22,
        vphi * Z_X + p31, vphi * Z_T + p32,
        delta=spec.delta,
    )
    return _finish(f, spec)


def case_b_sextet(h, phi, psi, chi, rho, delta, assumptions=()) -> FijSextet:
    f21 = phi * Z_X + psi
    f22 = phi * Z_T + chi
    f12 = ((phi * Z_T + chi) * h + delta * Z_T * _d(rho * psi, Z) - delta * Z_X * _d(rho * chi, Z)) / f21
    return FijSextet(h, f12, f21, f22, rho * f21, rho * f22, delta=delta, assumptions=tuple(assumptions))


def _require_h(h):
    if _vanishes(_d(h, Z_T)):
        raise DegenerateF11("h does not depend on z_t")


def build_case_b(spec: CaseB1 | CaseB2) -> BuildResult:
    _require_h(spec.h)
    if isinstance(spec, CaseB1):
        _check_delta(spec.delta)
        _check_sign(spec.sign, "sign of rho^2 - delta")
        if not _nonconstant(spec.rho):
            raise SpecInvariantViolated("rho must not be constant")
        if _vanishes(spec.c1**2 + spec.c2**2):
            raise SpecInvariantViolated("c1^2 + c2^2 must not vanish")
        if _vanishes(spec.phi**2 + spec.c1**2):
            raise SpecInvariantViolated("phi^2 + c1^2 must not vanish")
        q = spec.sign * (spec.rho**2 - spec.delta)
        root = sp.sqrt(q)
        assumption = Assumption(q)
        f = case_b_sextet(spec.h, spec.phi, spec.c1 / root, spec.c2 / root, spec.rho, spec.delta, (assumption,))
        _check_domain(f)
        return _finish(f, spec)
    _check_sign(spec.sign)
    if _vanishes(_d(spec.psi, Z) ** 2 + _d(spec.chi, Z) ** 2):
        raise SpecInvariantViolated("psi' and chi' must not both vanish")
    if _vanishes(spec.phi**2 + spec.psi**2):
        raise SpecInvariantViolated("phi^2 + psi^2 must not vanish")
    f = case_b_sextet(spec.h, spec.phi, spec.psi, spec.chi, sp.Integer(spec.sign), 1)
    return _finish(f, spec)


def _check_domain(f: FijSextet):
    try:
        PointSampler().sample(f.entries, 4, np.random.default_rng(0), assumptions=f.assumptions)
    except SamplingError as exc:
        raise SignAssumptionViolated(f"declared sign is not realized on the sampled domain ({exc})") from None


def build_cor33(spec: Cor33) -> BuildResult:
    _check_delta(spec.delta)
    p21, p22, p31, p32 = spec.psi21, spec.psi22, spec.psi31, spec.psi32
    det = p32 * p21 - p31 * p22
    if _vanishes(det):
        raise Delta0Vanishes("Delta0 = psi32 psi21 - psi31 psi22 vanishes identically")
    H = p31**2 - spec.delta * p21**2
    if not _nonconstant(H):
        raise HConstant("H = psi31^2 - delta psi21^2 is constant")
    left = sp.Matrix([[-p21, p31], [-p22, p32]])
    f11, f12 = _matrix_f11_f12(left, spec.delta, p21, p22, p31, p32, det)
    return _finish(FijSextet(f11, f12, p21, p22, p31, p32, delta=spec.delta), spec)


def cor33_coefficients(spec: Cor33, f: FijSextet) -> PdeCoeffs:
    """A, B, C from the closed-form variant formulas (an independent route)."""
    d = spec.delta
    p21, p22, p31, p32 = spec.psi21, spec.psi22, spec.psi31, spec.psi32
    H = p31**2 - d * p21**2
    Hz = _d(H, Z)
    det = p32 * p21 - p31 * p22
    A = _d(d * p22**2 - p32**2, Z) / Hz
    B = 2 * _d(p31 * p32 - d * p21 * p22, Z) / Hz
    C = 2 * d * det / Hz * (-_d(f.f11, Z) * Z_T + _d(f.f12, Z) * Z_X + det)
    return PdeCoeffs(*(normalize(e) for e in (A, B, C)), d)


def build_cor34(spec: Cor34) -> BuildResult:
    _check_delta(spec.delta)
    _check_sign(spec.sign, "sign of rho^2 - delta")
    _require_h(spec.h)
    if not _nonconstant(spec.rho):
        raise SpecInvariantViolated("rho must not be constant")
    if _vanishes(spec.eta):
        raise SpecInvariantViolated("eta must be nonzero")
    d, rho, m = spec.delta, spec.rho, spec.m
    q = spec.sign * (rho**2 - d)
    f21 = spec.eta / sp.sqrt(q)
    g = _d(rho, Z) / (rho**2 - d)
    f = FijSextet(
        spec.h, m * spec.h - g * (Z_T - m * Z_X),
        f21, m * f21,
        rho * f21, m * rho * f21,
        delta=d, assumptions=(Assumption(q),),
    )
    _check_domain(f)
    return _finish(f, spec)


def cor34_coefficients(spec: Cor34) -> PdeCoeffs:
    h, m, d = spec.h, spec.m, spec.delta
    g = _d(spec.rho, Z) / (spec.rho**2 - d)
    ht, hx = _d(h, Z_T), _d(h, Z_X)
    A = m / ht * (hx + g)
    B = m - (hx + g) / ht
    C = (m * Z_X - Z_T) / ht * (_d(h, Z) + Z_X * _d(g, Z))
    return PdeCoeffs(*(normalize(e) for e in (A, B, C)), d)


def build_cor35(spec: Cor35) -> BuildResult:
    _check_sign(spec.sign)
    _require_h(spec.h)
    psi, chi, s = spec.psi, spec.chi, spec.sign
    if _vanishes(psi):
        raise PsiVanishes("psi vanishes identically")
    if _vanishes(_d(psi, Z) ** 2 + _d(chi, Z) ** 2):
        raise SpecInvariantViolated("psi' and chi' must not both vanish")
    f12 = (chi * spec.h + s * Z_T * _d(psi, Z) - s * Z_X * _d(chi, Z)) / psi
    f = FijSextet(spec.h, f12, psi, chi, s * psi, s * chi, delta=1)
    return _finish(f, spec)


def cor35_coefficients(spec: Cor35) -> PdeCoeffs:
    h, psi, chi, s = spec.h, spec.psi, spec.chi, spec.sign
    ht, hx, hz = _d(h, Z_T), _d(h, Z_X), _d(h, Z)
    r = chi / psi
    A = (chi * hx - s * _d(chi, Z)) / (psi * ht)
    B = r - (hx - s * _d(psi, Z) / psi) / ht
    C = (
        -Z_T * hz
        + Z_X * (_d(r, Z) * h + r * hz + s * Z_T * _d(_d(psi, Z) / psi, Z) - s * Z_X * _d(_d(chi, Z) / psi, Z))
    ) / ht
    return PdeCoeffs(*(normalize(e) for e in (A, B, C)), 1)


BUILDERS = {
    "case_a": build_case_a,
    "case_b1": build_case_b,
    "case_b2": build_case_b,
    "cor33": build_cor33,
    "cor34": build_cor34,
    "cor35": build_cor35,
}


def build(spec: FamilySpec) -> BuildResult:
    return BUILDERS[spec.variant](spec)


# ---------------------------------------------------------------------------
# verification


EQUATIONS = ("eq1", "eq2", "eq3", "eq4", "eq5")


@dataclass
class CharacterizationReport:
    passed: bool
    tol: float
    points: int
    max_residual: dict
    max_scaled: dict
    nondegenerate_fraction: float
    instantiation: dict = field(default_factory=dict)
    shape: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        return out


def random_polynomial(rng: np.random.Generator, degree: int = 2, low: int = -3, high: int = 3) -> sp.Expr:
    """Random polynomial in z of exact degree ``degree`` with integer coefficients."""
    coeffs = [int(c) for c in rng.integers(low, high + 1, size=degree + 1)]
    while coeffs[-1] == 0:
        coeffs[-1] = int(rng.integers(low, high + 1))
    return sum(c * Z**k for k, c in enumerate(coeffs))


def _instantiate(f: FijSextet, coeffs: PdeCoeffs, choices, rng):
    names = set()
    for e in (*f.entries, coeffs.A, coeffs.B, coeffs.C):
        names |= abstract_names(e)
    names -= set(f.rules)
    chosen = {k: _sym(v) for k, v in (choices or {}).items()}
    for name in sorted(names):
        if name not in chosen:
            chosen[name] = random_polynomial(rng, degree=int(rng.integers(1, 3)))
    if not chosen:
        return f, coeffs, {}
    f = f.instantiate(chosen)
    from .expr import instantiate_functions

    coeffs = PdeCoeffs(*(instantiate_functions(e, chosen) for e in (coeffs.A, coeffs.B, coeffs.C)), coeffs.delta)
    return f, coeffs, {k: to_text(v) for k, v in chosen.items()}


def extract_affine_data(f: FijSextet) -> dict:
    """phi, varphi, psi_ij with f21 = phi z_x + psi21, f22 = phi z_t + psi22, ...

    Raises :class:`ShapeMismatch` if the sextet is not of this shape.
    """
    allowed = {Z, Z_X, Z_T}
    for name, e in zip(("f11", "f12", "f21", "f22", "f31", "f32"), f.entries):
        extra = free_jets(e) - allowed
        if extra:
            raise ShapeMismatch(f"{name} depends on {', '.join(sorted(map(str, extra)))}")
    for name in ("f21", "f31"):
        if not _vanishes(f.close(_d(f[name], Z_T)), f):
            raise ShapeMismatch(f"{name} depends on z_t")
    phi = f.close(_d(f.f21, Z_X))
    vphi = f.close(_d(f.f31, Z_X))
    data = {
        "phi": phi,
        "varphi": vphi,
        "psi21": f.close(f.f21 - phi * Z_X),
        "psi22": f.close(f.f22 - phi * Z_T),
        "psi31": f.close(f.f31 - vphi * Z_X),
        "psi32": f.close(f.f32 - vphi * Z_T),
    }
    for name, e in data.items():
        for v in (Z_X, Z_T):
            if not _vanishes(f.close(_d(e, v)), f):
                raise ShapeMismatch(f"{name} depends on {v}; f2j/f3j must be affine in z_x, z_t")
    return data


def characterization_equations(coeffs: PdeCoeffs, f: FijSextet, data: Mapping) -> dict:
    """The five compatibility equations as lists of additive terms."""
    d = f.delta_expr
    phi, vphi = data["phi"], data["varphi"]
    p21, p22, p31, p32 = data["psi21"], data["psi22"], data["psi31"], data["psi32"]
    f11, f12 = f.f11, f.f12
    f11_t = _d(f11, Z_T)
    terms = {
        "eq1": [-f11_t * coeffs.A, _d(f12, Z_X)],
        "eq2": [-f11_t * coeffs.B, -_d(f11, Z_X), _d(f12, Z_T)],
        "eq3": [
            -f11_t * coeffs.C,
            -Z_T * _d(f11, Z),
            Z_X * _d(f12, Z),
            (vphi * p21 - phi * p31) * Z_T,
            (phi * p32 - vphi * p22) * Z_X,
            p32 * p21,
            -p22 * p31,
        ],
        "eq4": [
            -Z_T * _d(p21, Z),
            Z_X * _d(p22, Z),
            -f11 * (vphi * Z_T + p32),
            (vphi * Z_X + p31) * f12,
        ],
        "eq5": [
            -Z_T * _d(p31, Z),
            Z_X * _d(p32, Z),
            -d * f11 * (phi * Z_T + p22),
            d * (phi * Z_X + p21) * f12,
        ],
    }
    return {k: [f.close(t) for t in v] for k, v in terms.items()}


def verify_characterization(
    coeffs: PdeCoeffs,
    f: FijSextet,
    *,
    n: int = 200,
    tol: float = 1e-9,
    seed: int = 0,
    choices: Mapping | None = None,
    fixed: Mapping | None = None,
) -> CharacterizationReport:
    """Check the five compatibility equations at ``n`` random admissible points.

    Abstract functions are instantiated with ``choices`` or random
    low-degree polynomials (functions with ODE rules stay free).  PASS iff
    every equation satisfies ``|sum| <= tol * (1 + max |term|)`` at every
    point, where the terms are the listed summands and the additive terms
    of their combined expression, whichever is larger, and ``(phi z_x + psi21) f12 - f11 (phi z_t + psi22)`` is nonzero at
    a majority of points.
    """
    rng = np.random.default_rng(seed)
    if f.delta is not None and coeffs.delta is not None and f.delta != coeffs.delta:
        raise ShapeMismatch("sextet and coefficients disagree on delta")
    f, coeffs, inst = _instantiate(f, coeffs, choices, rng)
    data = extract_affine_data(f)
    eqs = characterization_equations(coeffs, f, data)
    metric = f.close((data["phi"] * Z_X + data["psi21"]) * f.f12 - f.f11 * (data["phi"] * Z_T + data["psi22"]))
    sums = {k: sp.Add(*v) for k, v in eqs.items()}
    watch = [*f.entries, coeffs.A, coeffs.B, coeffs.C, metric, *(t for v in eqs.values() for t in v)]
    points = PointSampler().sample(watch, n, rng, fixed=fixed, assumptions=f.assumptions)

    max_res, max_scaled = {}, {}
    passed = True
    from .evaluate import compile_expr

    for k, terms in eqs.items():
        total, ok = compile_expr(sums[k])(points, strict=False)
        scale = np.zeros(n)
        for t in terms:
            v, _ = compile_expr(t)(points, strict=False)
            scale = np.maximum(scale, np.abs(v))
        rel, _, _ = scaled_residual(sums[k], points)
        # the explicit terms and the Add terms of the combined sum are both
        # intermediate terms; the scale is the largest of them
        rel = np.minimum(rel, np.abs(total) / (1.0 + scale))
        max_res[k] = float(np.max(np.abs(total)))
        max_scaled[k] = float(np.max(rel))
        if not (np.all(ok) and max_scaled[k] <= tol):
            passed = False
    w, _ = compile_expr(metric)(points, strict=False)
    frac = float(np.mean(np.abs(w) > 1e-10))
    if frac <= 0.5:
        passed = False
    return CharacterizationReport(
        passed, tol, n, max_res, max_scaled, frac, inst,
        {k: to_text(v) for k, v in data.items()},
    )


# ---------------------------------------------------------------------------
# random specs


def _poly(rng, max_degree, low=-3, high=3):
    coeffs = rng.integers(low, high + 1, size=max_degree + 1)
    return sum(int(c) * Z**k for k, c in enumerate(coeffs))


def random_cor33(rng: np.random.Generator, max_degree: int = 3, delta: int | None = None) -> Cor33:
    """Random polynomial Cor33 spec with Delta0 != 0 and H nonconstant."""
    while True:
        d = delta if delta is not None else int(rng.choice([1, -1]))
        p = [_poly(rng, max_degree) for _ in range(4)]
        det = sp.expand(p[3] * p[0] - p[2] * p[1])
        H = sp.expand(p[2] ** 2 - d * p[0] ** 2)
        if det != 0 and sp.diff(H, Z) != 0:
            return Cor33(*p, delta=d)


def random_h(rng: np.random.Generator, max_degree: int = 2) -> sp.Expr:
    """``a(z) z_t + b(z) z_x + c(z)`` with a(z) a nonzero polynomial."""
    while True:
        a = _poly(rng, max_degree)
        if a != 0:
            return sp.expand(a * Z_T + _poly(rng, max_degree) * Z_X + _poly(rng, max_degree))


def random_cor34(rng: np.random.Generator, max_degree: int = 2) -> Cor34:
    d = int(rng.choice([1, -1]))
    while True:
        rho = _poly(rng, max_degree)
        if sp.diff(rho, Z) != 0:
            break
    m = int(rng.integers(-3, 4))
    eta = int(rng.choice([-3, -2, -1, 1, 2, 3]))
    # choose the sign realized at a random point so the domain is nonempty
    z0 = rng.uniform(-2, 2)
    q0 = float((rho**2 - d).subs(Z, z0))
    sign = 1 if q0 > 0 else -1
    return Cor34(random_h(rng, max_degree), rho, sp.Integer(m), sp.Integer(eta), d, sign)


def random_cor35(rng: np.random.Generator, max_degree: int = 2) -> Cor35:
    while True:
        psi, chi = _poly(rng, max_degree), _poly(rng, max_degree)
        if psi != 0 and (sp.diff(psi, Z) != 0 or sp.diff(chi, Z) != 0):
            return Cor35(random_h(rng, max_degree), psi, chi, int(rng.choice([1, -1])))
