"""Sampling-based checks shared by the command line and the test suites."""

from __future__ import annotations

import time
from typing import Mapping

import numpy as np

from .catalog import family_spec, instance
from .evaluate import compile_expr
from .families import PdeCoeffs, build, compute_pde_coeffs, verify_characterization
from .jet import EvolutionRelation
from .report import Check, RunReport
from .sampling import PointSampler, identically_zero, intermediate_terms, scaled_residual
from .zcr import (
    FijSextet,
    build_matrix_problem,
    default_kind,
    residual_combination,
    structure_residuals,
    zcr_matrix,
    zcr_residual,
)


def _sample(f: FijSextet, exprs, n, seed, fixed=None):
    return PointSampler().sample(
        [*f.entries, *exprs], n, np.random.default_rng(seed), fixed=fixed, assumptions=f.assumptions
    )


def _max_scaled(exprs, points) -> tuple[float, bool]:
    worst, ok_all = 0.0, True
    for e in exprs:
        rel, _, ok = scaled_residual(e, points)
        ok_all &= bool(ok.all())
        if rel[ok].size:
            worst = max(worst, float(np.max(rel[ok])))
    return worst, ok_all


def structure_check(f: FijSextet, rel: EvolutionRelation | None, *, n=200, seed=0, tol=1e-9) -> Check:
    """The three structure equations, reduced on-shell, at ``n`` sampled points."""
    r = structure_residuals(f).reduce(rel, f.close)
    points = _sample(f, list(r), n, seed)
    stats = {}
    passed = True
    for name, e in zip(("r1", "r2", "r3"), r):
        worst, ok = _max_scaled([e], points)
        stats[name] = worst
        passed &= ok and worst <= tol
    return Check("structure", passed, stats, "" if passed else f"a residual exceeds tol {tol:g}")


def zcr_check(f: FijSextet, rel: EvolutionRelation, *, kind=None, n=200, seed=0, tol=1e-9) -> Check:
    """Every entry of the on-shell ZCR residual at ``n`` sampled points."""
    kind = kind or default_kind(f)
    p = build_matrix_problem(f, kind)
    entries = list(zcr_residual(p, rel))
    points = _sample(f, entries, n, seed)
    worst, ok = _max_scaled(entries, points)
    passed = ok and worst <= tol
    return Check(f"zcr[{kind}]", passed, {"max_scaled": worst}, "" if passed else f"exceeds tol {tol:g}")


def zcr_equivalence_check(f: FijSextet, rel: EvolutionRelation | None, *, n=100, seed=0, tol=1e-12) -> list[Check]:
    """Off-shell: ZCR residual entries equal the stated combinations of (r1, r2, r3).

    For the 3x3 problem the check also confirms that the residual vanishes
    on-shell exactly when (r1, r2, r3) do.
    """
    r = structure_residuals(f)
    out = []
    for kind in (default_kind(f), "hat3x3"):
        p = build_matrix_problem(f, kind)
        Zm = zcr_matrix(p)
        comb = residual_combination(kind, r, f.delta_expr)
        diffs = [f.close(a - b) for a, b in zip(Zm, comb)]
        points = _sample(f, [*Zm, *comb], n, seed)
        worst = 0.0
        for a, b in zip(Zm, comb):
            va, oka = compile_expr(a)(points, strict=False)
            vb, okb = compile_expr(b)(points, strict=False)
            ok = oka & okb
            scale = 1.0 + np.maximum(np.abs(va), np.abs(vb))
            for t in (*intermediate_terms(a), *intermediate_terms(b)):
                vt, okt = compile_expr(t)(points, strict=False)
                scale = np.maximum(scale, 1.0 + np.where(okt, np.abs(vt), 0.0))
            if ok.any():
                worst = max(worst, float(np.max(np.abs(va - vb)[ok] / scale[ok])))
        exact = all(d == 0 or identically_zero(d, assumptions=f.assumptions) for d in diffs)
        passed = worst <= tol
        out.append(Check(f"zcr-combination[{kind}]", passed, {"max_scaled": worst, "exact": exact}))
    if rel is not None:
        on_shell = structure_check(f, rel, n=n, seed=seed)
        p = build_matrix_problem(f, "hat3x3")
        entries = list(zcr_residual(p, rel))
        points = _sample(f, entries, n, seed)
        worst, _ = _max_scaled(entries, points)
        vanishes = worst <= 1e-9
        out.append(
            Check(
                "hat3x3-iff-structure",
                vanishes == on_shell.passed,
                {"hat3x3_max": worst, "structure_vanishes": on_shell.passed},
            )
        )
    return out


def coefficient_check(f: FijSextet, stated: PdeCoeffs) -> Check:
    """compute_pde_coeffs(f) against the stated A, B, C (exact when rational)."""
    c = compute_pde_coeffs(f)
    stats = {}
    for name, a, b in zip("ABC", (c.A, c.B, c.C), (stated.A, stated.B, stated.C)):
        stats[name] = bool(identically_zero(f.close(a - b), assumptions=f.assumptions, watch=f.entries))
    passed = all(stats.values())
    return Check("coefficients", passed, stats, "" if passed else "derived coefficients differ from the stated ones")


def family_check(f: FijSextet, spec, *, n=50, seed=1, tol=1e-9) -> Check:
    """The family builder reproduces the fixture sextet."""
    b = build(spec).sextet
    diffs = [f.close(x - y) for x, y in zip(f.entries, b.entries)]
    points = PointSampler().sample(
        [*f.entries, *b.entries], n, np.random.default_rng(seed), assumptions=(*f.assumptions, *b.assumptions)
    )
    worst, ok = _max_scaled(diffs, points)
    passed = ok and worst <= tol
    return Check(f"family[{spec.variant}]", passed, {"max_scaled": worst})


def characterization_check(coeffs: PdeCoeffs, f: FijSextet, *, n=200, seed=0, tol=1e-9, fixed=None) -> Check:
    rep = verify_characterization(coeffs, f, n=n, tol=tol, seed=seed, fixed=fixed)
    stats = dict(rep.max_scaled)
    stats["nondegenerate_fraction"] = rep.nondegenerate_fraction
    return Check("characterization", rep.passed, stats, "" if rep.passed else "a compatibility equation fails")


def run_fixture(name: str, params: Mapping | None = None, *, n=200, seed=0, tol=1e-9, full=True) -> RunReport:
    """All checks for one catalog fixture at ``params``."""
    t0 = time.perf_counter()
    inst = instance(name, params)
    report = RunReport(
        "catalog run",
        inputs={"fixture": name, "params": {k: str(v) for k, v in inst.params.items()}, "points": n, "tol": tol},
        seed=seed,
    )
    f = inst.sextet
    if inst.coeffs is not None:
        report.add(characterization_check(inst.coeffs, f, n=n, seed=seed, tol=tol))
        if full:
            report.add(coefficient_check(f, inst.coeffs))
            spec = family_spec(name, params)
            if spec is not None:
                report.add(family_check(f, spec))
    else:
        report.add(zcr_check(f, inst.relation, n=n, seed=seed, tol=tol))
    if full:
        report.add(structure_check(f, inst.relation, n=n, seed=seed, tol=tol))
    report.data = {"class": inst.fixture.cls, "delta": f.delta, "sextet": f.to_dict()}
    if inst.coeffs is not None:
        report.data["coefficients"] = inst.coeffs.to_dict()
    else:
        report.data["relation"] = inst.relation.to_dict()
    report.timings["total"] = time.perf_counter() - t0
    return report


def verify_sextet(f: FijSextet, rel: EvolutionRelation | None, coeffs: PdeCoeffs | None = None, *, n=200, seed=0, tol=1e-9) -> RunReport:
    """Checks for a user-supplied sextet (and relation or coefficients)."""
    report = RunReport("verify", inputs={"sextet": f.to_dict(), "points": n, "tol": tol}, seed=seed)
    if coeffs is None and rel is None:
        coeffs = compute_pde_coeffs(f)
        report.data["derived_coefficients"] = coeffs.to_dict()
    if coeffs is not None:
        report.add(characterization_check(coeffs, f, n=n, seed=seed, tol=tol))
        rel = coeffs.relation()
    report.add(structure_check(f, rel, n=n, seed=seed, tol=tol))
    if f.delta in (1, -1):
        report.add(zcr_check(f, rel, n=n, seed=seed, tol=tol))
    return report


def degenerate_on(f: FijSextet, values: Mapping, n=16) -> bool:
    """True when ``f11 f22 - f12 f21`` vanishes at the given jet values."""
    from .zcr import check_nondegeneracy

    points = {k: np.full(n, float(v)) for k, v in values.items()}
    return check_nondegeneracy(f, points).degenerate


__all__ = [
    "structure_check",
    "zcr_check",
    "zcr_equivalence_check",
    "coefficient_check",
    "family_check",
    "characterization_check",
    "run_fixture",
    "verify_sextet",
    "degenerate_on",
]
