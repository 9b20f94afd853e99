import csv
import math

import numpy as np
import pytest

from pseudosurf.catalog import instance
from pseudosurf.errors import BlowUp, EmptyMask, SingularCoefficient
from pseudosurf.expr import jet
from pseudosurf.families import PdeCoeffs
from pseudosurf.numeric import (
    CSV_COLUMNS,
    SolutionGrid,
    curvature_estimate,
    fd,
    grid_residuals,
    pde_residual,
    sample_metric,
    solve_quasilinear,
    stable_step,
    write_csv,
)
from pseudosurf.parser import parse_expr

SG_KINK = "4*atan(exp(x + t))"


@pytest.mark.parametrize("order, expected", [(2, 4.0), (4, 16.0)])
def test_fd_convergence_order(order, expected):
    errs = []
    for n in (64, 128):
        x = np.linspace(0, 2 * math.pi, n, endpoint=False)
        h = x[1] - x[0]
        errs.append(np.max(np.abs(fd(np.sin(x), h, 0, order=order, periodic=True) - np.cos(x))))
    assert errs[0] / errs[1] == pytest.approx(expected, rel=0.05)


@pytest.mark.parametrize("order", [2, 4])
def test_fd_exact_on_low_degree_polynomials(order):
    x = np.linspace(-1, 1, 21)
    h = x[1] - x[0]
    np.testing.assert_allclose(fd(x**2, h, 0, order=order), 2 * x, atol=1e-12)
    np.testing.assert_allclose(fd(x**2, h, 0, deriv=2, order=order), 2.0, atol=1e-9)


def test_stable_step():
    assert stable_step(np.array([4.0]), np.array([1.0]), 0.1) == pytest.approx(0.4 * 0.1 / 3)
    assert stable_step(np.array([0.0]), np.array([0.0]), 0.1) == pytest.approx(0.04)


def test_grid_from_expression_exact_jets():
    g = SolutionGrid.from_expression("sin(x)*cos(t)", (0, 1), (0, 1), 0.05, exact_jets=True)
    j = g.jet_fields()
    np.testing.assert_allclose(j[jet(1, 1)], -np.sin(g.t)[:, None] * np.cos(g.x)[None, :], atol=1e-12)
    with pytest.raises(ValueError):
        j[jet(0, 0)][0, 0] = 1.0


def test_linear_wave_default_order_converges():
    errs = []
    for nx in (32, 64):
        g = solve_quasilinear(PdeCoeffs(1, 0, 0), "sin(x)", "0", nx=nx, t_end=0.5)
        exact = np.cos(g.t)[:, None] * np.sin(g.x)[None, :]
        errs.append(np.max(np.abs(g.z - exact)))
    assert math.log2(errs[0] / errs[1]) >= 1.8


def test_dirichlet_boundary_held():
    g = solve_quasilinear(PdeCoeffs(1, 0, 0), "sin(x)", "0", x_range=(0, math.pi), nx=41, t_end=0.5, bc="dirichlet")
    np.testing.assert_allclose(g.z[:, 0], 0.0, atol=1e-15)
    assert g.x[-1] == pytest.approx(math.pi)


def test_singular_coefficient():
    with pytest.raises(SingularCoefficient):
        solve_quasilinear(PdeCoeffs(0, parse_expr("1/z"), 0), "sin(x)", "0", nx=16, t_end=0.1)


def test_blow_up_carries_partial_grid():
    with pytest.raises(BlowUp) as info:
        solve_quasilinear(PdeCoeffs(0, 0, parse_expr("z^3")), "2", "0", nx=8, t_end=5.0, bound=1e3, ht=0.01)
    assert info.value.grid.nt >= 1


def test_unknown_bc():
    with pytest.raises(ValueError):
        solve_quasilinear(PdeCoeffs(1, 0, 0), "sin(x)", "0", bc="neumann")


def test_sine_gordon_kink_residuals_and_curvature():
    sg = instance("sine-gordon").sextet
    g = SolutionGrid.from_expression(SG_KINK, (-8, 8), (-8, 8), 0.05)
    rep = curvature_estimate(sample_metric(sg, g), g)
    assert rep.median_error <= 1e-3
    assert rep.target == -1.0
    r2 = grid_residuals(sg, g, order=2).max_abs()
    r4 = grid_residuals(sg, g, order=4).max_abs()
    assert max(r4.values()) < max(r2.values()) < 1e-2


def test_sine_gordon_residual_order_two():
    sg = instance("sine-gordon").sextet
    res = []
    for h in (0.1, 0.05):
        g = SolutionGrid.from_expression(SG_KINK, (-4, 4), (-4, 4), h)
        res.append(max(grid_residuals(sg, g, order=2).max_abs().values()))
    assert 3.5 <= res[0] / res[1] <= 4.5


def test_degenerate_metric_has_empty_mask():
    sg = instance("sine-gordon").sextet
    g = SolutionGrid.from_expression("0*x", (0, 1), (0, 1), 0.1)
    with pytest.raises(EmptyMask):
        curvature_estimate(sample_metric(sg, g), g)


def test_m1m2_solution():
    inst = instance("m1m2", {"m1": 2, "m2": 1, "ell": "z"})
    errs, res = [], []
    for nx in (64, 128):
        g = solve_quasilinear(inst.coeffs, "2 + 0.1*sin(x)", "0", nx=nx, t_end=0.5)
        r = pde_residual(inst.coeffs, g)
        res.append(np.nanmax(np.abs(r[2:-2])))
        errs.append(curvature_estimate(sample_metric(inst.sextet, g), g).median_error)
    assert res[1] < res[0] < 1e-2
    assert errs[1] < errs[0] < 1e-2


def test_write_csv(tmp_path):
    sg = instance("sine-gordon").sextet
    g = SolutionGrid.from_expression(SG_KINK, (-1, 1), (-1, 1), 0.25)
    ms = sample_metric(sg, g)
    rep = curvature_estimate(ms, g, margin=1)
    path = tmp_path / "out.csv"
    write_csv(path, g, K=rep.K, residuals=grid_residuals(sg, g, margin=1), stride=2)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) - 1 == len(g.t[::2]) * len(g.x[::2])
    assert all(r[4] == "" for r in rows[1:])


def test_gsp_runs_and_residual_is_at_least_second_order():
    inst = instance("gsp", {"delta": 1, "m": 1, "lambda": 1})
    res = []
    for nx in (128, 256):
        g = solve_quasilinear(inst.coeffs, "1 + 0.1*sin(x)", "0", nx=nx, t_end=1.0)
        assert g.t[-1] == pytest.approx(1.0)
        res.append(float(np.nanmax(np.abs(pde_residual(inst.coeffs, g)[2:-2]))))
    assert res[0] / res[1] >= 3.5


def test_sine_gordon_residual_bound_fine_grid():
    sg = instance("sine-gordon").sextet
    g = SolutionGrid.from_expression(SG_KINK, (-8, 8), (-8, 8), 0.02)
    assert max(grid_residuals(sg, g, order=4).max_abs().values()) <= 5e-4
