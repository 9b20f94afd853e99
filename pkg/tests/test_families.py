import numpy as np
import pytest
import sympy as sp

from pseudosurf.errors import (
    DegenerateF11,
    Delta0Vanishes,
    DeltaVanishes,
    HConstant,
    PsiVanishes,
    ShapeMismatch,
    SpecInvariantViolated,
)
from pseudosurf.expr import Z, jet, normalize
from pseudosurf.families import (
    CaseA,
    CaseB1,
    CaseB2,
    Cor33,
    Cor34,
    Cor35,
    PdeCoeffs,
    build,
    compute_pde_coeffs,
    cor33_coefficients,
    cor34_coefficients,
    cor35_coefficients,
    extract_affine_data,
    random_cor33,
    random_cor34,
    random_cor35,
    spec_from_dict,
    spec_to_dict,
    verify_characterization,
)
from pseudosurf.parser import parse_expr
from pseudosurf.zcr import FijSextet

Zx, Zt = jet(1, 0), jet(0, 1)
P = parse_expr


def same(a, b):
    return all(normalize(x - y) == 0 for x, y in zip(a, b))


def coeff_tuple(c):
    return (c.A, c.B, c.C)


def gsp_spec(delta=1, m=0):
    return Cor33(P(f"({delta})*(z^2 + {m})/2 + 1"), sp.Integer(1), P(f"({delta})*z"), sp.Integer(0), delta)


@pytest.mark.parametrize("delta", [1, -1])
def test_cor33_gives_short_pulse(delta):
    res = build(gsp_spec(delta))
    want = (0, 2 * delta / Z**2, -2 * (Zt**2 + 1) / Z)
    assert same(coeff_tuple(res.coeffs), want)
    assert same(coeff_tuple(cor33_coefficients(gsp_spec(delta), res.sextet)), want)
    assert verify_characterization(res.coeffs, res.sextet).passed


def test_cor33_degeneracies():
    with pytest.raises(Delta0Vanishes):
        build(Cor33(Z, Z, Z, Z))
    with pytest.raises(HConstant):
        build(Cor33(sp.Integer(0), sp.Integer(1), sp.Integer(2), Z))
    assert issubclass(Delta0Vanishes, DeltaVanishes)


def test_case_a_rejects_vanishing_discriminant():
    with pytest.raises(DeltaVanishes):
        build(CaseA(sp.Integer(0), sp.Integer(0), Z, Z, Z, Z))


def test_case_a_with_zero_phi_matches_cor33():
    spec = CaseA(sp.Integer(0), sp.Integer(0), Z, sp.Integer(1), Z**2, sp.Integer(0), 1)
    res = build(spec)
    ref = build(Cor33(Z, sp.Integer(1), Z**2, sp.Integer(0), 1))
    assert same(coeff_tuple(res.coeffs), coeff_tuple(ref.coeffs))


def test_case_b_requires_h_depending_on_z_t():
    with pytest.raises(DegenerateF11):
        build(CaseB2(Zx + Z, sp.Integer(0), sp.Integer(1), Z))


def test_case_b1_and_b2_verify():
    b1 = build(CaseB1(Zt + Z * Zx, sp.Integer(0), Z, sp.Integer(1), sp.Integer(1), delta=1, sign=1))
    assert verify_characterization(b1.coeffs, b1.sextet).passed
    b2 = build(CaseB2(Zt + Zx, sp.Integer(0), sp.Integer(1), Z, sign=1))
    assert verify_characterization(b2.coeffs, b2.sextet).passed


def test_case_b1_rejects_constant_rho():
    with pytest.raises(SpecInvariantViolated):
        build(CaseB1(Zt, sp.Integer(0), sp.Integer(2), sp.Integer(1), sp.Integer(0)))


def test_cor34_and_cor35_independent_routes():
    s34 = Cor34(Zt + Z, Z, sp.Integer(1), sp.Integer(2), delta=1, sign=1)
    r34 = build(s34)
    assert same(coeff_tuple(r34.coeffs), coeff_tuple(cor34_coefficients(s34)))
    s35 = Cor35(Zt + Zx, sp.Integer(1), Z, sign=1)
    r35 = build(s35)
    assert same(coeff_tuple(r35.coeffs), coeff_tuple(cor35_coefficients(s35)))


def test_cor35_psi_vanishes():
    with pytest.raises(PsiVanishes):
        build(Cor35(Zt, sp.Integer(0), Z))


def test_compute_pde_coeffs_needs_f11_t():
    f = FijSextet(Zx, Zt, 1, 0, 0, 1)
    with pytest.raises(DegenerateF11):
        compute_pde_coeffs(f)


def test_affine_shape_is_enforced():
    f = FijSextet(Zt, Zx, Zx**2, 0, 0, 1)
    with pytest.raises(ShapeMismatch):
        extract_affine_data(f)
    g = FijSextet(Zt, Zx, Zt, 0, 0, 1)
    with pytest.raises(ShapeMismatch):
        extract_affine_data(g)


def test_wrong_coefficients_fail():
    res = build(gsp_spec())
    bad = PdeCoeffs(res.coeffs.A, res.coeffs.B * 2, res.coeffs.C, 1)
    rep = verify_characterization(bad, res.sextet)
    assert not rep.passed
    assert rep.max_scaled["eq2"] > 1e-3


def test_spec_dict_roundtrip():
    spec = gsp_spec(-1, 1)
    again = spec_from_dict(spec_to_dict(spec))
    assert again == spec
    assert spec_from_dict({"variant": "B2", "h": "z_t", "phi": "0", "psi": "1", "chi": "z"}).variant == "case_b2"
    with pytest.raises(ValueError):
        spec_from_dict({"variant": "cor99"})
    with pytest.raises(ValueError):
        spec_from_dict({"variant": "cor33", "psi21": "z"})


def test_spec_params_substitution():
    spec = spec_from_dict({"variant": "cor33", "psi21": "m*z", "psi22": "1", "psi31": "z^2", "psi32": "0"}, {"m": 3})
    assert spec.psi21 == 3 * Z


def test_random_specs_are_reproducible():
    a = [random_cor33(np.random.default_rng(7)) for _ in range(2)]
    assert a[0] == a[1]
    assert random_cor34(np.random.default_rng(3)) == random_cor34(np.random.default_rng(3))
    assert random_cor35(np.random.default_rng(3)) == random_cor35(np.random.default_rng(3))


def test_build_result_serializes():
    d = build(gsp_spec()).to_dict()
    assert set(d) >= {"coefficients", "sextet"}
