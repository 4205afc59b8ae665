import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orliczlab import PhiFunction, QuadratureRule
from orliczlab import domain_geometry as dg
from orliczlab import exponent_fields as ef
from orliczlab import modular_norms as mn
from orliczlab.phi_core import NonMonotoneError

from .conftest import UNIT1, UNIT2, const_phi

SQ = dg.square()
IV = dg.interval()
FINE_1D = QuadratureRule("midpoint", 4096)
# frozen: brentq root of 0.1 (1/l)^2 / log(e + 1/l) = 1
NORM_Q_NEG = 0.22543501566614188
LOWER_Q_NEG = 0.19830029669504345   # 0.1^(1/2) log(e + 10)^(-1/2)


def ones(dom, value=1.0, rule=None):
    return mn.GridFunction.from_callable(dom, lambda x: np.full(len(x), value), rule,
                                         gradient=lambda x: np.zeros_like(x))


def ramp(rule=FINE_1D, slope=1.0):
    return mn.GridFunction.from_callable(IV, lambda x: slope * x[:, 0], rule,
                                         gradient=lambda x: np.full_like(x, slope))


def test_modular_examples():
    assert mn.modular(ones(SQ), const_phi(2, 0)) == pytest.approx(1.0, rel=1e-12)
    assert mn.modular(ones(IV, 2.0), const_phi(2, 0, UNIT1)) == pytest.approx(4.0, rel=1e-12)
    assert mn.modular(ramp(), const_phi(2, 0, UNIT1)) == pytest.approx(1 / 3, abs=1e-6)


def test_modular_rejects_nan():
    with pytest.raises(ValueError, match="NaN"):
        mn.GridFunction.from_callable(SQ, lambda x: np.full(len(x), np.nan))


def test_luxemburg_examples():
    phi = const_phi(2, 0)
    assert mn.luxemburg_norm(ones(SQ), phi) == pytest.approx(1.0, rel=1e-8)
    quarter = mn.GridFunction.characteristic(dg.rectangle([0, 0], [0.5, 0.5]))
    assert mn.luxemburg_norm(quarter, phi) == pytest.approx(0.5, rel=1e-8)
    p1 = const_phi(2.5, 0.3, UNIT1)
    assert mn.luxemburg_norm(ones(IV, 3.0), p1) == pytest.approx(
        3 * mn.luxemburg_norm(ones(IV), p1), rel=1e-7)


def test_sobolev_examples():
    phi = const_phi(2, 0)
    assert mn.sobolev_norm(ones(SQ, 0.7), phi) == pytest.approx(0.7, rel=1e-8)
    phi1 = const_phi(2, 0, UNIT1)
    assert mn.sobolev_norm(ramp(), phi1) == pytest.approx(np.sqrt(4 / 3), rel=1e-6)
    assert mn.sobolev_norm(ramp(slope=2.0), phi1) == pytest.approx(
        2 * mn.sobolev_norm(ramp(), phi1), rel=1e-6)
    no_grad = mn.GridFunction.from_callable(IV, lambda x: x[:, 0])
    with pytest.raises(ValueError, match="gradient"):
        mn.sobolev_norm(no_grad, phi1)


def test_finite_difference_gradient_matches_polynomial():
    f = lambda x: x[:, 0] ** 2 + 3 * x[:, 0] * x[:, 1]
    g = mn.GridFunction.from_callable(SQ, f, QuadratureRule(resolution=16), gradient="fd")
    exact = np.stack([2 * g.points[:, 0] + 3 * g.points[:, 1], 3 * g.points[:, 0]], axis=1)
    assert np.max(np.abs(g.gradient - exact)) <= 1e-6


@pytest.mark.parametrize("a", [0.1, 2.0, 10.0])
def test_homogeneity_constant_exponents(a):
    phi = const_phi(1.8, 0.4)
    f = mn.GridFunction.from_callable(SQ, lambda x: 1 + x[:, 0] * x[:, 1],
                                      QuadratureRule(resolution=32))
    assert mn.luxemburg_norm(f.scaled(a), phi) == pytest.approx(a * mn.luxemburg_norm(f, phi),
                                                                rel=1e-6)


@given(p=st.sampled_from([1.5, 2.0, 3.0]), seed=st.integers(0, 10 ** 6))
def test_lp_reduction(p, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=3)
    f = mn.GridFunction.from_callable(SQ, lambda x: c[0] + c[1] * x[:, 0] + c[2] * x[:, 1],
                                      QuadratureRule(resolution=32))
    if np.all(f.values == 0):
        return
    assert mn.luxemburg_norm(f, const_phi(p, 0)) == pytest.approx(mn.lp_norm(f, p), rel=1e-5)


@given(seed=st.integers(0, 10 ** 6))
def test_unit_ball_random_piecewise_constant(seed):
    rng = np.random.default_rng(seed)
    vals = rng.uniform(0, 5, size=(4, 4))
    f = mn.GridFunction.from_callable(
        SQ, lambda x: vals[np.minimum((x[:, 0] * 4).astype(int), 3),
                           np.minimum((x[:, 1] * 4).astype(int), 3)],
        QuadratureRule(resolution=32))
    phi = PhiFunction(ef.affine(1.2, 1.0, UNIT2), ef.affine(-0.1, 0.5, UNIT2, 1, "q"), 2)
    chk = mn.unit_ball_check(f, phi)
    assert chk.passes and 1 - 1e-6 <= chk.rho_at_norm <= 1


def test_unit_ball_scale_invariance():
    phi = PhiFunction(ef.affine(1.5, 1.0, UNIT2), ef.constant(0.2, UNIT2, "q"), 2)
    f = mn.GridFunction.characteristic(dg.rectangle([0.1, 0.1], [0.6, 0.4]), scale=1e3)
    assert mn.unit_ball_check(f, phi).passes


def test_modular_monotone_in_function():
    phi = PhiFunction(ef.affine(1.5, 1.0, UNIT2), ef.constant(0.2, UNIT2, "q"), 2)
    rule = QuadratureRule(resolution=16)
    f = mn.GridFunction.from_callable(SQ, lambda x: x[:, 0], rule)
    g = mn.GridFunction.from_callable(SQ, lambda x: x[:, 0] + x[:, 1] ** 2, rule)
    assert mn.modular(f, phi) <= mn.modular(g, phi)
    assert mn.modular(f.scaled(0.0), phi) == 0.0


def test_non_monotone_modular_detected():
    with pytest.raises(NonMonotoneError):
        mn.luxemburg_norm(ones(SQ, 1.0), const_phi(1, -5))


def test_char_bounds_q_zero_exact():
    rep = mn.char_fn_norm_bounds(dg.rectangle([0, 0], [0.3, 0.3]), const_phi(2, 0))
    assert rep.lower == pytest.approx(0.3, rel=1e-9) and rep.upper == pytest.approx(0.3, rel=1e-9)
    assert rep.computed_norm == pytest.approx(0.3, rel=1e-7) and rep.passes


def test_char_bounds_variable_p():
    p = ef.affine(2.0, 1.0, UNIT2)
    phi = PhiFunction(p, ef.constant(0.0, UNIT2, "q"), 2)
    # thin strip across x in [0, 1], so p ranges over [2, 3] on A and |A| = 0.01
    rep = mn.char_fn_norm_bounds(dg.rectangle([0, 0], [1, 0.01]), phi)
    # p_A^- and p_A^+ are node extrema, half a cell inside the exact range
    assert rep.lower == pytest.approx(0.1, rel=5e-3)
    assert rep.upper == pytest.approx(0.01 ** (1 / 3), rel=5e-3)
    assert rep.lower <= rep.computed_norm <= rep.upper and rep.passes


def test_char_bounds_q_negative():
    rep = mn.char_fn_norm_bounds(dg.rectangle([0, 0], [0.1, 1.0]), const_phi(2, -1))
    assert rep.lemma_case == "q_negative" and rep.preconditions_met
    assert rep.lower == pytest.approx(LOWER_Q_NEG, rel=1e-9)
    assert rep.upper == pytest.approx(np.sqrt(0.1), rel=1e-9)
    assert rep.computed_norm == pytest.approx(NORM_Q_NEG, rel=1e-7) and rep.passes


def test_char_bounds_preconditions():
    big = mn.char_fn_norm_bounds(dg.rectangle([0, 0], [0.8, 0.8]), const_phi(2, -0.5))
    assert not big.preconditions_met and big.passes is None
    with pytest.raises(ValueError, match="= 0"):
        mn.char_fn_norm_bounds(dg.rectangle([0.2, 0.2], [0.2, 0.5]), const_phi(2, 0))


def test_char_bounds_formulas_return_floats():
    vals = mn.char_bounds_formulas(0.1, 1.5, 2.0, -0.2, 0.3, "q_mixed")
    assert all(type(v) is float for v in vals)
    with pytest.raises(ValueError):
        mn.char_bounds_formulas(0.1, 1.5, 2.0, -0.2, 0.3, "sideways")


def test_grid_file_round_trip(tmp_path):
    xs = (np.arange(8) + 0.5) / 8
    path = tmp_path / "f.csv"
    path.write_text("x,y,value\n" + "\n".join(f"{a},{b},{a + b}" for a in xs for b in xs))
    f = mn.GridFunction.from_csv(path, SQ)
    assert f.measure == pytest.approx(1.0)
    a = mn.luxemburg_norm(f, const_phi(2, 0))
    assert a == mn.luxemburg_norm(mn.GridFunction.from_csv(path, SQ), const_phi(2, 0))


def test_lp_norm_matches_direct_quadrature():
    f = ramp()
    assert mn.lp_norm(f, 2.0) == pytest.approx(np.sqrt(1 / 3), rel=1e-6)
