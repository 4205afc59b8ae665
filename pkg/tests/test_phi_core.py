import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from orliczlab import Box, PhiFunction
from orliczlab import exponent_fields as ef
from orliczlab import phi_core as pc

from .conftest import UNIT1, UNIT2, const_phi

E = np.e
# frozen oracle values (scipy brentq / direct arithmetic)
PHI_E2 = 9.341548540943208          # (e^2 - e) * 2
PSI_LOG4 = 2.9744392148233296       # log(e + 1)^4
A0_BETA_P1Q1 = 0.7957028110823632   # root of t log(e + t) = 1


def test_eval_phi_examples():
    assert pc.eval_phi(const_phi(2, 0), [0.5, 0.5], 3.0) == 9.0
    assert pc.eval_phi(const_phi(1.7, -0.3), [0.1, 0.2], 0.0) == 0.0
    assert pc.eval_phi(const_phi(1, 1), [0.5, 0.5], E * E - E) == pytest.approx(PHI_E2, rel=1e-14)


def test_eval_phi_rejects_negative_t():
    with pytest.raises(ValueError):
        pc.eval_phi(const_phi(2, 0), [0.5, 0.5], -1.0)


@pytest.mark.parametrize("p,n,expected", [(2, 4, 4), (2, 3, 6), (1.5, 2, 6)])
def test_sobolev_conjugate(p, n, expected):
    assert pc.sobolev_conjugate(p, n) == pytest.approx(expected, rel=1e-14)


def test_sobolev_conjugate_rejects_p_at_least_n():
    with pytest.raises(ValueError):
        pc.sobolev_conjugate(2.0, 2)


def test_eval_psi_examples():
    box = Box.unit(2)
    assert pc.eval_psi(const_phi(2, 0, box, n=4), [0.5, 0.5], 2.0) == pytest.approx(16.0)
    assert pc.eval_psi(const_phi(2, 2, box, n=4), [0.5, 0.5], 0.0) == 0.0
    assert np.log(E + 1) ** 4 == pytest.approx(PSI_LOG4, rel=1e-15)
    assert pc.eval_psi(const_phi(2, 2, box, n=4), [0.5, 0.5], 1.0) == pytest.approx(PSI_LOG4,
                                                                                     rel=1e-14)
    with pytest.raises(ValueError):
        pc.eval_psi(const_phi(2, 0, box, n=2), [0.5, 0.5], 1.0)


def test_invert_examples():
    assert pc.invert_phi(const_phi(2, 0), [0.5, 0.5], 9.0) == pytest.approx(3.0, rel=1e-10)
    assert pc.invert_phi(const_phi(2, 0), [0.5, 0.5], 0.0) == 0.0
    assert pc.invert_phi(const_phi(1, 1), [0.5, 0.5], PHI_E2) == pytest.approx(E * E - E, rel=1e-10)


def test_invert_detects_non_monotone_phi():
    with pytest.raises(pc.NonMonotoneError) as info:
        pc.invert_phi(const_phi(1, -5), [0.5, 0.5], 0.2)
    lo, hi = info.value.pair
    assert lo < hi


@given(p=st.floats(1.0, 4.0), q=st.floats(-1.0, 2.0), t=st.floats(0.0, 1e6))
def test_round_trip_property(p, q, t):
    if p + q < 1:
        q = 1 - p
    s = pc.phi_values(t, p, q)
    back = pc.invert_values(p, q, s)
    assert abs(back - t) <= 1e-6 * max(1.0, t)


def test_psi_exponent_identity():
    box = UNIT2
    p = ef.log_bump(1.2, box, amplitude=0.5, constant_c=1.0, center=[0.3, 0.4])
    phi = PhiFunction(p, ef.constant(0.3, box, "q"), 2)
    psi = phi.conjugate()
    pts = box.grid(17)
    assert np.max(np.abs(1 / psi.p(pts) - 1 / p(pts) + 1 / 2)) <= 1e-12
    assert np.allclose(psi.q(pts), 0.3 * psi.p(pts) / p(pts), rtol=1e-14)


@given(p=st.floats(1.0, 3.0), q=st.floats(0.0, 2.0))
def test_phi_monotone_in_t(p, q):
    t = np.logspace(-8, 8, 200)
    v = pc.phi_values(t, p, q)
    assert np.all(np.diff(v) >= 0)


def test_A0_examples():
    assert pc.check_A0(const_phi(2, 0)).beta_or_bound == pytest.approx(1.0, rel=1e-10)
    assert brentq(lambda t: t * np.log(E + t) - 1, 0, 1, xtol=1e-15) == pytest.approx(
        A0_BETA_P1Q1, rel=1e-14)
    rep = pc.check_A0(const_phi(1, 1))
    assert rep.beta_or_bound == pytest.approx(A0_BETA_P1Q1, rel=1e-9)
    phi = PhiFunction(ef.log_bump(1.5, UNIT2, amplitude=1.0, center=[0.5, 0.5]),
                      ef.sine(0.0, 0.5, UNIT2, role="q", kind="loglog_holder"), 2)
    rep = pc.check_A0(phi)
    assert rep.passes and rep.beta_or_bound > 0
    # the witness reproduces the extremal value
    x = rep.witnesses[0]["x"]
    inv = pc.invert_phi(phi, x, 1.0)
    assert min(inv, 1 / inv) == pytest.approx(rep.beta_or_bound, rel=1e-12)


def test_A0_empty_samples():
    with pytest.raises(ValueError, match="empty"):
        pc.check_A0(const_phi(2, 0), np.empty((0, 2)))


def test_A1_constant_exponents():
    rep = pc.check_A1(const_phi(2.5, 0.5), [([0.5, 0.5], 0.1), ([0.2, 0.2], 0.3)])
    assert rep.beta_or_bound == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("role", ["p", "q"])
def test_A1_stable_across_dyadic_balls(role):
    box = UNIT2
    if role == "p":
        phi = PhiFunction(ef.log_bump(2.0, box, 1.0, 1.0, center=[0.5, 0.5]),
                          ef.constant(0.0, box, "q"), 2)
    else:
        phi = PhiFunction(ef.constant(2.0, box), ef.loglog_bump(0.0, box, 1.0, 1.0,
                                                                center=[0.5, 0.5]), 2)
    betas = [pc.check_A1(phi, [([0.5, 0.5], 2.0 ** -k)]).beta_or_bound for k in range(2, 11)]
    assert min(betas) > 0.3
    assert betas[-1] >= 0.5 * betas[0]


def test_A1_rejects_big_ball():
    with pytest.raises(ValueError, match="measure"):
        pc.check_A1(const_phi(2, 0), [([0.5, 0.5], 0.6)])


def test_A2_cases():
    box = UNIT2
    rep = pc.check_A2(const_phi(3, 0), ef.DecayData(3.0, 0.5))
    assert rep.passes
    rep = pc.check_A2(const_phi(2, 1), ef.DecayData(3.0, 0.5))
    assert rep.passes and rep.details["case"] == "q_nonneg"
    rep = pc.check_A2(const_phi(2, -0.5), ef.DecayData(3.0, 0.5))
    assert rep.passes and rep.details["case"] == "q_negative"
    with pytest.raises(ValueError, match="decay"):
        pc.check_A2(const_phi(2, 0, box), None)


def test_dec_examples():
    assert pc.check_dec(const_phi(2, 0)).passes
    rep = pc.check_dec(const_phi(2, 1))
    assert rep.passes and rep.details["exponent"] == 3.0
    phi = PhiFunction(ef.affine(1.5, 0.5, UNIT2), ef.affine(0.0, 1.0, UNIT2, axis=1, role="q"), 2)
    rep = pc.check_dec(phi)
    assert rep.passes and rep.details["exponent"] == pytest.approx(3.0)


@pytest.mark.parametrize("grid", [[0.0, 1.0], [1.0, 0.5, 2.0], [1.0]])
def test_dec_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        pc.check_dec(const_phi(2, 0), t_grid=grid)


def test_ainc1_examples():
    assert pc.check_ainc1(const_phi(1, 0)).beta_or_bound == 1.0
    rep = pc.check_ainc1(const_phi(1, 0.5))
    assert rep.passes and rep.beta_or_bound == 1.0
    bad = pc.check_ainc1(const_phi(1, -0.5))
    assert not bad.passes and bad.beta_or_bound > 1
    w = bad.witnesses[0]
    assert w["s"] < w["t"]
    g = lambda t: pc.phi_values(t, 1.0, -0.5) / t
    assert g(w["s"]) / g(w["t"]) == pytest.approx(w["ratio"], rel=1e-12)


def test_sandwich_constants_positive():
    phi = PhiFunction(ef.affine(1.5, 1.0, UNIT2), ef.affine(-0.4, 0.8, UNIT2, 1, "q"), 2)
    lo, hi = pc.sandwich_constants(phi)
    assert 0 < lo <= hi < np.inf


def test_q_case():
    assert pc.q_case([0.0, 1.0]) == "q_nonneg"
    assert pc.q_case([-1.0, -0.1]) == "q_negative"
    assert pc.q_case([-1.0, 0.0]) == "q_mixed"
