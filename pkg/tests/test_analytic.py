import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from bec_impurity import analytic as an
from bec_impurity.params import default_params, thomas_fermi_scales


def potential(r, v0, a):
    return v0 / (1 + (r / a) ** 2) ** 2


@pytest.mark.parametrize("v0,a", [(1.0, 1.5), (-3.0, 0.4)])
def test_vtilde_at_zero_matches_radial_quadrature(v0, a):
    ref, _ = integrate.quad(lambda r: 4 * math.pi * r * r * potential(r, v0, a), 0, np.inf,
                            epsabs=0, epsrel=1e-12)
    assert an.vtilde(0.0, v0, a) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("ka", [0.1, 0.5, 1.0, 3.0, 7.0, 12.0, 20.0])
def test_vtilde_against_bessel_quadrature(ka):
    a, v0 = 0.8, 1.3
    k = ka / a
    # 4 pi int r^2 V j0(kr) dr = (4 pi / k) int r V sin(kr) dr; oscillatory
    # quadrature in extended precision
    mpmath.mp.dps = 30
    val = mpmath.quadosc(lambda r: r * v0 / (1 + (r / a) ** 2) ** 2 * mpmath.sin(k * r),
                         [0, mpmath.inf], omega=k)
    ref = float(4 * mpmath.pi / k * val)
    assert an.vtilde(k, v0, a) == pytest.approx(ref, rel=1e-6)


def test_vtilde_ratio_is_exponential_and_monotone():
    k = np.linspace(0, 20, 401)
    v = an.vtilde(k, 2.0, 0.7)
    np.testing.assert_allclose(v / v[0], np.exp(-0.7 * k), rtol=1e-14)
    assert np.all(np.diff(v) < 0) and np.all(v > 0)


def test_bogoliubov_limits():
    mu = 7.0
    assert an.bogoliubov_k(0.0, mu) == 0.0
    w = 0.05 * mu
    assert an.bogoliubov_k(w, mu) == pytest.approx(w / math.sqrt(mu), rel=1e-2)
    w = 100 * mu
    assert an.bogoliubov_k(w, mu) == pytest.approx(math.sqrt(2 * w), rel=1e-2)
    with pytest.raises(ValueError):
        an.bogoliubov_k(-1.0, mu)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 1e4), st.floats(0.1, 200.0))
def test_bogoliubov_inverts_dispersion(w, mu):
    k = float(an.bogoliubov_k(w, mu))
    eps = 0.5 * k * k
    assert math.sqrt(eps * (eps + 2 * mu)) == pytest.approx(w, rel=1e-10)


def _hp(strength=1.0, range_=1.5, mu=60.0):
    return an.HomogeneousParams(mu=mu, mass_ratio=10.0, atom_number=2_100_000,
                                coupling=4 * math.pi * 0.005, strength=strength,
                                range_=range_)


def _gaussian_vt(b, v0):
    return lambda k: v0 * (math.sqrt(math.pi) * b) ** 3 * np.exp(-(k * b) ** 2 / 4)


@pytest.mark.parametrize("vt", [None, _gaussian_vt(0.7, -2.0)], ids=["power-law", "gaussian"])
def test_omega_four_law(vt):
    hp = _hp(range_=0.5)
    w = np.geomspace(1e-3, 1e-2, 30) * hp.mu
    slope = an.loglog_slope(w, an.homogeneous_rate(w, hp, vt))
    assert abs(slope - 4.0) < 0.05


def test_omega_four_law_other_range():
    hp = _hp(strength=-3.0, range_=0.4, mu=12.0)
    w = np.geomspace(1e-3, 1e-2, 30) * hp.mu
    assert abs(an.loglog_slope(w, an.homogeneous_rate(w, hp)) - 4.0) < 0.05


def test_finite_range_bends_the_slope():
    # exp(-2 k a) lowers the apparent exponent by about 2 a <k> in the window
    w = np.geomspace(1e-3, 1e-2, 30) * 60.0
    slopes = [an.loglog_slope(w, an.homogeneous_rate(w, _hp(range_=a))) for a in (3.0, 1.5, 0.5, 0.1)]
    assert np.all(np.diff(slopes) > 0)
    assert abs(slopes[-1] - 4.0) < 0.01


def test_exponential_falloff_ratio():
    hp = _hp()
    w1, w2 = 400.0, 410.0
    k1, k2 = an.bogoliubov_k(np.array([w1, w2]), hp.mu)
    ratio = an.homogeneous_rate(w2, hp) / an.homogeneous_rate(w1, hp)
    assert ratio == pytest.approx(math.exp(-2 * (k2 - k1) * hp.range_), rel=0.05)


def test_rate_and_density_consistent():
    hp = _hp()
    w = np.linspace(0.5, 80, 50)
    J = an.homogeneous_spectral_density(w, hp)
    np.testing.assert_allclose(an.homogeneous_rate(w, hp),
                               math.pi * J / (2 * hp.mass_ratio * w), rtol=1e-12)


def test_printed_prefactor_relation():
    hp = _hp()
    assert hp.printed_prefactor / hp.prefactor == pytest.approx(2 / (math.pi * hp.atom_number))


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 500.0))
def test_rate_positive(w):
    assert an.homogeneous_rate(w, _hp()) > 0


def test_default_rate_is_unimodal():
    p = default_params()
    hp = an.HomogeneousParams.from_params(p, thomas_fermi_scales(p)[0])
    w = np.linspace(0.1, 100, 4000)
    d = np.diff(an.homogeneous_rate(w, hp))
    turns = np.flatnonzero(np.sign(d[1:]) != np.sign(d[:-1]))
    assert len(turns) == 1
    assert 0 < turns[0] < len(w) - 3


def test_landau_bound():
    assert an.landau_bound(1.0, 1.0) == 2.0
    assert an.landau_bound(3.0, 4.0) == 2 * an.landau_bound(3.0, 2.0)


def test_omega_four_regime_below_landau_bound():
    p = default_params()
    mu = thomas_fermi_scales(p)[0]
    hp = an.HomogeneousParams.from_params(p, mu)
    w = np.geomspace(1e-4, 10.0, 800) * mu
    local = np.gradient(np.log(an.homogeneous_rate(w, hp)), np.log(w))
    edge = w[np.argmax(np.abs(local - 4.0) > 0.05)]
    assert edge < an.landau_bound(mu, p.mass_ratio)


# --- toy model ----------------------------------------------------------------

T_RET = math.sqrt(2) * math.pi


def test_toy_without_return_is_exponential():
    tp = an.ToyModelParams(gamma1=0.1, gamma2=0.0, t_ret=T_RET, omega=15.0)
    t = np.linspace(0, 2 * T_RET, 300)
    np.testing.assert_array_equal(an.toy_delay_solution(tp, t), np.exp(-0.1 * t))


def test_toy_continuity_at_return():
    tp = an.ToyModelParams(gamma1=0.1, gamma2=0.3, t_ret=T_RET, omega=15.0)
    left, right = an.toy_delay_solution(tp, [T_RET * (1 - 1e-13), T_RET * (1 + 1e-13)])
    assert left == pytest.approx(right, abs=1e-12)


def test_toy_window_enforced():
    tp = an.ToyModelParams(gamma1=0.1, gamma2=0.3, t_ret=T_RET, omega=15.0)
    with pytest.raises(ValueError):
        an.toy_delay_solution(tp, [2.1 * T_RET])
    with pytest.raises(ValueError):
        an.toy_delay_solution(tp, [-0.1])


def test_toy_heating_cooling_signs_from_rest():
    # displaced start, zero velocity
    hot = an.ToyModelParams(0.1, 0.3, T_RET, 15.0, q0=1.0, v0=0.0)
    cold = an.ToyModelParams(0.1, 0.3, T_RET, 14.0, q0=1.0, v0=0.0)
    assert an.toy_prefactor(hot) < 0 and an.heating_sign(hot) == "heating"
    assert an.toy_prefactor(cold) > 0 and an.heating_sign(cold) == "cooling"


def test_toy_signs_for_velocity_start():
    # kicked start: the prefactor is -(v0/w) sin(w T) and has the same sign at 14 and 15
    p14 = an.toy_prefactor(an.ToyModelParams(0.1, 0.3, T_RET, 14.0, q0=0.0, v0=1.0))
    p15 = an.toy_prefactor(an.ToyModelParams(0.1, 0.3, T_RET, 15.0, q0=0.0, v0=1.0))
    assert p14 == pytest.approx(-math.sin(14 * T_RET) / 14)
    assert p15 == pytest.approx(-math.sin(15 * T_RET) / 15)


def test_heating_single_term():
    w = 2.0
    t_ret = 1.0  # sin(2) > 0
    assert an.heating_sign(an.ToyModelParams(0.1, 0.2, t_ret, w, q0=0.0, v0=1.0)) == "heating"


def test_neutral_node():
    w = 3.0
    tp = an.ToyModelParams(0.1, 0.2, math.pi / w, w, q0=0.0, v0=1.0)
    assert an.heating_sign(tp) == "neutral"


def test_sign_changes_within_one_interval():
    w0 = 15.0
    scan = np.linspace(w0, w0 + math.pi / T_RET, 400)
    signs = {an.heating_sign(an.ToyModelParams(0.1, 0.2, T_RET, w, 1.0, 0.3)) for w in scan}
    assert {"heating", "cooling"} <= signs


def test_toy_parameter_validation():
    with pytest.raises(ValueError):
        an.ToyModelParams(-0.1, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        an.ToyModelParams(0.1, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        an.ToyModelParams(0.1, 0.0, 1.0, 0.0)


def test_pulse_kernels_have_unit_weight():
    k = an.markov_kernel(0.2, 1.0, 1e-4, width=0.01)
    assert np.trapezoid(k.values, k.times) == pytest.approx(0.4, rel=1e-3)
    tk = an.toy_kernel(an.ToyModelParams(0.1, 0.3, 2.0, 10.0), 3.0, 1e-4)
    assert np.trapezoid(tk.values, tk.times) == pytest.approx(0.2 + 0.6, rel=1e-3)
