import math

import numpy as np
import pytest
from scipy.integrate import quad

from bicqed import EmitterArrayParams, specfun
from bicqed.errors import ContinuationError, DomainError


def test_b0_closed_values():
    assert specfun.b0_closed(1.0) == 0.0
    assert specfun.b0_closed(math.sqrt(2)) == pytest.approx(-math.log(math.sqrt(2) - 1) / math.pi, rel=1e-15)
    assert specfun.b0_closed(math.sqrt(2)) == pytest.approx(0.280548, abs=5e-6)
    assert specfun.b0_closed(1.25) == pytest.approx(math.log(2) / math.pi, rel=1e-14)


def test_b0_closed_below_threshold():
    with pytest.raises(DomainError):
        specfun.b0_closed(0.9)


@pytest.mark.parametrize("d", [0.3, 1.0, 7.0])
def test_cut_term_zero_matches_closed_form(d):
    assert specfun.cut_term(0, math.sqrt(2), d) == pytest.approx(0.28054992616959, rel=1e-12)


def test_cut_term_exponential_bound():
    assert abs(specfun.cut_term(5, 2.0, 7.0)) <= math.exp(-35) * specfun.b0_closed(2.0)


@pytest.mark.parametrize("j,E,d", [(1, math.sqrt(2), 7.0), (2, 1.1, 3.0), (1, 5.0, 0.5), (3, 1.01, 2.0)])
def test_cut_term_against_second_scheme(j, E, d):
    a = specfun.cut_term(j, E, d)
    b = specfun.cut_term_reference(j, E, d)
    assert abs(a - b) <= 1e-9 * max(abs(b), 1e-300) + 1e-15


def test_cut_terms_real_on_real_axis():
    b = specfun.cut_terms(1.3, 2.0, 4)
    assert b.dtype.kind == "f"
    assert np.all(np.diff(b) < 0)


def test_cut_integral_on_negative_real_axis_raises():
    with pytest.raises(ContinuationError):
        specfun.cut_integrals(2j, [1.0])


def _eta_direct(x, E):
    """Principal-value free form: substitute lambda = cosh t and integrate with scipy."""
    pref = math.sqrt((E * E - 1) / (2 * E)) / math.pi

    def integrand(t):
        lam = math.cosh(t)
        s = math.sinh(t)
        return math.exp(-abs(x) * lam) * (s - E) / (math.sqrt(s) * (E * E + s * s)) * s

    val, _ = quad(integrand, 0, 50, limit=400, epsabs=1e-14)
    return pref * val


@pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
def test_eta_two_schemes(x):
    E = math.sqrt(2)
    assert specfun.eta(x, E) == pytest.approx(specfun.eta_reference(x, E), abs=1e-9)
    assert specfun.eta(x, E) == pytest.approx(_eta_direct(x, E), abs=1e-9)


def test_eta_even_and_decaying():
    E = 1.3
    xs = np.array([0.2, 1.0, 4.0])
    assert np.allclose(specfun.eta(xs, E), specfun.eta(-xs, E), rtol=0, atol=1e-15)
    assert abs(specfun.eta(60.0, E)) < 1e-20


def test_xi1_properties():
    E, g = 1.2, 0.01
    k = math.sqrt(E * E - 1)
    assert specfun.xi1(0.0, E, g) == pytest.approx(-math.sqrt(g * E) / k * specfun.eta(0.0, E), rel=1e-12)
    assert specfun.xi1(2.3, E, g) == pytest.approx(specfun.xi1(-2.3, E, g), rel=1e-14)
    with pytest.raises(DomainError):
        specfun.xi1(1.0, 1.0, g)


def test_theta_examples():
    assert specfun.theta(math.sqrt(2), math.pi) == pytest.approx(math.pi, rel=1e-15)
    assert specfun.theta(1.0, 3.0) == 0
    z = 1.3 + 0.2j
    assert specfun.theta(z.conjugate(), 2.0) == pytest.approx(np.conj(specfun.theta(z, 2.0)), rel=1e-14)


def test_chi_examples():
    E = math.sqrt(2)
    p = EmitterArrayParams(n=3, epsilon=E, d=7.0, gamma=0.01)
    assert specfun.chi(E, p) == pytest.approx(specfun.b0_closed(E), rel=1e-14)
    p2 = p.replace(epsilon=E + 0.01)
    assert specfun.chi(E, p2) == pytest.approx(1.280548, abs=5e-6)
    assert specfun.chi_to_epsilon(specfun.chi(1.7, p2), 1.7, p2) == pytest.approx(p2.epsilon, abs=1e-12)


def _sigma_direct(E, delta, x, gamma):
    """Momentum integral  int dk gamma/(2 pi w) e^{ikx} / (w - z)  at z = E + i delta."""
    z = E + 1j * delta

    def f(k, part):
        w = math.sqrt(1 + k * k)
        v = gamma / (2 * math.pi * w) * math.cos(k * x) / (w - z) * 2  # even in k
        return v.real if part == 0 else v.imag

    edges = [0.0, math.sqrt(E * E - 1) - 0.05, math.sqrt(E * E - 1) + 0.05, 60.0]
    if x == 0:
        edges.append(math.inf)
    re = sum(quad(f, a, b, args=(0,), limit=2000, epsabs=1e-13)[0] for a, b in zip(edges, edges[1:]))
    im = sum(quad(f, a, b, args=(1,), limit=2000, epsabs=1e-13)[0] for a, b in zip(edges, edges[1:]))
    # for x != 0 the oscillating tail beyond k = 60 is of order gamma / (pi k^2 x), below 1e-7
    return re + 1j * im


def test_self_energy_against_momentum_integral():
    E, d, g = math.sqrt(2), 7.0, 0.01
    p = EmitterArrayParams(n=3, epsilon=1.2, d=d, gamma=g)
    sig = specfun.self_energy(E, p)
    for j in (0, 1):
        vals = [_sigma_direct(E, dl, j * d, g) for dl in (4e-3, 2e-3)]
        extrap = 2 * vals[1] - vals[0]
        assert abs(extrap - sig[0, j]) < 1e-5 * max(1.0, abs(sig[0, j])) + 2e-6


def test_self_energy_toeplitz_and_symmetric():
    p = EmitterArrayParams(n=4, epsilon=1.2, d=2.0, gamma=0.02)
    S = specfun.self_energy(1.3 + 0.01j, p)
    assert np.allclose(S, S.T, atol=0)
    assert np.allclose(S[:-1, :-1], S[1:, 1:], atol=1e-15)


def test_sheet_two_continues_through_cut():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=3.0, gamma=0.02)
    E = 1.25
    upper = specfun.self_energy(E + 1e-12j, p, "I")
    lower2 = specfun.self_energy(E - 1e-12j, p, "II")
    assert np.max(np.abs(upper - lower2)) < 1e-10
    lower3 = specfun.self_energy(E + 1e-12j, p, "III")
    assert np.max(np.abs(specfun.self_energy(E - 1e-12j, p, "I") - lower3)) < 1e-10


def test_schwarz_reflection_first_sheet():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=3.0, gamma=0.02)
    z = 1.4 + 0.3j
    assert np.allclose(specfun.self_energy(z.conjugate(), p), np.conj(specfun.self_energy(z, p)), atol=1e-14)


def test_derivative_against_finite_difference():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=4.0, gamma=0.05)
    E, h = 1.3, 1e-6
    fd = (specfun.self_energy(E + h, p) - specfun.self_energy(E - h, p)) / (2 * h)
    assert np.max(np.abs(fd - specfun.self_energy_derivative(E, p))) < 1e-8


def test_cut_term_bound_sweep():
    for d in (0.05, 0.5, 3.0, 20.0):
        for E in (1.0001, 1.3, 5.0, 100.0):
            b = specfun.cut_terms(E, d, 4)
            j = np.arange(1, 5)
            assert np.all(np.abs(b[1:]) <= np.exp(-j * d) * abs(b[0]) * (1 + 1e-12))


def test_sheet_consistency():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=2.0, gamma=0.02)
    for z in (1.3 - 0.05j, 1.7 + 0.02j, 2.5 - 0.3j):
        s1 = specfun.self_energy(z, p, "I")
        assert np.allclose(specfun.self_energy(z, p, "II") - s1, -(specfun.self_energy(z, p, "III") - s1),
                           atol=1e-13)


def test_kernel_zeros_at_half_wavelength():
    nu, d, g = 2, 6.0, 0.01
    E = math.sqrt(1 + (nu * math.pi / d) ** 2)
    k = math.sqrt(E * E - 1)
    xs = np.arange(1, 6) * d / nu
    osc = np.sin(np.abs(xs) * k)
    assert np.max(np.abs(osc)) < 1e-14
    full = specfun.xi1(xs, E, g)
    eta_part = -math.sqrt(g * E) / k * specfun.eta(xs, E)
    assert np.allclose(full, eta_part, atol=1e-15)
