import math

import numpy as np
import pytest

from bicqed import EmitterArrayParams, Sector, poles, specfun, spectrum
from bicqed.errors import ConvergenceError

FIG_GAMMA = 2 * math.pi * 1e-4


def test_f3_at_pi():
    assert poles.f3(math.pi, 0.0, 0.0) == pytest.approx(-9.0, abs=1e-14)
    assert (3j) ** 2 == pytest.approx(poles.f3(math.pi, 0.0, 0.0), abs=1e-14)


def test_f3_is_conjugate_of_block_discriminant():
    th, b1, b2 = 1.3, 0.02, 0.007
    a1 = np.exp(1j * th) + 1j * b1
    a2 = np.exp(2j * th) + 1j * b2
    assert poles.f3(th, b1, b2) == pytest.approx(-np.conj(a2**2 + 8 * a1**2), abs=1e-14)


def test_closed_form_matches_block_eigenvalues():
    for n in (3, 4):
        p = EmitterArrayParams(n=n, epsilon=1.3, d=3.0, gamma=0.01)
        for sector in (Sector.ANTISYMMETRIC, Sector.SYMMETRIC):
            exact = np.sort_complex(poles.first_order_poles(p, sector))
            k = math.sqrt(p.epsilon**2 - 1)
            b = specfun.cut_terms(p.epsilon, p.d, n - 1)
            closed = np.sort_complex(np.unique(np.array(
                [p.epsilon - 1j * p.gamma * poles._block_alpha(n, sector, p.d * k, b, br) / k
                 for br in "+-"])))
            assert np.allclose(closed, exact, atol=1e-14)


def test_antisymmetric_n3_width():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=15.0, gamma=FIG_GAMMA)
    z = poles.first_order_poles(p, "a")[0]
    k = math.sqrt(p.epsilon**2 - 1)
    assert -z.imag == pytest.approx(p.gamma / k * (1 - math.cos(2 * p.d * k)), rel=1e-12)


def test_width_vanishes_at_resonance():
    d, nu = 15.0, 3
    E = spectrum.resonant_energy(nu, d)
    p = EmitterArrayParams(n=3, epsilon=E, d=d, gamma=FIG_GAMMA)
    assert abs(poles.first_order_poles(p, "a")[0].imag) < 1e-16
    p4 = EmitterArrayParams(n=4, epsilon=spectrum.resonant_energy(1, d), d=d, gamma=FIG_GAMMA)
    assert np.min(np.abs(poles.first_order_poles(p4, "s").imag)) < 1e-8 * p4.gamma


def test_sheet_continuity():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=4.0, gamma=0.02)
    for sector in ("a", "s"):
        up = poles.det_on_sheet(1.3 + 1e-13j, p, sector, "I")
        down = poles.det_on_sheet(1.3 - 1e-13j, p, sector, "II")
        assert abs(up - down) < 1e-10 * max(1.0, abs(up))


def test_det_vanishes_at_bic():
    s = [t for t in spectrum.solve_bic(EmitterArrayParams(n=3, epsilon=1.0, d=7.0, gamma=0.01), e_max=1.3)]
    for st in s:
        M = poles.inverse_propagator(st.E, st.params, st.sector, "I")
        unit = st.gamma / math.sqrt(st.E**2 - 1)
        assert abs(np.linalg.det(M)) <= 1e-10 * unit ** M.shape[0]


def test_decoupled_limit():
    for g in (1e-3, 1e-5, 1e-7):
        p = EmitterArrayParams(n=3, epsilon=1.2, d=5.0, gamma=g)
        for sector in ("a", "s"):
            z = poles.find_pole(poles.approx_pole(p, sector), p, sector)
            assert abs(z.z_p - 1.2) < 10 * g


def test_find_pole_near_fig_parameters():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=15.0, gamma=FIG_GAMMA)
    for sector in ("a", "s"):
        for branch in ("+", "-"):
            z0 = poles.approx_pole(p, sector, branch)
            res = poles.find_pole(z0, p, sector)
            assert res.z_p.imag <= 1e-12
            # second-order remainder: (gamma alpha / k)^2 times the phase slope d E / k
            k = math.sqrt(p.epsilon**2 - 1)
            alpha = abs(z0 - p.epsilon) * k / p.gamma
            bound = 4 * (p.gamma / k) ** 2 * max(1.0, alpha**2) * p.d * p.epsilon / k
            assert abs(res.z_p - z0) < bound
            assert res.decay_rate >= 0


def test_gamma_halving_quarter_error():
    base = EmitterArrayParams(n=3, epsilon=1.2, d=15.0, gamma=1e-4)
    errs = []
    for g in (1e-4, 5e-5):
        p = base.replace(gamma=g)
        z0 = poles.approx_pole(p, "s", "+")
        errs.append(abs(poles.find_pole(z0, p, "s").z_p - z0))
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_bic_pole_is_real():
    d, g = 7.0, 0.01
    res = [r for r in spectrum.exact_resonant_epsilons(3, 1, d, g) if r.hermitian][0]
    p = EmitterArrayParams(n=3, epsilon=float(res.epsilons[0]), d=d, gamma=g)
    z = poles.find_pole(poles.approx_pole(p, "a"), p, "a")
    assert abs(z.z_p.imag) < 1e-10
    assert abs(z.z_p.real - spectrum.resonant_energy(1, d)) < 1e-6


def test_find_pole_reports_trajectory():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=15.0, gamma=FIG_GAMMA)
    with pytest.raises(ConvergenceError) as info:
        poles.find_pole(1.5 - 0.3j, p, "s", max_iter=2)
    assert len(info.value.args) >= 1


def test_invalid_inputs():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=15.0, gamma=FIG_GAMMA)
    with pytest.raises(ValueError):
        poles.approx_pole_n3(p, "s", branch="x")
    with pytest.raises(ValueError):
        poles.approx_pole_n4(p, "s")
    with pytest.raises(ValueError):
        poles.critical_distance(2, 0.01)
    with pytest.raises(ValueError):
        poles.pole_trajectory(p, "s", [1.2], vary="gamma")


def test_trajectory_touches_at_bic_curve():
    d, g = 15.0, FIG_GAMMA
    eps_star = float([r for r in spectrum.exact_resonant_epsilons(3, 3, d, g) if r.hermitian][0].epsilons[0])
    vals = np.concatenate([np.linspace(eps_star - 0.01, eps_star, 11), np.linspace(eps_star, eps_star + 0.01, 11)[1:]])
    p = EmitterArrayParams(n=3, epsilon=vals[0], d=d, gamma=g)
    traj, touches = poles.pole_trajectory(p, "a", vals)
    assert len(traj) == len(vals)
    assert all(r.z_p.imag <= 1e-12 for _, r in traj)
    assert touches and abs(touches[0] - eps_star) < 1e-12
    imag = np.array([r.z_p.imag for _, r in traj])
    i = int(np.argmax(imag))
    assert vals[i] == pytest.approx(eps_star)


def test_pair_states_are_atom_dominated():
    cp = poles.critical_distance(3, 0.01)
    assert cp.nu_window == (1, 2)
    pair = poles._count_pair_roots(3, cp.d_c / 2, 0.01, cp.nu_window)
    assert len(pair) == 2
    assert all(s.sector is Sector.SYMMETRIC and s.p > 0.99 for s in pair)
