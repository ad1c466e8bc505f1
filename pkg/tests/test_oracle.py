import math

import numpy as np
import pytest

from bicqed import EmitterArrayParams, oracle, spectrum


def test_decoupled_spectrum():
    # gamma must be positive, so the decoupled limit is taken at a negligible coupling
    p = EmitterArrayParams(n=3, epsilon=1.2, d=2.0, gamma=1e-300)
    m = oracle.build_hamiltonian(p, L=40.0, M=200)
    vals = np.linalg.eigvalsh(m.dense())
    expect = np.sort(np.concatenate([np.full(3, 1.2), m.omega]))
    assert np.allclose(vals, expect, atol=1e-13)


def test_hermitian():
    p = EmitterArrayParams(n=4, epsilon=1.2, d=3.0, gamma=0.03)
    H = oracle.build_hamiltonian(p, L=60.0, M=400).dense()
    assert np.max(np.abs(H - H.conj().T)) <= 1e-14


def test_configuration_errors():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=7.0, gamma=0.01)
    with pytest.raises(ValueError):
        oracle.build_hamiltonian(p, L=400.0, M=4001)
    with pytest.raises(ValueError):
        oracle.build_hamiltonian(p, L=10.0, M=400)
    with pytest.raises(ValueError):
        oracle.build_hamiltonian(p, L=400.0, M=100, e_max=3.0)


def test_default_modes_cutoff():
    M = oracle.default_modes(400.0)
    assert M % 2 == 0 and math.pi * M / 400.0 >= oracle.DEFAULT_CUTOFF


def test_weights_sum_to_one():
    p = EmitterArrayParams(n=2, epsilon=1.2, d=5.0, gamma=0.02)
    m = oracle.build_hamiltonian(p, L=100.0, M=2000)
    vals, vecs = oracle.eigenstates_in_window(m, 1.15, 1.25)
    assert np.allclose(np.sum(np.abs(vecs) ** 2, axis=0), 1.0, atol=1e-12)


def test_confinement_of_plane_wave_is_small():
    p = EmitterArrayParams(n=3, epsilon=1.2, d=7.0, gamma=0.01)
    m = oracle.build_hamiltonian(p, L=400.0, M=4000)
    c = np.zeros(m.M, dtype=complex)
    c[m.M // 2 + 3] = 1.0
    assert oracle.confinement(m, c) == pytest.approx(18.0 / 400.0, rel=1e-2)


@pytest.fixture(scope="module")
def n3_resonant():
    d, g = 7.0, 0.01
    res = [r for r in spectrum.exact_resonant_epsilons(3, 1, d, g) if r.hermitian][0]
    return EmitterArrayParams(n=3, epsilon=float(res.epsilons[0]), d=d, gamma=g)


def test_n3_candidate_at_resonance(n3_resonant):
    p = n3_resonant
    E1 = spectrum.resonant_energy(1, p.d)
    model = oracle.build_hamiltonian(p, L=400.0)
    cands = oracle.find_bic_candidates(model, E1 - 0.02, E1 + 0.02)
    state = [s for s in spectrum.solve_bic(p, sector="a", e_max=1.3) if s.nu_nearest == 1][0]
    # the symmetric nu = 1 state is a resonance of width O(gamma e^{-2d}) and may also look confined
    c = min(cands, key=lambda s: np.linalg.norm(s.amplitudes + s.amplitudes[::-1]))
    assert abs(c.energy - E1) < 1e-3
    a = c.amplitudes * np.exp(-1j * np.angle(c.amplitudes[0]))
    ref = state.amplitudes * np.exp(-1j * np.angle(state.amplitudes[0]))
    assert np.max(np.abs(a / a[0] - ref / ref[0])) < 1e-2
    assert abs(c.atomic_weight - state.p) < 5e-3


def test_no_candidate_off_curve(n3_resonant):
    p = n3_resonant.replace(epsilon=n3_resonant.epsilon + 10 * n3_resonant.gamma)
    E1 = spectrum.resonant_energy(1, p.d)
    model = oracle.build_hamiltonian(p, L=400.0)
    assert oracle.find_bic_candidates(model, E1 - 0.02, E1 + 0.02) == []


def test_stable_candidates(n3_resonant):
    E1 = spectrum.resonant_energy(1, n3_resonant.d)
    pairs = oracle.stable_candidates(n3_resonant, 200.0, E1 - 0.02, E1 + 0.02)
    assert any(abs(a.energy - E1) < 1e-3 for a, _ in pairs)
    for a, b in pairs:
        assert abs(a.energy - b.energy) < 2 * math.pi / 200.0


def test_n4_antisymmetric_golden_sign():
    """Even-nu antisymmetric four-emitter states carry a1/a2 = +(1 +/- sqrt5)/2, confirmed in the box."""
    d, g = 3.5, 0.01
    E1, E2, E3 = (spectrum.resonant_energy(nu, d) for nu in (1, 2, 3))
    states = [s for s in spectrum.solve_bic(EmitterArrayParams(n=4, epsilon=1.0, d=d, gamma=g), sector="a",
                                            e_min=0.5 * (E1 + E2), e_max=0.5 * (E2 + E3))
              if s.nu_nearest == 2 and abs(s.E - E2) < 1e-12]
    golden = sorted([(1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2])
    assert sorted(round(s.ratio(1, 2), 1) for s in states) == [round(x, 1) for x in golden]
    for s in states:
        cands = oracle.find_bic_candidates(oracle.build_hamiltonian(s.params, 400.0), s.E - 0.01, s.E + 0.01)
        c = min(cands, key=lambda c: abs(c.atomic_weight - s.p))
        assert abs(c.atomic_weight - s.p) < 5e-3
        ratio = (c.amplitudes[0] / c.amplitudes[1]).real
        assert ratio == pytest.approx(s.ratio(1, 2), abs=0.05)


def test_exact_probability_beats_closed_form_in_box():
    """At the largest symmetric gap the box weight follows the exact p, not the closed form."""
    d, g = 3.5, 0.05
    s = [x for x in spectrum.solve_bic(EmitterArrayParams(n=3, epsilon=1.0, d=d, gamma=g), sector="s",
                                       e_max=spectrum.resonant_energy(1, d) + 0.2) if x.nu_nearest == 1][0]
    model = oracle.build_hamiltonian(s.params, 400.0, oracle.default_modes(400.0, 200.0))
    c = oracle.find_bic_candidates(model, s.E - 0.01, s.E + 0.01)
    assert len(c) == 1
    closed = spectrum.probability_approximant(3, "sym", 1, d, g)
    assert abs(c[0].atomic_weight - s.p) < 1e-4
    assert abs(c[0].atomic_weight - closed) > 1e-3
