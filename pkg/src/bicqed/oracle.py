"""Brute-force check of bound states: emitters coupled to a periodic box of boson modes.

The single-excitation Hamiltonian in a box of length ``L`` has the
emitter energies on the diagonal, the mode energies
``omega_q = sqrt(1 + k_q^2)`` with ``k_q = 2 pi q / L``, and couplings
``sqrt(gamma / (L omega_q)) exp(i k_q x_j)``.  As ``L`` grows the mode sum
turns into the continuum self-energy, so eigenstates of this matrix that
keep their field inside the array and their energy fixed under ``L -> 2L``
are finite-box images of bound states in the continuum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .params import EmitterArrayParams

DEFAULT_CUTOFF = 100.0
CONFINEMENT_PAD = 2.0


@dataclass
class DiscretizedModel:
    params: EmitterArrayParams
    L: float
    M: int
    k_grid: np.ndarray
    omega: np.ndarray
    coupling: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    H: sp.csr_matrix = field(repr=False)

    @property
    def cutoff(self) -> float:
        return float(np.max(np.abs(self.k_grid)))

    def dense(self) -> np.ndarray:
        return self.H.toarray()


@dataclass
class OracleState:
    energy: float
    atomic_weight: float
    confinement: float
    amplitudes: np.ndarray = field(repr=False)
    L: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "atomic_weight": self.atomic_weight,
            "confinement": self.confinement,
            "amplitudes_re": [float(x) for x in self.amplitudes.real],
            "amplitudes_im": [float(x) for x in self.amplitudes.imag],
            "L": self.L,
        }


def default_modes(L: float, cutoff: float = DEFAULT_CUTOFF) -> int:
    """Even mode count giving a momentum cutoff of at least ``cutoff``."""
    M = int(math.ceil(cutoff * L / math.pi))
    return M + (M % 2)


def build_hamiltonian(params: EmitterArrayParams, L: float, M: int | None = None,
                      e_max: float | None = None) -> DiscretizedModel:
    """Single-excitation Hamiltonian as a sparse Hermitian matrix.

    Rows ``0..n-1`` are the emitters (centred in the box), the remaining
    ``M`` rows the plane-wave modes ``q = -M/2 .. M/2 - 1``.

    Raises
    ------
    ValueError
        When ``M`` is odd, the box is not longer than the array, or the
        momentum cutoff ``pi M / L`` is below ten times the largest
        on-shell momentum of the energy window.
    """
    n = params.n
    if M is None:
        M = default_modes(L)
    if M % 2:
        raise ValueError("mode count M must be even")
    span = (n - 1) * params.d
    if L <= span + 4 * CONFINEMENT_PAD:
        raise ValueError(f"box length {L} too short for an array of length {span}")
    e_top = max(params.epsilon, e_max or 0.0, 1.0)
    if math.pi * M / L < 10.0 * math.sqrt(e_top**2 - 1.0):
        raise ValueError(
            f"momentum cutoff pi M / L = {math.pi * M / L:.3g} too low for energies up to {e_top:.4g}")
    q = np.arange(-M // 2, M // 2)
    k = 2.0 * math.pi * q / L
    omega = np.sqrt(1.0 + k * k)
    x = (np.arange(n) - (n - 1) / 2.0) * params.d
    g = np.sqrt(params.gamma / (L * omega))[None, :] * np.exp(1j * np.outer(x, k))  # (n, M)

    # The coupling block is a dense n x M strip, so assemble it directly in
    # COO form next to the two diagonals.
    rows_c = np.repeat(np.arange(n), M)
    cols_c = n + np.tile(np.arange(M), n)
    vals_c = g.conj().ravel()
    diag_idx = np.arange(n + M)
    diag_val = np.concatenate([np.full(n, params.epsilon), omega]).astype(complex)
    rows = np.concatenate([diag_idx, rows_c, cols_c])
    cols = np.concatenate([diag_idx, cols_c, rows_c])
    vals = np.concatenate([diag_val, vals_c, vals_c.conj()])
    H = sp.csr_matrix((vals, (rows, cols)), shape=(n + M, n + M))
    return DiscretizedModel(params=params, L=float(L), M=int(M), k_grid=k, omega=omega,
                            coupling=g, positions=x, H=H)


def _field_profile(model: DiscretizedModel, c: np.ndarray, oversample: int = 2):
    """Field probability density on a uniform grid over the box, via FFT."""
    M = model.M
    N = 1 << int(math.ceil(math.log2(oversample * M)))
    modes = np.zeros(N, dtype=complex)
    q = np.arange(-M // 2, M // 2)
    modes[q % N] = c
    # xi(x_m) = sum_q c_q exp(i k_q x_m) / sqrt(L), x_m = m L / N (periodic)
    vals = np.fft.ifft(modes) * N / math.sqrt(model.L)
    xs = np.arange(N) * model.L / N
    xs = np.where(xs >= model.L / 2, xs - model.L, xs)
    return xs, np.abs(vals) ** 2, model.L / N


def confinement(model: DiscretizedModel, c: np.ndarray) -> float:
    """Share of the field probability within the array padded by two length units."""
    total = float(np.vdot(c, c).real)
    if total <= 0.0:
        return 1.0
    xs, dens, dx = _field_profile(model, c)
    lo = model.positions[0] - CONFINEMENT_PAD
    hi = model.positions[-1] + CONFINEMENT_PAD
    inside = float(np.sum(dens[(xs >= lo) & (xs <= hi)]) * dx)
    return min(1.0, inside / total)


def eigenstates_in_window(model: DiscretizedModel, e_min: float, e_max: float):
    """All eigenpairs of the box Hamiltonian with energy in ``[e_min, e_max]``."""
    n = model.params.n
    sigma = 0.5 * (e_min + e_max)
    expected = int(np.sum((model.omega >= e_min) & (model.omega <= e_max))) + n
    k = min(expected + 12, model.H.shape[0] - 2)
    while True:
        vals, vecs = eigsh(model.H, k=k, sigma=sigma, which="LM")
        half = 0.5 * (e_max - e_min)
        if np.max(np.abs(vals - sigma)) > half or k >= model.H.shape[0] - 2:
            break
        k = min(2 * k, model.H.shape[0] - 2)
    keep = (vals >= e_min) & (vals <= e_max)
    order = np.argsort(vals[keep])
    return vals[keep][order], vecs[:, keep][:, order]


def find_bic_candidates(model: DiscretizedModel, e_min: float, e_max: float,
                        confinement_threshold: float = 0.99):
    """Eigenstates in the window whose field stays inside the array."""
    n = model.params.n
    vals, vecs = eigenstates_in_window(model, e_min, e_max)
    out = []
    for i in range(len(vals)):
        v = vecs[:, i] / np.linalg.norm(vecs[:, i])
        a, c = v[:n], v[n:]
        conf = confinement(model, c)
        if conf > confinement_threshold:
            out.append(OracleState(energy=float(vals[i]), atomic_weight=float(np.vdot(a, a).real),
                                   confinement=conf, amplitudes=a, L=model.L))
    return out


def stable_candidates(params: EmitterArrayParams, L: float, e_min: float, e_max: float,
                      M: int | None = None, confinement_threshold: float = 0.99,
                      energy_tol: float | None = None):
    """Candidates at ``L`` that reappear at ``2 L`` within ``energy_tol``.

    ``energy_tol`` defaults to ``2 pi / L``, one level spacing in momentum.
    Returns a list of ``(state_L, state_2L)`` pairs.
    """
    M2 = None if M is None else 2 * M
    first = find_bic_candidates(build_hamiltonian(params, L, M, e_max), e_min, e_max, confinement_threshold)
    if not first:
        return []
    second = find_bic_candidates(build_hamiltonian(params, 2 * L, M2, e_max), e_min, e_max,
                                 confinement_threshold)
    tol = 2 * math.pi / L if energy_tol is None else energy_tol
    pairs = []
    for s in first:
        if not second:
            break
        best = min(second, key=lambda t: abs(t.energy - s.energy))
        if abs(best.energy - s.energy) <= tol:
            pairs.append((s, best))
    return pairs
