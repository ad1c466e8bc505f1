"""Bound states in the continuum: energies, amplitudes, probabilities, fields.

Root finding works on the sector blocks of ``A_n(theta(E), chi, b(E))``.
Writing ``A = C + i S`` with real symmetric ``C, S``, the block of ``C`` in
either sector is the rank-one matrix ``w w^T`` built from the real
constraint vector ``w`` (cosines for the symmetric sector, sines for the
antisymmetric one).  A singular block therefore needs a real vector
orthogonal to ``w`` that is also an eigenvector of ``S``.  The scan below
measures how far the eigenvectors of ``S`` compressed to ``w``'s
complement are from being eigenvectors of the full ``S``; it has a
V-shaped zero at each root, which is then polished by Newton iteration on
``det A`` in the unknowns ``(E, chi)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import parity, specfun
from .params import EmitterArrayParams, Sector

log = logging.getLogger(__name__)

SINGULAR_RTOL = 1e-8
LARGE_SPACING = "large-spacing"
FULL = "full"


@dataclass
class BoundStateInContinuum:
    E: float
    epsilon: float
    chi: float
    nu_nearest: int
    sector: Sector
    amplitudes: np.ndarray
    p: float
    constraint_residual: float
    n: int
    d: float
    gamma: float
    mode: str = FULL
    sigma_min: float = 0.0

    @property
    def params(self) -> EmitterArrayParams:
        return EmitterArrayParams(n=self.n, epsilon=self.epsilon, d=self.d, gamma=self.gamma)

    def ratio(self, i: int, j: int) -> float:
        """Amplitude ratio ``a_i / a_j`` (1-based, real part); ``inf`` or ``nan`` when ``a_j = 0``."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return float((self.amplitudes[i - 1] / self.amplitudes[j - 1]).real)

    def to_dict(self) -> dict:
        return {
            "E": self.E,
            "epsilon": self.epsilon,
            "chi": self.chi,
            "nu_nearest": self.nu_nearest,
            "sector": self.sector.value,
            "amplitudes_re": [float(x) for x in np.real(self.amplitudes)],
            "amplitudes_im": [float(x) for x in np.imag(self.amplitudes)],
            "p": self.p,
            "constraint_residual": self.constraint_residual,
            "n": self.n,
            "d": self.d,
            "gamma": self.gamma,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundStateInContinuum":
        amps = np.asarray(data["amplitudes_re"], dtype=float) + 1j * np.asarray(
            data.get("amplitudes_im", [0.0] * len(data["amplitudes_re"])), dtype=float
        )
        return cls(
            E=float(data["E"]), epsilon=float(data["epsilon"]), chi=float(data.get("chi", 0.0)),
            nu_nearest=int(data["nu_nearest"]), sector=Sector.parse(data["sector"]),
            amplitudes=amps, p=float(data["p"]),
            constraint_residual=float(data["constraint_residual"]),
            n=int(data["n"]), d=float(data["d"]), gamma=float(data["gamma"]),
            mode=data.get("mode", FULL),
        )


@dataclass
class FieldSample:
    grid: np.ndarray
    values: np.ndarray
    mode: str


@dataclass
class RootSearch:
    """Outcome of a full-mode search: accepted states and failed seeds."""

    states: list = field(default_factory=list)
    unconverged: list = field(default_factory=list)
    rejected: list = field(default_factory=list)


# ----------------------------------------------------------------------------
# resonances


def resonant_energy(nu: int, d: float) -> float:
    """``sqrt(1 + nu^2 pi^2 / d^2)``."""
    if int(nu) != nu or nu < 1:
        raise ValueError("resonance order nu must be a positive integer (nu = 0 is the band edge)")
    if not d > 0:
        raise ValueError("spacing must be positive")
    return math.sqrt(1.0 + (nu * math.pi / d) ** 2)


def epsilon_constraint(nu: int, d: float, gamma: float) -> float:
    """Excitation energy at which ``E_nu(d)`` is a bound state, cut terms neglected.

    This is the root of ``chi(E_nu) = 0``, i.e.
    ``epsilon = E_nu + gamma d log(E_nu - nu pi / d) / (nu pi^2)``; the
    ``1/pi`` comes from ``b_0(E) = -log(E - sqrt(E^2 - 1)) / pi``.
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    E = resonant_energy(nu, d)
    arg = E - nu * math.pi / d
    assert arg > 0
    return E + gamma * d / (nu * math.pi**2) * math.log(arg)


def nearest_nu(E: float, d: float) -> int:
    """Index of the nearest resonant energy; ties go to the lower index."""
    k = d * math.sqrt(max(E * E - 1.0, 0.0)) / math.pi
    lo = max(1, int(math.floor(k)))
    best, best_dist = lo, abs(E - resonant_energy(lo, d))
    for nu in (lo + 1, lo - 1):
        if nu >= 1:
            dist = abs(E - resonant_energy(nu, d))
            if dist < best_dist - 1e-15 * E:
                best, best_dist = nu, dist
    return best


def good_sector(n: int, nu: int) -> Sector:
    """Sector in which ``E_nu`` stays an exact eigenvalue once cut terms are kept."""
    if n % 2 == 1:
        return Sector.ANTISYMMETRIC
    return Sector.SYMMETRIC if nu % 2 == 1 else Sector.ANTISYMMETRIC


# ----------------------------------------------------------------------------
# matrices


def _constraint_vector(theta, n, sector):
    c = (n - 1) / 2.0
    offs = np.arange(n) - c
    th = np.asarray(theta, dtype=float)[..., None]
    full = np.cos(offs * th) if Sector.parse(sector) is Sector.SYMMETRIC else np.sin(offs * th)
    U = parity.parity_transform(n)
    coords = full @ U.T
    return coords[..., : n // 2] if Sector.parse(sector) is Sector.ANTISYMMETRIC else coords[..., n // 2:]


def _real_parts(E, d, n, sector, theta=None, b=None):
    """Sector blocks of ``S`` (chi = 0) and the constraint vector, batched over E."""
    E = np.asarray(E, dtype=float)
    if theta is None:
        theta = d * np.sqrt(E**2 - 1.0)
    if b is None:
        b = specfun.cut_terms(E, d, n - 1)
    theta = np.asarray(theta, dtype=float)
    dist = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    S = np.sin(dist * theta[..., None, None]) + np.where(dist > 0, b[..., dist], 0.0)
    U = parity.parity_transform(n)
    Sc = U @ S @ U.T
    h = n // 2
    blk = Sc[..., :h, :h] if Sector.parse(sector) is Sector.ANTISYMMETRIC else Sc[..., h:, h:]
    return blk, _constraint_vector(theta, n, sector)


def sector_matrix(E, chi, d, n, sector, b=None):
    """Sector block of ``A_n(theta(E), chi, b(E))`` for real E > 1."""
    th = d * math.sqrt(E * E - 1.0)
    if b is None:
        b = specfun.cut_terms(E, d, n - 1)
    A = parity.build_A(th, chi, b[1:], n)
    return parity.sector_block(A.entries, sector)


def _compressed(S, w):
    """Eigen-decomposition of ``S`` restricted to the complement of ``w``."""
    m = S.shape[0]
    norm = np.linalg.norm(w)
    if m == 1:
        if norm < 1e-300:
            return np.array([[1.0]]), np.array([S[0, 0]]), np.eye(1)
        return np.zeros((1, 0)), np.zeros(0), np.zeros((0, 0))
    if norm < 1e-300:
        Q = np.eye(m)
    else:
        # orthonormal basis of w-perp from a full QR of w
        Qfull, _ = np.linalg.qr(np.column_stack([w / norm, np.eye(m)[:, : m - 1]]), mode="complete")
        Q = Qfull[:, 1:]
    T = Q.T @ S @ Q
    vals, vecs = np.linalg.eigh(T)
    return Q, vals, vecs


def _leak(S, w):
    """min_k |w.S y_k| / |w| over eigenvectors y_k of S compressed to w-perp."""
    m = S.shape[0]
    norm = np.linalg.norm(w)
    if norm < 1e-14:
        return 0.0, None
    if m == 1:
        return np.inf, None
    Q, vals, vecs = _compressed(S, w)
    r = np.abs((w / norm) @ S @ (Q @ vecs))
    k = int(np.argmin(r))
    return float(r[k]), float(-vals[k])


def _scan_grid(d, e_min, e_max, per_pi=64):
    th_lo = d * math.sqrt(max(e_min * e_min - 1.0, 0.0))
    th_hi = d * math.sqrt(e_max * e_max - 1.0)
    th_lo = max(th_lo, 1e-6)
    npts = max(16, int(math.ceil((th_hi - th_lo) / math.pi * per_pi)))
    thetas = [np.linspace(th_lo, th_hi, npts + 1)]
    offsets = np.logspace(-13, -0.5, 100)
    for nu in range(max(1, int(th_lo / math.pi)), int(th_hi / math.pi) + 2):
        c = nu * math.pi
        thetas.append(c - offsets * c)
        thetas.append(c + offsets * c)
    th = np.concatenate(thetas)
    th = np.unique(th[(th > th_lo) & (th < th_hi)])
    return np.sqrt(1.0 + (th / d) ** 2)


def _leak_profile(Es, d, n, sector, chunk=512):
    out = np.empty(len(Es))
    for start in range(0, len(Es), chunk):
        sl = slice(start, start + chunk)
        S, w = _real_parts(Es[sl], d, n, sector)
        for i in range(S.shape[0]):
            out[start + i] = _leak(S[i], w[i])[0]
    return out


def _tracked_residuals(Es, d, n, sector, ref=None):
    """Signed leaks of every compressed eigenvector, followed continuously along ``Es``.

    Returns arrays ``r`` and ``chi`` of shape ``(len(Es), m - 1)``; column k
    follows one eigenvector, with its sign fixed by overlap with the
    previous point (or with ``ref`` for the first point).  The tracked
    vectors are returned as a third array.
    """
    S, w = _real_parts(np.asarray(Es, dtype=float), d, n, sector)
    prev = ref
    rs, chis, vs = [], [], []
    for i in range(S.shape[0]):
        norm = np.linalg.norm(w[i])
        Q, vals, vecs = _compressed(S[i], w[i])
        full = Q @ vecs
        if prev is not None:
            ov = prev.T @ full
            perm = np.argmax(np.abs(ov), axis=1)
            full = full[:, perm]
            vals = vals[perm]
            signs = np.sign(np.sum(prev * full, axis=0))
            signs[signs == 0] = 1.0
            full = full * signs
        prev = full
        wn = w[i] / norm if norm > 0 else w[i]
        rs.append(wn @ S[i] @ full)
        chis.append(-vals)
        vs.append(full)
    return np.array(rs), np.array(chis), np.array(vs)


def _signed_roots(a, b, d, n, sector, sub=32):
    """Zeros of the tracked signed leaks on ``[a, b]``; returns ``[(E, chi), ...]``."""
    if parity.sector_size(n, sector) < 2:
        return []
    grid = np.linspace(a, b, sub + 1)
    r, chis, vecs = _tracked_residuals(grid, d, n, sector)
    out = []
    for k in range(r.shape[1]):
        for i in np.where(np.sign(r[:-1, k]) * np.sign(r[1:, k]) <= 0)[0]:
            lo, hi = grid[i], grid[i + 1]

            def fk(e, i=i, k=k):
                rr, _, _ = _tracked_residuals(np.array([e]), d, n, sector, ref=vecs[i])
                return rr[0, k]

            if r[i, k] == 0.0:
                root = lo
            else:
                try:
                    root = brentq(fk, lo, hi, xtol=1e-15 * hi, rtol=1e-15)
                except ValueError:
                    continue
            _, ch, _ = _tracked_residuals(np.array([root]), d, n, sector, ref=vecs[i])
            out.append((float(root), float(ch[0, k])))
    return out


def _det_scaled(E, chi, d, n, sector):
    M = sector_matrix(E, chi, d, n, sector)
    return np.linalg.det(M)


def newton_polish(E0, chi0, d, n, sector, max_iter=40, tol=1e-15):
    """Damped Newton on ``det A_sector(E, chi) = 0`` with a finite-difference Jacobian.

    Returns ``(E, chi, converged, history)``.
    """
    x = np.array([E0, chi0], dtype=float)

    def F(v):
        if v[0] <= 1.0:
            return np.array([np.inf, np.inf])
        val = _det_scaled(v[0], v[1], d, n, sector)
        return np.array([val.real, val.imag])

    fx = F(x)
    history = [(float(x[0]), float(x[1]), float(np.hypot(*fx)))]
    for _ in range(max_iter):
        if np.hypot(*fx) == 0.0:
            return float(x[0]), float(x[1]), True, history
        hE = 1e-7 * max(x[0] - 1.0, 1e-6) if x[0] - 1.0 < 1e-3 else 1e-7 * x[0]
        hc = 1e-7 * (1.0 + abs(x[1]))
        J = np.empty((2, 2))
        J[:, 0] = (F(x + [hE, 0]) - F(x - [hE, 0])) / (2 * hE)
        J[:, 1] = (F(x + [0, hc]) - F(x - [0, hc])) / (2 * hc)
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        base = np.hypot(*fx)
        while lam > 1e-4:
            trial = x + lam * step
            ft = F(trial)
            if np.all(np.isfinite(ft)) and np.hypot(*ft) < base:
                break
            lam *= 0.5
        else:
            trial, ft = x + lam * step, F(x + lam * step)
        converged_step = np.all(np.abs(trial - x) <= tol * (1.0 + np.abs(x)) * 10)
        if not np.all(np.isfinite(ft)):
            break
        x, fx = trial, ft
        history.append((float(x[0]), float(x[1]), float(np.hypot(*fx))))
        if converged_step:
            return float(x[0]), float(x[1]), True, history
    # accept if stagnated at a tiny residual
    scale = np.linalg.norm(sector_matrix(x[0], x[1], d, n, sector)) ** max(1, parity.sector_size(n, sector))
    ok = np.hypot(*fx) <= 1e-12 * max(scale, 1.0)
    return float(x[0]), float(x[1]), bool(ok), history


def _amplitudes_at(E, chi, d, n, sector, exact_resonance=False):
    """Real sector vector solving the block problem with the constraint built in."""
    S, w = _real_parts(np.array([E]), d, n, sector,
                       theta=np.array([round(d * math.sqrt(E * E - 1.0) / math.pi) * math.pi])
                       if exact_resonance else None)
    S, w = S[0], w[0]
    if exact_resonance:
        w = np.zeros_like(w)
    Q, vals, vecs = _compressed(S, w)
    if vals.size == 0:
        return None, np.inf
    k = int(np.argmin(np.abs(vals + chi)))
    vec = Q @ vecs[:, k]
    return vec / np.linalg.norm(vec), float(abs(vals[k] + chi))


def constraint_residual(a, E, d) -> float:
    """``max_pm |sum_l a_l exp(pm i (l-1) theta)| / |a|``."""
    a = np.asarray(a)
    th = d * math.sqrt(E * E - 1.0)
    ph = np.exp(1j * th * np.arange(len(a)))
    return float(max(abs(np.dot(a, ph)), abs(np.dot(a, ph.conj()))) / np.linalg.norm(a))


def _phase_fix(a):
    k = int(np.argmax(np.abs(a)))
    return a * (abs(a[k]) / a[k])


def _assemble(E, chi, d, n, gamma, sector, vec_sector, mode=FULL):
    a_unit = parity.embed_to_local(vec_sector, sector, n).astype(complex)
    a_unit = _phase_fix(a_unit / np.linalg.norm(a_unit))
    tmp_params = EmitterArrayParams(n=n, epsilon=1.0, d=d, gamma=gamma)
    if mode == FULL:
        dS = specfun.self_energy_derivative(E, tmp_params)
        field_unit = float(np.real(np.vdot(a_unit, dS @ a_unit)))
    else:
        field_unit = _field_norm_positional(a_unit, E, d, gamma, with_eta=False)
    scale = 1.0 / math.sqrt(1.0 + field_unit)
    a = a_unit * scale
    eps = specfun.chi_to_epsilon(chi, E, tmp_params)
    return BoundStateInContinuum(
        E=float(E), epsilon=float(eps), chi=float(chi), nu_nearest=nearest_nu(E, d),
        sector=Sector.parse(sector), amplitudes=a, p=float(np.vdot(a, a).real),
        constraint_residual=constraint_residual(a, E, d), n=n, d=d, gamma=gamma, mode=mode,
    )


# ----------------------------------------------------------------------------
# solvers


def _resonant_states(n, d, gamma, sector, e_min, e_max):
    out = []
    nu = 1
    while True:
        E = resonant_energy(nu, d)
        if E > e_max:
            break
        if E >= e_min and good_sector(n, nu) is sector:
            S, _ = _real_parts(np.array([E]), d, n, sector, theta=np.array([nu * math.pi]))
            vals, vecs = np.linalg.eigh(S[0])
            for k in range(len(vals)):
                out.append((E, float(-vals[k]), vecs[:, k], True))
        nu += 1
    return out


def find_bic_roots(params: EmitterArrayParams, sector, e_min: float, e_max: float, per_pi: int = 64):
    """Full-mode search in one sector; see :func:`solve_bic`."""
    n, d, gamma = params.n, params.d, params.gamma
    sector = Sector.parse(sector)
    result = RootSearch()
    candidates = _resonant_states(n, d, gamma, sector, e_min, e_max)

    Es = _scan_grid(d, e_min, e_max, per_pi=per_pi)
    if Es.size >= 3:
        prof = _leak_profile(Es, d, n, sector)
        idx = np.where((prof[1:-1] <= prof[:-2]) & (prof[1:-1] <= prof[2:]) & np.isfinite(prof[1:-1]))[0] + 1
        seen = set()
        for i in idx:
            lo, hi = Es[i - 1], Es[i + 1]
            for E0, chi0 in _signed_roots(lo, hi, d, n, sector):
                key = (round(E0, 9), round(chi0, 6))
                if key in seen:
                    continue
                seen.add(key)
                E1, chi1, ok, hist = newton_polish(E0, chi0, d, n, sector)
                if not ok:
                    result.unconverged.append({"E0": E0, "chi0": chi0, "trajectory": hist})
                    continue
                vec, _ = _amplitudes_at(E1, chi1, d, n, sector)
                if vec is None:
                    continue
                candidates.append((E1, chi1, vec, False))

    accepted = []
    for E, chi_val, vec, exact in candidates:
        if not (e_min <= E <= e_max):
            continue
        M = sector_matrix(E, chi_val, d, n, sector) if not exact else None
        if M is not None:
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] > SINGULAR_RTOL * sv[0]:
                result.rejected.append({"E": E, "chi": chi_val, "sigma_ratio": float(sv[-1] / sv[0])})
                continue
        dup = any(abs(E - s.E) <= 1e-9 * E and abs(chi_val - s.chi) <= 1e-7 * (1 + abs(chi_val))
                  for s in accepted)
        if dup:
            continue
        state = _assemble(E, chi_val, d, n, gamma, sector, vec)
        state.sigma_min = 0.0 if M is None else float(sv[-1])
        accepted.append(state)
    result.states = sorted(accepted, key=lambda s: (s.E, s.chi))
    return result


def _large_spacing_states(params, sector, e_min, e_max):
    n, d, gamma = params.n, params.d, params.gamma
    states = []
    nu = 1
    while True:
        E = resonant_energy(nu, d)
        if E > e_max:
            break
        if E >= e_min:
            eps = epsilon_constraint(nu, d, gamma)
            sectors = [sector] if sector is not None else [Sector.ANTISYMMETRIC, Sector.SYMMETRIC]
            for sec in sectors:
                w = _constraint_vector(np.array([nu * math.pi]), n, sec)[0]
                m = parity.sector_size(n, sec)
                if m == 0:
                    continue
                basis = np.eye(m)
                if np.linalg.norm(w) > 1e-12:
                    Q, _, _ = _compressed(np.zeros((m, m)), w)
                    basis = Q
                for k in range(basis.shape[1]):
                    st = _assemble(E, 0.0, d, n, gamma, sec, basis[:, k], mode=LARGE_SPACING)
                    st.epsilon = eps
                    st.nu_nearest = nu
                    states.append(st)
        nu += 1
    return states


def solve_bic(params: EmitterArrayParams, sector=None, mode: str = FULL,
              e_min: float = 1.0, e_max: float = 2.0, per_pi: int = 64):
    """Bound states in the continuum with energy in ``[e_min, e_max]``.

    The spacing and coupling come from ``params``; ``params.epsilon`` is not
    used, since each returned state carries the excitation energy that
    makes it an eigenstate.

    Parameters
    ----------
    sector : Sector, str or None
        Restrict to one parity sector (both when None).
    mode : {"full", "large-spacing"}
        ``large-spacing`` drops all cut terms beyond ``b_0`` and returns an
        orthonormal basis of each degenerate resonant eigenspace.

    Returns
    -------
    list of BoundStateInContinuum, sorted by energy.
    """
    if e_max <= 1.0:
        raise ValueError("energy window must extend above the continuum threshold E = 1")
    e_min = max(e_min, 1.0)
    sector = None if sector is None else Sector.parse(sector)
    if mode in (LARGE_SPACING, "markov"):
        return sorted(_large_spacing_states(params, sector, e_min, e_max), key=lambda s: s.E)
    if mode != FULL:
        raise ValueError(f"unknown mode {mode!r}")
    sectors = [sector] if sector is not None else [Sector.ANTISYMMETRIC, Sector.SYMMETRIC]
    states = []
    for sec in sectors:
        res = find_bic_roots(params, sec, e_min, e_max, per_pi=per_pi)
        for item in res.unconverged:
            log.warning("unconverged seed E0=%.12g chi0=%.6g in sector %s", item["E0"], item["chi0"], sec.value)
        states.extend(res.states)
    return sorted(states, key=lambda s: (s.E, s.sector.value, s.chi))


# ----------------------------------------------------------------------------
# resonant persistence for general n


@dataclass
class ResonantEpsilons:
    sector: Sector
    hermitian: bool
    epsilons: np.ndarray
    chis: np.ndarray
    amplitudes: list


def exact_resonant_epsilons(n: int, nu: int, d: float, gamma: float):
    """Excitation energies for which ``E_nu(d)`` is an exact eigenvalue.

    For the sector where the resonance persists, ``-i A`` restricted to it
    is real symmetric; its eigenvalues give admissible ``chi`` and hence
    real ``epsilon``.  The complementary sector is returned too, with the
    (generally complex) values from its non-Hermitian matrix.
    """
    E = resonant_energy(nu, d)
    b = specfun.cut_terms(E, d, n - 1)
    k0 = math.sqrt(E * E - 1.0)
    good = good_sector(n, nu)
    out = []
    for sec in (Sector.ANTISYMMETRIC, Sector.SYMMETRIC):
        if parity.sector_size(n, sec) == 0:
            continue
        A = parity.build_A(nu * math.pi, 0.0, b[1:], n)
        blk = parity.sector_block(A.entries, sec)
        if sec is good:
            M = (-1j * blk).real
            M = 0.5 * (M + M.T)
            vals, vecs = np.linalg.eigh(M)
            chis = -vals
            amps = [parity.embed_to_local(vecs[:, k], sec, n) for k in range(len(vals))]
            eps = E + gamma * (chis - specfun.b0_closed(E)) / k0
            out.append(ResonantEpsilons(sec, True, eps, chis, amps))
        else:
            mu = np.linalg.eigvals(blk)
            chis = 1j * mu
            eps = E + gamma * (chis - specfun.b0_closed(E)) / k0
            out.append(ResonantEpsilons(sec, False, eps, chis, []))
    return out


# ----------------------------------------------------------------------------
# probabilities


def atomic_probability(state: BoundStateInContinuum) -> float:
    return float(np.vdot(state.amplitudes, state.amplitudes).real)


def _golden(sign):
    return (1.0 + sign * math.sqrt(5.0)) / 2.0


PROBABILITY_CLASSES = {
    # n: {label: (distance coefficient, cut coefficient)}
    3: {"sym": (2.0 / 3.0, 1.0), "anti": (2.0, 2.0)},
    4: {
        "golden+": ((5 * _golden(1) + 4) / (_golden(1) + 2), 1.0),
        "golden-": ((5 * _golden(-1) + 4) / (_golden(-1) + 2), 1.0),
        "shifted": (1.0, 1.0),
        "numerical": (0.6, 1.0),
    },
}


def diagonal_cut_weight(E: float) -> float:
    """Field weight per unit coupling carried by the diagonal cut term.

    Equals ``-(1/k^2 - E arccosh(E)/k^3)/pi`` with ``k = sqrt(E^2-1)``; it
    tends to ``1/(3 pi)`` at threshold.
    """
    k2 = E * E - 1.0
    return -(1.0 / k2 - E * math.acosh(E) / k2**1.5) / math.pi


def probability_approximant(n: int, cls: str, nu: int, d: float, gamma: float,
                            cut: str = "closed-form") -> float:
    """Closed-form atomic probability of a resonance-connected state.

    ``cls`` is ``sym``/``anti`` for three emitters and ``golden+``,
    ``golden-``, ``shifted`` or ``numerical`` for four.  Valid up to
    corrections of order ``exp(-d)``.

    Parameters
    ----------
    cut : {"closed-form", "diagonal"}
        ``closed-form`` uses the customary ``c gamma / (pi (E + 1))`` cut
        correction.  ``diagonal`` replaces it with the exact diagonal term
        ``gamma * diagonal_cut_weight(E)``, which is what the normalization
        integral gives once the exponentially small off-diagonal cut terms
        are dropped.
    """
    try:
        dist_coef, cut_coef = PROBABILITY_CLASSES[n][cls]
    except KeyError:
        raise ValueError(f"no probability class {cls!r} for n={n}") from None
    E = resonant_energy(nu, d)
    if cut == "closed-form":
        cut_term = cut_coef * gamma / (math.pi * (E + 1.0))
    elif cut == "diagonal":
        cut_term = gamma * diagonal_cut_weight(E)
    else:
        raise ValueError(f"unknown cut model {cut!r}")
    return 1.0 / (1.0 + dist_coef * gamma * d * E / (E * E - 1.0) + cut_term)


# ----------------------------------------------------------------------------
# field


def _field_values(a, E, d, gamma, x, with_eta=True):
    a = np.asarray(a)
    k0 = math.sqrt(E * E - 1.0)
    pref = math.sqrt(gamma * E) / k0
    x = np.asarray(x, dtype=float)
    rel = np.abs(x[:, None] - d * np.arange(len(a))[None, :])
    vals = np.sin(rel * k0)
    if with_eta:
        flat = rel.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        vals = vals - specfun.eta(uniq, E)[inv].reshape(rel.shape)
    return pref * vals @ a


def field_wavefunction(state: BoundStateInContinuum, grid) -> FieldSample:
    """Boson wavefunction in position space on ``grid``.

    Large-spacing states omit the exponentially decaying cut part.
    """
    grid = np.asarray(grid, dtype=float)
    with_eta = state.mode == FULL
    vals = _field_values(state.amplitudes, state.E, state.d, state.gamma, grid, with_eta=with_eta)
    return FieldSample(grid=grid, values=vals, mode=state.mode)


def _gl_panels(a, b, panels, order=24, graded=True):
    """Gauss-Legendre nodes on [a, b]; ``graded`` clusters both ends (smoothstep map)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    u = (0.5 * (edges[1:] - edges[:-1])[:, None] * nodes + 0.5 * (edges[1:] + edges[:-1])[:, None]).ravel()
    wu = (0.5 * (edges[1:] - edges[:-1])[:, None] * weights).ravel()
    if graded:
        x = a + (b - a) * u * u * (3.0 - 2.0 * u)
        wx = wu * (b - a) * 6.0 * u * (1.0 - u)
    else:
        x, wx = a + (b - a) * u, wu * (b - a)
    return x, wx


def _field_norm_positional(a, E, d, gamma, with_eta=True):
    n = len(a)
    k0 = math.sqrt(E * E - 1.0)
    xs, ws = [], []
    half_waves = max(1, int(math.ceil(d * k0 / math.pi)))
    for j in range(n - 1):
        x, w = _gl_panels(j * d, (j + 1) * d, panels=4 + 2 * half_waves)
        xs.append(x)
        ws.append(w)
    if with_eta:
        for sign, edge in ((-1.0, 0.0), (1.0, (n - 1) * d)):
            # near the outer emitters: y = t^2 on [0, 1]; then plain panels to y = 60
            t, wt = _gl_panels(0.0, 1.0, panels=4, graded=False)
            y, wy = t * t, 2.0 * t * wt
            y2, wy2 = _gl_panels(1.0, 60.0, panels=30, graded=False)
            xs.append(edge + sign * np.concatenate([y, y2]))
            ws.append(np.concatenate([wy, wy2]))
    x = np.concatenate(xs)
    w = np.concatenate(ws)
    vals = _field_values(a, E, d, gamma, x, with_eta=with_eta)
    return float(np.dot(w, np.abs(vals) ** 2))


def field_norm(state: BoundStateInContinuum) -> float:
    """Integral of ``|xi(x)|^2`` over the line, computed in position space."""
    return _field_norm_positional(state.amplitudes, state.E, state.d, state.gamma,
                                  with_eta=state.mode == FULL)


# ----------------------------------------------------------------------------
# spectral lines


def spectral_lines(n: int, gamma: float, d_values, e_max: float, e_min: float = 1.0, sector=None):
    """Full-mode eigenvalues along a sweep of spacings.

    Returns a list of rows ``(d, E, sector, nu, chi)`` sorted by d then E,
    plus a list of gaps: (sector, nu) labels present at one spacing and
    missing at the next.
    """
    rows, gaps = [], []
    prev_labels = None
    for d in sorted(float(x) for x in d_values):
        params = EmitterArrayParams(n=n, epsilon=1.0, d=d, gamma=gamma)
        states = solve_bic(params, sector=sector, e_min=e_min, e_max=e_max)
        labels = set()
        for s in states:
            rows.append((d, s.E, s.sector.value, s.nu_nearest, s.chi))
            labels.add((s.sector.value, s.nu_nearest))
        if prev_labels is not None:
            for lab in sorted(prev_labels - labels):
                gaps.append((d, lab))
        prev_labels = labels
    return rows, gaps
