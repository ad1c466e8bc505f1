"""Complex poles of the resolvent, closed-form pole approximants and critical spacings.

Pole equation on a given sheet: ``det[(epsilon - z) 1 - Sigma(z)] = 0``
restricted to a parity block.  To first order in gamma the solution is
``z = epsilon - i gamma alpha(E) / sqrt(E^2 - 1)``, where ``alpha`` is an
eigenvalue of the block of ``A_n(theta(E), b_0(E), b(E))``.  For three
and four emitters the blocks are at most 2x2, so ``alpha`` has the closed
form ``(tr +/- sqrt(f)) / 2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import parity, specfun, spectrum
from .errors import ConvergenceError
from .params import EmitterArrayParams, Sector, Sheet

log = logging.getLogger(__name__)


@dataclass
class PoleResult:
    z_p: complex
    sector: Sector
    sheet: Sheet
    residual: float
    iterations: int = 0
    trajectory: list = field(default_factory=list, repr=False)

    @property
    def E_p(self) -> float:
        return float(self.z_p.real)

    @property
    def decay_rate(self) -> float:
        """``gamma_p = -2 Im z_p``."""
        return float(-2.0 * self.z_p.imag)


@dataclass
class CriticalPoint:
    n: int
    d_c: float
    E_c: float
    nu_window: tuple
    E_root: float = float("nan")
    epsilon_c: float = float("nan")
    chi_c: float = float("nan")
    bracket: tuple = (float("nan"), float("nan"))


# ----------------------------------------------------------------------------
# determinant and Newton


def inverse_propagator(z, params: EmitterArrayParams, sector, sheet="I") -> np.ndarray:
    """Sector block of ``(epsilon - z) 1 - Sigma^sheet(z)``."""
    sig = specfun.self_energy(z, params, sheet=sheet)
    M = (params.epsilon - z) * np.eye(params.n) - sig
    return parity.sector_block(M, sector)


def det_on_sheet(z, params: EmitterArrayParams, sector, sheet="I") -> complex:
    """Determinant of the sector block of the inverse propagator."""
    return complex(np.linalg.det(inverse_propagator(z, params, sector, sheet)))


def _scale(params, sector):
    """Magnitude of the determinant's natural units near a pole."""
    m = parity.sector_size(params.n, sector)
    return (params.gamma * (1.0 + 1.0 / max(params.epsilon ** 2 - 1.0, 1e-12) ** 0.5)) ** m


def find_pole(z0, params: EmitterArrayParams, sector, sheet="II", max_iter=60, tol=1e-12,
              raise_on_failure=True) -> PoleResult:
    """Polish a pole of the resolvent by complex Newton iteration.

    The derivative is a central finite difference with step
    ``1e-7 (1 + |z|)``.  Converged when the step falls below
    ``1e-15 (1 + |z|)`` or ``|det|`` drops below ``tol`` times the
    determinant scale.

    Raises
    ------
    ConvergenceError
        With the iterate history, when ``max_iter`` is exhausted.
    """
    sector = Sector.parse(sector)
    sheet = Sheet.parse(sheet)
    z = complex(z0)
    scale = _scale(params, sector)
    traj = [z]
    f = det_on_sheet(z, params, sector, sheet)
    for it in range(1, max_iter + 1):
        h = 1e-7 * (1.0 + abs(z))
        df = (det_on_sheet(z + h, params, sector, sheet) - det_on_sheet(z - h, params, sector, sheet)) / (2 * h)
        if df == 0:
            break
        step = -f / df
        lam = 1.0
        while True:
            trial = z + lam * step
            ft = det_on_sheet(trial, params, sector, sheet)
            if abs(ft) < abs(f) or lam < 1e-3:
                break
            lam *= 0.5
        z, f = trial, ft
        traj.append(z)
        if abs(lam * step) <= 1e-15 * (1.0 + abs(z)) or abs(f) <= 1e-3 * tol * scale:
            return PoleResult(z, sector, sheet, abs(f), it, traj)
    if abs(f) <= tol * scale:
        return PoleResult(z, sector, sheet, abs(f), len(traj) - 1, traj)
    if raise_on_failure:
        raise ConvergenceError(f"pole search did not converge from {z0!r}; last |det| = {abs(f):.3e}", traj)
    return PoleResult(z, sector, sheet, abs(f), len(traj) - 1, traj)


# ----------------------------------------------------------------------------
# closed-form approximants


def f3(theta, b1, b2):
    """Discriminant polynomial of the symmetric three-emitter block, conjugate convention.

    ``8 b1^2 + b2^2 + 16 i b1 e^{-i theta} - 8 e^{-2 i theta}
    + 2 i b2 e^{-2 i theta} - e^{-4 i theta}``.  For real arguments it
    equals ``-conj(f)`` with ``f = (e^{2i theta} + i b2)^2 + 8 (e^{i theta} + i b1)^2``,
    the discriminant used by :func:`approx_pole_n3`.
    """
    e = np.exp(-1j * np.asarray(theta))
    return 8 * b1**2 + b2**2 + 16j * b1 * e - 8 * e**2 + 2j * b2 * e**2 - e**4


def _block_alpha(n, sector, theta, b, branch):
    """Closed-form eigenvalue of the sector block of ``A_n(theta, b_0, b)``."""
    a = np.exp(1j * theta * np.arange(n)) + 1j * np.asarray(b[:n])
    sign = {"+": 1.0, "-": -1.0}[branch]
    if n == 3:
        if sector is Sector.ANTISYMMETRIC:
            return a[0] - a[2]
        tr = 2 * a[0] + a[2]
        f = a[2] ** 2 + 8 * a[1] ** 2
    elif n == 4:
        if sector is Sector.ANTISYMMETRIC:
            tr = 2 * a[0] - a[1] - a[3]
            f = (a[1] - a[3]) ** 2 + 4 * (a[1] - a[2]) ** 2
        else:
            tr = 2 * a[0] + a[1] + a[3]
            f = (a[3] - a[1]) ** 2 + 4 * (a[1] + a[2]) ** 2
    else:
        raise ValueError("closed-form approximants exist for n = 3 and n = 4 only")
    return 0.5 * (tr + sign * np.sqrt(complex(f)))


def _approx(params, sector, branch):
    sector = Sector.parse(sector)
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    if params.epsilon <= 1.0:
        raise ValueError("approximants need epsilon > 1 (inside the continuum)")

    def one_pass(E):
        k = math.sqrt(E * E - 1.0)
        b = specfun.cut_terms(E, params.d, params.n - 1)
        alpha = _block_alpha(params.n, sector, params.d * k, b, branch)
        return params.epsilon - 1j * params.gamma * alpha / k

    z1 = one_pass(params.epsilon)
    if z1.real <= 1.0:
        return z1
    return one_pass(z1.real)


def approx_pole_n3(params: EmitterArrayParams, sector, branch="+") -> complex:
    """First-order pole ``E_p - i gamma_p / 2`` for three emitters.

    The right-hand side is evaluated at ``E = epsilon`` and once more at
    the updated real part.  The antisymmetric block has a single branch;
    ``branch`` is ignored there.
    """
    if params.n != 3:
        raise ValueError("approx_pole_n3 needs n = 3")
    return _approx(params, sector, branch)


def approx_pole_n4(params: EmitterArrayParams, sector, branch="+") -> complex:
    """First-order pole ``E_p - i gamma_p / 2`` for four emitters; see :func:`approx_pole_n3`."""
    if params.n != 4:
        raise ValueError("approx_pole_n4 needs n = 4")
    return _approx(params, sector, branch)


def approx_pole(params: EmitterArrayParams, sector, branch="+") -> complex:
    if params.n == 3:
        return approx_pole_n3(params, sector, branch)
    if params.n == 4:
        return approx_pole_n4(params, sector, branch)
    raise ValueError("closed-form approximants exist for n = 3 and n = 4 only")


def first_order_poles(params: EmitterArrayParams, sector) -> np.ndarray:
    """First-order poles for any n from the eigenvalues of the sector block."""
    sector = Sector.parse(sector)
    E = params.epsilon
    k = math.sqrt(E * E - 1.0)
    b = specfun.cut_terms(E, params.d, params.n - 1)
    A = parity.build_A(params.d * k, b[0], b[1:], params.n)
    alphas = np.linalg.eigvals(parity.sector_block(A.entries, sector))
    return params.epsilon - 1j * params.gamma * alphas / k


# ----------------------------------------------------------------------------
# trajectories


def pole_trajectory(params: EmitterArrayParams, sector, values, vary="epsilon", sheet="II",
                    branch="+", touch_tol=1e-10):
    """Follow one pole while ``epsilon`` or ``d`` sweeps through ``values``.

    The first seed comes from the closed-form approximant (n = 3, 4) or the
    first-order eigenvalues (other n); each later seed is the previous
    pole.  If Newton fails the seed is reset to the approximant once.

    Returns
    -------
    poles : list of (value, PoleResult)
    touches : list of parameter values where ``Im z_p > -touch_tol``.
    """
    if vary not in ("epsilon", "d"):
        raise ValueError("vary must be 'epsilon' or 'd'")
    sector = Sector.parse(sector)

    def fresh_seed(p):
        if p.n in (3, 4):
            return approx_pole(p, sector, branch)
        cands = first_order_poles(p, sector)
        return cands[0] if branch == "+" else cands[-1]

    out, touches = [], []
    seed = None
    for v in values:
        p = params.replace(**{vary: float(v)})
        if seed is None:
            seed = fresh_seed(p)
        try:
            res = find_pole(seed, p, sector, sheet)
        except ConvergenceError:
            log.info("seed lost at %s=%g; restarting from the approximant", vary, v)
            res = find_pole(fresh_seed(p), p, sector, sheet)
        out.append((float(v), res))
        if res.z_p.imag > -touch_tol:
            touches.append(float(v))
        seed = res.z_p
    return out, touches


# ----------------------------------------------------------------------------
# critical distance


def _window_roots(n, d, nu_window, per_pi=256):
    """Real symmetric-sector solutions ``(E, chi)`` strictly inside ``(E_nu, E_nu')``.

    Sign changes of the tracked compressed-block leaks are searched for in
    every cell around a local minimum of the unsigned leak profile.
    """
    sector = Sector.SYMMETRIC
    lo = spectrum.resonant_energy(nu_window[0], d) * (1 + 1e-9)
    hi = spectrum.resonant_energy(nu_window[1], d) * (1 - 1e-9)
    Es = spectrum._scan_grid(d, lo, hi, per_pi=per_pi)
    prof = spectrum._leak_profile(Es, d, n, sector)
    inner = prof[1:-1]
    idx = np.where((inner <= prof[:-2]) & (inner <= prof[2:]) & np.isfinite(inner))[0] + 1
    roots = []
    for i in idx:
        roots.extend(spectrum._signed_roots(Es[i - 1], Es[i + 1], d, n, sector))
    return sorted(set(roots))


def _count_pair_roots(n, d, gamma, nu_window):
    lo = spectrum.resonant_energy(nu_window[0], d) * (1 + 1e-6)
    hi = spectrum.resonant_energy(nu_window[1], d) * (1 - 1e-6)
    params = EmitterArrayParams(n=n, epsilon=1.0, d=d, gamma=gamma)
    return spectrum.find_bic_roots(params, Sector.SYMMETRIC, lo, hi, per_pi=256).states


def critical_distance(n: int, gamma: float, nu_window=(1, 2), d_start: float = 1.0,
                      d_stop: float = 1e-3, factor: float = 0.97, d_tol: float = 1e-7):
    """Largest spacing below which a pair of symmetric bound states appears between two resonances.

    The spacing is lowered geometrically from ``d_start`` until the window
    ``(E_nu, E_{nu+1})`` holds a real symmetric-sector solution of
    ``det A(theta(E), chi, b(E)) = 0``, and the transition is then bisected
    down to ``d_tol``.  Existence of such a solution does not involve
    ``gamma``; ``gamma`` only fixes the excitation energy reported at
    criticality.

    Returns
    -------
    CriticalPoint or None
        None when no pair is found down to ``d_stop``, neither in the
        window nor in the once-widened window ``(E_nu, E_{nu+2})``.
    """
    if n < 3:
        raise ValueError("critical spacing is defined for n >= 3")
    for window in (tuple(nu_window), (nu_window[0], nu_window[1] + 1)):
        if _window_roots(n, d_start, window):
            log.info("window %s already holds roots at d = %g; raise d_start", window, d_start)
            continue
        d_hi, d = d_start, d_start * factor
        while d >= d_stop and not _window_roots(n, d, window):
            d_hi, d = d, d * factor
        if d < d_stop:
            log.info("no symmetric root in window %s down to d = %g", window, d_stop)
            continue
        d_lo = d
        while d_hi - d_lo > d_tol:
            mid = 0.5 * (d_lo + d_hi)
            if _window_roots(n, mid, window):
                d_lo = mid
            else:
                d_hi = mid
        roots = _window_roots(n, d_lo, window)
        if len(roots) >= 2:
            gaps = [roots[i + 1][0] - roots[i][0] for i in range(len(roots) - 1)]
            i = int(np.argmin(gaps))
            E_c = 0.5 * (roots[i][0] + roots[i + 1][0])
        else:
            i, E_c = 0, roots[0][0]
        E_r, chi_c, _, _ = spectrum.newton_polish(roots[i][0], roots[i][1], d_lo, n, Sector.SYMMETRIC)
        eps_c = specfun.chi_to_epsilon(chi_c, E_r, EmitterArrayParams(n=n, epsilon=1.0, d=d_lo, gamma=gamma))
        return CriticalPoint(n=n, d_c=0.5 * (d_lo + d_hi), E_c=float(E_c), nu_window=window,
                             E_root=float(E_r), epsilon_c=float(eps_c), chi_c=float(chi_c),
                             bracket=(d_lo, d_hi))
    return None


def merging_poles(cp: CriticalPoint, gamma: float, offset: float = 1e-9):
    """Sheet-II and sheet-III poles at the critical point, seeded just off the real axis.

    ``offset`` is relative to the root energy.  A second sheet-II pole
    usually sits a little further below the axis, so the seeds stay close
    to the real bound state.
    """
    offset = offset * cp.E_root
    params = EmitterArrayParams(n=cp.n, epsilon=cp.epsilon_c, d=cp.bracket[0], gamma=gamma)
    zII = find_pole(cp.E_root - 1j * offset, params, Sector.SYMMETRIC, Sheet.SECOND)
    zIII = find_pole(cp.E_root + 1j * offset, params, Sector.SYMMETRIC, Sheet.THIRD)
    return zII, zIII
