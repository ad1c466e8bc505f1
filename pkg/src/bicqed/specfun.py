"""Scalar special functions of the emitter-array model.

The branch-cut integrals are evaluated after the substitution
``lambda = cosh t``, which removes the inverse square-root singularity at
``lambda = 1`` and leaves an integrand that is even and analytic in a strip
around the real ``t`` axis.  The trapezoidal rule on such an integrand
converges geometrically, so the quadrature below refines by halving the
step until two consecutive levels agree.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AccuracyError, ContinuationError, DomainError
from .params import EmitterArrayParams, Sheet

DEFAULT_ATOL = 1e-11
_INITIAL_STEP = 0.2
_MAX_LEVEL = 9


def _trapezoid_even(func, t_max, atol=DEFAULT_ATOL, h0=_INITIAL_STEP, max_level=_MAX_LEVEL):
    """Integrate an even function over [0, t_max] by step-halving trapezoid.

    ``func`` maps a 1-D array of abscissae to an array whose last axis runs
    over the abscissae.  Returns the integral array.
    """
    h = h0
    t = np.arange(0.0, t_max + 0.5 * h, h)
    vals = func(t)
    total = vals.sum(axis=-1) - 0.5 * vals[..., 0]
    estimate = h * total
    diff = np.inf
    for _ in range(max_level):
        mid = t[:-1] + 0.5 * h if len(t) > 1 else np.array([0.5 * h])
        total = total + func(mid).sum(axis=-1)
        h *= 0.5
        t = np.sort(np.concatenate([t, mid]))
        refined = h * total
        diff = float(np.max(np.abs(refined - estimate)))
        scale = float(np.max(np.abs(refined))) if np.size(refined) else 0.0
        estimate = refined
        if diff <= max(atol, 1e-15 * scale):
            return estimate
    raise AccuracyError("cut-integral quadrature did not converge", diff)


def sqrt_branch(z):
    """``sqrt(z**2 - 1)`` with the cut on [-1, 1], positive for real z > 1."""
    z = np.asarray(z, dtype=complex)
    return np.sqrt(z - 1.0) * np.sqrt(z + 1.0)


def b0_closed(E):
    """Closed form of the diagonal cut term, ``-log(E - sqrt(E^2 - 1)) / pi``."""
    E_arr = np.asarray(E, dtype=float)
    if np.any(E_arr < 1.0):
        raise DomainError("b0 is defined only at or above the continuum threshold E >= 1")
    # arccosh(E) == -log(E - sqrt(E^2-1)) without cancellation near E = 1
    out = np.arccosh(E_arr) / math.pi
    return float(out) if out.ndim == 0 else out


def _check_contour(z):
    z2 = np.asarray(z, dtype=complex) ** 2
    bad = (np.abs(z2.imag) <= 1e-300) & (z2.real <= 0.0)
    if np.any(bad):
        raise ContinuationError("z**2 lies on (-inf, 0]: the cut contour meets a pole")


def _cut_cutoff(z, xs):
    zmax = float(np.max(np.abs(z))) + 1.0
    # tail of z/(z^2+sinh^2 t) is ~ 4|z| exp(-2t); push it below 1e-17
    t_alg = 0.5 * math.log(8.0 * zmax / 1e-17) + 1.0
    xmin = float(np.min(xs))
    if xmin > 0:
        return min(t_alg, math.acosh(max(1.0, 45.0 / xmin)) + 0.5)
    return t_alg


def cut_integrals(z, xs, derivative=False, atol=DEFAULT_ATOL):
    """Bare cut integrals ``I_x(z) = int_0^inf exp(-x cosh t) z/(z^2+sinh^2 t) dt``.

    Parameters
    ----------
    z : complex or array_like
        Energies; ``z**2`` must stay off the negative real axis.
    xs : array_like
        Non-negative distances ``x = j d``.
    derivative : bool
        Also return ``dI_x/dz``.

    Returns
    -------
    I : ndarray, shape ``z.shape + (len(xs),)``
    dI : ndarray, same shape (only if ``derivative``)
    """
    z = np.asarray(z, dtype=complex)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs < 0):
        raise DomainError("cut integrals need non-negative distances")
    _check_contour(z)
    zz = z[..., None, None]
    xx = xs[:, None]
    t_max = _cut_cutoff(z, xs)

    def integrand(t):
        sh2 = np.sinh(t) ** 2
        damp = np.exp(-xx * np.cosh(t))
        den = zz * zz + sh2
        f = damp * zz / den
        if not derivative:
            return f
        df = damp * (sh2 - zz * zz) / den**2
        return np.stack([f, df])

    res = _trapezoid_even(integrand, t_max, atol=atol)
    if derivative:
        return res[0], res[1]
    return res


def cut_terms(z, d, jmax, atol=DEFAULT_ATOL):
    """Cut contributions ``b_0 .. b_jmax`` at energy ``z`` and spacing ``d``.

    For real ``z > 1`` the result is real.  For complex ``z`` the same
    real-lambda contour defines the analytic continuation.
    """
    zc = np.asarray(z, dtype=complex)
    xs = d * np.arange(jmax + 1)
    I = cut_integrals(zc, xs, atol=atol)
    b = sqrt_branch(zc)[..., None] * I / math.pi
    if np.isrealobj(z) and np.all(np.asarray(z) > 1.0):
        return b.real
    return b


def cut_term(j, z, d, atol=DEFAULT_ATOL):
    """Single cut contribution ``b_j(z)``."""
    if int(j) != j or j < 0:
        raise DomainError("cut index j must be a non-negative integer")
    b = cut_terms(z, d, int(j), atol=atol)[..., int(j)]
    return b.item() if np.ndim(b) == 0 else b


def cut_term_reference(j, E, d, n_nodes=200, u_split=4.0, n_laguerre=60):
    """Independent evaluation of ``b_j(E)`` for real ``E > 1`` and ``j d > 0``.

    Uses ``lambda = 1 + u**2``, composite Gauss-Legendre on ``[0, u_split]``
    and Gauss-Laguerre on the tail.  Shares no code with :func:`cut_terms`.
    """
    x = j * d
    if x <= 0:
        raise DomainError("reference scheme needs j*d > 0 (tail is algebraic at x = 0)")
    k0 = math.sqrt(E * E - 1.0)

    def f(u):
        u2 = u * u
        return 2.0 * np.exp(-x * (1.0 + u2)) * E / (np.sqrt(2.0 + u2) * (E * E + u2 * (2.0 + u2)))

    nodes, weights = np.polynomial.legendre.leggauss(40)
    edges = np.linspace(0.0, u_split, n_nodes // 40 + 1)
    head = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        head += 0.5 * (b - a) * np.dot(weights, f(u))
    lag_x, lag_w = np.polynomial.laguerre.laggauss(n_laguerre)
    tail = np.dot(lag_w, np.exp(lag_x) * f(u_split + lag_x))
    return k0 * (head + tail) / math.pi


def theta(z, d):
    """Inter-emitter phase ``d sqrt(z^2 - 1)`` on the first-sheet branch."""
    out = d * sqrt_branch(z)
    return out.item() if np.ndim(out) == 0 else out


def _eta_integral(x, E, atol=DEFAULT_ATOL):
    """``int_1^inf exp(-|x| l) (s - E) / (sqrt(s) (E^2 + s^2)) dl`` with s = sqrt(l^2-1).

    Substituting ``l = cosh(v^2)`` makes the integrand even and analytic in v.
    """
    ax = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))[:, None]
    xmin = float(ax.min())
    v_alg = math.sqrt(2.0 * math.log(1e18 * (E + 2.0))) + 1.0
    v_max = v_alg if xmin == 0 else min(v_alg, math.sqrt(math.acosh(max(1.0, 45.0 / xmin))) + 0.5)

    def integrand(v):
        v2 = v * v
        sh = np.sinh(v2)
        ratio = np.where(v2 > 0, sh / np.where(v2 > 0, v2, 1.0), 1.0)
        weight = 2.0 * v2 * np.sqrt(ratio)
        with np.errstate(over="ignore", under="ignore"):
            damp = np.exp(-ax * np.cosh(v2))
            den = E * E + sh * sh
            val = damp * weight * (sh - E) / den
        return np.where(np.isfinite(val), val, 0.0)

    return _trapezoid_even(integrand, v_max, atol=atol, h0=0.05)


def eta(x, E, atol=DEFAULT_ATOL):
    """Exponentially decaying cut part of the single-emitter field kernel."""
    E = float(E)
    if not E > 1.0:
        raise DomainError("eta is defined for E > 1")
    pref = math.sqrt((E * E - 1.0) / (2.0 * E)) / math.pi
    out = pref * _eta_integral(x, E, atol=atol)
    return out.item() if np.ndim(x) == 0 else out


def eta_reference(x, E, n_panels=40, u_max=6.0):
    """Independent evaluation of :func:`eta` through ``lambda = 1 + u**4``."""
    E = float(E)
    ax = abs(float(x))
    if ax < 0.5:
        raise DomainError("reference scheme needs |x| >= 0.5 (algebraic tail otherwise)")
    pref = math.sqrt((E * E - 1.0) / (2.0 * E)) / math.pi

    def f(u):
        u4 = u**4
        root = np.sqrt(2.0 + u4)
        return (4.0 * u * u * np.exp(-ax * (1.0 + u4)) * (u * u * root - E)
                / ((2.0 + u4) ** 0.25 * (E * E + u4 * (2.0 + u4))))

    nodes, weights = np.polynomial.legendre.leggauss(30)
    edges = np.linspace(0.0, u_max, n_panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        u = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        total += 0.5 * (b - a) * np.dot(weights, f(u))
    return pref * total


def xi1(x, E, gamma, atol=DEFAULT_ATOL):
    """Single-emitter field kernel ``sqrt(gamma E/(E^2-1)) (sin(|x| k) - eta(x))``."""
    E = float(E)
    if not E > 1.0:
        raise DomainError("xi1 is defined for E > 1")
    k0 = math.sqrt(E * E - 1.0)
    xa = np.abs(np.asarray(x, dtype=float))
    out = math.sqrt(gamma * E) / k0 * (np.sin(xa * k0) - eta(xa, E, atol=atol))
    return out.item() if np.ndim(out) == 0 else out


def chi(E, params: EmitterArrayParams):
    """``(epsilon - E) sqrt(E^2-1)/gamma + b_0(E)``."""
    k0 = np.sqrt(np.asarray(E, dtype=float) ** 2 - 1.0)
    return (params.epsilon - E) * k0 / params.gamma + b0_closed(E)


def chi_to_epsilon(chi_value, E, params: EmitterArrayParams):
    """Excitation energy for which ``chi(E) == chi_value`` at fixed gamma."""
    k0 = math.sqrt(E * E - 1.0)
    return E + params.gamma * (chi_value - b0_closed(E)) / k0


def _toeplitz_from(vals, n):
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return vals[..., idx]


def _branch_sigma(z, params: EmitterArrayParams, side, atol=DEFAULT_ATOL):
    """``side * i gamma/q exp(side i q x) - gamma I_x / pi`` for x = 0, d, ..."""
    n, gamma = params.n, params.gamma
    q = sqrt_branch(z)
    xs = params.d * np.arange(n)
    I = cut_integrals(z, xs, atol=atol)
    vals = side * 1j * gamma / q * np.exp(side * 1j * q * xs) - gamma * I / math.pi
    return _toeplitz_from(vals, n)


def discontinuity(z, params: EmitterArrayParams):
    """``2 i gamma cos(|j-l| theta(z)) / sqrt(z^2-1)``, the jump across the cut."""
    q = sqrt_branch(z)
    xs = params.d * np.arange(params.n)
    return _toeplitz_from(2j * params.gamma * np.cos(q * xs) / q, params.n)


def self_energy(z, params: EmitterArrayParams, sheet="I", atol=DEFAULT_ATOL):
    """Self-energy matrix on a given Riemann sheet.

    On the first sheet a real ``z`` is read as ``z + i0``.  The second sheet
    is the continuation from the upper half-plane through the cut (so a real
    ``z`` is read as ``z - i0`` before the jump is added); the third sheet
    is the mirror continuation from the lower half-plane.
    """
    sheet = Sheet.parse(sheet)
    z = complex(z)
    upper = _branch_sigma(z, params, +1, atol)
    if sheet is Sheet.FIRST:
        return upper if z.imag >= 0 else _branch_sigma(z, params, -1, atol)
    jump = discontinuity(z, params)
    if sheet is Sheet.SECOND:
        base = _branch_sigma(z, params, -1, atol) if z.imag <= 0 else upper
        return base + jump
    base = upper if z.imag >= 0 else _branch_sigma(z, params, -1, atol)
    return base - jump


def self_energy_derivative(E, params: EmitterArrayParams, atol=DEFAULT_ATOL):
    """``d Sigma / dz`` at ``z = E + i0`` on the first sheet, E > 1."""
    E = float(E)
    if not E > 1.0:
        raise DomainError("derivative is taken above threshold")
    gamma = params.gamma
    q = math.sqrt(E * E - 1.0)
    xs = params.d * np.arange(params.n)
    _, dI = cut_integrals(E, xs, derivative=True, atol=atol)
    pole = 1j * gamma * np.exp(1j * q * xs) * (E / q) * (1j * xs / q - 1.0 / q**2)
    return _toeplitz_from(pole - gamma * dI / math.pi, params.n)
