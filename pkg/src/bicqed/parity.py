"""Reflection-parity block structure of the propagator.

The matrix ``A_n(theta, beta0, beta)`` has entries
``exp(i |j-l| theta) + i beta_{|j-l|}`` and commutes with the reflection
``j -> n+1-j``.  Conjugating with the orthogonal matrix ``U_n`` splits it
into an antisymmetric block (size ``n // 2``) followed by a symmetric
block (size ``(n + 1) // 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionError
from .params import Sector

DECOMPOSITION_RTOL = 1e-12


@dataclass
class ModelMatrix:
    entries: np.ndarray
    theta: complex
    beta0: complex
    betas: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass
class PropagatorBlock:
    sector: Sector
    matrix: np.ndarray


def sector_size(n: int, sector) -> int:
    sector = Sector.parse(sector)
    return n // 2 if sector is Sector.ANTISYMMETRIC else (n + 1) // 2


def build_A(theta, beta0, betas, n: int) -> ModelMatrix:
    """Assemble ``A_n(theta, beta0, beta)``.

    ``betas`` holds ``beta_1 .. beta_{n-1}``.
    """
    betas = np.atleast_1d(np.asarray(betas, dtype=complex))
    if betas.shape != (n - 1,):
        raise ValueError(f"expected {n - 1} off-diagonal betas, got shape {betas.shape}")
    beta_all = np.concatenate([[beta0], betas])
    dist = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    entries = np.exp(1j * dist * theta) + 1j * beta_all[dist]
    return ModelMatrix(entries=entries, theta=theta, beta0=beta0, betas=betas)


def parity_transform(n: int) -> np.ndarray:
    """Orthogonal ``U_n``: rows ``0..n//2-1`` antisymmetric, the rest symmetric."""
    if n < 2:
        raise ValueError("parity transform needs n >= 2")
    h = n // 2
    eye = np.eye(h)
    J = eye[::-1]
    s = 1.0 / np.sqrt(2.0)
    U = np.zeros((n, n))
    if n % 2 == 0:
        U[:h, :h], U[:h, h:] = s * eye, -s * J
        U[h:, :h], U[h:, h:] = s * J, s * eye
    else:
        U[:h, :h], U[:h, h + 1:] = s * eye, -s * J
        U[h, h] = 1.0
        U[h + 1:, :h], U[h + 1:, h + 1:] = s * J, s * eye
    return U


def _split(M, n):
    h = n // 2
    return M[:h, :h], M[h:, h:], max(np.abs(M[:h, h:]).max(initial=0.0), np.abs(M[h:, :h]).max(initial=0.0))


def block_decompose(A, check=True):
    """Return ``(antisymmetric block, symmetric block)`` of ``U A U^T``.

    Accepts a :class:`ModelMatrix` or any reflection-symmetric square array.
    """
    M = A.entries if isinstance(A, ModelMatrix) else np.asarray(A)
    n = M.shape[0]
    U = parity_transform(n)
    conj = U @ M @ U.T
    minus, plus, residual = _split(conj, n)
    if check:
        scale = np.linalg.norm(M)
        if residual > DECOMPOSITION_RTOL * max(scale, 1e-300) and residual > 1e-300:
            raise DecompositionError(
                f"off-block residual {residual:.3e} exceeds {DECOMPOSITION_RTOL:g} * |A|;"
                " input is not reflection symmetric"
            )
    return (PropagatorBlock(Sector.ANTISYMMETRIC, minus), PropagatorBlock(Sector.SYMMETRIC, plus))


def sector_block(M, sector) -> np.ndarray:
    """Single parity block of a reflection-symmetric matrix (no residual check)."""
    minus, plus = block_decompose(M, check=False)
    return minus.matrix if Sector.parse(sector) is Sector.ANTISYMMETRIC else plus.matrix


def null_vector(B):
    """Right singular vector of the smallest singular value.

    Returns ``(vector, sigma_min)``.  The vector has unit norm and its
    largest-magnitude component is real and positive.
    """
    mat = B.matrix if isinstance(B, PropagatorBlock) else np.asarray(B)
    mat = np.atleast_2d(mat)
    _, svals, vh = np.linalg.svd(mat)
    vec = vh[-1].conj()
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    return vec, float(svals[-1])


def embed_to_local(vector, sector, n: int) -> np.ndarray:
    """Map a sector vector back to local amplitudes ``a_1 .. a_n``."""
    sector = Sector.parse(sector)
    vector = np.atleast_1d(np.asarray(vector))
    size = sector_size(n, sector)
    if vector.shape != (size,):
        raise ValueError(f"{sector.name.lower()} sector of n={n} has size {size}, got {vector.shape}")
    full = np.zeros(n, dtype=np.result_type(vector, float))
    if sector is Sector.ANTISYMMETRIC:
        full[: n // 2] = vector
    else:
        full[n // 2:] = vector
    return parity_transform(n).T @ full


def project_to_sector(a, sector) -> np.ndarray:
    """Sector coordinates of a local amplitude vector (inverse of embedding)."""
    a = np.asarray(a)
    n = a.shape[0]
    coords = parity_transform(n) @ a
    return coords[: n // 2] if Sector.parse(sector) is Sector.ANTISYMMETRIC else coords[n // 2:]
