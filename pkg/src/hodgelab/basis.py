"""Real orthonormal trigonometric basis of the truncated scalar space.

Basis functions, normalized in the flat L^2 pairing over the torus:

    s,  sqrt(2) s cos(k.x),  sqrt(2) s sin(k.x),    s = (2 pi)^{-3/2},

with ``k`` ranging over the half-cube ``{k != 0 : first nonzero entry > 0}``.
Vectors are ordered ``[constant, cos block, sin block]``.  A 1-form is the
concatenation of three such vectors (component-major).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .fields import TORUS_VOLUME, FourierOneForm, FourierScalarField, SampleGrid

_S = TORUS_VOLUME ** -0.5
_R2 = np.sqrt(2.0)


class TrigBasis:
    """Real basis for scalars of truncation ``N``; see module docstring."""

    def __init__(self, N: int):
        self.N = N
        n = 2 * N + 1
        K = np.arange(-N, N + 1)
        kv = np.stack(np.meshgrid(K, K, K, indexing="ij"), axis=-1).reshape(-1, 3)
        first = np.where(kv[:, 0] != 0, kv[:, 0], np.where(kv[:, 1] != 0, kv[:, 1], kv[:, 2]))
        half = np.flatnonzero(first > 0)
        self.k = kv[half]                      # (H, 3)
        self.flat_pos = half                   # flat cube index of k
        self.flat_neg = n**3 - 1 - half        # flat cube index of -k
        self.flat_zero = (n**3 - 1) // 2
        self.nhalf = len(half)
        self.size = n**3

    # coefficient conversion ------------------------------------------------
    def to_complex(self, r: np.ndarray) -> np.ndarray:
        """Complex cube coefficients from real vectors ``(..., size)``."""
        r = np.asarray(r, dtype=float)
        H = self.nhalf
        n = 2 * self.N + 1
        c = np.zeros(r.shape[:-1] + (n**3,), dtype=complex)
        c[..., self.flat_zero] = _S * r[..., 0]
        z = _S * (r[..., 1:1 + H] - 1j * r[..., 1 + H:]) / _R2
        c[..., self.flat_pos] = z
        c[..., self.flat_neg] = np.conj(z)
        return c.reshape(r.shape[:-1] + (n, n, n))

    def from_complex(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c)
        n = 2 * self.N + 1
        flat = c.reshape(c.shape[:-3] + (n**3,))
        z = flat[..., self.flat_pos]
        return np.concatenate([
            np.real(flat[..., self.flat_zero])[..., None] / _S,
            _R2 * np.real(z) / _S,
            -_R2 * np.imag(z) / _S,
        ], axis=-1)

    def scalar_vector(self, f: FourierScalarField) -> np.ndarray:
        return self.from_complex(f.resize(self.N).coeffs)

    def scalar_field(self, r: np.ndarray) -> FourierScalarField:
        return FourierScalarField(self.to_complex(r), check=False)

    def form_vector(self, u: FourierOneForm) -> np.ndarray:
        return self.from_complex(u.resize(self.N).data).reshape(-1)

    def form_field(self, r: np.ndarray) -> FourierOneForm:
        return FourierOneForm(self.to_complex(np.reshape(r, (3, self.size))), check=False)

    # samples -------------------------------------------------------------
    def _phases(self, grid: SampleGrid) -> np.ndarray:
        return grid.points @ self.k.T          # (P, H)

    def samples(self, grid: SampleGrid) -> np.ndarray:
        """Basis functions at the grid nodes, shape ``(P, size)``."""
        grid.check(self.N)
        ph = self._phases(grid)
        return np.hstack([
            np.full((grid.size, 1), _S),
            _S * _R2 * np.cos(ph),
            _S * _R2 * np.sin(ph),
        ])

    def gradient_samples(self, grid: SampleGrid) -> np.ndarray:
        """Partial derivatives of the basis at the nodes, shape ``(3, P, size)``."""
        grid.check(self.N)
        ph = self._phases(grid)
        c, s = _S * _R2 * np.cos(ph), _S * _R2 * np.sin(ph)
        out = np.empty((3, grid.size, self.size))
        for j in range(3):
            out[j, :, 0] = 0.0
            out[j, :, 1:1 + self.nhalf] = -s * self.k[:, j]
            out[j, :, 1 + self.nhalf:] = c * self.k[:, j]
        return out

    # exact differentiation -------------------------------------------------
    def derivative_matrix(self, j: int) -> np.ndarray:
        """Matrix of ``d/dx^j`` on coefficient vectors.

        Because the basis is flat-orthonormal, entry ``[a, b]`` also equals
        ``int phi_a d_j phi_b dx``; the matrix is antisymmetric.
        """
        H = self.nhalf
        D = np.zeros((self.size, self.size))
        kj = self.k[:, j].astype(float)
        cos_idx = 1 + np.arange(H)
        sin_idx = 1 + H + np.arange(H)
        D[sin_idx, cos_idx] = -kj
        D[cos_idx, sin_idx] = kj
        return D


@lru_cache(maxsize=16)
def trig_basis(N: int) -> TrigBasis:
    return TrigBasis(N)


@lru_cache(maxsize=16)
def _basis_samples(N: int, m: int):
    b = trig_basis(N)
    grid = SampleGrid(m)
    phi = b.samples(grid)
    dphi = b.gradient_samples(grid)
    phi.setflags(write=False)
    dphi.setflags(write=False)
    return phi, dphi


def basis_samples(N: int, grid: SampleGrid):
    """Cached ``(samples, gradient_samples)`` for truncation ``N`` on ``grid``."""
    return _basis_samples(N, grid.m)
