"""Exterior calculus on the truncated torus: d, delta_g, *_g d, and the
g-orthogonal splitting of 1-forms into closed and co-exact parts.

Exterior derivatives are exact in coefficient space.  Metric factors are
applied at grid nodes, and results that leave the trigonometric class are
mapped back by the g-orthogonal (Galerkin) projection onto the truncated
space, so that pointwise operators agree with the assembled pencils.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import linalg

from .basis import basis_samples, trig_basis
from .errors import ConditioningError
from .fields import (
    FourierOneForm,
    FourierScalarField,
    MetricField,
    SampleGrid,
    evaluate_on_grid,
    metric_pointwise,
    wave_vectors,
)

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_j, _i, _k] = -1.0

GRAM_COND_LIMIT = 1e12


@lru_cache(maxsize=16)
def _closed_matrix(N: int) -> np.ndarray:
    b = trig_basis(N)
    S = b.size
    D = [b.derivative_matrix(j) for j in range(3)]
    C = np.zeros((3 * S, S + 2))
    for i in range(3):
        C[i * S, i] = 1.0
    for j in range(3):
        C[j * S:(j + 1) * S, 3:] = D[j][:, 1:]
    C.setflags(write=False)
    return C


@lru_cache(maxsize=16)
def curl_stiffness(N: int) -> np.ndarray:
    """``A_ab = int phi_a ^ d phi_b`` on the real 1-form basis.

    The pairing ``<phi_a, *_g d phi_b>_g`` reduces pointwise to this
    metric-free density, so one matrix serves every metric.
    """
    b = trig_basis(N)
    S = b.size
    D = [b.derivative_matrix(j) for j in range(3)]
    A = np.zeros((3 * S, 3 * S))
    for i in range(3):
        for k in range(3):
            blk = sum(LEVI_CIVITA[i, j, k] * D[j] for j in range(3))
            A[i * S:(i + 1) * S, k * S:(k + 1) * S] = blk
    A.setflags(write=False)
    return A


class FormSpace:
    """Galerkin data for 1-forms of truncation ``N`` under ``metric``."""

    def __init__(self, metric: MetricField, N: int, grid: SampleGrid):
        grid.check(N)
        self.metric = metric
        self.N = N
        self.grid = grid
        self.basis = trig_basis(N)
        self.pw = metric_pointwise(metric, grid)
        self.phi, self.dphi = basis_samples(N, grid)

    @property
    def dim(self) -> int:
        return 3 * self.basis.size

    @cached_property
    def mass(self) -> np.ndarray:
        S = self.basis.size
        Gw = self.pw.densitized_inverse
        M = np.empty((3 * S, 3 * S))
        for i in range(3):
            for j in range(i, 3):
                blk = self.phi.T @ (Gw[:, i, j, None] * self.phi)
                M[i * S:(i + 1) * S, j * S:(j + 1) * S] = blk
                M[j * S:(j + 1) * S, i * S:(i + 1) * S] = blk.T
        return 0.5 * (M + M.T)

    @cached_property
    def mass_factor(self):
        return linalg.cho_factor(self.mass)

    @property
    def closed(self) -> np.ndarray:
        return _closed_matrix(self.N)

    @cached_property
    def closed_gram_factor(self):
        C = self.closed
        G = C.T @ self.mass @ C
        ev = np.linalg.eigvalsh(G)
        cond = ev[-1] / ev[0] if ev[0] > 0 else np.inf
        if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
            raise ConditioningError(f"closed-basis Gram matrix condition number {cond:.3e}")
        return linalg.cho_factor(G)

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ self.mass @ y)

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))

    def vector(self, u: FourierOneForm) -> np.ndarray:
        return self.basis.form_vector(u)

    def field(self, x: np.ndarray) -> FourierOneForm:
        return self.basis.form_field(x)

    def samples(self, x: np.ndarray) -> np.ndarray:
        """Node values ``(3, P)`` of the 1-form with coefficient vector ``x``."""
        return (self.phi @ np.reshape(x, (3, -1)).T).T

    def pair_samples(self, s: np.ndarray) -> np.ndarray:
        """``b_a = <phi_a, s>_g`` for node values ``s`` of shape ``(3, P)``."""
        Gs = np.einsum("pij,jp->ip", self.pw.densitized_inverse, s)
        return (Gs @ self.phi).reshape(-1)

    def project_samples(self, s: np.ndarray) -> np.ndarray:
        """g-orthogonal projection of node values onto the truncated space."""
        return linalg.cho_solve(self.mass_factor, self.pair_samples(s))

    def sample_norm(self, s: np.ndarray) -> float:
        Gs = np.einsum("pij,jp->ip", self.pw.densitized_inverse, s)
        return float(np.sqrt(max((Gs * s).sum(), 0.0)))

    def closed_component(self, x: np.ndarray) -> np.ndarray:
        """Coefficients of the g-orthogonal projection onto closed forms."""
        C = self.closed
        y = linalg.cho_solve(self.closed_gram_factor, C.T @ (self.mass @ x))
        return C @ y


class ScalarSpace:
    """Galerkin data for scalar functions of truncation ``N``."""

    def __init__(self, metric: MetricField, N: int, grid: SampleGrid):
        grid.check(N)
        self.metric = metric
        self.N = N
        self.grid = grid
        self.basis = trig_basis(N)
        self.pw = metric_pointwise(metric, grid)
        self.phi, self.dphi = basis_samples(N, grid)

    @property
    def dim(self) -> int:
        return self.basis.size

    @cached_property
    def mass(self) -> np.ndarray:
        M = self.phi.T @ (self.pw.weight[:, None] * self.phi)
        return 0.5 * (M + M.T)

    @cached_property
    def mass_factor(self):
        return linalg.cho_factor(self.mass)

    @cached_property
    def stiffness_raw(self) -> np.ndarray:
        """Quadrature stiffness before symmetrization."""
        Gw = self.pw.densitized_inverse
        A = np.zeros((self.dim, self.dim))
        for i in range(3):
            for j in range(3):
                A += self.dphi[i].T @ (Gw[:, i, j, None] * self.dphi[j])
        return A

    @cached_property
    def stiffness(self) -> np.ndarray:
        A = self.stiffness_raw
        return 0.5 * (A + A.T)

    def vector(self, f: FourierScalarField) -> np.ndarray:
        return self.basis.scalar_vector(f)

    def field(self, x: np.ndarray) -> FourierScalarField:
        return self.basis.scalar_field(x)

    def samples(self, x: np.ndarray) -> np.ndarray:
        return self.phi @ x

    def gradient_samples(self, x: np.ndarray) -> np.ndarray:
        return np.stack([self.dphi[j] @ x for j in range(3)])


def form_space(metric: MetricField, N: int, grid: SampleGrid) -> FormSpace:
    key = ("form", N, grid.m)
    if key not in metric._cache:
        metric._cache[key] = FormSpace(metric, N, grid)
    return metric._cache[key]


def scalar_space(metric: MetricField, N: int, grid: SampleGrid) -> ScalarSpace:
    key = ("scalar", N, grid.m)
    if key not in metric._cache:
        metric._cache[key] = ScalarSpace(metric, N, grid)
    return metric._cache[key]


# ---------------------------------------------------------------------------
# exact exterior derivatives


def d_scalar(f: FourierScalarField) -> FourierOneForm:
    """Differential of a scalar: ``(df)^_j(k) = i k_j f^(k)``."""
    K = wave_vectors(f.truncation)
    return FourierOneForm(1j * K * f.coeffs[None], check=False)


def exterior_derivative(u: FourierOneForm) -> np.ndarray:
    """Coefficients of ``d_l u_m - d_m u_l``, shape ``(3, 3, n, n, n)``."""
    K = wave_vectors(u.truncation)
    du = 1j * K[:, None] * u.data[None, :]       # [l, m] = i k_l u_m
    return du - np.swapaxes(du, 0, 1)


def is_closed(u: FourierOneForm, rtol: float = 1e-12):
    """Check ``k_l u_m(k) - k_m u_l(k) = 0`` for every mode.

    Returns ``(closed, defect)`` with the defect an l2 norm over modes.
    """
    F = exterior_derivative(u)
    defect = float(np.sqrt(sum((np.abs(F[l, m]) ** 2).sum() for l, m in ((0, 1), (0, 2), (1, 2)))))
    scale = max(1.0, u.truncation) * max(u.coefficient_norm(), 1e-300)
    return defect <= rtol * scale, defect


# ---------------------------------------------------------------------------
# metric-dependent operators


def beltrami_samples(metric: MetricField, u: FourierOneForm, grid: SampleGrid) -> np.ndarray:
    """Node values ``(3, P)`` of ``(*_g du)_k = 1/2 |g|^{1/2} eps_ijk g^il g^jm F_lm``."""
    grid.check(max(u.truncation, metric.truncation))
    pw = metric_pointwise(metric, grid)
    F = evaluate_on_grid_2form(exterior_derivative(u), grid)
    Fr = np.einsum("pil,pjm,lmp->pij", pw.ginv, pw.ginv, F, optimize=True)
    return 0.5 * pw.sqrtdet * np.einsum("ijk,pij->kp", LEVI_CIVITA, Fr)


def evaluate_on_grid_2form(F: np.ndarray, grid: SampleGrid) -> np.ndarray:
    """Samples ``(3, 3, P)`` of an antisymmetric coefficient array."""
    out = np.zeros((3, 3, grid.size))
    for l, m in ((0, 1), (0, 2), (1, 2)):
        s = evaluate_on_grid(FourierScalarField(F[l, m], check=False), grid).ravel()
        out[l, m] = s
        out[m, l] = -s
    return out


def beltrami_apply(metric: MetricField, u: FourierOneForm, grid: SampleGrid,
                   full_output: bool = False):
    """Beltrami operator ``*_g d u`` mapped back into the truncated space.

    The pointwise result is projected g-orthogonally onto forms of the same
    truncation as ``u``.  With ``full_output`` the g-norm of the discarded
    remainder is returned as well.
    """
    space = form_space(metric, u.truncation, grid)
    s = beltrami_samples(metric, u, grid)
    x = space.project_samples(s)
    out = space.field(x)
    if full_output:
        return out, space.sample_norm(s - space.samples(x))
    return out


def codifferential(metric: MetricField, u: FourierOneForm, grid: SampleGrid) -> FourierScalarField:
    """``delta_g u = -|g|^{-1/2} d_i(|g|^{1/2} g^{ij} u_j)``, in weak form.

    Computed as the scalar satisfying ``<delta_g u, phi>_g = <u, d phi>_g`` for
    every scalar ``phi`` of the same truncation; for the flat metric this is
    minus the divergence, exactly.
    """
    space = scalar_space(metric, u.truncation, grid)
    us = evaluate_on_grid(u, grid).reshape(3, -1)
    Gu = np.einsum("pij,jp->ip", space.pw.densitized_inverse, us)
    b = sum(Gu[i] @ space.dphi[i] for i in range(3))
    return space.field(linalg.cho_solve(space.mass_factor, b))


def scalar_laplacian_apply(metric: MetricField, f: FourierScalarField,
                           grid: SampleGrid) -> FourierScalarField:
    """``Delta_g f = delta_g d f`` (nonnegative convention)."""
    return codifferential(metric, d_scalar(f), grid)


def grid_laplacian(metric: MetricField, samples: np.ndarray, grid: SampleGrid) -> np.ndarray:
    """``Delta_g`` of arbitrary grid samples via spectral differentiation.

    Used for non-polynomial scalars such as ``tr_g h``.  Returns shape ``(P,)``.
    """
    pw = metric_pointwise(metric, grid)
    s = np.reshape(samples, (grid.m,) * 3)
    grad = np.stack([grid.derivative(s, j).ravel() for j in range(3)])
    flux = np.einsum("pij,jp->ip", pw.ginv * pw.sqrtdet[:, None, None], grad)
    div = sum(grid.derivative(flux[i].reshape((grid.m,) * 3), i).ravel() for i in range(3))
    return -div / pw.sqrtdet


# ---------------------------------------------------------------------------
# closed forms and the co-exact projection


@dataclass(frozen=True)
class ClosedBasis:
    """Basis of closed 1-forms of truncation ``N``: ``dx^i`` and ``d phi_b``."""

    truncation: int
    matrix: np.ndarray     # (3S, S+2) real coefficient columns

    def __len__(self) -> int:
        return self.matrix.shape[1]

    @property
    def elements(self) -> list[FourierOneForm]:
        b = trig_basis(self.truncation)
        return [b.form_field(c) for c in self.matrix.T]


def closed_basis(N: int) -> ClosedBasis:
    return ClosedBasis(N, _closed_matrix(N))


@dataclass(frozen=True)
class HodgeSplit:
    """``u = closed + coexact`` with the two parts g-orthogonal."""

    closed: FourierOneForm
    coexact: FourierOneForm
    residual: float        # max |<closed basis element, coexact>_g|


def project_coexact(metric: MetricField, u: FourierOneForm, grid: SampleGrid) -> HodgeSplit:
    """Split ``u`` into its closed part and its g-orthogonal complement."""
    space = form_space(metric, u.truncation, grid)
    x = space.vector(u)
    xc = space.closed_component(x)
    xp = x - xc
    residual = float(np.abs(space.closed.T @ (space.mass @ xp)).max(initial=0.0))
    return HodgeSplit(space.field(xc), space.field(xp), residual)
