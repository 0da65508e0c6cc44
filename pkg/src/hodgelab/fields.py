"""Trigonometric tensor fields on the flat coordinate 3-torus [0, 2pi)^3.

Every field is a real-valued trigonometric polynomial stored through its
complex Fourier coefficients on the cube ``|k|_inf <= N``.  Coefficient
arrays carry a leading component axis followed by three wave-vector axes,
with index ``k + N`` along each axis.

Metric-dependent quantities (inverse metric, volume density, traces, the
L^2 pairing of 1-forms) are evaluated on a uniform :class:`SampleGrid` and
integrated with the trapezoidal rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AdmissibilityError, AliasError, InputError

TWO_PI = 2.0 * np.pi
TORUS_VOLUME = TWO_PI**3

SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_INDEX = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])

HERMITIAN_TOL = 1e-10


def wave_vectors(N: int) -> np.ndarray:
    """Integer wave vectors of the truncation cube, shape ``(3, n, n, n)``."""
    K = np.arange(-N, N + 1)
    return np.stack(np.meshgrid(K, K, K, indexing="ij"))


def _flip(c: np.ndarray) -> np.ndarray:
    """Coefficient array re-indexed by ``k -> -k``."""
    return c[..., ::-1, ::-1, ::-1]


@dataclass(frozen=True)
class SampleGrid:
    """Uniform lattice with ``m`` points per axis on [0, 2pi)^3."""

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InputError(f"grid size must be a positive integer, got {self.m!r}")

    @classmethod
    def for_truncation(cls, N: int, oversampling: int = 4) -> "SampleGrid":
        """Default quadrature grid, ``oversampling * (N + 1)`` nodes per axis."""
        return cls(oversampling * (N + 1))

    @property
    def size(self) -> int:
        return self.m**3

    @property
    def weight(self) -> float:
        return (TWO_PI / self.m) ** 3

    @property
    def axis(self) -> np.ndarray:
        return TWO_PI * np.arange(self.m) / self.m

    @property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(m**3, 3)`` in C order."""
        x = self.axis
        X = np.meshgrid(x, x, x, indexing="ij")
        return np.stack([c.ravel() for c in X], axis=1)

    @property
    def wavenumbers(self) -> np.ndarray:
        """FFT wavenumbers along one axis with the Nyquist entry zeroed."""
        k = np.fft.fftfreq(self.m, d=1.0 / self.m)
        if self.m % 2 == 0:
            k[self.m // 2] = 0.0
        return k

    def check(self, N: int) -> None:
        if self.m < 2 * N + 1:
            raise AliasError(
                f"grid with {self.m} points per axis aliases truncation {N} "
                f"(needs at least {2 * N + 1})"
            )

    def to_spectral(self, samples: np.ndarray) -> np.ndarray:
        """Full-grid Fourier coefficients of samples shaped ``(..., m, m, m)``."""
        return np.fft.fftn(samples, axes=(-3, -2, -1)) / self.size

    def derivative(self, samples: np.ndarray, axis: int) -> np.ndarray:
        """Spectral derivative of grid samples along coordinate ``axis``."""
        shape = [1, 1, 1]
        shape[axis] = self.m
        k = self.wavenumbers.reshape(shape)
        spec = np.fft.fftn(samples, axes=(-3, -2, -1))
        return np.real(np.fft.ifftn(1j * k * spec, axes=(-3, -2, -1)))


class _TrigField:
    """Shared storage for scalar, 1-form and symmetric 2-tensor fields."""

    ncomp = 1

    def __init__(self, coeffs, *, check: bool = True):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 3 and self.ncomp == 1:
            c = c[None]
        if c.ndim != 4 or c.shape[0] != self.ncomp:
            raise InputError(
                f"{type(self).__name__} expects {self.ncomp} component(s), "
                f"got coefficient array of shape {c.shape}"
            )
        n = c.shape[1]
        if c.shape[1:] != (n, n, n) or n % 2 != 1:
            raise InputError(f"coefficient cube must be (2N+1)^3, got {c.shape[1:]}")
        if check:
            scale = max(1.0, float(np.abs(c).max(initial=0.0)))
            defect = np.abs(c - np.conj(_flip(c))).max(initial=0.0)
            if defect > HERMITIAN_TOL * scale:
                raise InputError(
                    f"coefficients violate Hermitian symmetry (defect {defect:.3e})"
                )
        c.setflags(write=False)
        self._c = c

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, N: int):
        n = 2 * N + 1
        return cls(np.zeros((cls.ncomp, n, n, n)), check=False)

    @classmethod
    def from_modes(cls, modes: dict, N: int):
        """Build from ``{k: amplitude}``; conjugate modes are synthesized.

        Amplitudes are scalars for scalar fields and length-``ncomp``
        sequences otherwise.  Listing both ``k`` and ``-k`` is an error.
        """
        n = 2 * N + 1
        c = np.zeros((cls.ncomp, n, n, n), dtype=complex)
        seen = set()
        for k, amp in modes.items():
            k = tuple(int(v) for v in k)
            if max(abs(v) for v in k) > N:
                raise InputError(f"wave vector {k} outside truncation {N}")
            mk = tuple(-v for v in k)
            if mk in seen or k in seen:
                raise InputError(f"wave vector {k} listed together with its conjugate")
            seen.add(k)
            a = np.broadcast_to(np.asarray(amp, dtype=complex), (cls.ncomp,))
            i, j, l = (v + N for v in k)
            if k == (0, 0, 0):
                if np.abs(a.imag).max() > 0:
                    raise InputError("zero mode must be real")
                c[:, i, j, l] += a
            else:
                c[:, i, j, l] += a
                c[:, 2 * N - i, 2 * N - j, 2 * N - l] += np.conj(a)
        return cls(c, check=False)

    @classmethod
    def random(cls, N: int, rng: np.random.Generator, amplitude: float = 1.0,
               decay: float = 0.0):
        """Random real field; coefficients damped by ``exp(-decay |k|^2)``."""
        n = 2 * N + 1
        c = rng.standard_normal((cls.ncomp, n, n, n)) + 1j * rng.standard_normal(
            (cls.ncomp, n, n, n)
        )
        if decay:
            k2 = (wave_vectors(N) ** 2).sum(axis=0)
            c = c * np.exp(-decay * k2)
        c = 0.5 * (c + np.conj(_flip(c)))
        return cls(amplitude * c, check=False)

    @classmethod
    def from_samples(cls, samples: np.ndarray, grid: SampleGrid, N: int):
        """Fourier-truncate grid samples shaped ``(ncomp, m, m, m)`` to ``N``."""
        grid.check(N)
        s = np.asarray(samples, dtype=float).reshape(cls.ncomp, grid.m, grid.m, grid.m)
        spec = grid.to_spectral(s)
        idx = np.arange(-N, N + 1) % grid.m
        c = spec[:, idx[:, None, None], idx[None, :, None], idx[None, None, :]]
        c = 0.5 * (c + np.conj(_flip(c)))
        return cls(c, check=False)

    # accessors ----------------------------------------------------------
    @property
    def truncation(self) -> int:
        return (self._c.shape[1] - 1) // 2

    @property
    def data(self) -> np.ndarray:
        """Coefficients with the component axis, shape ``(ncomp, n, n, n)``."""
        return self._c

    def hermitian_defect(self) -> float:
        return float(np.abs(self._c - np.conj(_flip(self._c))).max(initial=0.0))

    def coefficient_norm(self) -> float:
        return float(np.sqrt((np.abs(self._c) ** 2).sum()))

    def resize(self, N: int):
        """Zero-pad or truncate to cube ``|k|_inf <= N``."""
        old = self.truncation
        n = 2 * N + 1
        out = np.zeros((self.ncomp, n, n, n), dtype=complex)
        r = min(old, N)
        src = slice(old - r, old + r + 1)
        dst = slice(N - r, N + r + 1)
        out[:, dst, dst, dst] = self._c[:, src, src, src]
        return type(self)(out, check=False)

    def _aligned(self, other):
        if type(other) is not type(self):
            return NotImplemented
        N = max(self.truncation, other.truncation)
        return self.resize(N)._c, other.resize(N)._c

    def __add__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return type(self)(pair[0] + pair[1], check=False)

    def __sub__(self, other):
        pair = self._aligned(other)
        if pair is NotImplemented:
            return pair
        return type(self)(pair[0] - pair[1], check=False)

    def __mul__(self, a):
        if not np.isscalar(a):
            return NotImplemented
        return type(self)(float(a) * self._c, check=False)

    __rmul__ = __mul__

    def __neg__(self):
        return type(self)(-self._c, check=False)

    def __repr__(self):
        return f"{type(self).__name__}(truncation={self.truncation})"


class FourierScalarField(_TrigField):
    """Real scalar function on the torus."""

    ncomp = 1

    @property
    def coeffs(self) -> np.ndarray:
        return self._c[0]

    @classmethod
    def constant(cls, value: float, N: int = 0):
        return cls.from_modes({(0, 0, 0): value}, N)


class FourierOneForm(_TrigField):
    """Real 1-form ``u_i dx^i``; component ``i`` is ``data[i]``."""

    ncomp = 3

    @property
    def components(self) -> list[FourierScalarField]:
        return [FourierScalarField(self._c[i], check=False) for i in range(3)]

    @classmethod
    def from_components(cls, comps: Sequence[FourierScalarField]):
        N = max(c.truncation for c in comps)
        return cls(np.stack([c.resize(N).coeffs for c in comps]), check=False)

    @classmethod
    def constant(cls, vector, N: int = 0):
        return cls.from_modes({(0, 0, 0): np.asarray(vector, dtype=float)}, N)


class FourierSymTensor(_TrigField):
    """Real symmetric (0,2)-tensor; components ordered as :data:`SYM_PAIRS`."""

    ncomp = 6

    @property
    def components(self) -> list[FourierScalarField]:
        return [FourierScalarField(self._c[a], check=False) for a in range(6)]

    def entry(self, i: int, j: int) -> FourierScalarField:
        return FourierScalarField(self._c[SYM_INDEX[i, j]], check=False)

    @classmethod
    def from_matrix(cls, matrix, N: int = 0):
        """Constant tensor from a symmetric 3x3 matrix."""
        A = np.asarray(matrix, dtype=float)
        if A.shape != (3, 3) or not np.allclose(A, A.T):
            raise InputError("constant tensor needs a symmetric 3x3 matrix")
        return cls.from_modes({(0, 0, 0): [A[i, j] for i, j in SYM_PAIRS]}, N)

    @classmethod
    def from_matrix_samples(cls, samples: np.ndarray, grid: SampleGrid, N: int):
        """Fourier-truncate per-node matrices shaped ``(m**3, 3, 3)``."""
        s = np.asarray(samples, dtype=float)
        comps = np.stack([0.5 * (s[:, i, j] + s[:, j, i]) for i, j in SYM_PAIRS])
        return cls.from_samples(comps.reshape(6, grid.m, grid.m, grid.m), grid, N)

    def matrix_samples(self, grid: SampleGrid) -> np.ndarray:
        """Per-node matrices, shape ``(m**3, 3, 3)``."""
        s = evaluate_on_grid(self, grid).reshape(6, -1)
        return np.moveaxis(s[SYM_INDEX], 2, 0)


def evaluate_on_grid(field: _TrigField, grid: SampleGrid) -> np.ndarray:
    """Real samples at the grid nodes, shape ``(ncomp, m, m, m)``.

    Scalar fields return shape ``(m, m, m)``.
    """
    N = field.truncation
    grid.check(N)
    m = grid.m
    a = np.zeros((field.ncomp, m, m, m), dtype=complex)
    idx = np.arange(-N, N + 1) % m
    a[:, idx[:, None, None], idx[None, :, None], idx[None, None, :]] = field.data
    s = np.fft.ifftn(a, axes=(-3, -2, -1)) * grid.size
    out = np.real(s)
    return out[0] if isinstance(field, FourierScalarField) else out


def evaluate_at(field: _TrigField, points: np.ndarray, derivative: int | None = None):
    """Exact evaluation at arbitrary points ``(npts, 3)``.

    Returns shape ``(ncomp, npts)``; with ``derivative=j`` the partial
    derivative along ``x^j`` is returned instead.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    N = field.truncation
    K = np.arange(-N, N + 1)
    e = [np.exp(1j * np.outer(pts[:, a], K)) for a in range(3)]  # (npts, n)
    c = field.data
    if derivative is not None:
        shape = [1, 1, 1]
        shape[derivative] = -1
        c = c * (1j * K.reshape(shape))
    vals = np.einsum("cijk,pi,pj,pk->cp", c, e[0], e[1], e[2], optimize=True)
    return np.real(vals)


# ---------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class MetricPointwise:
    """Metric data at every grid node (flattened C order)."""

    g: np.ndarray          # (P, 3, 3)
    ginv: np.ndarray       # (P, 3, 3)
    det: np.ndarray        # (P,)
    sqrtdet: np.ndarray    # (P,)
    weight: np.ndarray     # (P,) volume weight |g|^{1/2} (2pi/m)^3

    @property
    def densitized_inverse(self) -> np.ndarray:
        """``g^{ij} |g|^{1/2}`` times the quadrature weight, shape ``(P, 3, 3)``."""
        return self.ginv * self.weight[:, None, None]


class MetricField:
    """Riemannian metric ``g = delta + deviation`` on the torus.

    Admissibility is checked lazily per grid: the smallest eigenvalue of
    ``g_ij`` at every node must exceed ``margin``.
    """

    def __init__(self, deviation: FourierSymTensor | None = None, margin: float = 0.1):
        if deviation is None:
            deviation = FourierSymTensor.zeros(0)
        if not isinstance(deviation, FourierSymTensor):
            raise InputError("metric deviation must be a FourierSymTensor")
        if margin <= 0:
            raise InputError("positivity margin must be positive")
        self.deviation = deviation
        self.margin = float(margin)
        self._cache: dict = {}

    @classmethod
    def flat(cls, margin: float = 0.1) -> "MetricField":
        return cls(None, margin)

    @classmethod
    def scaled_identity(cls, a: float, margin: float = 0.1) -> "MetricField":
        """Uniform metric ``a * delta``."""
        return cls(FourierSymTensor.from_matrix((a - 1.0) * np.eye(3)), margin)

    @classmethod
    def random(cls, rng: np.random.Generator, N: int = 1, amplitude: float = 0.1,
               margin: float = 0.1) -> "MetricField":
        """Random trigonometric deviation with entries bounded by ``amplitude``."""
        dev = FourierSymTensor.random(N, rng)
        peak = np.abs(evaluate_on_grid(dev, SampleGrid.for_truncation(N))).max()
        return cls(dev * (amplitude / peak), margin)

    @property
    def truncation(self) -> int:
        return self.deviation.truncation

    @property
    def is_flat(self) -> bool:
        return self.deviation.coefficient_norm() == 0.0

    def perturbed(self, h: FourierSymTensor, step: float) -> "MetricField":
        return MetricField(self.deviation + step * h, self.margin)

    def as_tensor(self) -> FourierSymTensor:
        """The full metric as a symmetric tensor field."""
        return FourierSymTensor.from_matrix(np.eye(3)) + self.deviation

    def pointwise(self, grid: SampleGrid) -> MetricPointwise:
        key = ("pw", grid.m)
        if key not in self._cache:
            g = np.eye(3) + self.deviation.matrix_samples(grid)
            lam = np.linalg.eigvalsh(g)[:, 0]
            bad = np.flatnonzero(lam <= self.margin)
            if bad.size:
                node = int(bad[np.argmin(lam[bad])])
                idx = np.unravel_index(node, (grid.m,) * 3)
                raise AdmissibilityError(
                    f"metric not admissible at node {tuple(int(i) for i in idx)} "
                    f"(x={grid.points[node].round(6).tolist()}): smallest eigenvalue "
                    f"{lam[node]:.6g} <= margin {self.margin}"
                )
            det = np.linalg.det(g)
            sq = np.sqrt(det)
            self._cache[key] = MetricPointwise(
                g=g, ginv=np.linalg.inv(g), det=det, sqrtdet=sq, weight=sq * grid.weight
            )
        return self._cache[key]

    def at_points(self, points: np.ndarray):
        """Metric matrices and their coordinate derivatives at points.

        Returns ``(g, dg)`` with shapes ``(npts, 3, 3)`` and ``(3, npts, 3, 3)``,
        ``dg[l]`` holding ``d g_ij / d x^l``.
        """
        v = evaluate_at(self.deviation, points)
        g = np.eye(3) + np.moveaxis(v[SYM_INDEX], 2, 0)
        dg = np.stack([
            np.moveaxis(evaluate_at(self.deviation, points, derivative=l)[SYM_INDEX], 2, 0)
            for l in range(3)
        ])
        return g, dg

    def __repr__(self):
        return f"MetricField(truncation={self.truncation}, margin={self.margin})"


def metric_pointwise(metric: MetricField, grid: SampleGrid) -> MetricPointwise:
    """Per-node ``g_ij``, ``g^ij``, ``|g|^{1/2}`` and volume weights."""
    grid.check(metric.truncation)
    return metric.pointwise(grid)


def form_samples(u: FourierOneForm, grid: SampleGrid) -> np.ndarray:
    """1-form samples flattened to shape ``(3, m**3)``."""
    return evaluate_on_grid(u, grid).reshape(3, -1)


def raise_index(metric: MetricField, u: FourierOneForm, grid: SampleGrid) -> np.ndarray:
    """Samples of the vector field ``u^i = g^{ij} u_j``, shape ``(3, m, m, m)``."""
    pw = metric_pointwise(metric, grid)
    us = form_samples(u, grid)
    return np.einsum("pij,jp->ip", pw.ginv, us).reshape(3, grid.m, grid.m, grid.m)


def trace(metric: MetricField, h: FourierSymTensor, grid: SampleGrid) -> np.ndarray:
    """Samples of ``tr_g h = g^{ij} h_ij``, shape ``(m, m, m)``."""
    pw = metric_pointwise(metric, grid)
    hs = h.matrix_samples(grid)
    return np.einsum("pij,pij->p", pw.ginv, hs).reshape(grid.m, grid.m, grid.m)


def inner_product(metric: MetricField, u: FourierOneForm, v: FourierOneForm,
                  grid: SampleGrid) -> float:
    """``<u, v>_g = int g^{ij} u_i v_j |g|^{1/2} dx`` by the trapezoidal rule."""
    grid.check(max(u.truncation, v.truncation))
    pw = metric_pointwise(metric, grid)
    return float(np.einsum("pij,ip,jp->", pw.densitized_inverse,
                           form_samples(u, grid), form_samples(v, grid)))


def h_map(metric: MetricField, T: FourierSymTensor, grid: SampleGrid,
          N: int | None = None) -> FourierSymTensor:
    """``H(T) = T - (tr_g T) g``, Fourier-truncated to ``N``.

    The product with the inverse metric is not a trigonometric polynomial
    unless ``g`` is constant, hence the truncation (default: the larger of
    the two input truncations).
    """
    if N is None:
        N = max(T.truncation, metric.truncation)
    pw = metric_pointwise(metric, grid)
    Ts = T.matrix_samples(grid)
    tr = np.einsum("pij,pij->p", pw.ginv, Ts)
    return FourierSymTensor.from_matrix_samples(Ts - tr[:, None, None] * pw.g, grid, N)


def traceless_part(metric: MetricField, T: FourierSymTensor, grid: SampleGrid,
                   N: int | None = None) -> FourierSymTensor:
    """``T - (tr_g T / 3) g``, Fourier-truncated like :func:`h_map`."""
    if N is None:
        N = max(T.truncation, metric.truncation)
    pw = metric_pointwise(metric, grid)
    Ts = T.matrix_samples(grid)
    tr = np.einsum("pij,pij->p", pw.ginv, Ts)
    return FourierSymTensor.from_matrix_samples(Ts - tr[:, None, None] * pw.g / 3.0, grid, N)
