"""Galerkin eigenpencils for the Beltrami operator on co-exact 1-forms and
for the scalar Laplacian, plus clustering, resolvent and expansions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from scipy import linalg

from .errors import InputError, NumericalError, PreconditionError
from .fields import FourierOneForm, FourierScalarField, MetricField, SampleGrid
from .operators import FormSpace, ScalarSpace, curl_stiffness, form_space, scalar_space

log = logging.getLogger(__name__)

Operator = Literal["curl", "laplace0"]
OPERATORS = ("curl", "laplace0")

ZERO_FLOOR = 1e-8


@dataclass(frozen=True)
class ClusterTolerance:
    """Two eigenvalues coincide when ``|a - b| <= absolute + relative * max(|a|, |b|)``."""

    absolute: float = 1e-6
    relative: float = 1e-8

    def __post_init__(self):
        if self.absolute < 0 or self.relative < 0 or (self.absolute == 0 and self.relative == 0):
            raise InputError("cluster tolerances must be nonnegative and not both zero")

    def close(self, a: float, b: float) -> bool:
        return abs(a - b) <= self.absolute + self.relative * max(abs(a), abs(b))


def cluster_eigenvalues(values, tol: ClusterTolerance = ClusterTolerance()) -> list[list[int]]:
    """Maximal chains of sorted ``values`` whose neighbours are within ``tol``."""
    clusters: list[list[int]] = []
    for i, v in enumerate(values):
        if clusters and tol.close(values[i - 1], v):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


@dataclass
class OperatorPencil:
    """Stiffness/mass pair with the basis ``Q`` of the admissible subspace.

    ``Q`` is ``None`` for the scalar Laplacian (the whole space).
    """

    operator: str
    metric: MetricField
    truncation: int
    grid: SampleGrid
    A: np.ndarray
    M: np.ndarray
    Q: np.ndarray | None
    symmetry_defect: float
    space: Union[FormSpace, ScalarSpace] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.A.shape[0] if self.Q is None else self.Q.shape[1]


def assemble_pencil(metric: MetricField, N: int, operator: Operator = "curl",
                    grid: SampleGrid | None = None) -> OperatorPencil:
    """Assemble the Galerkin pencil of ``operator`` at truncation ``N``.

    For ``curl`` the columns of ``Q`` are an M-orthonormal basis of the
    M-orthogonal complement of the closed forms; the pencil dimension is
    ``2 (2N+1)^3 - 2``.
    """
    if operator not in OPERATORS:
        raise InputError(f"unknown operator {operator!r}; expected one of {OPERATORS}")
    if N < 0:
        raise InputError("truncation must be nonnegative")
    grid = grid or SampleGrid.for_truncation(N)
    if operator == "laplace0":
        sp = scalar_space(metric, N, grid)
        A = sp.stiffness_raw
        defect = float(np.abs(A - A.T).max(initial=0.0))
        return OperatorPencil(operator, metric, N, grid, 0.5 * (A + A.T), sp.mass, None, defect, sp)

    sp = form_space(metric, N, grid)
    A = curl_stiffness(N)
    defect = float(np.abs(A - A.T).max(initial=0.0))
    M = sp.mass
    sp.closed_gram_factor  # conditioning check
    L = linalg.cholesky(M, lower=True)
    Yc = L.T @ sp.closed
    q, _ = np.linalg.qr(Yc, mode="complete")
    Qy = q[:, sp.closed.shape[1]:]
    Q = linalg.solve_triangular(L.T, Qy, lower=False)
    return OperatorPencil(operator, metric, N, grid, 0.5 * (A + A.T), M, Q, defect, sp)


@dataclass
class EigenPair:
    """Eigenvalue, g-normalized eigenfunction and residual ``||Op u - lam u||_g``."""

    index: int
    value: float
    coefficients: np.ndarray
    residual: float
    multiplicity: int
    operator: str
    metric: MetricField = field(repr=False)
    truncation: int = 0
    grid: SampleGrid | None = None

    @property
    def vector(self) -> Union[FourierOneForm, FourierScalarField]:
        sp = self.space
        return sp.field(self.coefficients)

    @property
    def space(self):
        if self.operator == "curl":
            return form_space(self.metric, self.truncation, self.grid)
        return scalar_space(self.metric, self.truncation, self.grid)

    @property
    def is_simple(self) -> bool:
        return self.multiplicity == 1


@dataclass
class SpectralResult:
    """Eigenpairs in label order with their multiplicity clusters.

    Curl eigenvalues are ordered by ``lambda^2`` (coincident ``|lambda|``
    broken negative-first, then by assembly order); scalar eigenvalues
    ascend and exclude the constant mode.
    """

    operator: str
    values: np.ndarray
    vectors: np.ndarray          # columns, full-space coefficients
    residuals: np.ndarray
    clusters: list[list[int]]
    tolerance: ClusterTolerance
    pencil: OperatorPencil = field(repr=False)
    flags: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def metadata(self) -> dict:
        p = self.pencil
        return {
            "operator": self.operator,
            "truncation": p.truncation,
            "grid_points_per_axis": p.grid.m,
            "pencil_dimension": p.dim,
            "symmetry_defect": p.symmetry_defect,
            "cluster_tolerance": {"absolute": self.tolerance.absolute,
                                  "relative": self.tolerance.relative},
        }

    def cluster_of(self, n: int) -> list[int]:
        for c in self.clusters:
            if n in c:
                return c
        raise IndexError(n)

    def multiplicities(self) -> np.ndarray:
        out = np.empty(len(self.values), dtype=int)
        for c in self.clusters:
            out[c] = len(c)
        return out

    def eigenpair(self, n: int) -> EigenPair:
        if not 0 <= n < len(self.values):
            raise IndexError(f"eigenpair index {n} outside 0..{len(self.values) - 1}")
        p = self.pencil
        return EigenPair(n, float(self.values[n]), self.vectors[:, n], float(self.residuals[n]),
                         len(self.cluster_of(n)), self.operator, p.metric, p.truncation, p.grid)

    def pairs(self, count: int | None = None) -> list[EigenPair]:
        count = len(self.values) if count is None else count
        return [self.eigenpair(n) for n in range(count)]

    def to_dict(self) -> dict:
        mult = self.multiplicities()
        cid = np.empty(len(self.values), dtype=int)
        for i, c in enumerate(self.clusters):
            cid[c] = i
        return {
            "metadata": self.metadata,
            "eigenvalues": [float(v) for v in self.values],
            "residuals": [float(r) for r in self.residuals],
            "cluster_ids": [int(c) for c in cid],
            "multiplicities": [int(m) for m in mult],
            "clusters": [[int(i) for i in c] for c in self.clusters],
            "flags": list(self.flags),
        }


def _label_order(values: np.ndarray, operator: str, tol: ClusterTolerance) -> np.ndarray:
    if operator == "laplace0":
        return np.argsort(values, kind="stable")
    by_abs = np.argsort(np.abs(values), kind="stable")
    groups = cluster_eigenvalues(np.abs(values[by_abs]), tol)
    order = []
    for grp in groups:
        members = by_abs[grp]
        neg = sorted(i for i in members if values[i] < 0)
        pos = sorted(i for i in members if values[i] >= 0)
        order.extend(neg + pos)
    return np.array(order, dtype=int)


def _clusters_in_label_order(values: np.ndarray, tol: ClusterTolerance) -> list[list[int]]:
    by_val = np.argsort(values, kind="stable")
    groups = cluster_eigenvalues(values[by_val], tol)
    clusters = [sorted(int(by_val[i]) for i in g) for g in groups]
    return sorted(clusters, key=lambda c: c[0])


def solve_spectrum(pencil: OperatorPencil, count: int | None = None,
                   tol: ClusterTolerance = ClusterTolerance()) -> SpectralResult:
    """Dense symmetric-definite solve; keeps the first ``count`` labels."""
    dim = pencil.dim - (1 if pencil.operator == "laplace0" else 0)
    if count is None:
        count = dim
    if count < 0 or count > dim:
        raise InputError(f"requested {count} eigenpairs; pencil supports {dim}")
    flags = []
    try:
        if pencil.Q is None:
            lam, X = linalg.eigh(pencil.A, pencil.M)
        else:
            Ar = pencil.Q.T @ pencil.A @ pencil.Q
            lam, Z = linalg.eigh(0.5 * (Ar + Ar.T))
            X = pencil.Q @ Z
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc

    if pencil.operator == "laplace0":
        zero = np.flatnonzero(np.abs(lam) < ZERO_FLOOR * max(1.0, np.abs(lam).max()))
        if len(zero) != 1:
            flags.append(f"expected one constant mode, found {len(zero)} near-zero eigenvalues")
            log.warning(flags[-1])
        keep = np.setdiff1d(np.arange(len(lam)), zero[:1])
        lam, X = lam[keep], X[:, keep]
    else:
        small = np.flatnonzero(np.abs(lam) < ZERO_FLOOR)
        if len(small):
            flags.append(f"{len(small)} curl eigenvalue(s) below {ZERO_FLOOR}: co-exact constraint leak")
            log.warning(flags[-1])

    order = _label_order(lam, pencil.operator, tol)[:count]
    lam, X = lam[order], X[:, order]
    R = pencil.A @ X - pencil.M @ X * lam
    Minv_R = linalg.cho_solve(pencil.space.mass_factor, R)
    res = np.sqrt(np.maximum((R * Minv_R).sum(axis=0), 0.0))
    clusters = _clusters_in_label_order(lam, tol)
    return SpectralResult(pencil.operator, lam, X, res, clusters, tol, pencil, flags)


def spectrum(metric: MetricField, N: int, operator: Operator = "curl", count: int | None = None,
             tol: ClusterTolerance = ClusterTolerance(),
             grid: SampleGrid | None = None) -> SpectralResult:
    """Assemble and solve in one call."""
    return solve_spectrum(assemble_pencil(metric, N, operator, grid), count, tol)


# ---------------------------------------------------------------------------
# resolvent and eigenfunction expansions


def _coefficients(result: SpectralResult, w):
    sp = result.pencil.space
    x = sp.vector(w.resize(result.pencil.truncation))
    if result.operator == "curl":
        xc = sp.closed_component(x)
        nrm = max(sp.norm(x), 1e-300)
        if sp.norm(xc) > 1e-8 * nrm:
            raise PreconditionError(
                f"field has closed component of relative size {sp.norm(xc) / nrm:.3e}; "
                "expected a co-exact field"
            )
    else:
        one = np.zeros(sp.dim)
        one[0] = 1.0
        m1 = sp.mass @ one
        mean_part = abs(float(m1 @ x)) / np.sqrt(float(one @ m1))
        nrm = max(float(np.sqrt(x @ sp.mass @ x)), 1e-300)
        if mean_part > 1e-8 * nrm:
            raise PreconditionError("scalar field has a nonzero mean; expected mean-zero input")
    return x, result.vectors.T @ (sp.mass @ x)


def resolvent_apply(result: SpectralResult, lam: float, w):
    """``R_lam w = sum_{lam_n != lam} <w, phi_n>_g / (lam_n - lam) phi_n``.

    Requires the full spectrum in ``result`` and a ``w`` without component
    along eigenvalues that coincide with ``lam`` at the cluster tolerance.
    """
    if len(result) < result.pencil.dim - (1 if result.operator == "laplace0" else 0):
        raise PreconditionError("resolvent needs the full spectrum (solve with count=None)")
    x, c = _coefficients(result, w)
    sp = result.pencil.space
    nrm = max(float(np.sqrt(x @ sp.mass @ x)), 1e-300)
    on = np.array([result.tolerance.close(v, lam) for v in result.values])
    for n in np.flatnonzero(on):
        if abs(c[n]) > 1e-8 * nrm:
            raise PreconditionError(
                f"input has component {c[n]:.3e} along eigenpair {n} "
                f"(eigenvalue {result.values[n]:.12g}) coinciding with {lam}"
            )
    coef = np.where(on, 0.0, c / np.where(on, 1.0, result.values - lam))
    return sp.field(result.vectors @ coef)


def eigenfunction_expand(result: SpectralResult, w, terms: int):
    """Partial sum over the first ``terms`` eigenpairs and residual norms.

    Returns ``(partial_sum, residuals)`` where ``residuals[j]`` is
    ``||w - sum_{n<j} <w, phi_n>_g phi_n||_g`` for ``j = 0..terms``.
    """
    if not 0 <= terms <= len(result):
        raise InputError(f"terms must lie in 0..{len(result)}")
    x, c = _coefficients(result, w)
    sp = result.pencil.space
    M = sp.mass
    res = [float(np.sqrt(max(x @ M @ x, 0.0)))]
    partial = np.zeros_like(x)
    for n in range(terms):
        partial = partial + c[n] * result.vectors[:, n]
        r = x - partial
        res.append(float(np.sqrt(max(r @ M @ r, 0.0))))
    return sp.field(partial), np.array(res)
