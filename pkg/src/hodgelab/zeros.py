"""Zeros of 1-forms: seeded scan, damped Newton on the raised vector field,
Jacobians at zeros and hyperbolicity classification.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InputError, PreconditionError
from .fields import (
    TWO_PI,
    FourierOneForm,
    MetricField,
    SampleGrid,
    evaluate_at,
    evaluate_on_grid,
    metric_pointwise,
)

log = logging.getLogger(__name__)

HYPERBOLIC = "hyperbolic"
NONHYPERBOLIC = "nonhyperbolic"
CONTINUUM = "degenerate-continuum-suspected"

DEFAULT_SCAN = 32
SEED_THRESHOLD = 0.2
MAX_NEWTON = 50
RESIDUAL_TOL = 1e-10
DEDUP_RADIUS = 1e-4
CONTINUUM_MIN_POINTS = 20


def classify_zero(J: np.ndarray, margin: float | None = None):
    """Return ``(classification, eigenvalues)`` for a real 3x3 Jacobian.

    Hyperbolic iff every eigenvalue has ``|Re| > margin``; the default margin
    is ``1e-6 * ||J||_2``.
    """
    J = np.asarray(J, dtype=float)
    if J.shape != (3, 3):
        raise InputError("Jacobian must be 3x3")
    ev = np.linalg.eigvals(J)
    if margin is None:
        margin = 1e-6 * float(np.linalg.norm(J, 2))
    kind = HYPERBOLIC if float(np.abs(ev.real).min()) > margin else NONHYPERBOLIC
    return kind, ev


def raised_field(metric: MetricField, u: FourierOneForm, points: np.ndarray):
    """Exact ``U^i = g^{ij} u_j`` at ``points`` ``(n, 3)`` and its Jacobian ``(n, 3, 3)``.

    The Jacobian ``dU^i/dx^l`` uses the product rule with
    ``d g^{-1} = -g^{-1} (d g) g^{-1}`` and exact derivatives of the
    trigonometric components.
    """
    pts = np.atleast_2d(points)
    g, dg = metric.at_points(pts)
    ginv = np.linalg.inv(g)
    uval = evaluate_at(u, pts).T                                    # (n, 3)
    du = np.stack([evaluate_at(u, pts, derivative=l).T for l in range(3)], axis=-1)  # (n, j, l)
    U = np.einsum("nij,nj->ni", ginv, uval)
    dginv = -np.einsum("nia,lnab,nbj->nlij", ginv, dg, ginv)
    J = np.einsum("nlij,nj->nil", dginv, uval) + np.einsum("nij,njl->nil", ginv, du)
    return U, J, g


def _g_norm(g, U):
    return np.sqrt(np.maximum(np.einsum("nij,ni,nj->n", g, U, U), 0.0))


def jacobian_at(metric: MetricField, u: FourierOneForm, x, tol: float = 1e-8) -> np.ndarray:
    """Jacobian ``d_j (g^{ik} u_k)`` at a zero ``x``.

    Raises when ``|u(x)|_g`` exceeds ``tol`` times the coefficient l1 bound
    of ``u`` (a pointwise sup bound).
    """
    U, J, g = raised_field(metric, u, np.asarray(x, dtype=float)[None])
    bound = tol * max(float(np.abs(u.data).sum()), 1e-300)
    r = float(_g_norm(g, U)[0])
    if r > bound:
        raise PreconditionError(f"|u(x)|_g = {r:.3e} exceeds {bound:.3e}; x is not a zero")
    return J[0]


@dataclass
class ZeroPoint:
    location: np.ndarray
    residual: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    classification: str
    iterations: int = 0

    @property
    def min_real_part(self) -> float:
        return float(np.abs(self.eigenvalues.real).min())

    @property
    def min_singular_value(self) -> float:
        return float(np.linalg.svd(self.jacobian, compute_uv=False)[-1])

    @property
    def trace(self) -> float:
        return float(np.trace(self.jacobian))

    def to_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "residual": self.residual,
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "eigenvalues_real": [float(v) for v in self.eigenvalues.real],
            "eigenvalues_imag": [float(v) for v in self.eigenvalues.imag],
            "classification": self.classification,
            "trace": self.trace,
            "iterations": self.iterations,
        }


@dataclass
class ZeroReport:
    zeros: list
    seeds: int
    converged: int
    discarded: int
    scan_resolution: int
    field_scale: float
    dedup_radius: float = DEDUP_RADIUS
    continuum_suspected: bool = False
    newton_iterations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.zeros)

    @property
    def all_hyperbolic(self) -> bool:
        return all(z.classification == HYPERBOLIC for z in self.zeros)

    def to_dict(self) -> dict:
        its = self.newton_iterations
        return {
            "zeros": [z.to_dict() for z in self.zeros],
            "count": len(self.zeros),
            "seeds_examined": self.seeds,
            "converged": self.converged,
            "discarded": self.discarded,
            "newton_iterations": {
                "mean": float(np.mean(its)) if its else 0.0,
                "max": int(max(its)) if its else 0,
            },
            "scan_resolution": self.scan_resolution,
            "field_scale": self.field_scale,
            "dedup_radius": self.dedup_radius,
            "continuum_suspected": self.continuum_suspected,
            "warnings": list(self.warnings),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "x3", "residual", "re1", "re2", "re3", "im1", "im2", "im3", "class"])
        for z in self.zeros:
            ev = z.eigenvalues
            w.writerow([f"{v:.17g}" for v in z.location] + [f"{z.residual:.17g}"]
                       + [f"{v:.17g}" for v in ev.real] + [f"{v:.17g}" for v in ev.imag]
                       + [z.classification])
        return buf.getvalue()


def _periodic_delta(a, b):
    d = (a - b + np.pi) % TWO_PI - np.pi
    return d


def _newton(metric, u, x0, tol_abs):
    x = np.array(x0, dtype=float)
    U, J, g = raised_field(metric, u, x[None])
    r = float(_g_norm(g, U)[0])
    for it in range(1, MAX_NEWTON + 1):
        if r <= tol_abs:
            return x, r, it - 1
        step = np.linalg.lstsq(J[0], -U[0], rcond=None)[0]
        a = 1.0
        for _ in range(30):
            xn = x + a * step
            Un, Jn, gn = raised_field(metric, u, xn[None])
            rn = float(_g_norm(gn, Un)[0])
            if rn < r:
                break
            a *= 0.5
        else:
            return x, r, it
        x, U, J, r = xn, Un, Jn, rn
    return x, r, MAX_NEWTON


def _is_continuum(points: np.ndarray, link: float) -> bool:
    """Curve-like cloud: enough chained points and no branching beyond degree 2."""
    if len(points) < CONTINUUM_MIN_POINTS:
        return False
    tree = cKDTree(points % TWO_PI, boxsize=TWO_PI)
    nbrs = tree.query_ball_point(points % TWO_PI, r=link)
    deg = np.array([len(n) - 1 for n in nbrs])
    return bool((deg >= 1).sum() >= CONTINUUM_MIN_POINTS and deg.max() <= 2)


def find_zeros(metric: MetricField, u: FourierOneForm, scan: int = DEFAULT_SCAN,
               threshold: float = SEED_THRESHOLD, margin: float | None = None,
               dedup_radius: float = DEDUP_RADIUS) -> ZeroReport:
    """Locate zeros of ``u`` by seeded Newton iteration.

    Seeds are the scan nodes where ``|u|_g`` is a (non-strict, 26-neighbour,
    periodic) local minimum below ``threshold * max |u|_g``.  Newton acts on
    the raised field with damped least-squares steps; converged points are
    wrapped into the fundamental cell and deduplicated.
    """
    if u.coefficient_norm() == 0.0:
        raise PreconditionError("field is identically zero")
    grid = SampleGrid(scan)
    grid.check(max(u.truncation, metric.truncation))
    pw = metric_pointwise(metric, grid)
    us = evaluate_on_grid(u, grid).reshape(3, -1)
    mag = np.sqrt(np.maximum(np.einsum("pij,ip,jp->p", pw.ginv, us, us), 0.0)).reshape((scan,) * 3)
    scale = float(mag.max())
    local_min = ndimage.minimum_filter(mag, size=3, mode="wrap") >= mag
    seeds = np.flatnonzero(local_min.ravel() & (mag.ravel() < threshold * scale))
    tol_abs = RESIDUAL_TOL * scale

    converged, iters = [], []
    discarded = 0
    for s in seeds:
        x, r, it = _newton(metric, u, grid.points[s], tol_abs)
        if r <= tol_abs:
            converged.append(x % TWO_PI)
            iters.append(it)
        else:
            discarded += 1

    unique: list[np.ndarray] = []
    for x in converged:
        if all(np.linalg.norm(_periodic_delta(x, y)) > dedup_radius for y in unique):
            unique.append(x)
    pts = np.array(unique).reshape(-1, 3)

    warnings = []
    continuum = _is_continuum(pts, 1.5 * TWO_PI / scan)
    if continuum:
        warnings.append(f"{len(pts)} converged zeros lie along curves; zero set looks non-isolated")
        log.warning(warnings[-1])
    if seeds.size and discarded > 0.5 * seeds.size:
        warnings.append(f"Newton failed from {discarded} of {seeds.size} seeds")

    zeros = []
    if len(pts):
        U, J, g = raised_field(metric, u, pts)
        res = _g_norm(g, U)
        for i, x in enumerate(pts):
            kind, ev = classify_zero(J[i], margin)
            zeros.append(ZeroPoint(x, float(res[i]), J[i], ev, CONTINUUM if continuum else kind))
    zeros.sort(key=lambda z: tuple(np.round(z.location, 9)))
    return ZeroReport(zeros, int(seeds.size), len(converged), discarded, scan, scale,
                      dedup_radius, continuum, iters, warnings)
