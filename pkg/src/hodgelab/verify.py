"""Invariant suites run by ``hodgelab verify``.

Each check yields a name, an observed value, a tolerance and a verdict.
Reports contain no timings so that a fixed seed gives identical output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    FourierOneForm,
    FourierScalarField,
    FourierSymTensor,
    MetricField,
    SampleGrid,
    inner_product,
)
from .operators import (
    beltrami_apply,
    closed_basis,
    codifferential,
    d_scalar,
    form_space,
    is_closed,
    project_coexact,
    scalar_space,
)
from .perturbation.variation import (
    beltrami_variation,
    eigenfunction_variation,
    eigenvalue_derivative_curl,
    eigenvalue_derivative_scalar,
)
from .spectral import spectrum
from .zeros import HYPERBOLIC, find_zeros


@dataclass
class Check:
    suite: str
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "value": self.value,
                "tolerance": self.tolerance, "passed": self.passed}


def abc_form(A: float, B: float, C: float, N: int = 1) -> FourierOneForm:
    """``(A sin z + C cos y) dx + (B sin x + A cos z) dy + (C sin y + B cos x) dz``."""
    modes: dict = {}

    def add(k, i, val):
        v = modes.setdefault(k, np.zeros(3, dtype=complex))
        v[i] += val

    add((0, 0, 1), 0, -0.5j * A)
    add((0, 1, 0), 0, 0.5 * C)
    add((1, 0, 0), 1, -0.5j * B)
    add((0, 0, 1), 1, 0.5 * A)
    add((0, 1, 0), 2, -0.5j * C)
    add((1, 0, 0), 2, 0.5 * B)
    return FourierOneForm.from_modes(modes, N)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def operator_checks(metric, N, rng, trials=3):
    grid = SampleGrid.for_truncation(N)
    sg = form_space(metric, N, grid)
    sc = scalar_space(metric, N, grid)
    out = []
    adj = sa = idem = orth = 0.0
    for _ in range(trials):
        u = FourierOneForm.random(N, rng)
        v = FourierOneForm.random(N, rng)
        f = FourierScalarField.random(N, rng)
        a = inner_product(metric, u, d_scalar(f), grid)
        b = float(sc.vector(f) @ sc.mass @ sc.vector(codifferential(metric, u, grid)))
        adj = max(adj, _rel(a, b))
        a = inner_product(metric, beltrami_apply(metric, u, grid), v, grid)
        b = inner_product(metric, u, beltrami_apply(metric, v, grid), grid)
        sa = max(sa, _rel(a, b))
        split = project_coexact(metric, u, grid)
        again = project_coexact(metric, split.coexact, grid)
        x = sg.vector(split.coexact)
        idem = max(idem, sg.norm(sg.vector(again.coexact) - x) / max(sg.norm(x), 1e-300))
        orth = max(orth, abs(sg.inner(sg.vector(split.closed), x))
                   / max(sg.norm(sg.vector(u)) ** 2, 1e-300))
    out.append(Check("operators", "d/delta adjointness", adj, 1e-8))
    out.append(Check("operators", "Beltrami self-adjointness", sa, 1e-8))
    out.append(Check("operators", "co-exact projection idempotence", idem, 1e-8))
    out.append(Check("operators", "closed/co-exact orthogonality", orth, 1e-8))
    cb = closed_basis(N)
    worst = max(is_closed(e)[1] for e in cb.elements)
    out.append(Check("operators", "closed basis exactness", worst, 1e-12))
    return out


def spectral_checks(metric, N, flat_oracle=False):
    grid = SampleGrid.for_truncation(N)
    out = []
    res = spectrum(metric, N, "curl", grid=grid)
    X = res.vectors
    M = res.pencil.M
    out.append(Check("spectral", "curl orthonormality",
                     float(np.abs(X.T @ M @ X - np.eye(X.shape[1])).max()), 1e-8))
    sp = form_space(metric, N, grid)
    worst = 0.0
    for n in range(min(6, len(res))):
        p = res.eigenpair(n)
        ray = sp.inner(p.coefficients, sp.vector(beltrami_apply(metric, p.vector, grid)))
        worst = max(worst, abs(ray - p.value) / max(1.0, abs(p.value)))
    out.append(Check("spectral", "Rayleigh consistency", worst, 1e-7))
    out.append(Check("spectral", "curl symmetry defect", res.pencil.symmetry_defect, 1e-12))
    if flat_oracle:
        out.append(Check("spectral", "flat curl lattice values",
                         float(np.abs(np.sort(np.abs(res.values)) - _lattice_abs(N)).max()), 1e-9))
        rs = spectrum(metric, N, "laplace0", grid=grid)
        out.append(Check("spectral", "flat scalar lattice values",
                         float(np.abs(np.sort(rs.values) - _lattice_abs(N, True)).max()), 1e-9))
    return out


def _lattice_abs(N, scalar=False):
    """Flat-torus oracle: ``|k|`` twice per nonzero ``k`` in the cube (``|k|^2`` once for scalars)."""
    r = range(-N, N + 1)
    ks = np.array([(a, b, c) for a in r for b in r for c in r if (a, b, c) != (0, 0, 0)])
    k2 = np.sort((ks**2).sum(axis=1)).astype(float)
    return k2 if scalar else np.repeat(np.sqrt(k2), 2)


def perturbation_checks(metric, N, rng):
    grid = SampleGrid.for_truncation(N)
    sp = form_space(metric, N, grid)
    out = []
    res = spectrum(metric, N, "curl", grid=grid)
    h = FourierSymTensor.random(1, rng)
    var_gap = hf = 0.0
    for n in range(min(4, len(res))):
        p = res.eigenpair(n)
        a = beltrami_variation(metric, h, p.vector, grid)
        b = eigenfunction_variation(metric, h, p, grid)
        var_gap = max(var_gap, sp.norm(sp.vector(a - b)) / max(sp.norm(sp.vector(b)), 1e-300))
        d = eigenvalue_derivative_curl(metric, p, h, grid, check_simple=False)
        hf = max(hf, abs(d - sp.inner(p.coefficients, sp.vector(a))) / max(1.0, abs(d)))
    out.append(Check("perturbation", "eigenfunction vs Beltrami variation", var_gap, 1e-8))
    out.append(Check("perturbation", "Hellmann-Feynman consistency", hf, 1e-9))
    c = 0.37
    cg = metric.as_tensor() * c
    p = res.eigenpair(0)
    d = eigenvalue_derivative_curl(metric, p, cg, grid, check_simple=False)
    out.append(Check("perturbation", "conformal curl derivative",
                     abs(d + 0.5 * c * p.value) / max(1.0, abs(p.value)), 1e-9))
    rs = spectrum(metric, N, "laplace0", grid=grid)
    q = rs.eigenpair(0)
    d = eigenvalue_derivative_scalar(metric, q, cg, grid, check_simple=False)
    out.append(Check("perturbation", "conformal scalar derivative",
                     abs(d + c * q.value) / max(1.0, abs(q.value)), 1e-9))
    return out


def zero_checks():
    flat = MetricField.flat()
    rep = find_zeros(flat, abc_form(1, 1, 1))
    out = [Check("zeros", "ABC zero count deviation from 8", float(abs(len(rep) - 8)), 0.0),
           Check("zeros", "ABC non-hyperbolic zeros",
                 float(sum(z.classification != HYPERBOLIC for z in rep.zeros)), 0.0),
           Check("zeros", "ABC max Newton residual",
                 max((z.residual for z in rep.zeros), default=np.inf), 1e-10),
           Check("zeros", "ABC max relative trace",
                 max((abs(z.trace) / np.linalg.norm(z.jacobian, 2) for z in rep.zeros),
                     default=np.inf), 1e-8)]
    rep0 = find_zeros(flat, abc_form(1, 1, 0))
    out.append(Check("zeros", "C=0 continuum flag missing", 0.0 if rep0.continuum_suspected else 1.0, 0.0))
    return out


def run_suites(level: str = "fast", seed: int = 0, metric: MetricField | None = None) -> dict:
    """Run every suite; ``metric`` (if given) joins the flat metric as a test case."""
    if level not in ("fast", "full"):
        raise ValueError(f"unknown level {level!r}")
    rng = np.random.default_rng(seed)
    N = 1 if level == "fast" else 2
    metrics = [("flat", MetricField.flat()),
               ("random", MetricField.random(rng, 1, 0.1 if level == "fast" else 0.2))]
    if metric is not None:
        metrics.append(("input", metric))
    checks = []
    for label, g in metrics:
        for c in (operator_checks(g, N, rng) + spectral_checks(g, N + 1, label == "flat")
                  + perturbation_checks(g, N, rng)):
            c.name = f"{c.name} [{label}]"
            checks.append(c)
    checks += zero_checks()
    return {"level": level, "seed": seed, "checks": [c.to_dict() for c in checks],
            "passed": all(c.passed for c in checks)}
