"""Finite-depth genericity conditions on a metric.

Depth ``k`` looks at the first ``k`` curl eigenvalues (labels ordered by
``lambda^2``) and the first ``k`` nonzero scalar eigenvalues:

1. curl eigenvalues pairwise distinct
2. scalar eigenvalues pairwise distinct and every critical point of the
   eigenfunctions nondegenerate
3. every zero of the curl eigenfields hyperbolic
4. no curl eigenvalue equals minus another (or itself)
5. no scalar eigenvalue equals the square of a curl eigenvalue
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError
from ..fields import MetricField, SampleGrid
from ..operators import d_scalar
from ..spectral import ClusterTolerance, SpectralResult, spectrum
from ..zeros import HYPERBOLIC, find_zeros

CONDITIONS = ("gamma1", "gamma2", "gamma3", "gamma4", "gamma5")


@dataclass
class Condition:
    passed: bool | None          # None when not evaluated
    margin: float | None
    witness: dict | None
    note: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "margin": self.margin,
                "witness": self.witness, "note": self.note}


@dataclass
class GammaReport:
    depth: int
    conditions: dict
    tolerance: ClusterTolerance
    zero_margin: float
    curl: SpectralResult = field(repr=False)
    scalar: SpectralResult = field(repr=False)

    @property
    def member(self) -> bool:
        """Conjunction over the evaluated conditions."""
        return all(c.passed for c in self.conditions.values() if c.passed is not None)

    @property
    def evaluated(self) -> list:
        return [n for n, c in self.conditions.items() if c.passed is not None]

    def passes(self, *names) -> bool:
        return all(self.conditions[n].passed for n in names)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "member": self.member,
            "evaluated": self.evaluated,
            "conditions": {n: c.to_dict() for n, c in self.conditions.items()},
            "tolerance": {"absolute": self.tolerance.absolute,
                          "relative": self.tolerance.relative},
            "zero_margin": self.zero_margin,
            "curl_eigenvalues": [float(v) for v in self.curl.values[:self.depth]],
            "scalar_eigenvalues": [float(v) for v in self.scalar.values[:self.depth]],
        }


def _min_pair(vals, fn, include_diagonal=False):
    best = (np.inf, None)
    k = len(vals)
    for n in range(k):
        for m in range(n if include_diagonal else n + 1, k):
            d = fn(vals[n], vals[m])
            if d < best[0]:
                best = (d, (n, m))
    return best


def effective_depth(values, depth: int, tol: ClusterTolerance, key=abs) -> int:
    """Extend ``depth`` over labels tied with label ``depth - 1``.

    A cut through a cluster would make the conditions depend on the arbitrary
    order inside it, so every label tied (at ``tol``) with the last one is kept.
    """
    k = depth
    while k < len(values) and tol.close(key(values[k]), key(values[depth - 1])):
        k += 1
    return k


def _distinct(vals, tol):
    d, pair = _min_pair(vals, lambda a, b: abs(a - b))
    if pair is None:
        return Condition(True, None, None, "vacuous for a single eigenvalue")
    ok = not tol.close(vals[pair[0]], vals[pair[1]])
    return Condition(ok, float(d), {"pair": list(pair),
                                    "values": [float(vals[pair[0]]), float(vals[pair[1]])]})


def classify_metric(metric: MetricField, depth: int, N: int = 2,
                    tol: ClusterTolerance = ClusterTolerance(), zeros: bool = False,
                    zero_margin: float = 1e-6, scan: int = 32,
                    grid: SampleGrid | None = None,
                    curl: SpectralResult | None = None,
                    scalar: SpectralResult | None = None) -> GammaReport:
    """Evaluate the five conditions at depth ``k``.

    The zero conditions run only with ``zeros=True``.  Nondegeneracy of a
    critical point is judged by the smallest singular value of the Jacobian
    of the raised gradient exceeding ``zero_margin * ||J||``.
    """
    if depth < 1:
        raise InputError("depth must be at least 1")
    grid = grid or SampleGrid.for_truncation(N)
    curl = curl or spectrum(metric, N, "curl", tol=tol, grid=grid)
    scalar = scalar or spectrum(metric, N, "laplace0", tol=tol, grid=grid)
    if depth > min(len(curl), len(scalar)):
        raise InputError(f"depth {depth} exceeds the resolved spectrum")
    k_curl = effective_depth(curl.values, depth, tol)
    k_scalar = effective_depth(scalar.values, depth, tol, key=float)
    lam = curl.values[:k_curl]
    sig = scalar.values[:k_scalar]
    out = {}

    out["gamma1"] = _distinct(lam, tol)

    g2 = _distinct(sig, tol)
    g3 = Condition(None, None, None, "zero analysis not requested")
    if zeros:
        worst = (np.inf, None)
        for n in range(len(sig)):
            rep = find_zeros(metric, d_scalar(scalar.eigenpair(n).vector), scan=scan)
            if rep.continuum_suspected:
                worst = min(worst, (0.0, {"index": n, "reason": "non-isolated critical set"}),
                            key=lambda t: t[0])
            for z in rep.zeros:
                s = z.min_singular_value / max(np.linalg.norm(z.jacobian, 2), 1e-300)
                if s < worst[0]:
                    worst = (s, {"index": n, "point": [float(v) for v in z.location]})
        ok = worst[0] > zero_margin
        g2 = Condition(bool(g2.passed and ok), g2.margin,
                       {"spectrum": g2.witness, "critical_points": worst[1],
                        "relative_singular_margin": None if worst[1] is None else float(worst[0])})
        worst = (np.inf, None)
        for n in range(len(lam)):
            rep = find_zeros(metric, curl.eigenpair(n).vector, scan=scan)
            if rep.continuum_suspected:
                worst = min(worst, (0.0, {"index": n, "reason": "non-isolated zero set"}),
                            key=lambda t: t[0])
            for z in rep.zeros:
                s = z.min_real_part / max(np.linalg.norm(z.jacobian, 2), 1e-300)
                if z.classification != HYPERBOLIC:
                    s = min(s, 0.0)
                if s < worst[0]:
                    worst = (s, {"index": n, "point": [float(v) for v in z.location]})
        g3 = Condition(bool(worst[0] > zero_margin), None if worst[1] is None else float(worst[0]),
                       worst[1])
    out["gamma2"] = g2
    out["gamma3"] = g3

    d, pair = _min_pair(lam, lambda a, b: abs(a + b), include_diagonal=True)
    out["gamma4"] = Condition(not tol.close(lam[pair[0]], -lam[pair[1]]), float(d),
                              {"pair": list(pair),
                               "values": [float(lam[pair[0]]), float(lam[pair[1]])]})

    best = (np.inf, None)
    for n in range(len(sig)):
        for m in range(len(lam)):
            dd = abs(sig[n] - lam[m] ** 2)
            if dd < best[0]:
                best = (dd, (n, m))
    n, m = best[1]
    out["gamma5"] = Condition(not tol.close(sig[n], lam[m] ** 2), float(best[0]),
                              {"scalar_index": n, "curl_index": m,
                               "values": [float(sig[n]), float(lam[m] ** 2)]})
    return GammaReport(depth, out, tol, zero_margin, curl, scalar)
