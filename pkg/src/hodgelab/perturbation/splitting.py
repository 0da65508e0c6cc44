"""Constructive metric perturbations that remove spectral coincidences.

Every procedure returns ``(direction, metric, report)``.  Success is decided
only by re-solving the spectra of the perturbed metric; first-order
predictions are reported alongside but never trusted on their own.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    AdmissibilityError,
    InputError,
    PreconditionError,
    SearchFailure,
)
from ..fields import (
    SYM_PAIRS,
    FourierScalarField,
    FourierSymTensor,
    MetricField,
    SampleGrid,
    evaluate_on_grid,
    h_map,
    metric_pointwise,
    traceless_part,
)
from ..spectral import ClusterTolerance, spectrum
from .classify import GammaReport, classify_metric, effective_depth
from .variation import (
    PerturbationDirection,
    degenerate_cluster_matrix,
    eigenvalue_derivative_curl,
    eigenvalue_derivative_scalar,
    scalar_cluster_matrix,
)

log = logging.getLogger(__name__)

MAX_HALVINGS = 5
RHO_FLOOR = 1e-8
SWEEP_RADIUS = 2


@dataclass
class SplitReport:
    mode: str
    depth: int
    epsilon: float | None = None
    halvings: int = 0
    identity: bool = False
    passed: bool = False
    before: dict = field(default_factory=dict)
    after: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "depth": self.depth,
            "epsilon": self.epsilon,
            "halvings": self.halvings,
            "identity": self.identity,
            "passed": self.passed,
            "before": self.before,
            "after": self.after,
            "details": self.details,
            "notes": list(self.notes),
        }


def default_margin_target(epsilon: float) -> float:
    """Separation demanded of re-solved eigenvalues after a step of size ``epsilon``."""
    return 5e-3 * epsilon


def _sup(h: FourierSymTensor, grid: SampleGrid) -> float:
    return float(np.abs(h.matrix_samples(grid)).max(initial=0.0))


def _normalized(h: FourierSymTensor, grid: SampleGrid) -> FourierSymTensor:
    s = _sup(h, grid)
    if s == 0.0:
        raise SearchFailure("constructed direction vanishes")
    return h * (1.0 / s)


def _sym(a) -> list:
    return [a[i, j] for i, j in SYM_PAIRS]


def _half_vectors(radius: int):
    ks = []
    r = range(-radius, radius + 1)
    for k in ((a, b, c) for a in r for b in r for c in r):
        first = next((v for v in k if v != 0), 0)
        if first > 0:
            ks.append(k)
    ks.sort(key=lambda k: (max(abs(v) for v in k), k))
    return ks


def _elementary():
    out = []
    for i, j in SYM_PAIRS:
        E = np.zeros((3, 3))
        E[i, j] = E[j, i] = 1.0
        out.append(((i, j), E))
    return out


def _margins(curl, scalar, k):
    lam, sig = curl.values[:k], scalar.values[:k]
    d1 = min((abs(lam[a] - lam[b]) for a in range(k) for b in range(a + 1, k)), default=np.inf)
    d2 = min((abs(sig[a] - sig[b]) for a in range(k) for b in range(a + 1, k)), default=np.inf)
    d4 = min(abs(lam[a] + lam[b]) for a in range(k) for b in range(a, k))
    d5 = min(abs(s - l * l) for s in sig for l in lam)
    return {"gamma1": float(d1), "scalar_simple": float(d2), "gamma4": float(d4), "gamma5": float(d5)}


def _solve(metric, N, grid, tol):
    return (spectrum(metric, N, "curl", tol=tol, grid=grid),
            spectrum(metric, N, "laplace0", tol=tol, grid=grid))


def _try_step(metric, h, eps, N, grid, tol, check, report):
    """Halve ``eps`` until ``check(curl, scalar, e / eps)`` holds on the re-solved spectra."""
    last = None
    for halving in range(MAX_HALVINGS + 1):
        e = eps / 2**halving
        new = metric.perturbed(h, e)
        try:
            curl, scalar = _solve(new, N, grid, tol)
        except AdmissibilityError as exc:
            report.notes.append(f"epsilon {e:.6g} inadmissible: {exc}")
            log.info(report.notes[-1])
            continue
        ok, last = check(curl, scalar, e / eps)
        if ok:
            report.epsilon, report.halvings = e, halving
            return new, curl, scalar
        report.notes.append(f"epsilon {e:.6g} failed post-check: {last}")
        log.info(report.notes[-1])
    raise SearchFailure(f"{report.mode} split failed after {MAX_HALVINGS} halvings; last: {last}")


def _clusters_touching(values, k, tol):
    order = np.argsort(values, kind="stable")
    groups, cur = [], [int(order[0])]
    for a, b in zip(order[:-1], order[1:]):
        if tol.close(values[a], values[b]):
            cur.append(int(b))
        else:
            groups.append(cur)
            cur = [int(b)]
    groups.append(cur)
    return [sorted(g) for g in groups if len(g) > 1 and min(g) < k]


def _even_candidate(rng, grid, N_h):
    modes = {(0, 0, 0): _sym(_rand_sym(rng))}
    for kv in _half_vectors(N_h):
        modes[kv] = [0.5 * v for v in _sym(_rand_sym(rng))]
    return _normalized(FourierSymTensor.from_modes(modes, N_h), grid)


def _rand_sym(rng):
    a = rng.standard_normal((3, 3))
    return 0.5 * (a + a.T)


def _min_gap(slopes):
    s = np.sort(slopes)
    return float(np.diff(s).min()) if len(s) > 1 else np.inf


def split_clusters(metric: MetricField, depth: int, epsilon: float = 1e-2, N: int = 2,
                   seed: int = 0, tol: ClusterTolerance = ClusterTolerance(),
                   margin_target: float | None = None, candidates: int = 8,
                   grid: SampleGrid | None = None):
    """Split multiple curl and scalar eigenvalues among the first ``depth`` labels.

    Directions are drawn (seeded) from even tensors, constants plus
    ``cos(k.x)`` modes with ``|k|_inf <= 2``, which keep any symmetry
    ``lambda <-> -lambda`` of the spectrum intact.  The candidate whose
    first-order cluster matrices have the widest minimal gap is used.
    """
    grid = grid or SampleGrid.for_truncation(N)
    target = default_margin_target(epsilon) if margin_target is None else margin_target
    detect = ClusterTolerance(max(tol.absolute, target), tol.relative)
    report = SplitReport("cluster", depth)
    curl, scalar = _solve(metric, N, grid, tol)
    report.before = _margins(curl, scalar, depth)
    cc = _clusters_touching(curl.values, depth, detect)
    sc = _clusters_touching(scalar.values, depth, detect)
    report.details["curl_clusters"] = cc
    report.details["scalar_clusters"] = sc
    if not cc and not sc:
        report.identity = report.passed = True
        report.after = report.before
        return PerturbationDirection(FourierSymTensor.zeros(0), "identity"), metric, report

    rng = np.random.default_rng(seed)
    best = None
    for c in range(candidates):
        h = _even_candidate(rng, grid, SWEEP_RADIUS)
        gaps = [_min_gap(np.linalg.eigvalsh(degenerate_cluster_matrix(
            metric, [curl.eigenpair(i) for i in g], h, grid))) for g in cc]
        gaps += [_min_gap(np.linalg.eigvalsh(scalar_cluster_matrix(
            metric, [scalar.eigenpair(i) for i in g], h, grid))) for g in sc]
        score = min(gaps)
        if best is None or score > best[0]:
            best = (score, c, h)
    score, c, h = best
    report.details["candidate"] = c
    report.details["predicted_min_slope_gap"] = score
    if score <= RHO_FLOOR:
        raise SearchFailure("no candidate direction splits every cluster to first order")

    def check(curl2, scalar2, scale):
        t = target * scale if margin_target is None else target
        m = _margins(curl2, scalar2, depth)
        return m["gamma1"] > t and m["scalar_simple"] > t, m

    new, curl2, scalar2 = _try_step(metric, h, epsilon, N, grid, tol, check, report)
    report.after = _margins(curl2, scalar2, depth)
    report.passed = True
    return PerturbationDirection(h * report.epsilon, "cluster split"), new, report


def _rho_table(metric, curl, pairs, grid, radius):
    """``rho_j`` of every sweep candidate: rows follow the sweep order."""
    pw = metric_pointwise(metric, grid)
    space_samples = {}
    for n in {i for p in pairs for i in p}:
        ep = curl.eigenpair(n)
        u = ep.space.samples(ep.coefficients)
        U = np.einsum("pij,jp->pi", pw.ginv, u)
        space_samples[n] = (ep.value, U)
    Q = np.zeros((len(pairs), grid.size, 6))
    for j, (n, m) in enumerate(pairs):
        for lam, U in (space_samples[n], space_samples[m]):
            for a, (i, l) in enumerate(SYM_PAIRS):
                mult = 1.0 if i == l else 2.0
                Q[j, :, a] += lam * mult * U[:, i] * U[:, l] * pw.weight
    cands, phis = [], []
    pts = grid.points
    for (i, l), E in _elementary():
        cands.append(("const", (0, 0, 0), (i, l)))
        phis.append((np.ones(grid.size), SYM_PAIRS.index((i, l))))
    for kv in _half_vectors(radius):
        ph = pts @ np.array(kv, dtype=float)
        for kind, fn in (("cos", np.cos), ("sin", np.sin)):
            for a, (i, l) in enumerate(SYM_PAIRS):
                cands.append((kind, kv, (i, l)))
                phis.append((fn(ph), a))
    R = np.array([[float(phi @ Q[j, :, a]) for j in range(len(pairs))] for phi, a in phis])
    return cands, R


def _candidate_tensor(cand, N_h):
    kind, kv, (i, l) = cand
    E = np.zeros((3, 3))
    E[i, l] = E[l, i] = 1.0
    if kind == "const":
        return FourierSymTensor.from_matrix(E, N_h)
    amp = np.array(_sym(E), dtype=complex) * (0.5 if kind == "cos" else -0.5j)
    return FourierSymTensor.from_modes({kv: amp}, N_h)


def split_pm_degeneracy(metric: MetricField, depth: int, epsilon: float = 1e-2, N: int = 2,
                        tol: ClusterTolerance = ClusterTolerance(),
                        margin_target: float | None = None, rho_floor: float | None = None,
                        grid: SampleGrid | None = None):
    """Break coincidences ``lambda_n = -lambda_m`` among the first ``depth`` labels.

    For each flagged pair ``j`` a sweep tensor ``T_j`` with
    ``|rho_j(T_j)| > rho_floor`` is found, where
    ``rho_j(T) = lam_n int T^ij u_n,i u_n,j dmu + lam_m int T^ij u_m,i u_m,j dmu``.
    Coefficients follow ``c_1 = 1`` and, for ``j > 1``, ``c_j = 0`` when
    ``rho_j(S_{j-1})`` is already nonzero, else half the largest value that
    keeps every earlier ``rho_l`` away from zero.  The direction is
    ``H(sum c_j T_j)``, normalized to unit sup norm.  ``rho_floor`` defaults
    to :func:`pipeline_rho_floor`.
    """
    grid = grid or SampleGrid.for_truncation(N)
    target = default_margin_target(epsilon) if margin_target is None else margin_target
    if rho_floor is None:
        rho_floor = pipeline_rho_floor(epsilon, target)
    detect = ClusterTolerance(max(tol.absolute, target), tol.relative)
    report = SplitReport("pm", depth)
    curl, scalar = _solve(metric, N, grid, tol)
    report.before = _margins(curl, scalar, depth)
    k = effective_depth(curl.values, depth, detect)
    lam = curl.values[:k]
    for a in range(k):
        for b in range(a + 1, k):
            if tol.close(lam[a], lam[b]):
                raise PreconditionError(
                    f"curl eigenvalues {a} and {b} coincide; split clusters first")
    pairs = [(a, b) for a in range(k) for b in range(a + 1, k)
             if detect.close(lam[a], -lam[b])]
    report.details["pairs"] = [list(p) for p in pairs]
    if not pairs:
        report.identity = report.passed = True
        report.after = report.before
        return PerturbationDirection(FourierSymTensor.zeros(0), "identity"), metric, report

    cands, R = _rho_table(metric, curl, pairs, grid, SWEEP_RADIUS)
    chosen = []
    for j in range(len(pairs)):
        hit = np.flatnonzero(np.abs(R[:, j]) > rho_floor)
        if not hit.size:
            raise SearchFailure(
                f"no sweep tensor gives rho_{j} above {rho_floor} for pair {pairs[j]}; "
                f"largest |rho| = {np.abs(R[:, j]).max():.3e}")
        chosen.append(int(hit[0]))
    c = np.zeros(len(pairs))
    c[0] = 1.0
    rhoS = c[0] * R[chosen[0]]                # rho_l(S_j) for every l
    for j in range(1, len(pairs)):
        if abs(rhoS[j]) > rho_floor:
            continue
        rT = R[chosen[j]]
        ratios = [abs(rhoS[l] / rT[l]) for l in range(j) if rT[l] != 0.0]
        c[j] = 0.5 * min(ratios) if ratios else 1.0
        rhoS = rhoS + c[j] * rT
    N_h = max(SWEEP_RADIUS, metric.truncation)
    S = FourierSymTensor.zeros(N_h)
    for cj, idx in zip(c, chosen):
        if cj:
            S = S + cj * _candidate_tensor(cands[idx], N_h)
    h = _normalized(h_map(metric, S, grid, N_h), grid)
    report.details.update({
        "tensors": [{"kind": cands[i][0], "k": list(cands[i][1]),
                     "ij": [cands[i][2][0] + 1, cands[i][2][1] + 1]} for i in chosen],
        "c": [float(v) for v in c],
        "rho": [float(v) for v in rhoS],
    })

    def check(curl2, scalar2, scale):
        t = target * scale if margin_target is None else target
        m = _margins(curl2, scalar2, depth)
        return m["gamma4"] > t and m["gamma1"] > t, m

    new, curl2, scalar2 = _try_step(metric, h, epsilon, N, grid, tol, check, report)
    report.after = _margins(curl2, scalar2, depth)
    report.passed = True
    return PerturbationDirection(h * report.epsilon, "pm split"), new, report


def _bump_direction(metric, curl_pair, scalar_pair, grid, order, skip=0):
    """Traceless bump tensor aligned with ``u_m`` and ``df_n`` at a peak of ``|u||df|``."""
    pw = metric_pointwise(metric, grid)
    u = curl_pair.space.samples(curl_pair.coefficients)
    df = scalar_pair.space.gradient_samples(scalar_pair.coefficients)
    nu = np.sqrt(np.einsum("pij,ip,jp->p", pw.ginv, u, u))
    nf = np.sqrt(np.einsum("pij,ip,jp->p", pw.ginv, df, df))
    ranking = np.argsort(-(nu * nf), kind="stable")
    node = int(ranking[skip])
    a = u[:, node] / nu[node]
    b = df[:, node] / nf[node]
    P0 = np.outer(a, a) + np.outer(b, b)
    x0 = grid.points[node]
    pts = grid.points
    window = np.prod(np.cos(0.5 * (pts - x0)) ** (2 * order), axis=1)
    wf = FourierScalarField.from_samples(window.reshape((grid.m,) * 3), grid, order)
    T = FourierSymTensor(np.stack([wf.coeffs * P0[i, j] for i, j in SYM_PAIRS]), check=False)
    N_h = max(order, metric.truncation)
    return traceless_part(metric, T, grid, N_h), x0


def _label_rate(metric, curl, scalar, n, m, h, grid):
    """First-order slopes of ``sigma_n`` and ``lambda_m^2`` when both sit in clusters.

    Labels are re-sorted after the split, so the slope of label ``n`` is the
    matching order statistic of the cluster matrix eigenvalues.  Returns a
    function of the sign of ``h`` giving ``(|rate|, d lambda^2, d sigma)``.
    """
    sc = scalar.cluster_of(n)
    mu = np.linalg.eigvalsh(scalar_cluster_matrix(metric, [scalar.eigenpair(i) for i in sc], h, grid))
    lam = curl.values[m]
    group = [i for i in range(len(curl)) if curl.tolerance.close(abs(curl.values[i]), abs(lam))]
    slopes = []
    for sign in (-1, 1):
        members = [i for i in group if np.sign(curl.values[i]) == sign]
        if members:
            C = degenerate_cluster_matrix(metric, [curl.eigenpair(i) for i in members], h, grid)
            slopes.extend(2 * curl.values[members[0]] * np.linalg.eigvalsh(C))

    def rate(sgn):
        ds = np.sort(sgn * mu)[n - min(sc)]
        dl2 = np.sort(sgn * np.asarray(slopes))[m - min(group)]
        return abs(dl2 - ds), float(dl2), float(ds)
    return rate


def _nearest(values, target):
    return int(np.argmin(np.abs(np.asarray(values) - target)))


def split_exact_coexact(metric: MetricField, n: int, m: int, epsilon: float = 1e-2, N: int = 2,
                        tol: ClusterTolerance = ClusterTolerance(),
                        margin_target: float | None = None, direction=None,
                        bump_order: int = 2, peaks: int = 8, depth: int | None = None,
                        grid: SampleGrid | None = None):
    """Separate a scalar eigenvalue ``sigma_n`` from ``lambda_m^2`` with a traceless bump.

    The bump is a squared-cosine window centred at a peak of
    ``|u_m|_g |df_n|_g`` carrying ``a a + b b`` made g-traceless, with ``a``
    and ``b`` the unit directions of ``u_m`` and ``df_n`` there; its sign is
    chosen so that ``d(lambda_m^2) > 0 > d(sigma_n)``.  When both sit in
    clusters of the flat metric, slopes of the labels come from the cluster
    matrices and the peak and sign with the widest predicted gap win.  With ``depth`` the
    post-check also requires every condition at that depth to keep its
    margin.
    """
    grid = grid or SampleGrid.for_truncation(N)
    target = default_margin_target(epsilon) if margin_target is None else margin_target
    detect = ClusterTolerance(max(tol.absolute, target), tol.relative)
    report = SplitReport("exact-coexact", depth or max(n, m) + 1)
    curl, scalar = _solve(metric, N, grid, tol)
    if not (0 <= n < len(scalar) and 0 <= m < len(curl)):
        raise InputError("eigenvalue index out of range")
    sp_, cp = scalar.eigenpair(n), curl.eigenpair(m)
    k = report.depth
    report.before = _margins(curl, scalar, k)
    report.details.update({"scalar_index": n, "curl_index": m,
                           "sigma": sp_.value, "lambda": cp.value})
    if direction is not None:
        d = direction if isinstance(direction, PerturbationDirection) else PerturbationDirection(direction)
        if not d.is_traceless(metric, grid):
            raise PreconditionError("direction is not traceless")
    if not detect.close(sp_.value, cp.value ** 2):
        report.identity = report.passed = True
        report.after = report.before
        report.notes.append("eigenvalues already separated")
        return PerturbationDirection(FourierSymTensor.zeros(0), "identity"), metric, report

    labels_only = False
    if not (sp_.is_simple and cp.is_simple):
        if metric.is_flat:
            labels_only = True
            report.notes.append("eigenvalues are clustered on the flat metric; "
                                "tracking by label instead of by continuity")
            log.warning(report.notes[-1])
        else:
            raise PreconditionError(
                f"sigma_{n} (multiplicity {sp_.multiplicity}) and lambda_{m} "
                f"(multiplicity {cp.multiplicity}) must be simple")

    if direction is not None:
        tries = [(d.h, None)]
    else:
        tries = [_bump_direction(metric, cp, sp_, grid, bump_order, s) for s in range(peaks)]
    chosen = None
    if labels_only:
        best = None
        for h, x0 in tries:
            rate = _label_rate(metric, curl, scalar, n, m, h, grid)
            for sgn in (1.0, -1.0):
                r = rate(sgn)
                if best is None or r[0] > best[0]:
                    best = (r[0], h * sgn, x0, r[1], r[2])
        if best is not None and best[0] > 0:
            chosen = best[1:]
    else:
        for h, x0 in tries:
            dl = eigenvalue_derivative_curl(metric, cp, h, grid, check_simple=False)
            dl2 = 2 * cp.value * dl
            ds = eigenvalue_derivative_scalar(metric, sp_, h, grid, check_simple=False)
            if dl2 * ds < 0:
                sgn = 1.0 if dl2 > 0 else -1.0
                chosen = (h * sgn, x0, sgn * dl2, sgn * ds)
                break
    if chosen is None:
        raise SearchFailure("no peak gives derivatives of opposite sign for "
                            f"sigma_{n} and lambda_{m}^2")
    h, x0, dl2, ds = chosen
    scale = _sup(h, grid)
    h = h * (1.0 / scale)
    dl2, ds = dl2 / scale, ds / scale
    report.details.update({
        "center": None if x0 is None else [float(v) for v in x0],
        "d_lambda_squared": dl2,
        "d_sigma": ds,
        "first_order_separation_rate": dl2 - ds,
        "tracking": "label" if labels_only else "continuity",
    })

    def check(curl2, scalar2):
        e = report_eps[0]
        if labels_only:
            s2, l2 = scalar2.values[n], curl2.values[m]
        else:
            s2 = scalar2.values[_nearest(scalar2.values, sp_.value + e * ds)]
            l2 = curl2.values[_nearest(curl2.values, cp.value + e * dl2 / (2 * cp.value))]
        t = default_margin_target(e) if margin_target is None else target
        sep = abs(s2 - l2 ** 2)
        margins = _margins(curl2, scalar2, k)
        ok = sep > t
        if depth is not None:
            for key in ("gamma1", "scalar_simple", "gamma4"):
                ok = ok and margins[key] > min(t, report.before[key])
        return ok, {"separation": float(sep), **margins}

    report_eps = [epsilon]
    last = None
    for halving in range(MAX_HALVINGS + 1):
        e = epsilon / 2**halving
        report_eps[0] = e
        new = metric.perturbed(h, e)
        try:
            curl2, scalar2 = _solve(new, N, grid, tol)
        except AdmissibilityError as exc:
            report.notes.append(f"epsilon {e:.6g} inadmissible: {exc}")
            continue
        ok, last = check(curl2, scalar2)
        if ok:
            report.epsilon, report.halvings = e, halving
            report.after = last
            report.passed = True
            return PerturbationDirection(h * e, "exact/co-exact split"), new, report
        report.notes.append(f"epsilon {e:.6g} failed post-check: {last}")
    raise SearchFailure(f"exact/co-exact split failed after {MAX_HALVINGS} halvings; last: {last}")


def pipeline_rho_floor(epsilon: float, target: float) -> float:
    """Sweep acceptance used inside the pipeline.

    A unit-sup direction scaled by ``epsilon`` moves ``lambda_n + lambda_m``
    by roughly ``epsilon * rho``, so ``rho`` must clear the margin target with
    room for the ``H`` map and the ``c_j`` halving.
    """
    return max(RHO_FLOOR, 20.0 * target / epsilon)


@dataclass
class PipelineReport:
    depth: int
    steps: list
    gamma: GammaReport | None
    passed: bool
    epsilon: float
    margin_target: float

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "epsilon": self.epsilon,
            "margin_target": self.margin_target,
            "identity": not self.steps,
            "passed": self.passed,
            "steps": [s.to_dict() for s in self.steps],
            "gamma": None if self.gamma is None else self.gamma.to_dict(),
        }


def full_pipeline(metric: MetricField, depth: int, epsilon: float = 1e-2, N: int = 2,
                  seed: int = 0, tol: ClusterTolerance = ClusterTolerance(),
                  margin_target: float | None = None, zeros: bool = False,
                  max_rounds: int = 12, grid: SampleGrid | None = None):
    """Cluster splitting, then the ``lambda = -lambda'`` split, then the
    exact/co-exact split, repeated until the depth-``k`` spectral conditions
    hold with margin; finally the metric is classified.
    """
    if depth < 1:
        raise InputError("depth must be at least 1")
    grid = grid or SampleGrid.for_truncation(N)
    target = default_margin_target(epsilon) if margin_target is None else margin_target
    strict = ClusterTolerance(max(tol.absolute, target), tol.relative)
    g = metric
    steps = []
    for rnd in range(max_rounds):
        gamma = classify_metric(g, depth, N, strict, grid=grid)
        simple_scalar = not _clusters_touching(gamma.scalar.values, depth, strict)
        if not (gamma.conditions["gamma1"].passed and simple_scalar):
            _, g, rep = split_clusters(g, depth, epsilon, N, seed + rnd, tol, target, grid=grid)
        elif not gamma.conditions["gamma4"].passed:
            _, g, rep = split_pm_degeneracy(g, depth, epsilon, N, tol, target,
                                            rho_floor=pipeline_rho_floor(epsilon, target),
                                            grid=grid)
        elif not gamma.conditions["gamma5"].passed:
            w = gamma.conditions["gamma5"].witness
            _, g, rep = split_exact_coexact(g, w["scalar_index"], w["curl_index"], epsilon, N,
                                            tol, target, depth=depth, grid=grid)
        else:
            break
        steps.append(rep)
        log.info("pipeline round %d: %s", rnd, rep.mode)
    else:
        gamma = classify_metric(g, depth, N, strict, grid=grid)
    gamma = classify_metric(g, depth, N, strict, zeros=zeros, grid=grid)
    passed = gamma.passes("gamma1", "gamma4", "gamma5")
    direction = PerturbationDirection(g.deviation - metric.deviation, "pipeline total")
    return direction, g, PipelineReport(depth, steps, gamma, passed, epsilon, target)
