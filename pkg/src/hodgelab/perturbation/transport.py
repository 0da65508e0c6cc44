"""Pointwise symmetric tensors that carry a nonvanishing 1-form onto a target."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateTransportError, InputError, PreconditionError
from ..fields import FourierOneForm, MetricField, SampleGrid, form_samples, metric_pointwise


def transport_matrix(w, f, g=None) -> np.ndarray:
    """Symmetric ``h`` (covariant) with ``h_jk w^k = f_j`` at a single point.

    ``w`` and ``f`` are covariant components; ``g`` defaults to the identity.
    """
    w = np.asarray(w, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.eye(3) if g is None else np.asarray(g, dtype=float)
    return _transport(w[None], f[None], np.linalg.inv(g)[None])[0]


def _transport(w, f, ginv):
    """Vectorized over the leading axis: ``w``, ``f`` ``(P, 3)``, ``ginv`` ``(P, 3, 3)``."""
    ww = np.einsum("pij,pi,pj->p", ginv, w, w)
    fw = np.einsum("pij,pi,pj->p", ginv, f, w)
    outer = np.einsum("pi,pj->pij", f, w)
    return ((outer + np.swapaxes(outer, 1, 2)) / ww[:, None, None]
            - (fw / ww**2)[:, None, None] * np.einsum("pi,pj->pij", w, w))


@dataclass
class TransportTensor:
    """Per-node symmetric tensors (zero off the mask) and the fit residual."""

    samples: np.ndarray       # (P, 3, 3)
    mask: np.ndarray          # (P,) bool
    residual: float           # max over the mask of |h(w^#) - f|_g
    min_norm: float           # min over the mask of |w|_g

    def mixed(self, metric: MetricField, grid: SampleGrid) -> np.ndarray:
        """``T^i_j = g^{ik} h_kj`` at every node."""
        pw = metric_pointwise(metric, grid)
        return np.einsum("pik,pkj->pij", pw.ginv, self.samples)


def construct_transport_tensor(metric: MetricField, w: FourierOneForm, target, mask,
                               grid: SampleGrid, floor: float = 1e-3,
                               support_tol: float = 1e-12) -> TransportTensor:
    """Symmetric ``h`` with ``T w = f`` on ``mask`` where ``T^i_j = g^{ik} h_kj``.

    ``target`` is a 1-form or node values ``(3, P)``; it must vanish off the
    mask.  At each masked node ``h = (f w + w f)/|w|^2 - <f,w> w w/|w|^4``
    in covariant components.
    """
    pw = metric_pointwise(metric, grid)
    P = grid.size
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.shape != (P,):
        raise InputError(f"mask must have {P} entries")
    ws = form_samples(w, grid)
    fs = form_samples(target, grid) if isinstance(target, FourierOneForm) else np.asarray(target, float)
    if fs.shape != (3, P):
        raise InputError(f"target samples must have shape (3, {P})")
    off = np.abs(fs[:, ~mask]).max(initial=0.0)
    if off > support_tol * max(1.0, np.abs(fs).max(initial=0.0)):
        raise PreconditionError(f"target is not supported in the mask (|f| = {off:.3e} outside)")

    wn = np.sqrt(np.maximum(np.einsum("pij,ip,jp->p", pw.ginv, ws, ws), 0.0))
    idx = np.flatnonzero(mask)
    if idx.size:
        bad = idx[wn[idx] < floor]
        if bad.size:
            node = int(bad[np.argmin(wn[bad])])
            raise DegenerateTransportError(
                f"|w|_g = {wn[node]:.3e} below floor {floor} at node {node} "
                f"(x={grid.points[node].round(6).tolist()})"
            )
    h = np.zeros((P, 3, 3))
    h[idx] = _transport(ws[:, idx].T, fs[:, idx].T, pw.ginv[idx])
    wup = np.einsum("pij,jp->pi", pw.ginv[idx], ws[:, idx])
    r = np.einsum("pij,pj->pi", h[idx], wup) - fs[:, idx].T
    rn = np.sqrt(np.maximum(np.einsum("pij,pi,pj->p", pw.ginv[idx], r, r), 0.0))
    return TransportTensor(h, mask, float(rn.max(initial=0.0)),
                           float(wn[idx].min(initial=np.inf)))
