"""The Hodge-Laplacian pairing that rules out a transversality argument
through ``Delta_g`` directly: it vanishes for every input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, PreconditionError
from ..fields import FourierOneForm, SampleGrid
from ..operators import beltrami_apply, form_space
from ..spectral import EigenPair
from .variation import _check_eigenpair, beltrami_variation


@dataclass(frozen=True)
class ObstructionPairing:
    value: float
    scale: float          # sum of the g-norms of the three paired terms

    @property
    def relative(self) -> float:
        return abs(self.value) / max(self.scale, 1e-300)


def hodge_obstruction_pairing(metric, plus: EigenPair, minus: EigenPair, h,
                              v: FourierOneForm, nu: float,
                              grid: SampleGrid | None = None) -> ObstructionPairing:
    """``<u_-, (Delta_g - lam^2) v - nu u_+ + D(Delta)(h) u_+>_g``.

    ``Delta_g`` on co-exact forms is ``(*_g d)^2`` and its variation is
    ``(*_g d) D(*d)(h) u_+ + D(*d)(h) (*_g d u_+)``.
    """
    if plus.operator != "curl" or minus.operator != "curl":
        raise InputError("the pairing needs curl eigenpairs")
    _check_eigenpair(plus)
    _check_eigenpair(minus)
    lam = plus.value
    if abs(lam + minus.value) > 1e-8 * max(1.0, abs(lam)):
        raise PreconditionError(f"eigenvalues {lam} and {minus.value} are not opposite")
    grid = grid or plus.grid
    N = plus.truncation
    space = form_space(metric, N, grid)
    x = space.vector(v.resize(N))
    xc = space.closed_component(x)
    if space.norm(xc) > 1e-8 * max(space.norm(x), 1e-300):
        raise PreconditionError("v must be co-exact")

    up, um = plus.vector, minus.vector
    v = space.field(x)
    lap_v = beltrami_apply(metric, beltrami_apply(metric, v, grid), grid)
    t1 = space.vector(lap_v) - lam**2 * x
    t2 = -nu * plus.coefficients
    dv = beltrami_variation(metric, h, up, grid)
    t3 = (space.vector(beltrami_apply(metric, dv, grid))
          + space.vector(beltrami_variation(metric, h, beltrami_apply(metric, up, grid), grid)))
    total = t1 + t2 + t3
    value = space.inner(minus.coefficients, total)
    scale = space.norm(t1) + space.norm(t2) + space.norm(t3)
    return ObstructionPairing(float(value), float(scale))
