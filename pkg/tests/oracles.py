"""Independent reference computations shared by the test modules."""
import itertools

import numpy as np


def lattice(N):
    r = range(-N, N + 1)
    return [np.array(k) for k in itertools.product(r, r, r) if any(k)]


def flat_curl_values(N):
    """Per-wavevector eigenvalues of the Hermitian symbol ``i [k]x`` on ``k^perp``."""
    out = []
    for k in lattice(N):
        cross = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]], dtype=float)
        ev = np.linalg.eigvalsh(1j * cross)
        out.extend(v for v in ev if abs(v) > 1e-12)   # drop the longitudinal zero
    return np.sort(out)


def flat_scalar_values(N):
    return np.sort([float(k @ k) for k in lattice(N)])
