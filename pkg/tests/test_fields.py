import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgelab import (
    FourierOneForm,
    FourierScalarField,
    FourierSymTensor,
    MetricField,
    SampleGrid,
    h_map,
    inner_product,
    trace,
)
from hodgelab.errors import AdmissibilityError, AliasError, InputError
from hodgelab.fields import (
    TORUS_VOLUME,
    evaluate_at,
    evaluate_on_grid,
    metric_pointwise,
    raise_index,
)

G = SampleGrid.for_truncation(2)
seeds = st.integers(0, 2**32 - 1)


def dx(i, N=1):
    v = np.zeros(3)
    v[i] = 1.0
    return FourierOneForm.constant(v, N)


def cos_x1(N=1):
    return FourierScalarField.from_modes({(1, 0, 0): 0.5}, N)


def test_constant_field_samples():
    s = evaluate_on_grid(FourierScalarField.constant(1.0, 2), G)
    assert np.allclose(s, 1.0, atol=1e-14)


def test_cosine_at_origin():
    assert evaluate_at(cos_x1(), np.zeros((1, 3)))[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert evaluate_on_grid(cos_x1(), G)[0, 0, 0] == pytest.approx(1.0, abs=1e-14)


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_roundtrip_transform(seed):
    rng = np.random.default_rng(seed)
    u = FourierOneForm.random(2, rng)
    back = FourierOneForm.from_samples(evaluate_on_grid(u, G), G, 2)
    assert np.abs(back.data - u.data).max() <= 1e-12


@given(seeds)
@settings(max_examples=20, deadline=None)
def test_samples_real(seed):
    rng = np.random.default_rng(seed)
    h = FourierSymTensor.random(2, rng)
    s = evaluate_on_grid(h, G)
    assert np.isrealobj(s) and np.isfinite(s).all()


def test_evaluate_at_matches_grid(rng):
    f = FourierScalarField.random(2, rng)
    pts = G.points[::97]
    assert np.allclose(evaluate_at(f, pts)[0], evaluate_on_grid(f, G).ravel()[::97], atol=1e-12)


def test_hermitian_check():
    c = np.zeros((1, 3, 3, 3), dtype=complex)
    c[0, 2, 1, 1] = 1.0
    with pytest.raises(InputError):
        FourierScalarField(c)


def test_alias_guard():
    with pytest.raises(AliasError):
        evaluate_on_grid(FourierScalarField.random(4, np.random.default_rng(0)), SampleGrid(6))


def test_flat_pointwise():
    pw = metric_pointwise(MetricField.flat(), G)
    assert np.allclose(pw.g, np.eye(3)) and np.allclose(pw.sqrtdet, 1.0)


def test_diagonal_determinant():
    dev = FourierSymTensor.from_modes({(1, 0, 0): [0.05, 0, 0, 0.05, 0, 0.05]}, 1)
    g, _ = MetricField(dev).at_points(np.zeros((1, 3)))
    assert np.linalg.det(g[0]) == pytest.approx(1.331, abs=1e-12)
    pw = metric_pointwise(MetricField(dev), G)
    assert pw.det[0] == pytest.approx(1.331, abs=1e-12)


def test_inverse_residual(bumpy):
    pw = metric_pointwise(bumpy, G)
    assert np.abs(pw.ginv @ pw.g - np.eye(3)).max() <= 1e-12


def test_inadmissible_metric_reports_node():
    dev = FourierSymTensor.from_modes({(1, 0, 0): [-0.6, 0, 0, 0, 0, 0]}, 1)
    with pytest.raises(AdmissibilityError, match="node"):
        metric_pointwise(MetricField(dev), G)


def test_raise_flat_is_identity(rng):
    u = FourierOneForm.random(2, rng)
    assert np.allclose(raise_index(MetricField.flat(), u, G), evaluate_on_grid(u, G), atol=1e-13)


def test_raise_uniform_scaling():
    up = raise_index(MetricField.scaled_identity(4.0), dx(0), G)
    assert np.allclose(up[0], 0.25) and np.allclose(up[1:], 0.0)


def test_lower_raise_roundtrip(bumpy, rng):
    u = FourierOneForm.random(1, rng)
    pw = metric_pointwise(bumpy, G)
    up = raise_index(bumpy, u, G).reshape(3, -1)
    down = np.einsum("pij,jp->ip", pw.g, up)
    assert np.abs(down - evaluate_on_grid(u, G).reshape(3, -1)).max() <= 1e-12


def test_trace_identities(bumpy, rng):
    delta = FourierSymTensor.from_matrix(np.eye(3))
    assert np.allclose(trace(MetricField.flat(), delta, G), 3.0)
    assert np.allclose(trace(bumpy, bumpy.as_tensor(), G), 3.0, atol=1e-12)
    T = FourierSymTensor.random(1, rng)
    # constant metrics keep H(T) inside the truncation, so the identity is exact
    a = rng.standard_normal((3, 3))
    g = MetricField(FourierSymTensor.from_matrix(0.1 * (a + a.T)))
    H = h_map(g, T, G)
    assert np.allclose(trace(g, H, G), -2 * trace(g, T, G), atol=1e-12)


def test_inner_product_values():
    flat = MetricField.flat()
    assert inner_product(flat, dx(0), dx(0), G) == pytest.approx(TORUS_VOLUME, rel=1e-13)
    assert abs(inner_product(flat, dx(0), dx(1), G)) <= 1e-12
    g4 = MetricField.scaled_identity(4.0)
    assert inner_product(g4, dx(0), dx(0), G) == pytest.approx(2.0 * TORUS_VOLUME, rel=1e-13)


@given(seeds)
@settings(max_examples=15, deadline=None)
def test_inner_product_positive(seed):
    rng = np.random.default_rng(seed)
    g = MetricField.random(rng, 1, 0.3)
    u = FourierOneForm.random(1, rng)
    assert inner_product(g, u, u, G) > 0


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_inner_product_permutation_symmetry(seed):
    rng = np.random.default_rng(seed)
    # isotropic conformal factor depending symmetrically on x1, x2, x3
    a = 0.2 * rng.random()
    dev = FourierSymTensor.from_modes(
        {k: [0.5 * a, 0, 0, 0.5 * a, 0, 0.5 * a] for k in ((1, 0, 0), (0, 1, 0), (0, 0, 1))}, 1)
    g = MetricField(dev)
    u = FourierOneForm.random(1, rng)
    v = FourierOneForm.random(1, rng)
    perm = (1, 2, 0)

    def permute(w):
        c = w.data[list(perm)]
        return FourierOneForm(np.transpose(c, (0,) + tuple(1 + p for p in perm)))

    assert inner_product(g, permute(u), permute(v), G) == pytest.approx(
        inner_product(g, u, v, G), rel=1e-10, abs=1e-10)


@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=15, deadline=None)
def test_trace_and_raise_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = MetricField.random(rng, 1, 0.2)
    h1, h2 = FourierSymTensor.random(1, rng), FourierSymTensor.random(1, rng)
    u1, u2 = FourierOneForm.random(1, rng), FourierOneForm.random(1, rng)
    lhs = trace(g, h1 * a + h2 * b, G)
    assert np.allclose(lhs, a * trace(g, h1, G) + b * trace(g, h2, G), atol=1e-10)
    lhs = raise_index(g, u1 * a + u2 * b, G)
    assert np.allclose(lhs, a * raise_index(g, u1, G) + b * raise_index(g, u2, G), atol=1e-10)
