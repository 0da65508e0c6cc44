import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgelab import (
    FourierOneForm,
    FourierScalarField,
    MetricField,
    SampleGrid,
    beltrami_apply,
    closed_basis,
    codifferential,
    d_scalar,
    inner_product,
    project_coexact,
    scalar_laplacian_apply,
    spectrum,
)
from hodgelab.fields import evaluate_on_grid
from hodgelab.operators import exterior_derivative, form_space, is_closed, scalar_space
from hodgelab.verify import abc_form

G1 = SampleGrid.for_truncation(1)
G2 = SampleGrid.for_truncation(2)
seeds = st.integers(0, 2**32 - 1)
FLAT = MetricField.flat()


def cos_x1(N=1):
    return FourierScalarField.from_modes({(1, 0, 0): 0.5}, N)


def gnorm(g, u, grid):
    return np.sqrt(inner_product(g, u, u, grid))


def test_d_of_cosine():
    df = d_scalar(cos_x1())
    s = evaluate_on_grid(df, G1)
    x1 = G1.axis[:, None, None] * np.ones((1, G1.m, G1.m))
    assert np.allclose(s[0], -np.sin(x1), atol=1e-13)
    assert np.allclose(s[1:], 0.0)


def test_d_of_constant_and_d_squared(rng):
    assert np.abs(d_scalar(FourierScalarField.constant(3.0, 2)).data).max() == 0.0
    f = FourierScalarField.random(2, rng)
    assert np.abs(exterior_derivative(d_scalar(f))).max() == 0.0


def test_is_closed_cases(rng):
    assert is_closed(FourierOneForm.constant([1.0, 0, 0], 1))[0]
    assert is_closed(d_scalar(cos_x1()))[0]
    closed, defect = is_closed(abc_form(1, 1, 1))
    assert not closed and defect > 1.0


def test_beltrami_of_exact_vanishes(rng):
    f = FourierScalarField.random(2, rng)
    out = beltrami_apply(FLAT, d_scalar(f), G2)
    assert np.abs(out.data).max() <= 1e-13


def _fd_curl(samples, h):
    # fourth-order periodic central differences
    def D(a, ax):
        return (8 * (np.roll(a, -1, ax) - np.roll(a, 1, ax))
                - (np.roll(a, -2, ax) - np.roll(a, 2, ax))) / (12 * h)
    u = samples
    return np.stack([D(u[2], 1) - D(u[1], 2), D(u[0], 2) - D(u[2], 0), D(u[1], 0) - D(u[0], 1)])


def test_abc_is_curl_eigenfield():
    u = abc_form(1, 1, 1)
    out = beltrami_apply(FLAT, u, G1)
    assert np.abs(out.data - u.data).max() <= 1e-13
    fine = SampleGrid(64)
    fd = _fd_curl(evaluate_on_grid(u, fine), 2 * np.pi / 64)
    assert np.abs(fd - evaluate_on_grid(out, fine)).max() <= 1e-5


def test_single_mode_symbol():
    k = np.array([1, 2, 0])
    a = np.array([2.0, -1.0, 0.5j])
    assert abs(k @ a) == 0.0
    u = FourierOneForm.from_modes({tuple(k): a}, 2)
    out = beltrami_apply(FLAT, u, G2)
    idx = tuple(v + 2 for v in k)
    assert np.allclose(out.data[(slice(None),) + idx], 1j * np.cross(k, a), atol=1e-13)


def test_truncation_defect_reported(bumpy, rng):
    u = FourierOneForm.random(1, rng)
    _, defect = beltrami_apply(FLAT, u, G1, full_output=True)
    assert defect <= 1e-12
    _, defect = beltrami_apply(bumpy, u, G1, full_output=True)
    assert defect > 1e-6


def test_codifferential_cases():
    assert np.abs(codifferential(FLAT, FourierOneForm.constant([1.0, 0, 0], 1), G1).data).max() <= 1e-14
    lap = codifferential(FLAT, d_scalar(cos_x1()), G1)
    assert np.allclose(lap.data, cos_x1().data, atol=1e-13)
    assert np.abs(codifferential(FLAT, abc_form(1, 1, 1), G1).data).max() <= 1e-13


def test_scalar_laplacian_cases(bumpy):
    assert np.allclose(scalar_laplacian_apply(FLAT, cos_x1(), G1).data, cos_x1().data, atol=1e-13)
    c = scalar_laplacian_apply(bumpy, FourierScalarField.constant(2.0, 1), G1)
    assert np.abs(c.data).max() <= 1e-12
    a = 2.5
    out = scalar_laplacian_apply(MetricField.scaled_identity(a), cos_x1(), G1)
    assert np.allclose(out.data, cos_x1().data / a, atol=1e-13)


def test_closed_basis_sizes():
    assert len(closed_basis(0)) == 3
    cb = closed_basis(1)
    assert len(cb) == 29
    assert all(is_closed(e)[0] for e in cb.elements)


def test_projection_cases(bumpy, rng):
    dx = FourierOneForm.constant([1.0, 0, 0], 1)
    split = project_coexact(bumpy, dx, G1)
    assert np.abs(split.coexact.data).max() <= 1e-12
    assert np.allclose(split.closed.data, dx.data, atol=1e-12)
    u = abc_form(1, 1, 1)
    assert np.allclose(project_coexact(FLAT, u, G1).coexact.data, u.data, atol=1e-13)
    w = FourierOneForm.random(1, rng)
    s = project_coexact(bumpy, w, G1)
    assert abs(inner_product(bumpy, s.closed, s.coexact, G1)) <= 1e-10 * gnorm(bumpy, w, G1) ** 2
    assert s.residual <= 1e-10 * gnorm(bumpy, w, G1)


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_adjointness(seed):
    rng = np.random.default_rng(seed)
    g = MetricField.random(rng, 1, 0.25)
    u, f = FourierOneForm.random(1, rng), FourierScalarField.random(1, rng)
    sc = scalar_space(g, 1, G1)
    a = inner_product(g, u, d_scalar(f), G1)
    b = sc.vector(codifferential(g, u, G1)) @ sc.mass @ sc.vector(f)
    assert abs(a - b) <= 1e-8 * gnorm(g, u, G1) * gnorm(g, d_scalar(f), G1)


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_beltrami_self_adjoint_and_orthogonal_to_closed(seed):
    rng = np.random.default_rng(seed)
    g = MetricField.random(rng, 1, 0.25)
    u, v = FourierOneForm.random(1, rng), FourierOneForm.random(1, rng)
    bu, bv = beltrami_apply(g, u, G1), beltrami_apply(g, v, G1)
    scale = gnorm(g, bu, G1) * gnorm(g, v, G1) + gnorm(g, u, G1) * gnorm(g, bv, G1)
    assert abs(inner_product(g, bu, v, G1) - inner_product(g, u, bv, G1)) <= 1e-8 * scale
    alpha = closed_basis(1).elements[int(rng.integers(29))]
    assert abs(inner_product(g, bu, alpha, G1)) <= 1e-8 * gnorm(g, bu, G1) * gnorm(g, alpha, G1)


@given(seeds)
@settings(max_examples=10, deadline=None)
def test_projection_idempotent(seed):
    rng = np.random.default_rng(seed)
    g = MetricField.random(rng, 1, 0.25)
    u = FourierOneForm.random(1, rng)
    p = project_coexact(g, u, G1).coexact
    pp = project_coexact(g, p, G1).coexact
    assert gnorm(g, pp - p, G1) <= 1e-8 * gnorm(g, u, G1)
    assert abs(inner_product(g, p, u - p, G1)) <= 1e-8 * gnorm(g, u, G1) ** 2


def test_projection_between_metrics_full_rank(rng):
    g = MetricField.random(rng, 1, 0.2)
    gbar = MetricField.random(rng, 1, 0.2)
    basis = spectrum(g, 1, "curl", grid=G1)
    sp = form_space(gbar, 1, G1)
    cols = np.column_stack([
        sp.vector(project_coexact(gbar, basis.eigenpair(n).vector, G1).coexact)
        for n in range(len(basis))])
    s = np.linalg.svd(cols, compute_uv=False)
    assert cols.shape[1] == 52
    assert s[-1] > 1e-8 * s[0]
