"""Spectral tools for the curl operator and the Hodge Laplacian on the flat 3-torus
with a Fourier-Galerkin discretization and arbitrary smooth metrics."""
from .errors import (
    AdmissibilityError,
    AliasError,
    ClusteredEigenvalueError,
    ConditioningError,
    DegenerateTransportError,
    HodgeLabError,
    InputError,
    NumericalError,
    PreconditionError,
    SearchFailure,
)
from .fields import (
    FourierOneForm,
    FourierScalarField,
    FourierSymTensor,
    MetricField,
    SampleGrid,
    h_map,
    inner_product,
    trace,
    traceless_part,
)
from .operators import (
    beltrami_apply,
    closed_basis,
    codifferential,
    d_scalar,
    project_coexact,
    scalar_laplacian_apply,
)
from .spectral import (
    ClusterTolerance,
    EigenPair,
    OperatorPencil,
    SpectralResult,
    assemble_pencil,
    eigenfunction_expand,
    resolvent_apply,
    solve_spectrum,
    spectrum,
)
from .zeros import ZeroPoint, ZeroReport, classify_zero, find_zeros

__version__ = "0.1.0"
