"""Geodesic lengths of static Lorentzian metrics: forward flow, pointwise
metric recovery from lengths, and a numerical rigidity experiment."""

from .errors import *  # noqa: F401,F403
from .flow import (
    GeodesicPath,
    conservation_defect,
    endpoint_jacobian,
    integrate_bicharacteristic,
    time_covector_drift,
)
from .length import (
    ClosedFormOracle,
    LengthOracle,
    LengthSample,
    QuadratureOracle,
    TableOracle,
    length_by_quadrature,
    length_closed_form,
    oracle_query,
)
from .metric import (
    CovectorClass,
    MetricField,
    classify_covector,
    evaluate_inverse_metric,
    evaluate_metric,
    hamiltonian,
    hamiltonian_gradients,
)
from .recovery import (
    BoundaryJet,
    RecoveredMetricPoint,
    find_timelike_seed,
    measured_form,
    recover_boundary_jet,
    recover_inverse_metric_at,
    recover_on_region,
    recover_riemannian,
)
from .rigidity import (
    InterpolatedFamily,
    RigidityReport,
    eta_tau_derivative,
    family_field,
    first_variation,
    path_norm,
    rigidity_check,
    shoot,
    sup_norm,
)

__version__ = "0.1.0"
