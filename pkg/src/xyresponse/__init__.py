"""Entanglement and discord of response in transverse-field XY chains."""

from .correlators import (
    ContractionTable,
    CorrelatorSet,
    contraction_table,
    correlator_set,
    dispersion,
    g_contraction,
    spontaneous_magnetization,
    thermal_factor,
    transverse_magnetization,
    xx_correlator,
    xz_correlator,
    yy_correlator,
    zx_correlator,
    zz_correlator,
)
from .density import TwoSiteDensityMatrix, build_rho, classical_pointer_angle, classicality_defect
from .errors import InvalidParameters, NumericalFailure, XYResponseError
from .measures import (
    BlochDirection,
    MeasureRecord,
    Metric,
    concurrence,
    discord_of_response,
    entanglement_of_response,
    hilbert_schmidt_distance,
    optimize_over_sphere,
    pure_entanglement_of_response,
    trace_distance,
)
from .params import INF, ModelParams, Sector

__version__ = "0.1.0"
