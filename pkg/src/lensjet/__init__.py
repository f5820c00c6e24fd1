"""Numerical workbench for warped strips g = f(y) dx^2 + dy^2: geodesics, lens data,
equimeasurable rearrangements and boundary-jet recovery from boundary distances."""

from __future__ import annotations

__version__ = "0.1.0"

from .boundary import (
    NO_EVIDENCE,
    NONCONCAVE,
    OracleDataset,
    TabulatedDataset,
    detect_nonconcave,
    eikonal_residual,
    fd_partial,
    normal_derivative_tau,
)
from .errors import LensJetError
from .geodesic import (
    Chord,
    ExitEvent,
    GeodesicState,
    chord_between,
    chord_same_side,
    clairaut,
    crossing_displacement,
    crossing_time,
    hessian_rho_check,
    integrate_to_boundary,
    interior_distance,
)
from .jets import (
    JetReport,
    TwoPointNormalData,
    recover_c0,
    recover_c1,
    recover_c2,
    recover_ck,
    recover_symmetric_tensor,
    run_pipeline,
    second_normal_derivatives,
)
from .lens import (
    LensTable,
    build_lens_table,
    compare_lens,
    distribution_integral,
    equimeasurable_check,
    sublevel_measure,
    sublevel_measures,
)
from .section5 import build_f1, build_f2, layer_width, verify_section5
from .warp import (
    BOTTOM,
    TOP,
    ExpressionWarp,
    JetVector,
    SampledWarp,
    StripMetric,
    WarpFunction,
    christoffel,
    ground_truth_jet,
    jet_compare,
    load_warp,
    metric_components,
    preset,
    second_fundamental_form,
)

__all__ = [name for name in dir() if not name.startswith("_")]
