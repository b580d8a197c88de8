"""
Quenched pressure, spectrum curves and the random weak Gibbs measure.
"""

from .pressure import (
    Combo,
    PressureMethod,
    RootCombo,
    PressureEstimate,
    CauchyGaps,
    combo_coefficients,
    pressure,
    eigen_pressure,
    estimate_pressure,
    cauchy_gaps,
    doubling_depths,
    pressure_root,
    rebind_path,
    estimate_phi_pressure,
    normalize_phi,
)
from .legendre import (
    CurveKind,
    SpectrumCurve,
    DualityPoint,
    DualityReport,
    ControlBound,
    legendre,
    duality_check,
    edge_slopes,
    left_derivative,
    predicted_lower_spectrum,
    predicted_upper_spectrum,
    junction_gap,
    control_bound_check,
)
from .gibbs import (
    prefix_ids,
    group_starts,
    FunctionTable,
    MeasureTable,
    RpfResult,
    GibbsDiagnostic,
    rpf_apply,
    rpf_measure,
    log_eigen_product,
    gibbs_diagnostic,
)

__all__ = [
    'Combo', 'PressureMethod', 'RootCombo', 'PressureEstimate', 'CauchyGaps', 'combo_coefficients',
    'pressure', 'eigen_pressure', 'estimate_pressure', 'cauchy_gaps', 'doubling_depths', 'pressure_root',
    'rebind_path', 'estimate_phi_pressure', 'normalize_phi',
    'CurveKind', 'SpectrumCurve', 'DualityPoint', 'DualityReport', 'ControlBound',
    'legendre', 'duality_check', 'edge_slopes', 'left_derivative',
    'predicted_lower_spectrum', 'predicted_upper_spectrum', 'junction_gap', 'control_bound_check',
    'prefix_ids', 'group_starts', 'FunctionTable', 'MeasureTable', 'RpfResult', 'GibbsDiagnostic',
    'rpf_apply', 'rpf_measure', 'log_eigen_product', 'gibbs_diagnostic',
]
