"""
Empirical spectra of the inverse measure and the spectrum report pipeline.
"""

from .lq_spectrum import (
    packing_statistic,
    usable_scales,
    tail_scales,
    lq_estimate,
    forward_lq_estimate,
    concavity_defect,
    deviation_from,
)
from .local_dims import (
    LocalDimSample,
    AlphaEstimate,
    ApproxDegree,
    local_dims,
    alpha_of,
    alpha_at,
    cell_of,
    approx_degree,
    sample_points,
)
from .ubiquity import UbiquityBall, UbiquityCheck, default_eps, ubiquity_sample, ubiquity_check
from .box_dimension import BoxCount, cell_count, box_counts, box_dimension
from .html_report import create_html_report
from .report import (
    Tolerances,
    AnalysisConfig,
    ReportCheck,
    RunManifest,
    SpectrumReport,
    required_horizon,
    preflight,
    root_curves,
    spectrum_report,
)

__all__ = [
    'packing_statistic', 'usable_scales', 'tail_scales', 'lq_estimate', 'forward_lq_estimate', 'concavity_defect',
    'deviation_from',
    'LocalDimSample', 'AlphaEstimate', 'ApproxDegree', 'local_dims', 'alpha_of', 'alpha_at', 'cell_of',
    'approx_degree', 'sample_points',
    'UbiquityBall', 'UbiquityCheck', 'default_eps', 'ubiquity_sample', 'ubiquity_check',
    'BoxCount', 'cell_count', 'box_counts', 'box_dimension',
    'create_html_report',
    'Tolerances', 'AnalysisConfig', 'ReportCheck', 'RunManifest', 'SpectrumReport',
    'required_horizon', 'preflight', 'root_curves', 'spectrum_report',
]
