"""
Random environments, subshifts, interval geometry and potentials.
"""

from .env_models import (
    MapKind,
    PotentialKind,
    Potential,
    Severity,
    PotentialProfile,
    BranchSpec,
    EnvState,
    EnvModel,
    EnvPath,
    Word,
    CheckResult,
    ValidationReport,
)
from .environment import (
    load_model,
    save_model,
    stationary_distribution,
    mean_conditions,
    validate_model,
    ensure_valid,
    sample_path,
    shift_path,
)
from .subshift import (
    is_admissible,
    check_admissible,
    count_words,
    word_array,
    first_letter_starts,
    WordCursor,
    enumerate_words,
    mixing_time,
    bridge,
)
from .geometry import (
    CylinderInterval,
    ExtremaPair,
    ProjectedPoint,
    TailExtrema,
    max_contraction,
    cylinder_interval,
    cylinder_arrays,
    attractor_extrema,
    project,
    tail_extrema_for,
)
from .potential import (
    BirkhoffBounds,
    eval_psi,
    eval_phi,
    birkhoff_bounds,
    birkhoff_arrays,
    birkhoff_table,
    variation_modulus,
)
from .presets import PRESETS, get_preset

__all__ = [
    'MapKind', 'PotentialKind', 'Potential', 'Severity', 'PotentialProfile', 'BranchSpec',
    'EnvState', 'EnvModel', 'EnvPath', 'Word', 'CheckResult', 'ValidationReport',
    'load_model', 'save_model', 'stationary_distribution', 'mean_conditions',
    'validate_model', 'ensure_valid', 'sample_path', 'shift_path',
    'is_admissible', 'check_admissible', 'count_words', 'word_array', 'first_letter_starts',
    'WordCursor', 'enumerate_words', 'mixing_time', 'bridge',
    'CylinderInterval', 'ExtremaPair', 'ProjectedPoint', 'TailExtrema', 'max_contraction',
    'cylinder_interval', 'cylinder_arrays', 'attractor_extrema', 'project', 'tail_extrema_for',
    'BirkhoffBounds', 'eval_psi', 'eval_phi', 'birkhoff_bounds', 'birkhoff_arrays',
    'birkhoff_table', 'variation_modulus',
    'PRESETS', 'get_preset',
]
