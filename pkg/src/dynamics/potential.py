"""
Potentials psi = -log|T'| and phi along branches, Birkhoff sums and their
cylinder bounds, and the variation modulus used as weak-Gibbs slack.
"""

import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.utils import ArrayCache
from .env_models import EnvModel, EnvPath, Potential, Word
from .geometry import max_contraction
from .subshift import check_admissible, word_array

logger = logging.getLogger(__name__)

_birkhoff_cache = ArrayCache(max_entries=64)


class BirkhoffBounds(BaseModel):
    """sup and inf of S_n over a symbolic cylinder."""
    sup_sum: float = Field(..., description="sup over [v] of S_n")
    inf_sum: float = Field(..., description="inf over [v] of S_n")
    n: int = Field(..., ge=0)


def _branch_at(path: EnvPath, k: int, s: int):
    size = path.alphabet_at(k)
    if not 1 <= s <= size:
        raise ValueError(f"symbol {s} outside alphabet 1..{size} at position {k}")
    return path.state_at(k).branches[s - 1]


def _normalized(br, x: float) -> float:
    if not br.a <= x <= br.b:
        raise ValueError(f"x = {x} outside branch interval [{br.a}, {br.b}]")
    return (x - br.a) / (br.b - br.a)


def eval_psi(path: EnvPath, k: int, s: int, x: float) -> float:
    """-log|(T^s)'(x)| for the state at position k."""
    br = _branch_at(path, k, s)
    return float(br.psi_at(_normalized(br, x)))


def eval_phi(path: EnvPath, k: int, s: int, x: float) -> float:
    """phi(s, x) for the state at position k."""
    br = _branch_at(path, k, s)
    return float(br.phi.at(_normalized(br, x)))


def _profile(params, idx: np.ndarray, y: np.ndarray, which: Potential) -> np.ndarray:
    if which == Potential.PSI:
        a, b, c = params["a"][idx], params["b"][idx], params["c"][idx]
        return np.log(b - a) - np.log1p(c) + 2.0 * np.log1p(c * y)
    return params["phi_value"][idx] + params["phi_slope"][idx] * y


def birkhoff_arrays(path: EnvPath, offset: int, words: np.ndarray,
                    which: Potential) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cylinder sup/inf of S_n for every row of ``words``.

    Step i runs over x in U^{v_i ... v_(n-1)}; in the normalized branch
    coordinate that is the preimage image of the tail cylinder, and the
    supported profiles are monotone there, so endpoint values suffice.

    Returns:
        (sup_sums, inf_sums)
    """
    which = Potential(which)
    w, n = words.shape
    sup_sum = np.zeros(w)
    inf_sum = np.zeros(w)
    tail_lo = np.zeros(w)
    tail_hi = np.ones(w)
    arrays = path.model.branch_arrays
    for i in range(n - 1, -1, -1):
        params = arrays[path.states[offset + i]]
        idx = words[:, i].astype(np.int64) - 1
        c = params["c"][idx]
        y_lo = tail_lo / (1.0 + c - c * tail_lo)
        y_hi = tail_hi / (1.0 + c - c * tail_hi)
        v_lo = _profile(params, idx, y_lo, which)
        v_hi = _profile(params, idx, y_hi, which)
        sup_sum += np.maximum(v_lo, v_hi)
        inf_sum += np.minimum(v_lo, v_hi)
        a, b = params["a"][idx], params["b"][idx]
        tail_lo = a + (b - a) * y_lo
        tail_hi = a + (b - a) * y_hi
    return sup_sum, inf_sum


def birkhoff_bounds(path: EnvPath, word: Word, which: Potential) -> BirkhoffBounds:
    """
    sup and inf of S_n(psi or phi) over [word].

    For locally constant potentials sup_sum == inf_sum.
    """
    if len(word) == 0:
        return BirkhoffBounds(sup_sum=0.0, inf_sum=0.0, n=0)
    check_admissible(path, word)
    words = np.asarray([word.letters], dtype=np.int16)
    sup_sum, inf_sum = birkhoff_arrays(path, word.base_offset, words, which)
    return BirkhoffBounds(sup_sum=float(sup_sum[0]), inf_sum=float(inf_sum[0]), n=len(word))


def _build_birkhoff_table(path: EnvPath, offset: int, n: int, which: Potential):
    words = word_array(path, offset, n)
    sup_sum, inf_sum = birkhoff_arrays(path, offset, words, which)
    sup_sum.setflags(write=False)
    inf_sum.setflags(write=False)
    return sup_sum, inf_sum


def birkhoff_table(path: EnvPath, offset: int, n: int, which: Potential) -> Tuple[np.ndarray, np.ndarray]:
    """(sup, inf) of S_n over all depth-n cylinders at offset, aligned with word_array."""
    which = Potential(which)
    key = ("birkhoff", which.value) + path.segment_key(offset, n)
    return _birkhoff_cache.get_or_compute(key, lambda: _build_birkhoff_table(path, offset, n, which))


def profile_slope(model: EnvModel, which: Potential) -> float:
    """Largest Lipschitz constant of the profile in the normalized coordinate."""
    which = Potential(which)
    if which == Potential.PSI:
        return float(max(br.psi_slope for st in model.states for br in st.branches))
    return float(max(abs(br.phi.slope) for st in model.states for br in st.branches))


def variation_modulus(model: EnvModel, n: int, which: Potential = Potential.PHI) -> float:
    """
    Certified per-level slack eps(n) with n*eps(n) >= sup_sum - inf_sum.

    eps(n) = slope_max * sum_{j<n} min(1, kappa * rho^j) / n, where rho is the
    largest inverse-branch contraction and kappa the largest distortion of
    the normalized preimage maps. n*eps(n) is non-decreasing and eps(n)
    non-increasing.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    slope = profile_slope(model, which)
    if slope == 0.0:
        return 0.0
    rho = max_contraction(model)
    kappa = max(br.distortion for st in model.states for br in st.branches)
    widths = np.minimum(1.0, kappa * rho ** np.arange(n))
    return float(slope * widths.sum() / n)
