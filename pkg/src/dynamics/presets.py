"""
Reference environment models with closed-form multifractal data.

Moran-type models (one state, full shift, affine branches, constant
potentials) have exact pressures, so they serve as oracles for roots,
Legendre transforms and box dimensions.
"""

import math
from typing import Callable, Dict, Optional, Sequence

from src.config import Config
from .env_models import EnvModel


def _branch(a: float, b: float, phi: float, c: float = 0.0, slope: Optional[float] = None) -> dict:
    branch = {
        "a": a,
        "b": b,
        "map_kind": "moebius" if c != 0.0 else "affine",
        "c": c,
        "phi": {"kind": "constant", "value": phi},
    }
    if slope is not None:
        branch["phi"] = {"kind": "lipschitz", "value": phi, "slope": slope}
    return branch


def _full(rows: int, cols: int) -> list:
    return [[1] * cols for _ in range(rows)]


def moran(ratios: Sequence[float], probs: Sequence[float], name: str = "moran",
          seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """
    One-state full shift with affine branches of the given ratios.

    Branches are placed left to right with equal gaps, phi_s = log p_s.
    """
    if len(ratios) != len(probs) or len(ratios) < 2:
        raise ValueError("ratios and probs must have the same length >= 2")
    gap = (1.0 - sum(ratios)) / (len(ratios) - 1)
    if gap < 0:
        raise ValueError("ratios must sum to at most 1")
    branches, a = [], 0.0
    for r, p in zip(ratios, probs):
        b = min(a + r, 1.0)
        branches.append(_branch(a, b, math.log(p)))
        a = b + gap
    l = len(ratios)
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": name,
        "states": [{"id": 0, "alphabet_size": l, "branches": branches}],
        "transition": [[1.0]],
        "admissibility": {"0->0": _full(l, l)},
        "seed": seed,
    })


def bernoulli2(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Branches [0,1/4], [1/2,3/4], p = (2/3, 1/3)."""
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "bernoulli-2",
        "states": [{"id": 0, "alphabet_size": 2, "branches": [
            _branch(0.0, 0.25, math.log(2.0 / 3.0)),
            _branch(0.5, 0.75, math.log(1.0 / 3.0)),
        ]}],
        "transition": [[1.0]],
        "admissibility": {"0->0": _full(2, 2)},
        "seed": seed,
    })


def middle_thirds(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Middle-thirds Cantor set with the uniform measure."""
    model = moran([1.0 / 3.0, 1.0 / 3.0], [0.5, 0.5], name="middle-thirds", seed=seed)
    return model


def golden_mean(phi: Optional[Sequence[float]] = None, seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """
    Golden-mean shift A = [[1,1],[1,0]] (symbol 2 never follows 2).

    The default potential is -log of the golden ratio on both symbols,
    which has zero pressure.
    """
    g = (1.0 + math.sqrt(5.0)) / 2.0
    phi = phi or (-math.log(g), -math.log(g))
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "golden-mean",
        "states": [{"id": 0, "alphabet_size": 2, "branches": [
            _branch(0.0, 0.3, phi[0]),
            _branch(0.6, 0.9, phi[1]),
        ]}],
        "transition": [[1.0]],
        "admissibility": {"0->0": [[1, 1], [1, 0]]},
        "seed": seed,
    })


def rare_heavy_golden(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Golden-mean model whose heavy symbol is rare; normalization breaks c_phi > 0."""
    model = golden_mean(phi=(-10.0, -0.01), seed=seed)
    return EnvModel.model_validate({**model.model_dump(mode="json"), "name": "rare-heavy-golden"})


def tiling(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Branches [0,1/2], [1/2,1]: positive Lebesgue measure, fails validation."""
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "tiling",
        "states": [{"id": 0, "alphabet_size": 2, "branches": [
            _branch(0.0, 0.5, math.log(0.5)),
            _branch(0.5, 1.0, math.log(0.5)),
        ]}],
        "transition": [[1.0]],
        "admissibility": {"0->0": _full(2, 2)},
        "seed": seed,
    })


def single_branch(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """One symbol: the attractor is a single point (fails alphabet check)."""
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "single-branch",
        "states": [{"id": 0, "alphabet_size": 1, "branches": [_branch(0.2, 0.6, -0.5)]}],
        "transition": [[1.0]],
        "admissibility": {"0->0": [[1]]},
        "seed": seed,
    })


def lipschitz_moebius(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """One state, Moebius branches and Lipschitz potentials."""
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "lipschitz-moebius",
        "states": [{"id": 0, "alphabet_size": 2, "branches": [
            _branch(0.0, 0.3, -0.6, c=0.4, slope=0.3),
            _branch(0.55, 0.8, -1.1, c=-0.3, slope=-0.2),
        ]}],
        "transition": [[1.0]],
        "admissibility": {"0->0": _full(2, 2)},
        "seed": seed,
    })


def two_state_random(seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Two-state environment with alphabets 2 and 3 and mixed admissibility."""
    return EnvModel.model_validate({
        "format": Config.MODEL_FORMAT,
        "name": "two-state-random",
        "states": [
            {"id": 0, "alphabet_size": 2, "branches": [
                _branch(0.0, 0.3, -0.9),
                _branch(0.5, 0.8, -1.3, c=0.3, slope=0.2),
            ]},
            {"id": 1, "alphabet_size": 3, "branches": [
                _branch(0.0, 0.2, -1.0),
                _branch(0.35, 0.6, -1.2),
                _branch(0.75, 0.95, -1.5, c=-0.25, slope=-0.3),
            ]},
        ],
        "transition": [[0.6, 0.4], [0.3, 0.7]],
        "admissibility": {
            "0->0": _full(2, 2),
            "0->1": [[1, 1, 0], [0, 1, 1]],
            "1->0": [[1, 1], [1, 0], [0, 1]],
            "1->1": [[1, 1, 1], [1, 1, 1], [1, 0, 1]],
        },
        "seed": seed,
    })


PRESETS: Dict[str, Callable[..., EnvModel]] = {
    "bernoulli-2": bernoulli2,
    "middle-thirds": middle_thirds,
    "golden-mean": golden_mean,
    "rare-heavy-golden": rare_heavy_golden,
    "tiling": tiling,
    "single-branch": single_branch,
    "lipschitz-moebius": lipschitz_moebius,
    "two-state-random": two_state_random,
}


def get_preset(name: str, seed: int = Config.DEFAULT_SEED) -> EnvModel:
    """Build a named reference model."""
    try:
        return PRESETS[name](seed=seed)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
