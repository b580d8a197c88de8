"""
Environment chain: model loading, validation and path sampling.

The abstract ergodic base system is a finite-state stationary Markov chain.
A 1-state chain is the deterministic cookie-cutter case.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from src.config import Config
from src.errors import InvalidModelError, StructuralError
from src.utils import ArrayCache, stream_rng
from .env_models import CheckResult, EnvModel, EnvPath, Severity, ValidationReport

logger = logging.getLogger(__name__)

_validation_cache = ArrayCache(max_entries=32)


def load_model(path: Union[str, Path]) -> EnvModel:
    """
    Load and structurally check a model file.

    Args:
        path: JSON model file

    Returns:
        Parsed EnvModel

    Raises:
        StructuralError: missing file, malformed JSON or shape problems
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise StructuralError(f"model file not found: {path}")
    except json.JSONDecodeError as e:
        raise StructuralError(f"malformed JSON in {path}: {e}")

    if not isinstance(data, dict) or "format" not in data:
        raise StructuralError(f"{path}: top-level 'format' field is required")
    try:
        model = EnvModel.model_validate(data)
    except ValidationError as e:
        logger.error(f"Structural error in {path}: {e}")
        raise StructuralError(f"{path}: {e}")
    logger.info(f"Loaded model {model.name or path.stem} ({model.digest})")
    return model


def save_model(model: EnvModel, path: Union[str, Path]) -> Path:
    """Write a model file in canonical JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.model_dump(mode="json"), f, indent=2)
        f.write("\n")
    return path


def stationary_distribution(q: np.ndarray) -> np.ndarray:
    """
    Stationary vector of a row-stochastic matrix.

    Left Perron eigenvector of Q, normalized to sum 1.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape == (1, 1):
        return np.ones(1)
    eigvals, eigvecs = np.linalg.eig(q.T)
    idx = int(np.argmin(np.abs(eigvals - 1.0)))
    pi = np.real(eigvecs[:, idx])
    pi = pi / pi.sum()
    return pi


def _is_irreducible(support: np.ndarray) -> bool:
    n = support.shape[0]
    step = support.astype(bool)
    reach = np.eye(n, dtype=bool) | step
    for _ in range(n):
        grown = reach | ((reach.astype(np.int64) @ step.astype(np.int64)) > 0)
        if np.array_equal(grown, reach):
            break
        reach = grown
    return bool(np.all(reach))


def _is_primitive(support: np.ndarray) -> bool:
    # Wielandt bound: primitive iff A^k > 0 for k = (n-1)^2 + 1
    n = support.shape[0]
    power = np.eye(n, dtype=np.int64)
    base = support.astype(np.int64)
    for _ in range((n - 1) ** 2 + 1):
        power = np.minimum(power @ base, 1)
    return bool(np.all(power > 0))


def mean_conditions(model: EnvModel, pi: Optional[np.ndarray] = None) -> Tuple[float, float]:
    """
    Contraction and potential mean conditions.

    Returns:
        (c_psi, c_phi) = (-sum pi(k) max_s sup psi, -sum pi(k) max_s sup phi)
    """
    pi = stationary_distribution(model.transition_matrix) if pi is None else pi
    sup_psi = np.array([max(br.psi_sup for br in st.branches) for st in model.states])
    sup_phi = np.array([max(br.phi.sup for br in st.branches) for st in model.states])
    return float(-pi @ sup_psi), float(-pi @ sup_phi)


def validate_model(model: EnvModel) -> ValidationReport:
    """
    Check every model invariant and report pass/fail per check.

    Args:
        model: Structurally valid model

    Returns:
        ValidationReport; downstream operations refuse a report that did not pass
    """
    checks = []
    q = model.transition_matrix

    row_sums = q.sum(axis=1)
    checks.append(CheckResult(
        name="transition_row_stochastic",
        passed=bool(np.allclose(row_sums, 1.0, atol=1e-12)),
        detail=f"row sums {row_sums.tolist()}",
        value=float(np.max(np.abs(row_sums - 1.0))),
    ))

    support = (q > 0)
    irreducible = _is_irreducible(support)
    checks.append(CheckResult(name="transition_irreducible", passed=irreducible))
    checks.append(CheckResult(
        name="transition_aperiodic",
        passed=irreducible and _is_primitive(support),
        detail="some power of Q is entrywise positive",
    ))

    pi = stationary_distribution(q)
    checks.append(CheckResult(
        name="stationary_positive",
        passed=bool(np.all(pi > 0)),
        value=float(pi.min()),
    ))

    ordering_ok = True
    bad_order = []
    for st in model.states:
        for s in range(st.alphabet_size - 1):
            if st.branches[s].b > st.branches[s + 1].a:
                ordering_ok = False
                bad_order.append(f"state {st.id} symbols {s + 1},{s + 2}")
    checks.append(CheckResult(
        name="branch_ordering",
        passed=ordering_ok,
        detail="; ".join(bad_order) or "b_s <= a_{s+1} in every state",
    ))

    bound = max(abs(v) for st in model.states for br in st.branches for v in (br.psi_sup, br.psi_inf))
    checks.append(CheckResult(
        name="derivative_bound",
        passed=bound <= Config.DERIVATIVE_BOUND,
        detail=f"max |log T'| = {bound:.6g}, B = {Config.DERIVATIVE_BOUND}",
        value=float(bound),
    ))

    checks.append(CheckResult(
        name="alphabet_nontrivial",
        passed=any(st.alphabet_size >= 2 for st in model.states),
        detail="at least one state has two or more symbols",
    ))

    c_psi, c_phi = mean_conditions(model, pi)
    checks.append(CheckResult(name="contraction_mean", passed=c_psi > 0, value=c_psi,
                              detail=f"c_psi = {c_psi:.6g}"))
    checks.append(CheckResult(name="potential_mean", passed=c_phi > 0, value=c_phi,
                              detail=f"c_phi = {c_phi:.6g}"))

    tiling = []
    for st in model.states:
        br = st.branches
        total = sum(b.width for b in br)
        contiguous = (abs(br[0].a) <= 1e-12 and abs(br[-1].b - 1.0) <= 1e-12
                      and all(abs(br[s].b - br[s + 1].a) <= 1e-12 for s in range(len(br) - 1)))
        tiling.append(abs(total - 1.0) <= 1e-12 and contiguous)
    all_tile = all(tiling)
    checks.append(CheckResult(
        name="zero_lebesgue",
        passed=not all_tile,
        detail="branch intervals tile [0,1] in every state" if all_tile else "some state leaves gaps",
    ))
    if any(tiling) and not all_tile:
        checks.append(CheckResult(
            name="zero_lebesgue_partial",
            passed=False,
            severity=Severity.WARNING,
            detail=f"states {[k for k, t in enumerate(tiling) if t]} tile [0,1]",
        ))

    report = ValidationReport(digest=model.digest, checks=checks, c_psi=c_psi, c_phi=c_phi,
                              stationary=pi.tolist())
    if report.passed:
        logger.info(f"Model {model.digest} valid (c_psi={c_psi:.4g}, c_phi={c_phi:.4g})")
    else:
        logger.warning(f"Model {model.digest} failed checks: {report.failed_checks()}")
    return report


def ensure_valid(model: EnvModel) -> ValidationReport:
    """
    Validate once per model digest and refuse failed models.

    Raises:
        InvalidModelError: if any error-severity check failed
    """
    report = _validation_cache.get_or_compute(model.digest, lambda: validate_model(model))
    if not report.passed:
        raise InvalidModelError(
            f"model {model.digest} failed validation: {', '.join(report.failed_checks())}",
            failed_checks=report.failed_checks(),
        )
    return report


def sample_path(model: EnvModel, horizon: Optional[int] = None, stream_label: str = "path",
                strict: bool = True) -> EnvPath:
    """
    Sample a stationary Markov path of length horizon+1.

    Args:
        model: Environment model
        horizon: Number of transitions (default Config.PATH_HORIZON)
        stream_label: Random stream name; (seed, stream_label) fix the path
        strict: Refuse models that failed validation

    Returns:
        EnvPath starting at position 0
    """
    horizon = Config.PATH_HORIZON if horizon is None else int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if strict:
        ensure_valid(model)

    q = model.transition_matrix
    n_states = q.shape[0]
    rng = stream_rng(model.seed, stream_label)
    draws = rng.random(horizon + 1)
    if n_states == 1:
        states = np.zeros(horizon + 1, dtype=np.int64)
    else:
        pi = stationary_distribution(q)
        cum_pi = np.cumsum(pi)
        cum_q = np.cumsum(q, axis=1)
        states = np.empty(horizon + 1, dtype=np.int64)
        states[0] = min(int(np.searchsorted(cum_pi, draws[0] * cum_pi[-1], side="right")), n_states - 1)
        for i in range(1, horizon + 1):
            row = cum_q[states[i - 1]]
            states[i] = min(int(np.searchsorted(row, draws[i] * row[-1], side="right")), n_states - 1)

    logger.debug(f"Sampled path {stream_label!r} of horizon {horizon} for model {model.digest}")
    return EnvPath(model=model, states=tuple(int(s) for s in states), seed=model.seed,
                   stream_label=stream_label)


def shift_path(path: EnvPath, k: int) -> EnvPath:
    """
    Drop the first k entries (sigma^k omega).

    Raises:
        ValueError: if k is negative or exceeds the horizon
    """
    if k < 0 or k > path.horizon:
        raise ValueError(f"shift {k} outside [0, {path.horizon}]")
    if k == 0:
        return path
    return EnvPath(model=path.model, states=path.states[k:], seed=path.seed,
                   stream_label=path.stream_label, start=path.start + k)
