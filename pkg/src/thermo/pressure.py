"""
Quenched topological pressure, pressure roots and potential normalization.

Locally constant models use an exact log-space transfer-matrix product;
every other model enumerates the depth-n cylinders and reduces the
sup-Birkhoff terms with a fixed block tree. Both routes give the same
bits at any thread count.
"""

import logging
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import logsumexp

from src.config import Config
from src.dynamics import (
    EnvModel,
    EnvPath,
    Potential,
    birkhoff_table,
    ensure_valid,
    first_letter_starts,
    mean_conditions,
    sample_path,
    validate_model,
    word_array,
)
from src.errors import (
    BracketFailureError,
    HorizonTooShortError,
    InvalidModelError,
    NonConvergenceError,
    NormalizationBreaksAssumptionError,
)
from src.utils import block_logsumexp
from .gibbs import log_eigen_product

logger = logging.getLogger(__name__)


class Combo(str, Enum):
    """Potential combination whose pressure is evaluated."""
    Q_PSI_MINUS_T_PHI = "qPsi_minus_tPhi"
    Q_PHI_MINUS_T_PSI = "qPhi_minus_tPsi"
    T_PSI_ONLY = "tPsi_only"
    PHI_ONLY = "Phi_only"


class PressureMethod(str, Enum):
    """Finite-n pressure estimator."""
    PARTITION = "partition"  # (1/n) log of the sup partition sum
    EIGEN = "eigen"          # (1/n) sum of log lambda after a burn-in


class RootCombo(str, Enum):
    """Which pressure equation pressure_root solves."""
    CAL_T = "calT"     # P(q psi - t phi) = 0
    T = "T"            # P(q phi - t psi) = 0
    BOWEN = "bowen"    # P(t psi) = 0


class PressureEstimate(BaseModel):
    """Finite-n quenched pressure of one potential combination."""
    value: float = Field(..., description="(1/n) log of the partition sum")
    n: int = Field(..., description="Word length")
    offset: int = Field(..., description="Path position of the first letter")
    q_psi: float = Field(..., description="q argument of the combination")
    t_phi: float = Field(..., description="t argument of the combination")
    combo: Combo
    method: str = Field(..., description="transfer, enumeration or eigen")


class CauchyGaps(BaseModel):
    """Pressure estimates at doubling depths and their successive gaps."""
    depths: List[int]
    values: List[float]
    gaps: List[float] = Field(..., description="|P_{2n} - P_n|")

    @property
    def decreasing(self) -> bool:
        return all(b <= a + 1e-12 for a, b in zip(self.gaps, self.gaps[1:]))


def combo_coefficients(combo: Combo, q: float, t: float) -> Tuple[float, float]:
    """(coefficient of psi, coefficient of phi)."""
    combo = Combo(combo)
    if combo == Combo.Q_PSI_MINUS_T_PHI:
        return float(q), -float(t)
    if combo == Combo.Q_PHI_MINUS_T_PSI:
        return -float(t), float(q)
    if combo == Combo.T_PSI_ONLY:
        return float(t), 0.0
    return 0.0, 1.0


def _log_transfer(path: EnvPath, offset: int, n: int, alpha: float, beta: float) -> float:
    arrays = path.model.branch_arrays
    vec = None
    for pos in range(offset + n - 1, offset - 1, -1):
        params = arrays[path.states[pos]]
        weights = alpha * np.log(params["b"] - params["a"]) + beta * params["phi_value"]
        if vec is None:
            vec = weights
            continue
        adj = path.adjacency_at(pos).astype(bool)
        terms = np.where(adj, vec[None, :], -np.inf)
        vec = weights + logsumexp(terms, axis=1)
    return float(logsumexp(vec))


def _log_enumerate(path: EnvPath, offset: int, n: int, alpha: float, beta: float,
                   threads: Optional[int]) -> float:
    words = word_array(path, offset, n)
    terms = np.zeros(words.shape[0])
    if alpha != 0.0:
        psi_sup, psi_inf = birkhoff_table(path, offset, n, Potential.PSI)
        terms = terms + alpha * (psi_sup if alpha > 0 else psi_inf)
    if beta != 0.0:
        phi_sup, phi_inf = birkhoff_table(path, offset, n, Potential.PHI)
        terms = terms + beta * (phi_sup if beta > 0 else phi_inf)
    return block_logsumexp(terms, first_letter_starts(words), threads=threads)


def pressure(path: EnvPath, offset: int, n: int, q: float = 0.0, t: float = 0.0,
             combo: Combo = Combo.Q_PSI_MINUS_T_PHI, threads: Optional[int] = None) -> PressureEstimate:
    """
    (1/n) log sum over Sigma_{omega,n} of exp(sup of the combination).

    Args:
        path: Environment path
        offset: Start position
        n: Word length (>= 4)
        q, t: Combination parameters
        combo: Which combination
        threads: Worker count for the block reduction

    Returns:
        PressureEstimate
    """
    if n < 4:
        raise ValueError(f"pressure depth n must be >= 4, got {n}")
    if offset < 0 or offset + n > path.horizon:
        raise HorizonTooShortError(f"pressure at offset {offset} with n={n}", required=offset + n)
    combo = Combo(combo)
    alpha, beta = combo_coefficients(combo, q, t)
    if path.model.is_locally_constant:
        total, method = _log_transfer(path, offset, n, alpha, beta), "transfer"
    else:
        total, method = _log_enumerate(path, offset, n, alpha, beta, threads), "enumeration"
    return PressureEstimate(value=total / n, n=n, offset=offset, q_psi=q, t_phi=t,
                            combo=combo, method=method)


def eigen_pressure(path: EnvPath, offset: int, n: int, q: float = 0.0, t: float = 0.0,
                   combo: Combo = Combo.Q_PSI_MINUS_T_PHI, resolution: Optional[int] = None,
                   burn_in: Optional[int] = None) -> PressureEstimate:
    """
    (1/n) sum of log lambda(sigma^i omega) over i = offset .. offset+n-1.

    The RPF normalizers of the combination after a burn-in. Unlike the
    partition sum this carries no O(1/n) boundary term, so it agrees with
    the eigenvalue averages of rpf_measure on the same window.

    Args:
        path: Environment path
        offset: Start position
        n: Window length
        q, t: Combination parameters
        combo: Which combination
        resolution: Word depth of the pullback (default 1 for locally constant models)
        burn_in: Extra pullback steps (default Config.PRESSURE_BURN_IN)

    Returns:
        PressureEstimate with method "eigen"
    """
    if n < 1:
        raise ValueError(f"pressure window n must be >= 1, got {n}")
    combo = Combo(combo)
    alpha, beta = combo_coefficients(combo, q, t)
    total = log_eigen_product(path, offset, n, alpha, beta, resolution, burn_in)
    return PressureEstimate(value=total / n, n=n, offset=offset, q_psi=q, t_phi=t, combo=combo, method="eigen")


def estimate_pressure(path: EnvPath, offset: int, n: int, q: float = 0.0, t: float = 0.0,
                      combo: Combo = Combo.Q_PSI_MINUS_T_PHI,
                      method: PressureMethod = PressureMethod.EIGEN) -> PressureEstimate:
    """Dispatch to the partition-sum or eigenvalue-product estimator."""
    if PressureMethod(method) == PressureMethod.PARTITION:
        return pressure(path, offset, n, q, t, combo)
    return eigen_pressure(path, offset, n, q, t, combo)


def cauchy_gaps(path: EnvPath, depths: Sequence[int], q: float = 0.0, t: float = 0.0,
                combo: Combo = Combo.PHI_ONLY, offset: int = 0,
                method: PressureMethod = PressureMethod.PARTITION) -> CauchyGaps:
    """Pressure at each depth and the gaps between consecutive depths (usually doublings)."""
    depths = sorted(int(n) for n in depths)
    if len(depths) < 2:
        raise ValueError("cauchy_gaps needs at least two depths")
    values = [estimate_pressure(path, offset, n, q, t, combo, method).value for n in depths]
    gaps = [abs(b - a) for a, b in zip(values, values[1:])]
    logger.info(f"Pressure Cauchy gaps for {Combo(combo).value} at {depths}: {gaps}")
    return CauchyGaps(depths=depths, values=values, gaps=gaps)


def doubling_depths(start: int, stop: int) -> List[int]:
    """start, 2 start, 4 start, ... up to stop."""
    if start < 1 or stop < start:
        raise ValueError(f"bad doubling range [{start}, {stop}]")
    depths = []
    n = start
    while n <= stop:
        depths.append(n)
        n *= 2
    return depths


def _root_function(path: EnvPath, q: float, combo: RootCombo, n: int, offset: int,
                   method: PressureMethod) -> Callable[[float], float]:
    """Increasing function of t whose zero is the requested root."""
    if combo == RootCombo.CAL_T:
        return lambda t: estimate_pressure(path, offset, n, q, t, Combo.Q_PSI_MINUS_T_PHI, method).value
    if combo == RootCombo.T:
        return lambda t: estimate_pressure(path, offset, n, q, t, Combo.Q_PHI_MINUS_T_PSI, method).value
    return lambda t: -estimate_pressure(path, offset, n, 0.0, t, Combo.T_PSI_ONLY, method).value


def _check_mean_condition(model: EnvModel, combo: RootCombo) -> None:
    c_psi, c_phi = mean_conditions(model)
    if combo == RootCombo.CAL_T and c_phi <= 0:
        raise InvalidModelError(f"calT root needs c_phi > 0, got {c_phi:.6g}", failed_checks=["potential_mean"])
    if combo in (RootCombo.T, RootCombo.BOWEN) and c_psi <= 0:
        raise InvalidModelError(f"{combo.value} root needs c_psi > 0, got {c_psi:.6g}",
                                failed_checks=["contraction_mean"])


def pressure_root(path: EnvPath, q: float = 0.0, combo: RootCombo = RootCombo.CAL_T,
                  n: Optional[int] = None, tol: Optional[float] = None, offset: int = 0,
                  method: PressureMethod = PressureMethod.EIGEN) -> float:
    """
    Solve P(...) = 0 for t by bracket expansion and bisection.

    Args:
        path: Environment path
        q: Fixed parameter (ignored for bowen)
        combo: calT, T or bowen
        n: Pressure depth (default Config.PRESSURE_DEPTH)
        tol: Bracket width and residual target (default Config.ROOT_TOL)
        offset: Start position
        method: Finite-n pressure estimator

    Returns:
        Root t

    Raises:
        BracketFailureError: |t| would exceed Config.BRACKET_LIMIT
        NonConvergenceError: Config.ROOT_MAX_STEPS bisections without meeting tol
    """
    n = n or Config.PRESSURE_DEPTH
    tol = Config.ROOT_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    combo = RootCombo(combo)
    _check_mean_condition(path.model, combo)
    f = _root_function(path, q, combo, n, offset, PressureMethod(method))

    lo, hi = -1.0, 1.0
    f_lo, f_hi = f(lo), f(hi)
    while f_lo > 0:
        lo *= 2.0
        if abs(lo) > Config.BRACKET_LIMIT:
            logger.error(f"Bracket expansion for {combo.value}(q={q}) passed {Config.BRACKET_LIMIT:g}")
            raise BracketFailureError(f"no sign change for {combo.value} at q={q} down to t={lo:g}")
        f_lo = f(lo)
    while f_hi < 0:
        hi *= 2.0
        if abs(hi) > Config.BRACKET_LIMIT:
            logger.error(f"Bracket expansion for {combo.value}(q={q}) passed {Config.BRACKET_LIMIT:g}")
            raise BracketFailureError(f"no sign change for {combo.value} at q={q} up to t={hi:g}")
        f_hi = f(hi)

    mid = 0.5 * (lo + hi)
    f_mid = f(mid)
    for steps in range(Config.ROOT_MAX_STEPS):
        if f_mid == 0.0 or (hi - lo <= tol and abs(f_mid) <= tol):
            logger.debug(f"{combo.value}(q={q}) = {mid:.12g} after {steps} bisection steps")
            return mid
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        logger.debug(f"{combo.value} q={q}: step {steps + 1} bracket [{lo:.12g}, {hi:.12g}] P={f_mid:.3e}")
    if f_mid == 0.0 or (hi - lo <= tol and abs(f_mid) <= tol):
        return mid
    logger.error(f"{combo.value}(q={q}) not converged after {Config.ROOT_MAX_STEPS} bisections: "
                 f"bracket {hi - lo:.3e}, P={f_mid:.3e}")
    raise NonConvergenceError(f"{combo.value} root at q={q} not within {tol:g} after "
                              f"{Config.ROOT_MAX_STEPS} bisections", residual=abs(f_mid))


def rebind_path(path: EnvPath, model: EnvModel) -> EnvPath:
    """Same environment states under a model with the same chain (e.g. a shifted potential)."""
    return EnvPath(model=model, states=path.states, seed=path.seed,
                   stream_label=path.stream_label, start=path.start)


def estimate_phi_pressure(model: EnvModel, n: int, samples: Optional[int] = None,
                          path: Optional[EnvPath] = None,
                          method: PressureMethod = PressureMethod.EIGEN) -> float:
    """Mean of P_n(Phi) over sampled paths (or along one given path)."""
    if path is not None:
        return estimate_pressure(rebind_path(path, model), 0, n, combo=Combo.PHI_ONLY, method=method).value
    samples = samples or Config.NORMALIZE_SAMPLES
    if len(model.states) == 1:
        samples = 1
    horizon = n + Config.PRESSURE_BURN_IN + Config.EIGEN_RESOLUTION
    values = []
    for i in range(samples):
        sample = sample_path(model, horizon=horizon, stream_label=f"normalize-{i}", strict=False)
        values.append(estimate_pressure(sample, 0, n, combo=Combo.PHI_ONLY, method=method).value)
    return float(np.mean(values))


def normalize_phi(model: EnvModel, n: Optional[int] = None, samples: Optional[int] = None,
                  path: Optional[EnvPath] = None, method: PressureMethod = PressureMethod.EIGEN) -> EnvModel:
    """
    Shift phi by -P(Phi) so that the estimated pressure is zero.

    The default eigenvalue-product estimate is the one pressure_root uses,
    so calT(0) = -1 holds at the same n.

    Args:
        model: Valid model
        n: Pressure depth (default Config.PRESSURE_DEPTH)
        samples: Number of sampled paths averaged (default Config.NORMALIZE_SAMPLES)
        path: Estimate along this path instead of sampling
        method: Finite-n pressure estimator

    Returns:
        Model with every phi value shifted by the same constant

    Raises:
        NormalizationBreaksAssumptionError: the shifted potential has c_phi <= 0
    """
    n = n or Config.PRESSURE_DEPTH
    ensure_valid(model)
    p_hat = estimate_phi_pressure(model, n, samples, path, method)
    shifted = model.with_phi_shift(-p_hat)
    report = validate_model(shifted)
    if not report.passed:
        logger.error(f"Normalization by {-p_hat:.6g} breaks {report.failed_checks()} (c_phi={report.c_phi:.6g})")
        raise NormalizationBreaksAssumptionError(
            f"shifting phi by {-p_hat:.6g} gives c_phi = {report.c_phi:.6g}; failed {report.failed_checks()}")

    residue = estimate_phi_pressure(shifted, n, samples, path, method)
    if abs(residue) > Config.NORMALIZE_RESIDUE:
        logger.warning(f"Pressure after normalization is {residue:.3e} (above {Config.NORMALIZE_RESIDUE:g})")
    logger.info(f"Normalized phi of {model.digest} by {-p_hat:.12g} -> {shifted.digest}")
    return shifted
