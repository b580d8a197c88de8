"""
Random weak Gibbs measure: RPF operator, dual power iteration and the
weak-Gibbs diagnostic.

Pullback step at position k, resolution n: for every admissible pair
(s, u) with u a depth-n word at k+1, the mass of the depth-n word
s u[:n-1] collects exp(phi_hat(s, u)) * rho_{k+1}(u), where phi_hat is the
sup of phi_s over the depth-(n+1) cylinder s u. The step's total is the
eigenvalue estimate lambda(sigma^k omega).
"""

import logging
import math
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.config import Config
from src.dynamics import (
    EnvPath,
    Potential,
    Word,
    birkhoff_arrays,
    cylinder_arrays,
    variation_modulus,
    word_array,
)
from src.errors import HorizonTooShortError, NonConvergenceError
from src.utils import format_word, write_csv

logger = logging.getLogger(__name__)


def prefix_ids(words: np.ndarray, n: int) -> np.ndarray:
    """Group index of words[:, :n] for a lexicographic word array."""
    if n == 0 or words.shape[0] == 0:
        return np.zeros(words.shape[0], dtype=np.int64)
    change = np.any(words[1:, :n] != words[:-1, :n], axis=1)
    return np.concatenate([[0], np.cumsum(change)]).astype(np.int64)


def group_starts(keys: np.ndarray) -> np.ndarray:
    """Start indices of runs of equal keys."""
    if keys.size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate([[0], np.nonzero(np.diff(keys))[0] + 1]).astype(np.int64)


class FunctionTable(BaseModel):
    """A function on the depth-`depth` cylinders at `offset`, aligned with word_array."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    offset: int
    depth: int
    words: np.ndarray
    values: np.ndarray

    @classmethod
    def constant(cls, path: EnvPath, offset: int, depth: int, value: float = 1.0) -> "FunctionTable":
        words = word_array(path, offset, depth)
        return cls(offset=offset, depth=depth, words=words, values=np.full(words.shape[0], float(value)))


def _preimage_pairs(path: EnvPath, k: int, n: int, alpha: float = 0.0,
                    beta: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Admissible pairs (s, u) at position k with u of depth n at k+1.

    The potential is alpha psi + beta phi, maximized over the depth-(n+1)
    cylinder s u; the default is phi.

    Returns:
        (u_words, pair_s (0-based), pair_u (row index), potential_hat), pairs in
        lexicographic order of s u
    """
    u_words, lo, hi = cylinder_arrays(path, k + 1, n)
    adj = path.adjacency_at(k)
    allowed = adj[:, u_words[:, 0].astype(np.int64) - 1]
    pair_s, pair_u = np.nonzero(allowed)
    params = path.model.branch_arrays[path.states[k]]
    c = params["c"][pair_s]
    constant = beta * params["phi_value"][pair_s]
    if alpha != 0.0:
        constant = constant + alpha * (np.log(params["b"] - params["a"]) - np.log1p(params["c"]))[pair_s]
    varies = (alpha != 0.0 and np.any(c)) or (beta != 0.0 and np.any(params["phi_slope"]))
    if not varies:
        return u_words, pair_s, pair_u, constant
    z_lo, z_hi = lo[pair_u], hi[pair_u]
    y_lo = z_lo / (1.0 + c - c * z_lo)
    y_hi = z_hi / (1.0 + c - c * z_hi)
    slope = beta * params["phi_slope"][pair_s]
    v_lo = slope * y_lo + 2.0 * alpha * np.log1p(c * y_lo)
    v_hi = slope * y_hi + 2.0 * alpha * np.log1p(c * y_hi)
    return u_words, pair_s, pair_u, constant + np.maximum(v_lo, v_hi)


def rpf_apply(path: EnvPath, offset: int, h: FunctionTable) -> FunctionTable:
    """
    Transfer operator (L h)(v) = sum over s with s v admissible of exp(phi(s v)) h(s v).

    Args:
        path: Environment path
        offset: Position of h
        h: Function on depth-m cylinders at offset

    Returns:
        Function on depth-max(m-1, 1) cylinders at offset+1
    """
    if h.offset != offset:
        raise ValueError(f"function table lives at offset {h.offset}, not {offset}")
    expected = word_array(path, offset, h.depth)
    if h.words.shape != expected.shape or h.values.shape[0] != expected.shape[0]:
        raise ValueError(f"function table does not match the depth-{h.depth} words at offset {offset}")
    n = max(h.depth - 1, 1)
    u_words, pair_s, pair_u, phi_hat = _preimage_pairs(path, offset, n)
    if h.depth == 1:
        h_vals = h.values[pair_s]
    else:
        h_vals = h.values
    out = np.bincount(pair_u, weights=np.exp(phi_hat) * h_vals, minlength=u_words.shape[0])
    return FunctionTable(offset=offset + 1, depth=n, words=u_words, values=out)


def _dual_step(path: EnvPath, k: int, n: int, rho: np.ndarray, alpha: float = 0.0,
               beta: float = 1.0) -> np.ndarray:
    """Unnormalized (L_k)^* rho on depth-n words at k."""
    u_words, pair_s, pair_u, phi_hat = _preimage_pairs(path, k, n, alpha, beta)
    ids = prefix_ids(u_words, n - 1)
    keys = pair_s.astype(np.int64) * (int(ids[-1]) + 1) + ids[pair_u]
    return np.add.reduceat(np.exp(phi_hat) * rho[pair_u], group_starts(keys))


def _continuation_mass(path: EnvPath, pos: int, n: int, rho: np.ndarray) -> np.ndarray:
    """For every letter a at pos-1, the rho-mass of depth-n words at pos that may follow a."""
    words = word_array(path, pos, n)
    adj = path.adjacency_at(pos - 1).astype(np.float64)
    per_letter = np.bincount(words[:, 0].astype(np.int64) - 1, weights=rho, minlength=adj.shape[1])
    return adj @ per_letter


class MeasureTable(BaseModel):
    """mu_omega of every depth-n cylinder at offset, lexicographic."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    depth: int = Field(..., ge=1)
    offset: int = Field(0, ge=0)
    words: np.ndarray
    masses: np.ndarray
    digest: str = Field("", description="Model digest")
    log_lambdas: List[float] = Field(default_factory=list, description="log lambda at offset, offset+1, ... (at least depth entries)")
    boundaries: List[float] = Field(default_factory=list, description="-min log continuation mass after letter j, j = 1..depth")
    residual: float = Field(0.0, description="Eigen-defect residual of the run")

    @property
    def log_normalizer(self) -> float:
        """Sum of log lambda over the first depth steps."""
        return float(sum(self.log_lambdas[:self.depth]))

    @property
    def boundary_allowance(self) -> float:
        return self.boundaries[self.depth - 1] if len(self.boundaries) >= self.depth else 0.0

    @cached_property
    def word_index(self) -> Dict[Tuple[int, ...], int]:
        return {tuple(int(s) for s in row): i for i, row in enumerate(self.words)}

    @property
    def entries(self) -> Dict[Word, float]:
        return {Word(letters=key, base_offset=self.offset): float(self.masses[i])
                for key, i in self.word_index.items()}

    def aggregate(self, n: int) -> "MeasureTable":
        """Table of the depth-n prefixes (n <= depth)."""
        if not 1 <= n <= self.depth:
            raise ValueError(f"aggregate depth {n} outside 1..{self.depth}")
        if n == self.depth:
            return self
        starts = group_starts(prefix_ids(self.words, n))
        return MeasureTable(depth=n, offset=self.offset, words=self.words[starts, :n],
                            masses=np.add.reduceat(self.masses, starts), digest=self.digest,
                            log_lambdas=self.log_lambdas, boundaries=self.boundaries,
                            residual=self.residual)

    def mass_of(self, word: Word) -> float:
        """mu([word]) for any word up to the table depth."""
        if word.base_offset != self.offset:
            raise ValueError(f"word starts at {word.base_offset}, table at {self.offset}")
        n = len(word)
        if n == 0:
            return float(self.masses.sum())
        if n > self.depth:
            raise ValueError(f"word longer than table depth {self.depth}")
        table = self.aggregate(n)
        idx = table.word_index.get(tuple(word.letters))
        return 0.0 if idx is None else float(table.masses[idx])

    def check_invariants(self, tol: float = 1e-12) -> List[str]:
        """Problems with positivity or normalization."""
        problems = []
        if np.any(self.masses <= 0):
            problems.append(f"{int(np.sum(self.masses <= 0))} non-positive masses")
        total = float(self.masses.sum())
        if abs(total - 1.0) > tol:
            problems.append(f"masses sum to {total!r}")
        return problems

    def to_csv(self, path: Union[str, Path]) -> Path:
        rows = ((format_word(w, self.offset), float(m)) for w, m in zip(self.words, self.masses))
        comment = f"depth={self.depth},offset={self.offset},model_hash={self.digest}"
        return write_csv(Path(path), comment, ["word", "mass"], rows)


class RpfResult(BaseModel):
    """Output of rpf_measure."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    lambdas: List[float] = Field(..., description="lambda(sigma^k omega) for k = offset, offset+1, ...")
    table: MeasureTable
    residual: float
    iters: int

    @property
    def log_lambda_running_mean(self) -> List[float]:
        """(1/k) sum_{i<k} log lambda(sigma^i omega)."""
        logs = np.log(np.asarray(self.lambdas))
        return (np.cumsum(logs) / np.arange(1, logs.size + 1)).tolist()


def _pullback(path: EnvPath, offset: int, depth: int, iters: int, rho: np.ndarray,
              track_boundary: bool = False):
    """Returns (rho at offset, lambdas in position order, boundary terms for positions offset+1..offset+depth)."""
    lambdas: List[float] = []
    boundaries: List[float] = []
    top = offset + iters
    for k in range(top - 1, offset - 1, -1):
        if track_boundary and k + 1 <= offset + depth:
            cont = _continuation_mass(path, k + 1, depth, rho)
            boundaries.append(float(-np.log(cont.min())))
        raw = _dual_step(path, k, depth, rho)
        lam = float(raw.sum())
        rho = raw / lam
        lambdas.append(lam)
        logger.debug(f"pullback k={k}: lambda={lam:.15g}")
    lambdas.reverse()
    boundaries.reverse()
    return rho, lambdas, boundaries


def log_eigen_product(path: EnvPath, offset: int, n: int, alpha: float = 0.0, beta: float = 1.0,
                      resolution: Optional[int] = None, burn_in: Optional[int] = None) -> float:
    """
    Sum of log lambda over positions offset .. offset+n-1 for alpha psi + beta phi.

    The uniform measure on depth-`resolution` words is pulled back from
    offset+n+burn_in; only the normalizers of the last n steps are kept.
    Locally constant potentials are exact at resolution 1. The burn-in
    shrinks to what the horizon allows.

    Raises:
        HorizonTooShortError: the path ends before offset + n + 1
    """
    if n < 1:
        raise ValueError(f"window n must be >= 1, got {n}")
    room = path.horizon - offset - n
    if offset < 0 or room < 1:
        raise HorizonTooShortError(f"eigenvalue product at offset {offset} with n={n}", required=offset + n + 1)
    if resolution is None:
        resolution = 1 if path.model.is_locally_constant else Config.EIGEN_RESOLUTION
    resolution = max(1, min(resolution, room))
    burn_in = Config.PRESSURE_BURN_IN if burn_in is None else burn_in
    burn = max(0, min(burn_in, room - resolution))
    if burn < burn_in:
        logger.debug(f"Burn-in cut to {burn} steps by horizon {path.horizon}")

    top = offset + n + burn
    n_top = word_array(path, top, resolution).shape[0]
    rho = np.full(n_top, 1.0 / n_top)
    total = 0.0
    for k in range(top - 1, offset - 1, -1):
        raw = _dual_step(path, k, resolution, rho, alpha, beta)
        lam = float(raw.sum())
        rho = raw / lam
        if k < offset + n:
            total += math.log(lam)
    return total


def rpf_measure(path: EnvPath, offset: int = 0, depth: Optional[int] = None,
                iters: Optional[int] = None, residual_bound: Optional[float] = None) -> RpfResult:
    """
    Eigenmeasure masses of depth-n cylinders by dual power iteration.

    The uniform measure at offset+iters is pulled back to offset, normalized
    each step. A second pullback from a tilted initial vector measures the
    horizon dependence of the result.

    Args:
        path: Environment path with horizon >= offset + depth + iters
        offset: Target position
        depth: Cylinder depth of the table (default Config.GEN_DEPTH)
        iters: Number of pullback steps, >= depth (default Config.RPF_ITERS)
        residual_bound: Acceptance bound (default Config.RPF_RESIDUAL_BOUND)

    Returns:
        RpfResult

    Raises:
        NonConvergenceError: residual above the bound
    """
    depth = depth or Config.GEN_DEPTH
    iters = iters or Config.RPF_ITERS
    bound = Config.RPF_RESIDUAL_BOUND if residual_bound is None else residual_bound
    if iters < depth:
        raise ValueError(f"iters ({iters}) must be >= depth ({depth})")
    if offset + depth + iters > path.horizon:
        raise HorizonTooShortError(f"rpf_measure depth {depth} iters {iters} at offset {offset}",
                                   required=offset + depth + iters)

    top = offset + iters
    n_top = word_array(path, top, depth).shape[0]
    flat = np.full(n_top, 1.0 / n_top)
    rho, lambdas, boundaries = _pullback(path, offset, depth, iters, flat, track_boundary=True)

    tilt = 1.0 + np.arange(n_top) / n_top
    rho_alt, _, _ = _pullback(path, offset + 1, depth, iters - 1, tilt / tilt.sum())
    # one more step from the alternative measure at offset+1
    applied_alt = _dual_step(path, offset, depth, rho_alt)
    residual = float(np.max(np.abs(lambdas[0] * rho - applied_alt)))

    table = MeasureTable(depth=depth, offset=offset, words=word_array(path, offset, depth), masses=rho,
                         digest=path.model.digest, log_lambdas=np.log(lambdas).tolist(),
                         boundaries=boundaries, residual=residual)
    logger.info(f"RPF measure at offset {offset}, depth {depth}: residual {residual:.3e}, "
                f"mean log lambda {np.mean(np.log(lambdas)):.3e}")
    if residual > bound:
        logger.error(f"RPF residual {residual:.3e} above bound {bound:.1e} after {iters} iterations")
        raise NonConvergenceError(f"eigen-defect residual {residual:.3e} > {bound:.1e}", residual=residual)
    return RpfResult(lambdas=lambdas, table=table, residual=residual, iters=iters)


class GibbsDiagnostic(BaseModel):
    """Weak-Gibbs comparison of log masses with sup Birkhoff sums."""
    depth: int
    defect: float = Field(..., description="max |log mass - (S_n phi sup - sum log lambda)| / n")
    epsilon: float = Field(..., description="variation modulus eps(phi, n)")
    allowance: float = Field(..., description="(boundary + log(1 + residual)) / n")
    passed: bool
    fatal: bool = Field(False, description="a non-positive mass was found")
    worst_word: str = ""
    detail: str = ""


def gibbs_diagnostic(table: MeasureTable, path: EnvPath) -> GibbsDiagnostic:
    """
    Check exp(S phi - n eps) <= mu([v]) <= exp(S phi + n eps) on every cylinder of the table.

    Zero or negative masses are fatal.
    """
    n = table.depth
    eps = variation_modulus(path.model, n, Potential.PHI)
    allowance = (table.boundary_allowance + math.log1p(table.residual)) / n
    if np.any(table.masses <= 0):
        bad = int(np.argmin(table.masses))
        logger.error(f"Measure table has a non-positive mass at {format_word(table.words[bad], table.offset)}")
        return GibbsDiagnostic(depth=n, defect=math.inf, epsilon=eps, allowance=allowance, passed=False,
                               fatal=True, worst_word=format_word(table.words[bad], table.offset),
                               detail="non-positive mass")
    phi_sup, _ = birkhoff_arrays(path, table.offset, table.words, Potential.PHI)
    gaps = np.abs(np.log(table.masses) - (phi_sup - table.log_normalizer)) / n
    worst = int(np.argmax(gaps))
    defect = float(gaps[worst])
    passed = defect <= eps + allowance + 1e-12
    if not passed:
        logger.warning(f"Weak-Gibbs defect {defect:.3e} exceeds {eps + allowance:.3e} at depth {n}")
    return GibbsDiagnostic(depth=n, defect=defect, epsilon=eps, allowance=allowance, passed=passed,
                           worst_word=format_word(table.words[worst], table.offset),
                           detail=f"bound {eps + allowance:.6g}")
