"""
Pydantic models for random environments.

Defines schemas for:
- Branch geometry and potential profiles of a single symbol
- Environment states and the Markov environment model (model files)
- Sampled environment paths and words along them
- Validation reports
"""

import hashlib
import json
import re
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.config import Config
from src.errors import StructuralError
from src.utils import format_word, parse_word

_EDGE_KEY = re.compile(r"^\s*(\d+)\s*->\s*(\d+)\s*$")


class MapKind(str, Enum):
    """Branch map families."""
    AFFINE = "affine"
    MOEBIUS = "moebius"


class PotentialKind(str, Enum):
    """Potential profile families."""
    CONSTANT = "constant"
    LIPSCHITZ = "lipschitz"


class Potential(str, Enum):
    """Which potential a Birkhoff sum runs over."""
    PSI = "psi"
    PHI = "phi"


class Severity(str, Enum):
    """Outcome class of a validation check."""
    ERROR = "error"
    WARNING = "warning"


class PotentialProfile(BaseModel):
    """phi(y) = value, or value + slope*y on the normalized branch coordinate y in [0,1]."""
    model_config = ConfigDict(frozen=True)

    kind: PotentialKind = Field(PotentialKind.CONSTANT, description="Profile family")
    value: float = Field(..., description="Value at the left end of the branch")
    slope: float = Field(0.0, description="Slope in the normalized coordinate")

    @model_validator(mode="after")
    def _check_finite(self):
        if not (np.isfinite(self.value) and np.isfinite(self.slope)):
            raise StructuralError("potential values must be finite")
        if self.kind == PotentialKind.CONSTANT and self.slope != 0.0:
            raise StructuralError("constant potential profile cannot carry a slope")
        return self

    def at(self, y):
        """Evaluate on normalized coordinates (scalar or array)."""
        return self.value + self.slope * y

    @property
    def sup(self) -> float:
        return self.value + max(0.0, self.slope)

    @property
    def inf(self) -> float:
        return self.value + min(0.0, self.slope)

    def shifted(self, delta: float) -> "PotentialProfile":
        return PotentialProfile(kind=self.kind, value=self.value + delta, slope=self.slope)


class BranchSpec(BaseModel):
    """
    One symbol of an environment state.

    The expanding map T sends [a, b] onto [0, 1] as the composition of the
    normalization y = (x-a)/(b-a) with y -> y(1+c)/(1+cy). Both families are
    increasing, so cylinder order equals letter order.
    """
    model_config = ConfigDict(frozen=True)

    a: float = Field(..., description="Left end of the branch interval")
    b: float = Field(..., description="Right end of the branch interval")
    map_kind: MapKind = Field(MapKind.AFFINE, description="Branch map family")
    c: float = Field(0.0, description="Moebius parameter, |c| < 1")
    phi: PotentialProfile = Field(..., description="Potential on this branch")

    @model_validator(mode="after")
    def _check_shape(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise StructuralError(f"branch interval [{self.a}, {self.b}] is not a nontrivial subinterval of [0,1]")
        if not abs(self.c) < 1.0:
            raise StructuralError(f"moebius parameter {self.c} must satisfy |c| < 1")
        if self.map_kind == MapKind.AFFINE and self.c != 0.0:
            raise StructuralError("affine branch cannot carry a moebius parameter")
        return self

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def is_locally_constant(self) -> bool:
        return self.c == 0.0 and self.phi.kind == PotentialKind.CONSTANT

    def normalized_preimage(self, z):
        """Inverse of the normalized map: z -> z / (1 + c - c z)."""
        return z / (1.0 + self.c - self.c * z)

    def inverse(self, z):
        """Inverse branch g: [0,1] -> [a,b]."""
        return self.a + (self.b - self.a) * self.normalized_preimage(z)

    def psi_at(self, y):
        """-log|T'| at normalized coordinate y."""
        return np.log(self.b - self.a) - np.log1p(self.c) + 2.0 * np.log1p(self.c * y)

    @property
    def psi_sup(self) -> float:
        return float(max(self.psi_at(0.0), self.psi_at(1.0)))

    @property
    def psi_inf(self) -> float:
        return float(min(self.psi_at(0.0), self.psi_at(1.0)))

    @property
    def psi_slope(self) -> float:
        """Lipschitz constant of psi in the normalized coordinate."""
        return 2.0 * abs(self.c) / (1.0 - abs(self.c))

    @property
    def distortion(self) -> float:
        """Largest derivative of the normalized preimage map."""
        return max(1.0 + self.c, 1.0 / (1.0 + self.c))


class EnvState(BaseModel):
    """A state of the environment chain: alphabet and branches."""
    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0, description="State index")
    alphabet_size: int = Field(..., ge=1, description="Number of symbols l(omega)")
    branches: Tuple[BranchSpec, ...] = Field(..., description="Branches ordered by symbol")

    @model_validator(mode="after")
    def _check_alphabet(self):
        if self.alphabet_size != len(self.branches):
            raise StructuralError(
                f"state {self.id}: alphabet_size {self.alphabet_size} != {len(self.branches)} branches")
        return self

    @property
    def phi_values(self) -> Tuple[PotentialProfile, ...]:
        return tuple(br.phi for br in self.branches)


class EnvModel(BaseModel):
    """Finite-state Markov environment with per-edge admissibility matrices."""
    model_config = ConfigDict(frozen=True)

    format: str = Field(Config.MODEL_FORMAT, description="Schema version")
    name: str = Field("", description="Human readable model name")
    states: Tuple[EnvState, ...] = Field(..., min_length=1)
    transition: Tuple[Tuple[float, ...], ...] = Field(..., description="Row-stochastic matrix Q")
    admissibility: Dict[str, Tuple[Tuple[int, ...], ...]] = Field(..., description='Edge "k->k2" to 0/1 matrix')
    seed: int = Field(Config.DEFAULT_SEED, ge=0, lt=2**64)

    @field_validator("format")
    @classmethod
    def _check_format(cls, v: str) -> str:
        if v != Config.MODEL_FORMAT:
            raise StructuralError(f"unsupported model format {v!r}, expected {Config.MODEL_FORMAT!r}")
        return v

    @model_validator(mode="after")
    def _check_structure(self):
        n_states = len(self.states)
        for k, st in enumerate(self.states):
            if st.id != k:
                raise StructuralError(f"state ids must be 0..{n_states - 1} in order, got {st.id} at {k}")
        q = np.asarray(self.transition, dtype=float)
        if q.shape != (n_states, n_states):
            raise StructuralError(f"transition must be {n_states}x{n_states}, got {q.shape}")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise StructuralError("transition entries must be finite and non-negative")
        edges = {}
        for key in self.admissibility:
            match = _EDGE_KEY.match(key)
            if not match:
                raise StructuralError(f"admissibility key {key!r} is not of the form 'k->k2'")
            k, k2 = int(match.group(1)), int(match.group(2))
            if k >= n_states or k2 >= n_states:
                raise StructuralError(f"admissibility key {key!r} names an unknown state")
            edges[(k, k2)] = key
        for k in range(n_states):
            for k2 in range(n_states):
                if q[k, k2] <= 0:
                    continue
                if (k, k2) not in edges:
                    raise StructuralError(f"missing admissibility matrix for edge {k}->{k2}")
                mat = np.asarray(self.admissibility[edges[(k, k2)]])
                shape = (self.states[k].alphabet_size, self.states[k2].alphabet_size)
                if mat.shape != shape:
                    raise StructuralError(f"admissibility {k}->{k2} has shape {mat.shape}, expected {shape}")
                if not np.all((mat == 0) | (mat == 1)):
                    raise StructuralError(f"admissibility {k}->{k2} must be 0/1")
                if np.any(mat.sum(axis=1) == 0):
                    raise StructuralError(f"admissibility {k}->{k2} has an all-zero row")
                if np.any(mat.sum(axis=0) == 0):
                    raise StructuralError(f"admissibility {k}->{k2} has an all-zero column")
        return self

    @cached_property
    def transition_matrix(self) -> np.ndarray:
        return np.asarray(self.transition, dtype=np.float64)

    @cached_property
    def adjacency_table(self) -> Dict[Tuple[int, int], np.ndarray]:
        table = {}
        for key, mat in self.admissibility.items():
            match = _EDGE_KEY.match(key)
            arr = np.asarray(mat, dtype=np.int8)
            arr.setflags(write=False)
            table[(int(match.group(1)), int(match.group(2)))] = arr
        return table

    def adjacency(self, k: int, k2: int) -> np.ndarray:
        """0/1 matrix A for a transition k -> k2 (read-only)."""
        try:
            return self.adjacency_table[(k, k2)]
        except KeyError:
            raise StructuralError(f"no admissibility matrix for edge {k}->{k2}")

    @cached_property
    def branch_arrays(self) -> Tuple[Dict[str, np.ndarray], ...]:
        """Per-state arrays a, b, c, phi value, phi slope indexed by symbol-1."""
        out = []
        for st in self.states:
            out.append({
                "a": np.array([br.a for br in st.branches]),
                "b": np.array([br.b for br in st.branches]),
                "c": np.array([br.c for br in st.branches]),
                "phi_value": np.array([br.phi.value for br in st.branches]),
                "phi_slope": np.array([br.phi.slope for br in st.branches]),
            })
        return tuple(out)

    @cached_property
    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, first 16 hex digits."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def is_locally_constant(self) -> bool:
        return all(br.is_locally_constant for st in self.states for br in st.branches)

    @property
    def max_alphabet(self) -> int:
        return max(st.alphabet_size for st in self.states)

    def with_phi_shift(self, delta: float) -> "EnvModel":
        """Copy of the model with every potential shifted by a constant."""
        data = self.model_dump(mode="json")
        for st in data["states"]:
            for br in st["branches"]:
                br["phi"]["value"] += float(delta)
        return EnvModel.model_validate(data)

    def with_seed(self, seed: int) -> "EnvModel":
        return EnvModel.model_validate({**self.model_dump(mode="json"), "seed": int(seed)})


class EnvPath(BaseModel):
    """Finite sample (omega, sigma omega, ...) of the environment chain."""
    model_config = ConfigDict(frozen=True)

    model: EnvModel
    states: Tuple[int, ...] = Field(..., min_length=1, description="State ids, length horizon+1")
    seed: int = Field(..., description="Seed that produced the path")
    stream_label: str = Field("path", description="Random stream label")
    start: int = Field(0, ge=0, description="Absolute index of the first entry")

    @model_validator(mode="after")
    def _check_states(self):
        ids = np.asarray(self.states)
        n_states = len(self.model.states)
        if ids.min() < 0 or ids.max() >= n_states:
            raise StructuralError("path contains unknown state ids")
        if ids.size > 1:
            q = self.model.transition_matrix
            if np.any(q[ids[:-1], ids[1:]] <= 0):
                raise StructuralError("path uses a transition with zero probability")
        return self

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    @cached_property
    def state_array(self) -> np.ndarray:
        arr = np.asarray(self.states, dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def fingerprint(self) -> str:
        digest = hashlib.sha256(self.model.digest.encode("utf-8"))
        digest.update(self.state_array.tobytes())
        return digest.hexdigest()[:16]

    def state_at(self, k: int) -> EnvState:
        return self.model.states[self.states[k]]

    def alphabet_at(self, k: int) -> int:
        return self.state_at(k).alphabet_size

    def adjacency_at(self, k: int) -> np.ndarray:
        """A(sigma^k omega), shape l(k) x l(k+1)."""
        return self.model.adjacency(self.states[k], self.states[k + 1])

    def segment_key(self, offset: int, n: int) -> Tuple[str, Tuple[int, ...]]:
        """Cache key for data depending only on states[offset:offset+n]."""
        return self.model.digest, tuple(self.states[offset:offset + n])


class Word(BaseModel):
    """Admissible-candidate word v0 v1 ... starting at base_offset (1-based symbols)."""
    model_config = ConfigDict(frozen=True)

    letters: Tuple[int, ...] = Field(default=(), description="1-based symbols")
    base_offset: int = Field(0, ge=0, description="Path position of the first letter")

    def __len__(self) -> int:
        return len(self.letters)

    @classmethod
    def of(cls, *letters: int, offset: int = 0) -> "Word":
        return cls(letters=tuple(int(s) for s in letters), base_offset=offset)

    @classmethod
    def from_text(cls, text: str) -> "Word":
        """Parse ``2,1,2@0``."""
        letters, offset = parse_word(text)
        return cls(letters=letters, base_offset=offset)

    def to_text(self) -> str:
        return format_word(self.letters, self.base_offset)

    def extend(self, *letters: int) -> "Word":
        return Word(letters=self.letters + tuple(int(s) for s in letters), base_offset=self.base_offset)

    def prefix(self, n: int) -> "Word":
        return Word(letters=self.letters[:n], base_offset=self.base_offset)

    @property
    def end(self) -> int:
        """Path position right after the last letter."""
        return self.base_offset + len(self.letters)


class CheckResult(BaseModel):
    """One validation check."""
    name: str = Field(..., description="Check identifier")
    passed: bool = Field(..., description="Whether the check passed")
    severity: Severity = Field(Severity.ERROR, description="error checks gate downstream use")
    detail: str = Field("", description="Human readable detail")
    value: Optional[float] = Field(None, description="Numeric value behind the check")


class ValidationReport(BaseModel):
    """Result of validate_model."""
    digest: str = Field(..., description="Model digest")
    checks: List[CheckResult] = Field(default_factory=list)
    c_psi: float = Field(..., description="-sum pi(k) max sup psi")
    c_phi: float = Field(..., description="-sum pi(k) max sup phi")
    stationary: List[float] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == Severity.ERROR)

    def failed_checks(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed and c.severity == Severity.ERROR]

    def warnings(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed and c.severity == Severity.WARNING]
