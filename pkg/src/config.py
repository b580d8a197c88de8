"""
Configuration module for the inverse-measure toolkit
"""
import os
import logging

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Defaults for sampling, pressure, RPF, inverse-measure and spectrum runs"""

    # Model files
    MODEL_FORMAT: str = "inversemf/1"
    TOOL_VERSION: str = "0.1.0"
    DEFAULT_SEED: int = 20240611

    # Branch geometry
    DERIVATIVE_BOUND: float = 20.0  # B in e^{-B} <= |T'| <= e^{B}
    DEPTH_GUARD: float = 1e-300  # smallest admissible cylinder diameter
    EXTREMA_TOL: float = 1e-12
    EXTREMA_MAX_DEPTH: int = 200

    # Environment paths
    PATH_HORIZON: int = 256
    MIXING_CAP: int = 32

    # Pressure and roots
    PRESSURE_DEPTH: int = 16
    ROOT_TOL: float = 1e-10
    ROOT_MAX_STEPS: int = 200
    PRESSURE_BURN_IN: int = 24  # pullback steps beyond the window before lambdas are kept
    EIGEN_RESOLUTION: int = 8
    BRACKET_LIMIT: float = 1e3
    REDUCTION_BLOCK: int = 4096
    NORMALIZE_SAMPLES: int = 4
    NORMALIZE_RESIDUE: float = 1e-3

    # RPF iteration
    RPF_ITERS: int = 40
    RPF_RESIDUAL_BOUND: float = 1e-8

    # Inverse measure / analysis
    GEN_DEPTH: int = 10
    LQ_OFFSETS: int = 4
    LOCAL_DIM_WINDOW: int = 2
    MAX_LOOKAHEAD: int = 6
    EPS_SCHEDULE_SCALE: float = 4.0

    # Resources
    THREADS: int = 1
    MEMORY_GUARD: int = 10**8

    # File Paths
    OUTPUT_DIR: str = "output"
    LOG_LEVEL: str = "INFO"

    @classmethod
    def get_threads(cls) -> int:
        """Get worker count from environment or default"""
        value = os.getenv("INVERSEMF_THREADS")
        if not value:
            return cls.THREADS
        try:
            return max(1, int(value))
        except ValueError:
            logging.getLogger(__name__).warning(f"Ignoring invalid INVERSEMF_THREADS={value!r}")
            return cls.THREADS

    @classmethod
    def get_memory_guard(cls) -> int:
        """Get the cylinder-count cap from environment or default"""
        return int(float(os.getenv("INVERSEMF_MEMORY_GUARD", cls.MEMORY_GUARD)))

    @classmethod
    def get_output_dir(cls) -> str:
        """Get default output directory"""
        return os.getenv("INVERSEMF_OUTPUT_DIR", cls.OUTPUT_DIR)

    @classmethod
    def get_log_level(cls) -> str:
        """Get logging level name"""
        return os.getenv("INVERSEMF_LOG_LEVEL", cls.LOG_LEVEL).upper()
