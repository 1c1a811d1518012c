"""
Configuration management for Dayflow
Loads settings from environment variables or a .env file
"""

import os
import logging
from pathlib import Path
from dotenv import load_dotenv

# Load .env file from project root (for local development)
project_root = Path(__file__).parent.parent
env_path = project_root / '.env'
load_dotenv(env_path)

logger = logging.getLogger(__name__)


def _resolve_path(value: str):
    """Resolve a configured path against the project root; empty disables it"""
    if not value:
        return None
    path = Path(value)
    return path if path.is_absolute() else project_root / path


class Config:
    """Configuration settings for enumeration caps, LP tolerances and outputs"""

    # Enumeration
    ENUMERATION_CAP = int(os.getenv('DAYFLOW_CAP', '200000'))

    # Linear programming
    LP_TOLERANCE = float(os.getenv('DAYFLOW_LP_TOLERANCE', '1e-9'))
    DEFECT_SLACK = float(os.getenv('DAYFLOW_DEFECT_SLACK', '1e-7'))

    # Actions
    ORBIT_BOUND = float(os.getenv('DAYFLOW_ORBIT_BOUND', '1e6'))
    AFFINE_INVERSE_TOLERANCE = 1e-10
    RELATION_TOLERANCE = 1e-8
    RELATION_SAMPLES = 100

    # Reproducibility and workers
    SEED = int(os.getenv('DAYFLOW_SEED', '0'))
    JOBS = int(os.getenv('DAYFLOW_JOBS', '1'))

    # Outputs
    OUTPUT_DIR = _resolve_path(os.getenv('OUTPUT_DIR', 'data/outputs'))
    CSV_FLOAT_FORMAT = '%.17g'

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_FILE = _resolve_path(os.getenv('LOG_FILE', 'logs/dayflow.log'))

    @classmethod
    def validate(cls):
        """Validate that configured values are usable"""
        problems = []
        if cls.ENUMERATION_CAP <= 0:
            problems.append(f"DAYFLOW_CAP must be positive (got {cls.ENUMERATION_CAP})")
        if cls.LP_TOLERANCE <= 0:
            problems.append(f"DAYFLOW_LP_TOLERANCE must be positive (got {cls.LP_TOLERANCE})")
        if cls.DEFECT_SLACK <= 0:
            problems.append(f"DAYFLOW_DEFECT_SLACK must be positive (got {cls.DEFECT_SLACK})")
        if cls.ORBIT_BOUND <= 0:
            problems.append(f"DAYFLOW_ORBIT_BOUND must be positive (got {cls.ORBIT_BOUND})")
        if cls.JOBS < 1:
            problems.append(f"DAYFLOW_JOBS must be at least 1 (got {cls.JOBS})")
        if not hasattr(logging, str(cls.LOG_LEVEL).upper()):
            problems.append(f"LOG_LEVEL is not a logging level (got {cls.LOG_LEVEL})")

        if problems:
            raise ValueError(f"Invalid configuration: {'; '.join(problems)}")

        logger.debug(f"Configuration validated (cap={cls.ENUMERATION_CAP}, tol={cls.LP_TOLERANCE})")
        return True

    @classmethod
    def cap(cls, override=None) -> int:
        """Enumeration cap, honouring an explicit override"""
        return cls.ENUMERATION_CAP if override is None else int(override)

    @classmethod
    def tolerance(cls, override=None) -> float:
        """LP tolerance, honouring an explicit override"""
        return cls.LP_TOLERANCE if override is None else float(override)

    @classmethod
    def as_dict(cls) -> dict:
        """Echo of the active configuration for run manifests"""
        return {
            'enumeration_cap': cls.ENUMERATION_CAP,
            'lp_tolerance': cls.LP_TOLERANCE,
            'defect_slack': cls.DEFECT_SLACK,
            'orbit_bound': cls.ORBIT_BOUND,
            'seed': cls.SEED,
            'jobs': cls.JOBS,
            'log_level': cls.LOG_LEVEL,
        }
