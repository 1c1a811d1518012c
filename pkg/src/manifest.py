"""
Run Manifest
Records what a command read, how it was configured and what it wrote,
and writes outputs only once every computation has succeeded
"""

import json
import logging
import platform
from datetime import datetime
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from . import __version__
from .config import Config
from .errors import DayflowError, PreconditionViolation

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
TRACKED_PACKAGES = ('numpy', 'scipy', 'pandas')

Writer = Callable[[Path], None]


def artifact_versions() -> Dict[str, str]:
    """Versions of dayflow, Python and the numerical stack"""
    versions = {'dayflow': __version__, 'python': platform.python_version()}
    for package in TRACKED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = 'unknown'
    return versions


class RunManifest:
    """Tracks one CLI command: inputs, config echo, outputs and timings"""

    def __init__(self, command: str, out_dir: Optional[Path] = None):
        """
        Initialize the manifest

        Args:
            command: Subcommand name
            out_dir: Output directory (defaults to Config)
        """
        self.out_dir = Path(out_dir) if out_dir is not None else Config.OUTPUT_DIR
        self.state: Dict[str, Any] = {
            'command': command,
            'inputs': {},
            'options': {},
            'config': Config.as_dict(),
            'versions': artifact_versions(),
            'outputs': [],
            'timings_ms': {},
            'started_at': datetime.now().isoformat(),
            'wall_time_s': None,
        }
        self._pending: List[tuple] = []

    def record_input(self, role: str, path):
        self.state['inputs'][role] = str(path)

    def record_options(self, **options):
        self.state['options'].update({k: v for k, v in options.items() if v is not None})

    def record_timings(self, label: str, values):
        self.state['timings_ms'][label] = values

    def stage(self, name: str, writer: Writer):
        """Queue an output file; nothing touches disk until commit()"""
        self._pending.append((self.out_dir / name, writer))

    def commit(self, wall_time: float) -> Path:
        """
        Write every staged output, then the manifest itself

        On any failure the files written so far are removed again, so a
        nonzero exit never leaves partial outputs behind.

        Args:
            wall_time: Seconds spent on the command

        Returns:
            Path of the manifest file
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written: List[Path] = []
        manifest_path = self.out_dir / MANIFEST_NAME
        try:
            for path, writer in self._pending:
                writer(path)
                written.append(path)
            self.state['outputs'] = [str(p) for p in written]
            self.state['wall_time_s'] = wall_time
            self.check_outputs()
            with open(manifest_path, 'w') as f:
                json.dump(self.state, f, indent=2)
            written.append(manifest_path)
        except Exception:
            for path in written:
                path.unlink(missing_ok=True)
            logger.error(f"Writing outputs to {self.out_dir} failed; removed {len(written)} partial file(s)")
            raise
        logger.info(f"Manifest saved: {manifest_path}")
        return manifest_path

    def check_outputs(self):
        """Every listed output must exist"""
        missing = [p for p in self.state['outputs'] if not Path(p).exists()]
        if missing:
            raise PreconditionViolation(f"Outputs missing after write: {', '.join(missing)}")


def load_manifest(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DayflowError(f"Cannot read manifest {path}: {e}")
