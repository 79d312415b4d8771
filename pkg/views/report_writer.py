"""
Radial Wave Lab - Report Writer
Plot-ready CSV tables (pandas) and the JSON run report, written atomically per file
"""

import json
import os
import platform
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from constants import (
    APP_VERSION, SNAPSHOT_COLUMNS, ORIGIN_COLUMNS, G_PROFILE_COLUMNS, ENERGY_SERIES_COLUMNS,
    FLUX_RESIDUAL_COLUMNS, MORAWETZ_COLUMNS, CONVERGENCE_COLUMNS,
    SNAPSHOT_FILE, ORIGIN_FILE, ENERGY_FILE, G_PROFILE_FILE, FLUX_RESIDUAL_FILE, MORAWETZ_FILE,
    CONVERGENCE_FILE, REPORT_FILE,
)
from utils.data_models import RadiationProfile, RunReport, Trajectory
from utils.error_handlers import ConfigurationError

# Float formatting shared by every table; repr round-trips doubles exactly
FLOAT_FORMAT = "%.17g"


def snapshot_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Stacked snapshots in physical time, ordered by step"""
    frames = []
    d = trajectory.direction
    for n in sorted(trajectory.states):
        state = trajectory.states[n]
        frames.append(pd.DataFrame({
            't': np.full(len(state.w), d * state.t),
            'r': state.radii,
            'w': state.w,
            'phi': state.phi,
            'psi': state.psi,
        }))
    if not frames:
        return pd.DataFrame(columns=SNAPSHOT_COLUMNS)
    return pd.concat(frames, ignore_index=True)[SNAPSHOT_COLUMNS]


def origin_frame(trajectory: Trajectory) -> pd.DataFrame:
    return pd.DataFrame(trajectory.origin_series, columns=ORIGIN_COLUMNS)


def energy_frame(trajectory: Trajectory) -> pd.DataFrame:
    s = trajectory.series
    return pd.DataFrame({
        't': trajectory.direction * s.t,
        'E': s.energy,
        'E_minus': s.e_minus,
        'E_plus': s.e_plus,
        'potential': s.potential,
    })[ENERGY_SERIES_COLUMNS]


def g_profile_frame(profile: RadiationProfile) -> pd.DataFrame:
    return pd.DataFrame(profile.to_frame_rows(), columns=G_PROFILE_COLUMNS)


def rows_frame(rows: Sequence[Dict[str, Any]], columns: List[str]) -> pd.DataFrame:
    return pd.DataFrame(list(rows), columns=columns)


def build_metadata() -> Dict[str, Any]:
    """Wall-clock and version block; the only non-deterministic part of a report"""
    return {
        'timestamp': datetime.now(timezone.utc).isoformat(),
        'app_version': APP_VERSION,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
    }


class ReportWriter:
    """
    Persists command outputs into one directory
    Tables are keyed by file name; each file is written to a temporary sibling and renamed
    """

    def __init__(self):
        self.table_columns = {
            SNAPSHOT_FILE: SNAPSHOT_COLUMNS,
            ORIGIN_FILE: ORIGIN_COLUMNS,
            ENERGY_FILE: ENERGY_SERIES_COLUMNS,
            G_PROFILE_FILE: G_PROFILE_COLUMNS,
            FLUX_RESIDUAL_FILE: FLUX_RESIDUAL_COLUMNS,
            MORAWETZ_FILE: MORAWETZ_COLUMNS,
            CONVERGENCE_FILE: CONVERGENCE_COLUMNS,
        }

    def prepare_directory(self, directory: Path) -> Path:
        directory = Path(directory)
        if directory.exists() and not directory.is_dir():
            raise ConfigurationError(f"output path exists and is not a directory: {directory}",
                                     field="out", value=str(directory))
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    def _atomic_write(self, path: Path, text: str) -> None:
        fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
            raise

    def write_table(self, directory: Path, file_name: str, frame: pd.DataFrame) -> Path:
        """
        Write one CSV with its fixed column contract

        Raises:
            ConfigurationError: If the frame does not carry exactly the contracted columns
        """
        expected = self.table_columns.get(file_name)
        if expected is not None and list(frame.columns) != list(expected):
            raise ConfigurationError(f"{file_name} columns {list(frame.columns)} differ from {expected}")
        path = Path(directory) / file_name
        self._atomic_write(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n'))
        logger.debug(f"wrote {path} ({len(frame)} rows)")
        return path

    def write_report(self, directory: Path, report: RunReport, include_metadata: bool = True) -> Path:
        if include_metadata and report.metadata is None:
            report.metadata = build_metadata()
        if not include_metadata:
            report.metadata = None
        payload = report.to_dict()
        path = Path(directory) / REPORT_FILE
        self._atomic_write(path, json.dumps(payload, indent=2, allow_nan=False) + "\n")
        logger.debug(f"wrote {path}")
        return path

    def write_all(self, directory: Path, report: RunReport, tables: Dict[str, pd.DataFrame],
                  formats: Optional[Sequence[str]] = None, include_metadata: bool = True) -> List[Path]:
        """Write the tables (csv format) and the report (json format) in file-name order"""
        formats = set(formats or ('csv', 'json'))
        directory = self.prepare_directory(directory)
        written = []
        if 'csv' in formats:
            for file_name in sorted(tables):
                written.append(self.write_table(directory, file_name, tables[file_name]))
        if 'json' in formats:
            written.append(self.write_report(directory, report, include_metadata))
        logger.info(f"{report.command}: {len(written)} file(s) written to {directory}")
        return written


# Global instance
report_writer = ReportWriter()
