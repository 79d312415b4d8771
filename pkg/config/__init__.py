"""
Radial Wave Lab - Configuration Package
Scenario library paths and YAML loading helpers
"""

__version__ = "1.0.0"
__description__ = "Scenario library and environment settings"

from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from loguru import logger

# Configuration paths
CONFIG_DIR = Path(__file__).parent
SCENARIOS_DIR = CONFIG_DIR / "scenarios"


def list_available_scenarios() -> List[str]:
    """List the bundled scenario files by stem"""
    if not SCENARIOS_DIR.exists():
        return []
    return sorted(f.stem for f in SCENARIOS_DIR.glob("*.yaml"))


def scenario_path(name: str) -> Path:
    """Path of a bundled scenario"""
    return SCENARIOS_DIR / f"{name}.yaml"


def load_yaml(path: Path) -> Optional[Dict[str, Any]]:
    """Read a YAML mapping; None when the file is missing"""
    if not path.exists():
        logger.error(f"scenario file not found: {path}")
        return None
    with open(path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def get_config_status() -> Dict[str, Any]:
    """Summary of the bundled configuration"""
    return {
        'config_dir_exists': CONFIG_DIR.exists(),
        'scenarios_dir_exists': SCENARIOS_DIR.exists(),
        'available_scenarios': list_available_scenarios(),
    }


__all__ = [
    'CONFIG_DIR',
    'SCENARIOS_DIR',
    'list_available_scenarios',
    'scenario_path',
    'load_yaml',
    'get_config_status',
]
