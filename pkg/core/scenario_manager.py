"""
Radial Wave Lab - Scenario Management System
Loads, validates and caches scenario files
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from loguru import logger

from config import SCENARIOS_DIR, list_available_scenarios
from core.radial_core import check_support_guard
from utils.error_handlers import ConfigurationError
from utils.validators import ScenarioConfig, parse_scenario


class ScenarioManager:
    """
    Scenario file manager
    Resolves names against the bundled library, validates against the schema
    and applies the support guard before any run starts
    """

    def __init__(self, scenarios_dir: Union[str, Path] = SCENARIOS_DIR):
        self.scenarios_dir = Path(scenarios_dir)
        self.loaded_scenarios: Dict[str, ScenarioConfig] = {}

    def resolve(self, name_or_path: Union[str, Path]) -> Path:
        """A path as given, or a bundled scenario name"""
        candidate = Path(name_or_path)
        if candidate.is_file():
            return candidate
        bundled = self.scenarios_dir / f"{name_or_path}.yaml"
        if bundled.is_file():
            return bundled
        raise ConfigurationError(f"scenario not found: {name_or_path}", field="config", value=str(name_or_path))

    def load_raw(self, path: Path) -> Dict[str, Any]:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"YAML error in {path}: {e}", field="config", value=str(path)) from e
        if data is None:
            raise ConfigurationError(f"scenario file is empty: {path}", field="config", value=str(path))
        return data

    def load_scenario(self, name_or_path: Union[str, Path]) -> ScenarioConfig:
        """
        Load and validate a scenario

        Args:
            name_or_path: File path or bundled scenario name (e.g. 'standard')

        Returns:
            ScenarioConfig: Validated scenario, cached by resolved path

        Raises:
            ConfigurationError: On YAML, schema or support-guard failures
        """
        path = self.resolve(name_or_path)
        key = str(path.resolve())
        if key in self.loaded_scenarios:
            logger.debug(f"scenario '{path.stem}' served from cache")
            return self.loaded_scenarios[key]

        scenario = self.from_mapping(self.load_raw(path))
        self.loaded_scenarios[key] = scenario
        logger.info(f"loaded scenario '{scenario.name}' from {path}")
        return scenario

    def from_mapping(self, data: Dict[str, Any]) -> ScenarioConfig:
        """Validate an in-memory mapping and apply the support guard"""
        scenario = parse_scenario(data)
        check_support_guard(scenario.radial_profile(), scenario.grid_spec())
        return scenario

    def get_available_scenarios(self) -> List[str]:
        if self.scenarios_dir == SCENARIOS_DIR:
            return list_available_scenarios()
        return sorted(f.stem for f in self.scenarios_dir.glob("*.yaml"))

    def clear_cache(self) -> None:
        self.loaded_scenarios.clear()
        logger.debug("scenario cache cleared")

    def get_cache_info(self) -> Dict[str, Any]:
        return {
            'cached_scenarios': sorted(s.name for s in self.loaded_scenarios.values()),
            'cache_size': len(self.loaded_scenarios),
            'available_scenarios': self.get_available_scenarios(),
        }


# Global instance
scenario_manager = ScenarioManager()
