"""
Application configuration for data locations, report output and logging.
"""

import os
from dataclasses import dataclass
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[2]


@dataclass
class AppConfig:
    """Top-level application configuration container."""
    data_dir: Path = PROJECT_ROOT / "data"
    output_dir: Path = PROJECT_ROOT / "runs"
    default_map: str = "civat_map"
    log_level: str = "INFO"
    concurrent: bool = False

    def __post_init__(self) -> None:
        """Apply environment overrides on top of the defaults."""
        data_dir_env: str = os.environ.get("SIM_DATA_DIR", "").strip()
        output_dir_env: str = os.environ.get("SIM_OUTPUT_DIR", "").strip()

        if data_dir_env:
            self.data_dir = Path(data_dir_env)
        if output_dir_env:
            self.output_dir = Path(output_dir_env)

        self.log_level = os.environ.get("SIM_LOG_LEVEL", self.log_level).strip().upper()
        self.concurrent = os.environ.get("SIM_CONCURRENT", "").strip() == "1" or self.concurrent

    @property
    def maps_dir(self) -> Path:
        return self.data_dir / "maps"

    @property
    def scenarios_dir(self) -> Path:
        return self.data_dir / "scenarios"

    def map_path(self, name: str) -> Path:
        """Resolve a bundled map name to its file."""
        return self.maps_dir / f"{name}.yaml"

    def scenario_path(self, name: str) -> Path:
        """Resolve a bundled scenario name to its file."""
        return self.scenarios_dir / f"{name}.yaml"

    def bundled_scenarios(self) -> list:
        """Names of the scenario files shipped under the data directory."""
        if not self.scenarios_dir.exists():
            return []
        return sorted(path.stem for path in self.scenarios_dir.glob("*.yaml"))
