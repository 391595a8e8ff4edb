import os
from typing import Any, Dict, List


def _flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() == "true"


class ApiConfig:
    """Host, CORS and run limits of the simulation API."""

    def __init__(self):
        self.host: str = os.getenv("API_HOST", "0.0.0.0")
        self.port: int = int(os.getenv("API_PORT", "8000"))
        self.debug: bool = _flag("API_DEBUG")
        self.reload: bool = _flag("API_RELOAD", "true")
        self.cors_origins: List[str] = self._parse_cors_origins()

        # Seconds of simulated time a single request may run
        self.max_scenario_duration: float = float(os.getenv("MAX_SCENARIO_DURATION", "120"))
        self.concurrent_runs: bool = _flag("API_CONCURRENT_RUNS")

    def _parse_cors_origins(self) -> List[str]:
        origins = os.getenv("CORS_ORIGINS", "*")
        if origins == "*":
            return ["*"]
        return [origin.strip() for origin in origins.split(",") if origin.strip()]

    @property
    def is_production(self) -> bool:
        return os.getenv("ENVIRONMENT", "development").lower() == "production"

    def to_dict(self) -> Dict[str, Any]:
        """Settings as a dict for the startup log."""
        return {
            "host": self.host,
            "port": self.port,
            "debug": self.debug,
            "reload": self.reload,
            "cors_origins": self.cors_origins,
            "max_scenario_duration": self.max_scenario_duration,
            "concurrent_runs": self.concurrent_runs,
            "production": self.is_production,
        }
