#!/usr/bin/env python3
"""
Serve the simulator API with uvicorn.

    python run_api.py
"""

import logging
import sys

import uvicorn

from src.api.config import ApiConfig
from src.config import AppConfig

logger = logging.getLogger("run_api")


def main() -> int:
    app_config = AppConfig()
    api_config = ApiConfig()
    logging.basicConfig(
        level=getattr(logging, app_config.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    map_file = app_config.map_path(app_config.default_map)
    if not map_file.exists():
        logger.error(f"Default map '{app_config.default_map}' not found at {map_file}")
        return 1

    logger.info(f"Serving {len(app_config.bundled_scenarios())} bundled scenarios")
    logger.info(f"Configuration: {api_config.to_dict()}")
    uvicorn.run(
        "src.api.main:app",
        host=api_config.host,
        port=api_config.port,
        reload=api_config.reload and not api_config.is_production,
        log_level="debug" if api_config.debug else "info",
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
