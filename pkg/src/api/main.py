"""
FastAPI application serving the bundled intersection scenarios.
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..config import AppConfig
from ..errors import SimulationError
from .config import ApiConfig
from .models import ErrorResponse
from .routes import router

logging.basicConfig(
    level=getattr(logging, AppConfig().log_level, logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

api_config = ApiConfig()


@asynccontextmanager
async def lifespan(app: FastAPI):
    scenarios = AppConfig().bundled_scenarios()
    if scenarios:
        logger.info(f"Simulator API up with scenarios: {', '.join(scenarios)}")
    else:
        logger.warning("Simulator API up without bundled scenarios")
    yield
    logger.info("Simulator API shutting down")


app = FastAPI(
    title="Cooperative Intersection Simulator API",
    description="Run bundled intersection scenarios and fetch their summaries",
    version="0.1.0",
    lifespan=lifespan,
    debug=api_config.debug,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=api_config.cors_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(router, prefix="/api/v1", tags=["scenarios"])


def _error(status_code: int, error: str, message: str, detail=None) -> JSONResponse:
    body = ErrorResponse(error=error, message=message, detail=detail)
    return JSONResponse(status_code=status_code, content=body.model_dump())


@app.exception_handler(SimulationError)
async def simulation_error_handler(request: Request, exc: SimulationError):
    """A scenario that fails validation or cannot be run is a bad request."""
    logger.warning(f"{request.url.path}: {exc}")
    return _error(400, "Simulation Error", "The scenario could not be run", str(exc))


@app.exception_handler(404)
async def not_found_handler(request: Request, exc):
    return _error(
        404, "Not Found", "The requested resource was not found",
        getattr(exc, "detail", None) or f"Path: {request.url.path}",
    )


@app.exception_handler(500)
async def internal_server_error_handler(request: Request, exc):
    logger.error(f"Internal server error on {request.url.path}: {exc}")
    return _error(
        500, "Internal Server Error", "An internal server error occurred",
        str(exc) if api_config.debug else None,
    )
