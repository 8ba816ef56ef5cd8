"""
Main FastAPI application module.
"""
import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.core.config import settings
from app.core.constants import list_table1_rows
from app.core.logging_config import configure_logging
from app.models.schemas import ErrorResponse, HealthResponse
from app.routers import cavity

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """
    Application lifespan manager.
    Sets up logging on startup.
    """
    configure_logging(settings.log_level)
    logger.info("%s ready with %d reference cavities", settings.app_name, len(list_table1_rows()))
    yield


app = FastAPI(
    title=settings.app_name,
    description="REST API for Fabry-Perot microcavity design and measurement analysis",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(cavity.router, prefix="/api/v1", tags=["cavity"])


@app.exception_handler(cavity.CavityHTTPException)
async def cavity_error_handler(request: Request, exc: cavity.CavityHTTPException):
    """Render service failures as ErrorResponse bodies."""
    body = ErrorResponse(detail=exc.detail, error_code=exc.error_code)
    return JSONResponse(status_code=exc.status_code, content=body.model_dump())


@app.get("/", response_model=HealthResponse)
async def root():
    """
    Root endpoint - health check.

    Returns:
        HealthResponse: Service status information
    """
    return HealthResponse(
        status="healthy",
        app_name=settings.app_name,
        version="1.0.0"
    )


@app.get("/health", response_model=HealthResponse)
async def health():
    """
    Health check endpoint.

    Returns:
        HealthResponse: Service status information
    """
    return HealthResponse(
        status="healthy",
        app_name=settings.app_name,
        version="1.0.0"
    )
