import asyncio
import logging
from contextlib import asynccontextmanager
from functools import partial
from typing import Any, Callable, Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
import uvicorn

from app import __version__
from app.config import get_limits, get_settings
from app.exceptions import DimerError, DomainError, ResourceLimitError, UsageError
from app.models import GraphFamily, RunConfig
from app.services import asymptotics, recursion
from app.services.graph_builder import build, graph_meta
from app.services.oracle import count_by_boundary
from app.services.verifier import run_verify
from app.utils.helpers import configure_logging, create_error_response, to_canonical

settings = get_settings()
configure_logging(settings.log_level, settings.log_json)
logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Warm the small ledgers so the first requests are cheap."""
    logger.info("Starting dimer enumeration service...")
    for family in GraphFamily:
        await run_blocking(recursion.iterate, family, 3)
    logger.info("Application startup complete")

    yield

    logger.info("Shutting down dimer enumeration service...")


app = FastAPI(
    title="Hanoi Dimers",
    description="Exact matching counts and entropy constants for Hanoi graphs and the Sierpinski variant",
    version=__version__,
    lifespan=lifespan,
)


async def run_blocking(func: Callable[..., Any], *args, **kwargs) -> Any:
    """Run a CPU-bound computation in the default executor."""
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, partial(func, *args, **kwargs))


def _status_for(exc: DimerError) -> int:
    if isinstance(exc, (DomainError, UsageError)):
        return 422
    if isinstance(exc, ResourceLimitError):
        return 413
    return 500


@app.exception_handler(DimerError)
async def dimer_exception_handler(request: Request, exc: DimerError):
    logger.error(f"Request {request.url.path} failed: {exc}")
    return JSONResponse(
        status_code=_status_for(exc),
        content=create_error_response(type(exc).__name__, str(exc)),
    )


@app.get("/")
async def root():
    """Root endpoint."""
    return {
        "message": "Hanoi Dimers API",
        "version": __version__,
        "status": "running",
    }


@app.get("/health")
async def health_check():
    """Health check endpoint."""
    limits = get_limits()
    return {
        "status": "healthy",
        "default_precision_bits": settings.default_precision_bits,
        "build_cap": limits.build_cap,
        "exact_cap": limits.exact_cap,
    }


@app.get("/api/graphs/{family}/{n}")
async def get_graph(family: GraphFamily, n: int, meta_only: bool = False):
    """Explicit instance, or only the closed-form sizes with meta_only."""
    if meta_only:
        return to_canonical(graph_meta(family, n))
    graph = await run_blocking(build, family, n)
    return to_canonical(graph)


@app.get("/api/count/{family}/{n}")
async def get_count(family: GraphFamily, n: int):
    """Brute-force boundary counts of a built instance."""
    graph = await run_blocking(build, family, n)
    result = await run_blocking(count_by_boundary, graph)
    return to_canonical(result)


@app.get("/api/recurse/{family}/{n}")
async def get_records(family: GraphFamily, n: int):
    records = await run_blocking(recursion.iterate, family, n)
    return to_canonical(records)


@app.get("/api/ratios/{family}/{n}")
async def get_ratios(family: GraphFamily, n: int, precision_bits: Optional[int] = Query(default=None, gt=0)):
    states = await run_blocking(asymptotics.exact_ratio_states, family, n, precision_bits)
    return to_canonical(states)


@app.get("/api/entropy/{family}")
async def get_entropy(family: GraphFamily, digits: int = Query(default=19, gt=0)):
    estimate = await run_blocking(asymptotics.entropy, family, digits)
    return to_canonical(estimate)


@app.get("/api/verify/{family}")
async def get_verify(family: GraphFamily):
    limits = get_limits()
    config = RunConfig(
        family=family,
        precision_bits=settings.default_precision_bits,
        oracle_steps=limits.oracle_steps,
        oracle_seconds=limits.oracle_seconds,
        exact_cap=limits.exact_cap,
        build_cap=limits.build_cap,
    )
    report = await run_blocking(run_verify, config)
    return {
        "passed": report.passed,
        "checks": to_canonical(report.checks),
        "diagnostics": report.diagnostics,
    }


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.app_host,
        port=settings.app_port,
        reload=settings.debug,
        log_level="info"
    )
