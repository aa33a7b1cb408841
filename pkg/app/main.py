"""
Razhi-ms Multi-Signature Service
FastAPI application entry point
"""

import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import settings
from app.database import Base, check_connection, engine
from app.models import ledger  # noqa: F401  registers the ledger table
from app.routers import scheme, simulation

# Configure logging
logging.basicConfig(
    level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Validate configuration and prepare the ledger tables"""
    if not settings.validate_params_name():
        logger.critical(f"Unknown RZMS_PARAMS '{settings.params_name()}'; requests will fail")
    if check_connection():
        try:
            Base.metadata.create_all(bind=engine)
            logger.info("Ledger tables created/verified")
        except Exception as e:
            logger.error(f"Failed to create ledger tables: {e}")
    else:
        logger.critical("Could not connect to the ledger database. Please check LEDGER_DATABASE_URL.")
    logger.info(f"Serving parameter set '{settings.params_name()}'")
    yield
    logger.info("Shutting down")


# Initialize FastAPI app
app = FastAPI(
    title=settings.APP_NAME,
    version=settings.APP_VERSION,
    description="Lattice-based one-round multi-signatures: key management, signing, verification and session simulation",
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan,
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(scheme.router)
app.include_router(simulation.router)


@app.get("/", tags=["Root"])
async def root():
    """Root endpoint"""
    return {
        "message": "Welcome to the Razhi-ms Multi-Signature Service",
        "version": settings.APP_VERSION,
        "docs": "/docs",
    }


@app.get("/health", tags=["Health"])
async def health_check():
    """Health check endpoint"""
    return {
        "status": "healthy",
        "service": "razhi-ms",
        "version": settings.APP_VERSION,
        "params": settings.params_name(),
    }


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.DEBUG,
    )
