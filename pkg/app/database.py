"""
Database connection and session management for the Miner ledger
"""

import logging
from typing import Optional

from sqlalchemy import create_engine, text
from sqlalchemy.engine import Engine
from sqlalchemy.exc import OperationalError
from sqlalchemy.orm import declarative_base, sessionmaker

from app.config import settings

logger = logging.getLogger(__name__)


def build_engine(url: Optional[str] = None) -> Engine:
    """SQLAlchemy engine for a ledger URL (sqlite or mysql+pymysql)"""
    url = url or settings.DATABASE_URL
    if url.startswith("sqlite"):
        # FastAPI serves requests from a thread pool
        return create_engine(url, connect_args={"check_same_thread": False})
    return create_engine(url, pool_pre_ping=True, pool_recycle=3600)


# Create SQLAlchemy engine
engine = build_engine()

# Create SessionLocal class
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

# Create Base class for models
Base = declarative_base()


def check_connection() -> bool:
    """Check database connection"""
    try:
        with engine.connect() as conn:
            conn.execute(text("SELECT 1"))
            logger.info("Ledger database connection successful")
            return True
    except OperationalError as e:
        logger.error(f"Ledger database connection failed: {e.orig}")
        return False
    except Exception as e:
        logger.error(f"Ledger database connection failed: {str(e)}")
        return False


def get_db():
    """Dependency for getting database session"""
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
