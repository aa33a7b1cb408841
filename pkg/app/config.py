"""
Configuration management for the application
Loads environment variables and provides configuration settings
"""

import os
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

KNOWN_PARAM_SETS = ("production", "toy")


class Settings:
    """Application settings loaded from environment variables"""

    # Application
    APP_NAME: str = os.getenv("APP_NAME", "Razhi-ms Multi-Signature Service")
    APP_VERSION: str = os.getenv("APP_VERSION", "1.0.0")
    DEBUG: bool = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "DEBUG" if DEBUG else "INFO").upper()

    # Scheme
    RZMS_PARAMS: str = (os.getenv("RZMS_PARAMS") or "production").strip().lower()
    RZMS_MAX_SIGN_ATTEMPTS: Optional[int] = (
        int(os.environ["RZMS_MAX_SIGN_ATTEMPTS"]) if os.getenv("RZMS_MAX_SIGN_ATTEMPTS") else None
    )
    RZMS_BENCH_WORKERS: int = int(os.getenv("RZMS_BENCH_WORKERS", "1"))

    # Miner ledger
    LEDGER_DATABASE_URL: str = (
        os.getenv("LEDGER_DATABASE_URL") or "sqlite:///./rzms_ledger.db"
    ).strip()

    @property
    def DATABASE_URL(self) -> str:
        """SQLAlchemy URL of the Miner ledger (mysql+pymysql:// URLs are supported)"""
        return self.LEDGER_DATABASE_URL

    def params_name(self) -> str:
        """Parameter set name, read at call time so RZMS_PARAMS can change per process"""
        return (os.getenv("RZMS_PARAMS") or self.RZMS_PARAMS).strip().lower()

    def validate_params_name(self) -> bool:
        """Validate that RZMS_PARAMS names a known parameter set"""
        return self.params_name() in KNOWN_PARAM_SETS


# Global settings instance
settings = Settings()
