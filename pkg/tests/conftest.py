"""
Shared fixtures
The ledger database is redirected to a temporary SQLite file before the app is imported.
"""

import os
import tempfile
from pathlib import Path

_LEDGER_DIR = tempfile.mkdtemp(prefix="rzms-ledger-")
os.environ["LEDGER_DATABASE_URL"] = f"sqlite:///{Path(_LEDGER_DIR) / 'ledger.db'}"
os.environ.setdefault("RZMS_PARAMS", "production")

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from app.models.params import PRODUCTION, TOY, Params  # noqa: E402
from app.services import mscheme  # noqa: E402
from app.services.sampling import hash_h  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run acceptance-scale tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run, enabled with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_seed(label: str) -> bytes:
    """Deterministic 32-byte seed per label"""
    return hash_h(label.encode())


@pytest.fixture
def production() -> Params:
    return PRODUCTION


@pytest.fixture
def toy() -> Params:
    return TOY


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


def _keys(params: Params, count: int, label: str):
    rho = mscheme.setup(seed=make_seed(f"{label}/rho"))
    return [mscheme.keygen(rho, make_seed(f"{label}/signer/{i}"), params) for i in range(count)]


@pytest.fixture(scope="session")
def production_keys():
    """Three production key pairs under one rho"""
    return _keys(PRODUCTION, 3, "production")


@pytest.fixture(scope="session")
def toy_keys():
    """Three toy key pairs under one rho"""
    return _keys(TOY, 3, "toy")


@pytest.fixture(scope="session")
def production_round(production_keys):
    """One signing round by two production signers: (keys, message, outboxes, nonces)"""
    keys = production_keys[:2]
    message = b"pay 1 BTC to BR"
    outboxes, nonces = mscheme.sign_round(keys, message, make_seed("production/round"), PRODUCTION)
    return keys, message, outboxes, nonces
