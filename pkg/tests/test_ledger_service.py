from concurrent.futures import ThreadPoolExecutor

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from app.database import Base
from app.models.ledger import LedgerBlock  # noqa: F401  registers the table
from app.services.ledger_service import APPEND_ATTEMPTS, LedgerService


@pytest.fixture
def session_factory(tmp_path):
    engine = create_engine(f"sqlite:///{tmp_path / 'ledger.db'}", connect_args={"check_same_thread": False})
    Base.metadata.create_all(bind=engine)
    yield sessionmaker(autocommit=False, autoflush=False, bind=engine)
    engine.dispose()


@pytest.fixture
def db(session_factory):
    session = session_factory()
    yield session
    session.close()


def test_append_links_blocks(db):
    service = LedgerService(db)
    first = service.append(b"tx-0", b"sig-0")
    second = service.append(b"tx-1", b"sig-1")
    assert first["success"] and second["success"]
    assert second["block"].prev_digest == first["block"].block_digest
    assert service.verify() == {"valid": True, "height": 2, "head": second["block"].block_digest}


def other_writer(session_factory, tx: bytes):
    session = session_factory()
    try:
        return LedgerService(session).append(tx, b"sig-" + tx)
    finally:
        session.close()


def test_stale_head_is_retried(session_factory, db, monkeypatch):
    other_writer(session_factory, b"tx-0")
    service = LedgerService(db)
    real_head = LedgerService.head
    reads = []

    def stale_once(self):
        reads.append(1)
        # the first read misses the block another writer committed
        return None if len(reads) == 1 else real_head(self)

    monkeypatch.setattr(LedgerService, "head", stale_once)
    result = service.append(b"tx-1", b"sig-1")
    assert result["success"]
    assert result["block"].height == 1
    assert len(reads) == 2
    monkeypatch.undo()
    assert service.verify()["valid"]


def test_exhausted_retries_report_failure(session_factory, db, monkeypatch):
    other_writer(session_factory, b"tx-0")
    service = LedgerService(db)
    reads = []

    def always_stale(self):
        reads.append(1)
        return None

    monkeypatch.setattr(LedgerService, "head", always_stale)
    result = service.append(b"tx-1", b"sig-1")
    assert result["success"] is False
    assert len(reads) == APPEND_ATTEMPTS


def test_concurrent_appends_get_distinct_heights(session_factory):
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(lambda i: other_writer(session_factory, f"tx-{i}".encode()), range(8)))
    assert all(result["success"] for result in results)
    assert sorted(result["block"].height for result in results) == list(range(8))

    session = session_factory()
    try:
        assert LedgerService(session).verify()["valid"]
    finally:
        session.close()
