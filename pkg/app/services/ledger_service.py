"""
Persistent Miner ledger
Append-only block chain of accepted multi-signed transactions.
"""

import logging
import threading
from math import ceil
from typing import Any, Dict, Optional

from sqlalchemy.exc import IntegrityError, SQLAlchemyError
from sqlalchemy.orm import Session

from app.models.ledger import BlockResponse, LedgerBlock
from app.models.simulation import Block
from app.services.sampling import hash_h
from app.services.simnet import GENESIS_DIGEST, make_block, verify_chain

logger = logging.getLogger(__name__)

# one writer at a time in this process; other writers are caught by the primary key
_APPEND_LOCK = threading.Lock()
APPEND_ATTEMPTS = 3


class LedgerService:
    """Block storage on top of a SQLAlchemy session"""

    def __init__(self, db: Session):
        self.db = db

    def head(self) -> Optional[LedgerBlock]:
        return self.db.query(LedgerBlock).order_by(LedgerBlock.height.desc()).first()

    def append(self, transaction: bytes, sig_bytes: bytes, address: Optional[str] = None) -> Dict[str, Any]:
        """
        Append a block for a verified transaction

        Returns:
            dict: success flag and the stored block
        """
        try:
            with _APPEND_LOCK:
                row = self._append_at_head(transaction, sig_bytes, address)
            logger.info("Ledger block %d appended (%s)", row.height, row.block_digest[:16])
            return {
                "success": True,
                "message": f"Block {row.height} appended",
                "block": BlockResponse.model_validate(row),
            }
        except SQLAlchemyError as e:
            self.db.rollback()
            logger.error(f"Failed to append ledger block: {str(e)}")
            return {"success": False, "message": "Failed to append ledger block", "error": str(e), "block": None}

    def _append_at_head(self, transaction: bytes, sig_bytes: bytes, address: Optional[str]) -> LedgerBlock:
        """Insert at head + 1, re-reading the head when another writer took that height"""
        for attempt in range(1, APPEND_ATTEMPTS + 1):
            head = self.head()
            height = 0 if head is None else head.height + 1
            prev = GENESIS_DIGEST if head is None else bytes.fromhex(head.block_digest)
            block = make_block(height, prev, transaction, sig_bytes)
            row = LedgerBlock(
                height=block.height,
                prev_digest=block.prev_digest,
                tx_digest=block.tx_digest,
                sig_digest=block.sig_digest,
                block_digest=block.block_digest,
                address=address,
                transaction=transaction.hex(),
            )
            self.db.add(row)
            try:
                self.db.commit()
            except IntegrityError:
                self.db.rollback()
                if attempt == APPEND_ATTEMPTS:
                    raise
                logger.warning("Ledger height %d already taken, retrying", height)
                continue
            self.db.refresh(row)
            return row

    def list_blocks(self, page: int = 1, page_size: int = 10) -> Dict[str, Any]:
        query = self.db.query(LedgerBlock)
        total = query.count()
        skip = (page - 1) * page_size
        total_pages = ceil(total / page_size) if total > 0 else 0
        rows = query.order_by(LedgerBlock.height.asc()).offset(skip).limit(page_size).all()
        return {
            "items": [BlockResponse.model_validate(row) for row in rows],
            "total": total,
            "page": page,
            "page_size": page_size,
            "total_pages": total_pages,
        }

    def verify(self) -> Dict[str, Any]:
        """Re-derive every digest and link of the stored chain"""
        rows = self.db.query(LedgerBlock).order_by(LedgerBlock.height.asc()).all()
        blocks = [
            Block(
                height=row.height,
                prev_digest=row.prev_digest,
                tx_digest=row.tx_digest,
                sig_digest=row.sig_digest,
                block_digest=row.block_digest,
            )
            for row in rows
        ]
        valid = verify_chain(blocks) and all(
            hash_h(bytes.fromhex(row.transaction)).hex() == row.tx_digest for row in rows
        )
        if not valid:
            logger.error("Ledger chain verification failed")
        return {"valid": valid, "height": len(rows), "head": rows[-1].block_digest if rows else None}
