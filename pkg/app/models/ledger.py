"""
Miner ledger models
"""

from datetime import datetime
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field
from sqlalchemy import Column, DateTime, Integer, String, Text

from app.database import Base


class LedgerBlock(Base):
    """Persisted block: one accepted multi-signed transaction"""
    __tablename__ = "ledger_blocks"

    height = Column(Integer, primary_key=True, autoincrement=False)
    prev_digest = Column(String(64), nullable=False)
    tx_digest = Column(String(64), nullable=False)
    sig_digest = Column(String(64), nullable=False, index=True)
    block_digest = Column(String(64), nullable=False, unique=True)
    address = Column(String(64), nullable=True, index=True)
    transaction = Column(Text, nullable=False)  # hex
    created_at = Column(DateTime, default=datetime.utcnow)


# Pydantic Schemas

class BlockResponse(BaseModel):
    """Schema for one ledger block"""
    model_config = ConfigDict(from_attributes=True)

    height: int
    prev_digest: str
    tx_digest: str
    sig_digest: str
    block_digest: str
    address: Optional[str] = None
    transaction: str = Field(..., description="Signed transaction bytes, hex")
    created_at: Optional[datetime] = None


class BlockListResponse(BaseModel):
    """Paginated ledger"""
    items: List[BlockResponse]
    total: int
    page: int
    page_size: int
    total_pages: int


class ChainStatusResponse(BaseModel):
    valid: bool
    height: int = Field(..., description="Number of blocks")
    head: Optional[str] = Field(None, description="Digest of the last block")
