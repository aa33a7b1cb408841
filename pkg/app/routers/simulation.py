"""
Simulation and ledger API router
"""


from fastapi import APIRouter, Body, Depends, HTTPException, Query, status
from sqlalchemy.orm import Session

from app.database import get_db
from app.models.api import SIMULATION_OPENAPI_EXAMPLES, SimulationRequest, SimulationResponse
from app.models.ledger import BlockListResponse, ChainStatusResponse
from app.routers.scheme import get_scheme_service
from app.services.ledger_service import LedgerService
from app.services.scheme_service import SchemeService


router = APIRouter(tags=["Simulation"])


@router.post("/api/simulation/run", response_model=SimulationResponse)
def run_simulation(
    request: SimulationRequest = Body(..., openapi_examples=SIMULATION_OPENAPI_EXAMPLES),
    service: SchemeService = Depends(get_scheme_service),
    db: Session = Depends(get_db),
):
    """
    Run one TTP / BS / BR / Miner session

    - **n_signers**: number of Bitcoin Senders
    - **participants**: signing subset, e.g. [1, 2] for 2-of-3
    - **seed**: master seed (hex, 32 bytes); equal requests give equal transcripts
    - **faults**: drop:I, tamper:I@OFFSET, wrong-key:BS (optionally prefixed phase/)
    - **record**: store the accepted block in the service ledger
    """
    message = bytes.fromhex(request.message) if request.message is not None else None
    result = service.simulate(
        request.n_signers, bytes.fromhex(request.seed), request.participants, request.faults,
        message, request.recipient, request.amount,
    )
    if not result["success"]:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=result["error"])

    transcript = result["transcript"]
    block = None
    if request.record and transcript.verdict.accepted:
        # the simulated Miner has already verified; persist under the service chain
        stored = LedgerService(db).append(
            bytes.fromhex(transcript.message), bytes.fromhex(transcript.signature), transcript.address
        )
        if not stored["success"]:
            raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=stored["error"])
        block = stored["block"]

    return SimulationResponse(
        verdict=transcript.verdict,
        address=transcript.address,
        counts=result["counts"],
        events=transcript.events,
        block=block,
    )


@router.get("/api/ledger", response_model=BlockListResponse)
def list_blocks(
    page: int = Query(1, ge=1, description="Page number (1-indexed)"),
    page_size: int = Query(10, ge=1, le=100, description="Number of blocks per page"),
    db: Session = Depends(get_db),
):
    """Paginated blocks of the service ledger, oldest first"""
    return BlockListResponse(**LedgerService(db).list_blocks(page, page_size))


@router.get("/api/ledger/verify", response_model=ChainStatusResponse)
def verify_ledger(db: Session = Depends(get_db)):
    """Re-derive every block digest and link"""
    return ChainStatusResponse(**LedgerService(db).verify())
