"""
Scheme API router
Handles HTTP endpoints for setup, key generation, signing and verification
"""

from fastapi import APIRouter, Depends, HTTPException, status

from app.models.api import (
    KeygenRequest,
    KeygenResponse,
    ParamsResponse,
    SetupRequest,
    SetupResponse,
    SignRequest,
    SignResponse,
    VerifyRequest,
    VerifyResponse,
)
from app.services.scheme_service import SchemeService

router = APIRouter(prefix="/api/scheme", tags=["Scheme"])


def get_scheme_service() -> SchemeService:
    """Dependency: service bound to the configured parameter set"""
    return SchemeService()


@router.get("/params", response_model=ParamsResponse)
async def get_params(service: SchemeService = Depends(get_scheme_service)):
    """Active parameter set, derived constants and encoded object sizes"""
    return ParamsResponse(**service.describe_params())


@router.post("/setup", response_model=SetupResponse)
async def setup(request: SetupRequest, service: SchemeService = Depends(get_scheme_service)):
    """
    Generate the public seed rho

    - **security_level**: must be 128
    - **seed**: optional hex seed for a reproducible rho
    """
    seed = bytes.fromhex(request.seed) if request.seed is not None else None
    result = service.setup(seed, request.security_level)
    if not result["success"]:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=result["error"])
    return SetupResponse(**result)


@router.post("/keygen", response_model=KeygenResponse)
def keygen(request: KeygenRequest, service: SchemeService = Depends(get_scheme_service)):
    """
    Generate one signer's key share under rho

    - **rho**: public seed from setup (hex)
    - **seed**: optional signer seed (hex) for deterministic keys
    """
    seed = bytes.fromhex(request.seed) if request.seed is not None else None
    result = service.keygen(bytes.fromhex(request.rho), seed)
    if not result["success"]:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=result["error"])
    return KeygenResponse(
        success=True,
        message=result["message"],
        public_key=result["public_key"].hex(),
        secret_key=result["secret_key"].hex(),
        address=result["address"],
    )


@router.post("/sign", response_model=SignResponse)
def sign(request: SignRequest, service: SchemeService = Depends(get_scheme_service)):
    """
    Run the one-round protocol for every supplied signer and aggregate

    Malformed keys give 400; an aborted signing loop or rejected share gives 422.
    """
    try:
        public_keys = [bytes.fromhex(text) for text in request.public_keys]
        secret_keys = [bytes.fromhex(text) for text in request.secret_keys]
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"Invalid hex: {str(e)}")
    seed = bytes.fromhex(request.seed) if request.seed is not None else None
    result = service.sign(public_keys, secret_keys, bytes.fromhex(request.message), seed)
    if not result["success"]:
        protocol_failure = result.get("reason") in ("SigningAborted", "ShareRejected", "MessageMismatch")
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY if protocol_failure else status.HTTP_400_BAD_REQUEST,
            detail=result["error"],
        )
    return SignResponse(
        success=True,
        message=result["message"],
        signature=result["signature"].hex(),
        address=result["address"],
    )


@router.post("/verify", response_model=VerifyResponse)
def verify(request: VerifyRequest, service: SchemeService = Depends(get_scheme_service)):
    """Check a multi-signature; an invalid signature is a normal 200 response with valid=false"""
    result = service.verify(bytes.fromhex(request.rho), bytes.fromhex(request.message),
                            bytes.fromhex(request.signature))
    return VerifyResponse(**result)
