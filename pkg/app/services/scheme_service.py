"""
Scheme service
Facade over mscheme, codec and simnet returning plain result dicts
"""

import logging
import secrets
from typing import Any, Dict, List, Optional, Sequence

from app.config import settings
from app.exceptions import RzmsError
from app.models.params import Params, get_params
from app.models.simulation import FaultSpec, SimConfig
from app.services import codec, mscheme, simnet
from app.services.codec import WireKind

logger = logging.getLogger(__name__)


class SchemeService:
    """Key management, local multi-party signing, verification and simulation"""

    def __init__(self, params: Optional[Params] = None):
        self.params = params or get_params(settings.params_name())
        self.max_attempts = settings.RZMS_MAX_SIGN_ATTEMPTS

    def describe_params(self) -> Dict[str, Any]:
        """Parameter table, derived constants, acceptance rate and sizes"""
        p = self.params
        acceptance = mscheme.acceptance_probability(p)
        return {
            "name": p.name, "n": p.n, "q": p.q, "k": p.k, "l": p.l,
            "gamma1": p.gamma1, "gamma2": p.gamma2, "tau": p.tau, "eta": p.eta, "beta": p.beta,
            "alpha": p.alpha, "m_high": p.m_high,
            "acceptance_probability": acceptance,
            "expected_attempts": 1.0 / acceptance,
            "sizes": p.size_table(),
        }

    def setup(self, seed: Optional[bytes] = None, security_level: int = 128) -> Dict[str, Any]:
        try:
            rho = mscheme.setup(security_level, seed)
        except RzmsError as e:
            logger.error(f"Setup failed: {str(e)}")
            return {"success": False, "message": "Setup failed", "rho": None, "error": str(e)}
        logger.info("Setup produced a public seed")
        return {"success": True, "message": "Public seed generated", "rho": rho.hex()}

    def keygen(self, rho: bytes, seed: Optional[bytes] = None) -> Dict[str, Any]:
        try:
            pk, sk = mscheme.keygen(rho, seed if seed is not None else secrets.token_bytes(32), self.params)
        except RzmsError as e:
            logger.error(f"Key generation failed: {str(e)}")
            return {"success": False, "message": "Key generation failed", "error": str(e)}
        logger.info("Generated a key share")
        return {
            "success": True,
            "message": "Key share generated",
            "public_key": codec.wire_encode(pk, self.params),
            "secret_key": codec.wire_encode(sk, self.params),
            "address": mscheme.derive_address([pk], self.params),
        }

    def sign(self, public_keys: Sequence[bytes], secret_keys: Sequence[bytes], message: bytes,
             seed: Optional[bytes] = None) -> Dict[str, Any]:
        """
        Run the full protocol locally with every signer's keys

        Args:
            public_keys: pk WireObjects, one per signer
            secret_keys: sk WireObjects in the same order
            message: message to sign
            seed: signing seed; random when omitted

        Returns:
            dict: success flag, signature WireObject and signer-set address
        """
        if len(public_keys) != len(secret_keys):
            return {
                "success": False,
                "message": "Signing failed",
                "error": f"{len(public_keys)} public keys but {len(secret_keys)} secret keys",
            }
        try:
            pks = [codec.wire_decode(data, self.params, WireKind.PK) for data in public_keys]
            sks = [codec.wire_decode(data, self.params, WireKind.SK) for data in secret_keys]
            if len({pk.rho for pk in pks}) != 1:
                raise RzmsError("public keys were generated under different public seeds")
            sig = mscheme.multi_sign(
                list(zip(pks, sks)), message, seed if seed is not None else secrets.token_bytes(32),
                self.params, self.max_attempts,
            )
        except RzmsError as e:
            logger.error(f"Signing failed: {str(e)}")
            return {"success": False, "message": "Signing failed", "error": str(e), "reason": type(e).__name__}
        return {
            "success": True,
            "message": f"Multi-signature by {len(pks)} signer(s)",
            "signature": codec.wire_encode(sig, self.params),
            "address": mscheme.derive_address(pks, self.params),
            "rho": pks[0].rho,
        }

    def verify(self, rho: bytes, message: bytes, signature: bytes) -> Dict[str, Any]:
        try:
            sig = codec.wire_decode(signature, self.params, WireKind.SIG)
        except RzmsError as e:
            logger.warning(f"Signature does not decode: {str(e)}")
            return {"valid": False, "message": f"Malformed signature: {str(e)}"}
        valid = mscheme.ms_verify(rho, message, sig, self.params)
        return {"valid": valid, "message": "Signature valid" if valid else "Signature invalid"}

    def simulate(self, n_signers: int, seed: bytes, participants: Optional[List[int]] = None,
                 faults: Sequence[str] = (), message: Optional[bytes] = None,
                 recipient: str = "BR", amount: int = 100000) -> Dict[str, Any]:
        """Run one simulated session; invalid configurations are reported, not raised"""
        try:
            fault_specs = [FaultSpec.parse(text) for text in faults]
            cfg = SimConfig(
                n_signers=n_signers, participants=participants, master_seed=seed, faults=fault_specs,
                message=message, recipient=recipient, amount=amount, params_name=self.params.name,
            )
        except ValueError as e:
            return {"success": False, "message": "Invalid simulation config", "error": str(e)}
        transcript = simnet.run_session(cfg, self.max_attempts)
        return {
            "success": True,
            "message": f"Session {transcript.verdict.status}",
            "transcript": transcript,
            "counts": simnet.count_messages(transcript),
        }
