"""
Command-line interface
Key management, local multi-party signing, verification, simulation,
parameter reporting and benchmarking. Results go to stdout, logs to stderr.

    python -m app.cli params
    python -m app.cli keygen --rho rho.bin --seed 00..00 --out alice
"""

import argparse
import logging
import secrets
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from app.config import settings
from app.exceptions import CodecError, ParamsError, RzmsError
from app.models.params import PRODUCTION, Params, get_params
from app.services import codec, mscheme
from app.services.codec import WireKind
from app.services.sampling import hash_h
from app.services.scheme_service import SchemeService
from app.services.simnet import count_messages
from app.templates import ReportTemplateType, TemplateLoader

logger = logging.getLogger("app.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# |Sig| as reported for the production set; the measured (z, c) is larger
REPORTED_SIG_BYTES = 2214


class UsageError(Exception):
    """Bad flag values or unreadable input files"""


def _hex_arg(text: str) -> bytes:
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not hex")


def _seed_arg(text: str) -> bytes:
    value = _hex_arg(text)
    if len(value) != 32:
        raise argparse.ArgumentTypeError("seed must be 32 bytes (64 hex digits)")
    return value


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}")


def _decode(data: bytes, params: Params, kind: WireKind, path: Path):
    try:
        return codec.wire_decode(data, params, kind)
    except CodecError as e:
        raise UsageError(f"{path}: {e}")


# Commands

def cmd_params(args: argparse.Namespace, params: Params) -> int:
    acceptance = mscheme.acceptance_probability(params)
    sizes = [
        ("|PK|", params.pk_bytes),
        ("|SK|", params.sk_bytes),
        ("|Share|", params.share_bytes),
        ("|Sig|", params.sig_bytes),
        ("|(z,c)|", params.zc_bytes),
        ("|APK|", params.apk_bytes),
        ("|w1|", params.w1_bytes),
    ]
    print(TemplateLoader.render_template(ReportTemplateType.PARAMS, {
        "p": params,
        "acceptance": acceptance,
        "expected_attempts": 1 / acceptance,
        "max_attempts": settings.RZMS_MAX_SIGN_ATTEMPTS or params.max_attempts,
        "sizes": sizes,
        "zc_bytes": params.zc_bytes,
        "reported_sig": REPORTED_SIG_BYTES if params == PRODUCTION else None,
    }), end="")
    return EXIT_OK


def cmd_setup(args: argparse.Namespace, params: Params) -> int:
    result = SchemeService(params).setup(args.seed)
    if not result["success"]:
        logger.error(result["error"])
        return EXIT_FAILURE
    rho = bytes.fromhex(result["rho"])
    if args.out:
        _write(args.out, rho)
    print(rho.hex())
    return EXIT_OK


def cmd_keygen(args: argparse.Namespace, params: Params) -> int:
    rho = _read(args.rho)
    result = SchemeService(params).keygen(rho, args.seed)
    if not result["success"]:
        raise UsageError(result["error"])
    prefix = str(args.out)
    _write(Path(prefix + ".pk"), result["public_key"])
    _write(Path(prefix + ".sk"), result["secret_key"])
    print(f"{prefix}.pk {prefix}.sk address={result['address']}")
    return EXIT_OK


def cmd_sign(args: argparse.Namespace, params: Params) -> int:
    if len(args.sk) != len(args.pks):
        raise UsageError(f"{len(args.sk)} secret key file(s) but {len(args.pks)} public key file(s)")
    pks = [_read(path) for path in args.pks]
    sks = [_read(path) for path in args.sk]
    for path, data in zip(args.pks, pks):
        _decode(data, params, WireKind.PK, path)
    for path, data in zip(args.sk, sks):
        _decode(data, params, WireKind.SK, path)
    result = SchemeService(params).sign(pks, sks, _read(args.msg), args.seed)
    if not result["success"]:
        logger.error(result["error"])
        return EXIT_FAILURE
    _write(args.out, result["signature"])
    print(f"{args.out} address={result['address']}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, params: Params) -> int:
    result = SchemeService(params).verify(_read(args.rho), _read(args.msg), _read(args.sig))
    print("OK" if result["valid"] else "FAIL")
    return EXIT_OK if result["valid"] else EXIT_FAILURE


def cmd_simulate(args: argparse.Namespace, params: Params) -> int:
    participants = None
    if args.participants:
        try:
            participants = [int(part) for part in args.participants.split(",") if part.strip()]
        except ValueError:
            raise UsageError(f"participants must be a comma-separated list, got '{args.participants}'")
    faults = [item for item in (args.faults or "").split(",") if item.strip()]
    message = _read(args.msg) if args.msg else None
    result = SchemeService(params).simulate(args.signers, args.seed, participants, faults, message)
    if not result["success"]:
        raise UsageError(result["error"])

    transcript = result["transcript"]
    if args.transcript:
        _write(args.transcript, transcript.to_jsonl().encode("utf-8"))
    print(TemplateLoader.render_template(ReportTemplateType.SESSION, {
        "verdict": transcript.verdict,
        "address": transcript.address,
        "events": len(transcript.events),
        "counts": count_messages(transcript),
        "ledger": transcript.ledger,
    }), end="")
    return EXIT_OK if transcript.verdict.accepted else EXIT_FAILURE


def _bench_iteration(keys, message: bytes, seed: bytes, params: Params, max_attempts: Optional[int]):
    started = time.perf_counter()
    outboxes, nonces = mscheme.sign_round(keys, message, seed, params, max_attempts)
    sig = mscheme.combine_round(keys, outboxes, nonces, message, params)
    signed = time.perf_counter()
    valid = mscheme.ms_verify(keys[0][0].rho, message, sig, params)
    verified = time.perf_counter()
    attempts = sum(nonce.attempts for nonce in nonces.values())
    return signed - started, verified - signed, attempts, valid


def cmd_bench(args: argparse.Namespace, params: Params) -> int:
    if args.iters < 1 or args.signers < 1:
        raise UsageError("--iters and --signers must be positive")
    base = args.seed or secrets.token_bytes(32)
    rho = mscheme.setup(seed=base)
    keys = [mscheme.keygen(rho, hash_h(base + i.to_bytes(2, "little")), params) for i in range(args.signers)]
    message = b"benchmark transaction"
    max_attempts = settings.RZMS_MAX_SIGN_ATTEMPTS
    workers = max(1, settings.RZMS_BENCH_WORKERS)

    seeds = [hash_h(base + b"bench" + i.to_bytes(4, "little")) for i in range(args.iters)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        runs = list(pool.map(lambda s: _bench_iteration(keys, message, s, params, max_attempts), seeds))

    sign_time = sum(run[0] for run in runs)
    verify_time = sum(run[1] for run in runs)
    attempts = sum(run[2] for run in runs)
    if not all(run[3] for run in runs):
        logger.error("a benchmark signature failed verification")
        return EXIT_FAILURE
    print(TemplateLoader.render_template(ReportTemplateType.BENCH, {
        "params_name": params.name,
        "signers": args.signers,
        "iterations": args.iters,
        "workers": workers,
        "sign_per_sec": args.iters / sign_time,
        "sign_ms": 1000 * sign_time / args.iters,
        "verify_per_sec": args.iters / verify_time,
        "verify_ms": 1000 * verify_time / args.iters,
        "attempts": attempts,
        "measured_acceptance": args.iters * args.signers / attempts,
        "analytic_acceptance": mscheme.acceptance_probability(params),
    }), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app.cli",
        description="Razhi-ms lattice multi-signatures (parameter set from RZMS_PARAMS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="Parameter table, derived constants and sizes")
    p.set_defaults(handler=cmd_params)

    p = sub.add_parser("setup", help="Generate the public seed rho")
    p.add_argument("--seed", type=_hex_arg, help="Hex seed for a reproducible rho")
    p.add_argument("--out", type=Path, help="Write the 32-byte rho here")
    p.set_defaults(handler=cmd_setup)

    p = sub.add_parser("keygen", help="Generate one signer's key share")
    p.add_argument("--rho", type=Path, required=True, help="File holding rho (32 bytes)")
    p.add_argument("--seed", type=_seed_arg, help="Signer seed, 64 hex digits; random when omitted")
    p.add_argument("--out", type=Path, required=True, help="Output prefix; writes PREFIX.pk and PREFIX.sk")
    p.set_defaults(handler=cmd_keygen)

    p = sub.add_parser("sign", help="Run the protocol locally for every supplied key")
    p.add_argument("--sk", type=Path, nargs="+", required=True, help="Secret key files")
    p.add_argument("--pks", type=Path, nargs="+", required=True, help="Public key files, same order")
    p.add_argument("--msg", type=Path, required=True, help="Message file")
    p.add_argument("--out", type=Path, required=True, help="Signature output file")
    p.add_argument("--seed", type=_seed_arg, help="Signing seed; random when omitted")
    p.set_defaults(handler=cmd_sign)

    p = sub.add_parser("verify", help="Verify a multi-signature")
    p.add_argument("--rho", type=Path, required=True)
    p.add_argument("--msg", type=Path, required=True)
    p.add_argument("--sig", type=Path, required=True)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("simulate", help="Run a TTP / BS / BR / Miner session")
    p.add_argument("--signers", type=int, default=3)
    p.add_argument("--participants", help="Comma-separated signer indices, e.g. 1,2")
    p.add_argument("--seed", type=_seed_arg, required=True, help="Master seed, 64 hex digits")
    p.add_argument("--faults", help="e.g. drop:0 | tamper:1@40 | wrong-key:2, comma-separated")
    p.add_argument("--msg", type=Path, help="Message file; default is a mock transaction")
    p.add_argument("--transcript", type=Path, help="JSON-lines transcript output")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("bench", help="Sign/verify throughput and rejection rate")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--signers", type=int, default=2)
    p.add_argument("--seed", type=_seed_arg, help="Benchmark seed")
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        params = get_params(settings.params_name())
        return args.handler(args, params)
    except (UsageError, ParamsError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except RzmsError as e:
        logger.error(str(e))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
