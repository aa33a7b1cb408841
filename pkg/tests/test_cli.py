import pytest

from app.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from tests.conftest import make_seed

SEED_HEX = make_seed("cli/master").hex()


def keygen(tmp_path, rho_path, name, seed_label=None):
    prefix = tmp_path / name
    seed = make_seed(f"cli/{seed_label or name}").hex()
    assert main(["keygen", "--rho", str(rho_path), "--seed", seed,
                 "--out", str(prefix)]) == EXIT_OK
    return tmp_path / f"{name}.pk", tmp_path / f"{name}.sk"


@pytest.fixture
def signed(tmp_path, monkeypatch):
    """rho, two key pairs, a message and its multi-signature on disk"""
    monkeypatch.setenv("RZMS_PARAMS", "production")
    rho = tmp_path / "rho.bin"
    assert main(["setup", "--seed", SEED_HEX, "--out", str(rho)]) == EXIT_OK
    alice = keygen(tmp_path, rho, "alice")
    bob = keygen(tmp_path, rho, "bob")
    msg = tmp_path / "tx.bin"
    msg.write_bytes(b"pay 1 BTC to BR")
    sig = tmp_path / "tx.sig"
    code = main([
        "sign", "--sk", str(alice[1]), str(bob[1]), "--pks", str(alice[0]), str(bob[0]),
        "--msg", str(msg), "--out", str(sig), "--seed", make_seed("cli/sign").hex(),
    ])
    assert code == EXIT_OK
    return {"rho": rho, "alice": alice, "bob": bob, "msg": msg, "sig": sig}


def test_params_report(monkeypatch, capsys):
    monkeypatch.setenv("RZMS_PARAMS", "production")
    assert main(["params"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "q = 8397313" in out
    assert "alpha = 127232" in out
    assert "m_high = 66" in out
    assert "expected attempts ≈ 136" in out
    assert "|APK| = 3072 bytes" in out
    assert "|Sig| = 5408 bytes" in out
    assert "2214" in out


def test_params_report_toy(monkeypatch, capsys):
    monkeypatch.setenv("RZMS_PARAMS", "toy")
    assert main(["params"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "q = 257" in out
    assert "seed chunks per ciphertext = 32" in out
    assert "2214" not in out


def test_unknown_params_is_usage_error(monkeypatch):
    monkeypatch.setenv("RZMS_PARAMS", "huge")
    assert main(["params"]) == EXIT_USAGE


def test_setup_is_reproducible(capsys):
    main(["setup", "--seed", SEED_HEX])
    main(["setup", "--seed", SEED_HEX])
    first, second = capsys.readouterr().out.split()
    assert first == second and len(bytes.fromhex(first)) == 32


def test_keygen_is_deterministic(signed, tmp_path):
    again = keygen(tmp_path, signed["rho"], "alice-again", seed_label="alice")
    assert again[0].read_bytes() == signed["alice"][0].read_bytes()
    assert signed["alice"][0].read_bytes()[:4] == b"RZMS"


def test_sign_then_verify(signed, capsys):
    capsys.readouterr()
    assert main(["verify", "--rho", str(signed["rho"]), "--msg", str(signed["msg"]),
                 "--sig", str(signed["sig"])]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "OK"


def test_corrupted_signature_fails(signed, capsys):
    data = bytearray(signed["sig"].read_bytes())
    data[-1] ^= 0x01
    signed["sig"].write_bytes(bytes(data))
    capsys.readouterr()
    assert main(["verify", "--rho", str(signed["rho"]), "--msg", str(signed["msg"]),
                 "--sig", str(signed["sig"])]) == EXIT_FAILURE
    assert capsys.readouterr().out.strip() == "FAIL"


def test_other_message_fails(signed, tmp_path):
    other = tmp_path / "other.bin"
    other.write_bytes(b"pay 2 BTC to BR")
    assert main(["verify", "--rho", str(signed["rho"]), "--msg", str(other),
                 "--sig", str(signed["sig"])]) == EXIT_FAILURE


def test_sign_key_count_mismatch(signed, tmp_path):
    code = main([
        "sign", "--sk", str(signed["alice"][1]), "--pks", str(signed["alice"][0]), str(signed["bob"][0]),
        "--msg", str(signed["msg"]), "--out", str(tmp_path / "x.sig"),
    ])
    assert code == EXIT_USAGE


def test_sign_with_swapped_key_files(signed, tmp_path):
    # a public key where a secret key belongs does not decode
    code = main([
        "sign", "--sk", str(signed["alice"][0]), "--pks", str(signed["alice"][0]),
        "--msg", str(signed["msg"]), "--out", str(tmp_path / "x.sig"),
    ])
    assert code == EXIT_USAGE


def test_missing_file_is_usage_error(tmp_path):
    assert main(["verify", "--rho", str(tmp_path / "nope"), "--msg", str(tmp_path / "nope"),
                 "--sig", str(tmp_path / "nope")]) == EXIT_USAGE


def test_bad_seed_rejected_by_parser():
    with pytest.raises(SystemExit) as info:
        main(["keygen", "--rho", "rho.bin", "--seed", "abcd", "--out", "x"])
    assert info.value.code == EXIT_USAGE


def test_simulate_writes_identical_transcripts(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("RZMS_PARAMS", "production")
    paths = [tmp_path / "first.jsonl", tmp_path / "second.jsonl"]
    for path in paths:
        assert main(["simulate", "--signers", "3", "--participants", "1,2", "--seed", SEED_HEX,
                     "--transcript", str(path)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()
    out = capsys.readouterr().out
    assert "Session: accepted" in out
    assert "one send per signer pair: yes" in out


def test_simulate_with_fault_exits_nonzero(monkeypatch, capsys):
    monkeypatch.setenv("RZMS_PARAMS", "production")
    assert main(["simulate", "--signers", "2", "--seed", SEED_HEX, "--faults", "drop:0"]) == EXIT_FAILURE
    assert "Session: rejected (timeout)" in capsys.readouterr().out


def test_simulate_bad_participants(monkeypatch):
    monkeypatch.setenv("RZMS_PARAMS", "production")
    assert main(["simulate", "--signers", "2", "--participants", "1,x", "--seed", SEED_HEX]) == EXIT_USAGE
    assert main(["simulate", "--signers", "2", "--participants", "5", "--seed", SEED_HEX]) == EXIT_USAGE


def test_bench(monkeypatch, capsys):
    monkeypatch.setenv("RZMS_PARAMS", "production")
    assert main(["bench", "--iters", "2", "--signers", "2", "--seed", SEED_HEX]) == EXIT_OK
    out = capsys.readouterr().out
    assert "measured acceptance" in out
    assert "analytic acceptance" in out
