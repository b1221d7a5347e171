import csv
import json

import pytest

from multisig.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_keygen_writes_public_and_secret_files(tmp_path, capsys):
    out = tmp_path / "keys.json"
    code, stdout, _ = run(capsys, "keygen", "--count", "4", "--out", str(out),
                          "--seed", "9")
    assert code == 0
    assert "4 public keys" in stdout
    doc = json.loads(out.read_text())
    assert doc["schema"] == "multisig/keys/v1"
    assert len(doc["keys"]) == 4
    secret = tmp_path / "keys.secret.json"
    assert json.loads(secret.read_text())["schema"] == "multisig/secrets/v1"


def test_explicit_seed_makes_outputs_bit_identical(tmp_path, capsys):
    files = []
    for tag in ("a", "b"):
        keys = tmp_path / f"{tag}.json"
        sig = tmp_path / f"{tag}.sig"
        metrics = tmp_path / f"{tag}.metrics.json"
        bench = tmp_path / f"{tag}.bench.csv"
        endorse = tmp_path / f"{tag}.endorse.csv"
        attack = tmp_path / f"{tag}.attack.json"
        assert run(capsys, "keygen", "--count", "3", "--out", str(keys),
                   "--seed", "5")[0] == 0
        assert run(capsys, "simulate", "--scheme", "agms", "--signers", "7",
                   "--seed", "5", "--out", str(sig),
                   "--metrics", str(metrics))[0] == 0
        assert run(capsys, "bench", "--schemes", "agms",
                   "--signers-list", "3,7", "--reps", "2", "--seed", "5",
                   "--out", str(bench))[0] == 0
        assert run(capsys, "endorse", "--endorsers-list", "2,4", "--seed", "5",
                   "--toy-q", "65521", "--out", str(endorse))[0] == 0
        assert run(capsys, "attack", "ksum", "--target", "agms", "--seed",
                   "5", "--toy-q", "251", "--k", "2",
                   "--out", str(attack))[0] == 0
        files.append([p.read_bytes()
                      for p in (keys, sig, metrics, bench, endorse, attack)])
    assert files[0] == files[1]


def test_default_seed_keeps_timings(tmp_path, capsys):
    code, stdout, _ = run(capsys, "simulate", "--scheme", "gms",
                          "--signers", "3")
    assert code == 0
    assert "verified=true" in stdout
    assert "_ns=" in stdout  # wall-clock lines present without --seed
    code, stdout, _ = run(capsys, "simulate", "--scheme", "gms",
                          "--signers", "3", "--seed", "1")
    assert code == 0
    assert "_ns=" not in stdout


def test_simulate_reports_zero_exp_online(capsys):
    code, stdout, _ = run(capsys, "simulate", "--scheme", "agms",
                          "--signers", "7", "--seed", "2")
    assert code == 0
    assert "exp[sign_online]=0" in stdout
    assert "verified=true" in stdout


def test_simulate_parallel_flag_changes_nothing(tmp_path, capsys):
    outs = []
    for extra in ((), ("--parallel",)):
        sig = tmp_path / f"{len(extra)}.sig"
        metrics = tmp_path / f"{len(extra)}.metrics.json"
        code, stdout, _ = run(capsys, "simulate", "--scheme", "agms",
                              "--signers", "7", "--seed", "5",
                              "--out", str(sig), "--metrics", str(metrics),
                              *extra)
        assert code == 0
        outs.append((stdout, sig.read_bytes(), metrics.read_bytes()))
    assert outs[0] == outs[1]


def test_simulate_agms_timing_split(tmp_path, capsys):
    # no --seed, so wall-clock fields are emitted; almost all signing work
    # happens before the message exists
    metrics = tmp_path / "m.json"
    code, stdout, _ = run(capsys, "simulate", "--scheme", "agms",
                          "--signers", "63", "--backend", "curve",
                          "--metrics", str(metrics))
    assert code == 0
    assert "offline_ns=" in stdout and "online_ns=" in stdout
    doc = json.loads(metrics.read_text())
    assert doc["schema"] == "multisig/metrics/v1"
    assert doc["timings"]["online_ns"] < doc["timings"]["offline_ns"]


def test_gms_and_agms_write_the_same_signature(tmp_path, capsys):
    sigs = []
    for scheme in ("gms", "agms"):
        out = tmp_path / f"{scheme}.sig"
        assert run(capsys, "simulate", "--scheme", scheme, "--signers", "7",
                   "--seed", "9", "--out", str(out))[0] == 0
        sigs.append(out.read_bytes())
    assert sigs[0] == sigs[1]


def test_simulate_rejects_oversized_tree(capsys):
    code, _, stderr = run(capsys, "simulate", "--scheme", "gms",
                          "--signers", "100", "--branching", "2")
    assert code == 2
    assert "error:" in stderr


def test_simulate_gamma_needs_single_signer(capsys):
    code, _, stderr = run(capsys, "simulate", "--scheme", "gamma",
                          "--signers", "3")
    assert code == 2
    assert "single-signer" in stderr
    assert run(capsys, "simulate", "--scheme", "gamma", "--signers", "1",
               "--seed", "3")[0] == 0


def test_keygen_then_verify_round_trip(tmp_path, capsys):
    keys = tmp_path / "keys.json"
    sig = tmp_path / "out.sig"
    run(capsys, "keygen", "--count", "5", "--out", str(keys), "--seed", "8")
    assert run(capsys, "simulate", "--scheme", "gms", "--signers", "5",
               "--seed", "8", "--message", "hello", "--out", str(sig))[0] == 0
    code, stdout, _ = run(capsys, "verify", "--scheme", "gms", "--keys",
                          str(keys), "--signature", str(sig),
                          "--message", "hello")
    assert code == 0
    assert "signature valid: true" in stdout
    code, stdout, _ = run(capsys, "verify", "--scheme", "gms", "--keys",
                          str(keys), "--signature", str(sig),
                          "--message", "tampered")
    assert code == 1
    assert "signature valid: false" in stdout


def test_gamma_round_trip_shares_key_derivation(tmp_path, capsys):
    # keygen and a single-signer simulation at the same seed derive the
    # same first key, so the saved public key verifies the saved signature
    keys = tmp_path / "keys.json"
    sig = tmp_path / "g.sig"
    run(capsys, "keygen", "--count", "1", "--out", str(keys), "--seed", "3")
    assert run(capsys, "simulate", "--scheme", "gamma", "--signers", "1",
               "--seed", "3", "--message", "hi", "--out", str(sig))[0] == 0
    code, stdout, _ = run(capsys, "verify", "--scheme", "gamma", "--keys",
                          str(keys), "--signature", str(sig),
                          "--message", "hi")
    assert code == 0
    assert "signature valid: true" in stdout


def test_verify_keys_flags_bad_proofs(tmp_path, capsys):
    keys = tmp_path / "keys.json"
    run(capsys, "keygen", "--count", "2", "--out", str(keys), "--seed", "1")
    assert run(capsys, "verify-keys", "--keys", str(keys))[0] == 0
    doc = json.loads(keys.read_text())
    doc["keys"][1]["d"] = "0000"
    keys.write_text(json.dumps(doc))
    code, stdout, _ = run(capsys, "verify-keys", "--keys", str(keys))
    assert code == 1
    assert "key 1: FAIL" in stdout
    assert "1/2 keys verified" in stdout


def test_missing_file_is_a_usage_error(tmp_path, capsys):
    code, _, stderr = run(capsys, "verify", "--scheme", "gms", "--keys",
                          str(tmp_path / "nope.json"), "--signature",
                          str(tmp_path / "nope.sig"), "--message", "m")
    assert code == 2
    assert "error:" in stderr


def test_bench_csv_schema(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, _, _ = run(capsys, "bench", "--schemes", "gms,agms,cosi",
                     "--signers-list", "3,7", "--reps", "2", "--seed", "4",
                     "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["scheme", "N", "phase", "mean_ns", "std_ns",
                       "exp_count"]
    # agms splits signing into offline/online; others do not
    phases = {(r[0], r[2]) for r in rows[1:]}
    assert ("agms", "sign_offline") in phases
    assert ("agms", "sign_online") in phases
    assert ("gms", "sign_online") in phases
    assert ("cosi", "verify") in phases
    by = {(r[0], r[1], r[2]): r for r in rows[1:]}
    assert by[("agms", "7", "sign_online")][5] == "0"
    assert by[("agms", "7", "sign_offline")][5] == "7"
    assert by[("gms", "7", "verify")][5] == "3"
    assert by[("cosi", "7", "verify")][5] == "2"
    assert all(r[3] == "" and r[4] == "" for r in rows[1:])  # seeded run
    # one row per scheme/N/phase: agms has three phases, the others two
    assert len(rows) == 1 + (3 + 2 + 2) * 2


def test_bench_rejects_zero_reps(capsys):
    code, _, stderr = run(capsys, "bench", "--reps", "0")
    assert code == 2
    assert "--reps" in stderr


def test_bench_verify_time_flat_across_n(tmp_path, capsys):
    # unseeded so mean_ns is real; constant-size verification should not
    # care whether 4 or 64 signers produced the signature
    out = tmp_path / "bench.csv"
    code, _, _ = run(capsys, "bench", "--schemes", "agms",
                     "--signers-list", "4,64", "--reps", "5",
                     "--backend", "curve", "--out", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    verify_ns = {r[1]: float(r[3]) for r in rows[1:] if r[2] == "verify"}
    ratio = verify_ns["64"] / verify_ns["4"]
    assert 0.5 < ratio < 2.0
    assert all(r[5] == "0" for r in rows[1:] if r[2] == "sign_online")


def test_bench_json_format(tmp_path, capsys):
    out = tmp_path / "bench.json"
    code, _, _ = run(capsys, "bench", "--schemes", "gms", "--signers-list",
                     "3", "--reps", "1", "--seed", "1", "--format", "json",
                     "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "multisig/bench/v1"
    assert [r["phase"] for r in doc["rows"]] == ["sign_online", "verify"]


def test_attack_rogue_exit_codes(tmp_path, capsys):
    out = tmp_path / "rogue.json"
    code, stdout, _ = run(capsys, "attack", "rogue", "--toy-q", "65521",
                          "--seed", "6", "--out", str(out))
    assert code == 0
    assert "expectation=met" in stdout
    doc = json.loads(out.read_text())
    assert doc["attack"] == "rogue-key"
    assert doc["successes"] == 0
    assert doc["expectation_met"] is True


def test_attack_refuses_curve_backend(capsys):
    code, _, stderr = run(capsys, "attack", "rogue", "--backend", "curve")
    assert code == 2
    assert "toy" in stderr


def test_attack_ksum_negative_control(tmp_path, capsys):
    out = tmp_path / "ksum.json"
    code, stdout, _ = run(capsys, "attack", "ksum", "--target", "agms",
                          "--toy-q", "251", "--k", "2", "--seed", "0",
                          "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["successes"] == 0
    assert doc["expectation_met"] is True


def test_endorse_csv_schema(tmp_path, capsys):
    out = tmp_path / "endorse.csv"
    code, stdout, _ = run(capsys, "endorse", "--endorsers-list", "2,4",
                          "--toy-q", "65521", "--seed", "7", "--out", str(out))
    assert code == 0
    assert "revised n=2: step7_verify_calls=1" in stdout
    assert "default n=4: step7_verify_calls=4" in stdout
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["flow", "n_endorsers", "step", "wall_ns", "exp_count",
                       "verify_calls", "bytes"]
    assert len(rows) == 1 + 2 * (7 + 6)
    for flow, n, step, _, _, vcalls, _ in rows[1:]:
        if step == "7":
            assert vcalls == ("1" if flow == "revised" else n)


def test_endorse_json_format(tmp_path, capsys):
    out = tmp_path / "endorse.json"
    code, _, _ = run(capsys, "endorse", "--endorsers-list", "2",
                     "--toy-q", "65521", "--seed", "7", "--format", "json",
                     "--out", str(out))
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "multisig/endorsement/v1"
    assert [r["flow"] for r in doc["records"]] == ["revised", "default"]
    assert all(r["accepted"] for r in doc["records"])


def test_backend_env_variable(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MULTISIG_BACKEND", "curve")
    keys = tmp_path / "keys.json"
    code, stdout, _ = run(capsys, "keygen", "--count", "1", "--out",
                          str(keys), "--seed", "1")
    assert code == 0
    assert "secp256k1" in stdout
    doc = json.loads(keys.read_text())
    assert doc["group"]["backend"] == "secp256k1"


def test_unknown_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
