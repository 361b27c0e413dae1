"""Config parsing, the record codec, and end-to-end subcommand runs."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strobospec.cli import (
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    CodecError,
    ConfigError,
    build_manifest,
    decode_record,
    encode_record,
    load_config,
    main,
)
from strobospec.protocol import MeasurementRecord

GOOD_CONFIG = """\
[meta]
schema_version = 1

[oscillator]
omega_m = 1.0
kappa_m = 0.003
n_th = 1.0
delta = 0.01
dim = 20

[interaction]
omega = 0.02
tau = 1.0
t = 2.0
prep = g

[run]
n_cycles = 4096
n_trajectories = 8
burn_in = 64
seed = 5
"""

DUMMY_HASH = "ab" * 32


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(GOOD_CONFIG)
    return str(path)


# ---------------------------------------------------------------------------
# configuration


def test_load_config_converts_units(config_path):
    cfg = load_config(config_path)
    assert cfg.oscillator.omega_m == pytest.approx(2 * np.pi * 1.0)
    assert cfg.oscillator.kappa_m == pytest.approx(2 * np.pi * 0.003)
    assert cfg.interaction.Omega == pytest.approx(2 * np.pi * 0.02)
    assert cfg.interaction.T == 2.0
    assert cfg.qubit.kappa_1 == 0.0  # no t1 given: lossless probe
    assert cfg.mode == "quantum" and cfg.seed == 5


def test_load_config_qubit_lifetimes(tmp_path):
    path = tmp_path / "q.ini"
    path.write_text(GOOD_CONFIG + "\n[qubit]\nt1 = 4.0\nt2 = 2.5\n")
    cfg = load_config(path)
    assert cfg.qubit.kappa_1 == pytest.approx(0.25)
    assert cfg.qubit.kappa_2 == pytest.approx(0.4)


def test_load_config_rejects_unknown_content(tmp_path):
    unknown_key = tmp_path / "unknown_key.ini"
    unknown_key.write_text(GOOD_CONFIG.replace("dim = 20",
                                               "dim = 20\nomega_x = 1.0"))
    with pytest.raises(ConfigError, match="valid keys"):
        load_config(unknown_key)
    unknown_section = tmp_path / "unknown_section.ini"
    unknown_section.write_text(GOOD_CONFIG + "\n[membrane]\nd = 2.5\n")
    with pytest.raises(ConfigError, match="valid sections"):
        load_config(unknown_section)
    duplicated = tmp_path / "dup.ini"
    duplicated.write_text(GOOD_CONFIG + "\n[oscillator]\nomega_m = 2.0\n")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(duplicated)


def test_load_config_schema_version(tmp_path):
    path = tmp_path / "v.ini"
    path.write_text(GOOD_CONFIG.replace("schema_version = 1",
                                        "schema_version = 99"))
    with pytest.raises(ConfigError, match="schema_version"):
        load_config(path)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.ini")


def test_load_config_bad_value(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(GOOD_CONFIG.replace("n_th = 1.0", "n_th = warm"))
    with pytest.raises(ConfigError, match="n_th"):
        load_config(path)


# ---------------------------------------------------------------------------
# record codec


def _record(outcomes, preps, T=2.0):
    return MeasurementRecord(
        outcomes=np.asarray(outcomes, dtype=np.int8),
        preps=np.asarray(preps, dtype=np.uint8), T=T)


def test_encode_empty_record_is_header_plus_hash():
    data = encode_record(_record([], []), DUMMY_HASH)
    assert len(data) == 24 + 32
    record, digest = decode_record(data)
    assert len(record) == 0
    assert digest == DUMMY_HASH


def test_encode_bit_layout():
    data = encode_record(_record([1, -1, 1, -1], [1, 1, 0, 0]), DUMMY_HASH)
    assert data[:4] == b"PQSR"
    assert list(data[24:28]) == [0b11, 0b10, 0b01, 0b00]


@given(
    bits=st.lists(st.tuples(st.booleans(), st.booleans()), max_size=200),
    T=st.floats(min_value=1e-9, max_value=1e3),
)
@settings(max_examples=50, deadline=None)
def test_codec_round_trip(bits, T):
    outcomes = [1 if o else -1 for o, _ in bits]
    preps = [1 if p else 0 for _, p in bits]
    original = _record(outcomes, preps, T)
    decoded, digest = decode_record(encode_record(original, DUMMY_HASH))
    np.testing.assert_array_equal(decoded.outcomes, original.outcomes)
    np.testing.assert_array_equal(decoded.preps, original.preps)
    assert decoded.T == original.T
    assert digest == DUMMY_HASH


def test_decode_rejects_corruption():
    data = encode_record(_record([1, -1], [0, 1]), DUMMY_HASH)
    with pytest.raises(CodecError, match="magic"):
        decode_record(b"XXXX" + data[4:])
    with pytest.raises(CodecError, match="offset"):
        decode_record(data[:-5])
    with pytest.raises(CodecError, match="truncated"):
        decode_record(data[:10])
    reserved = bytearray(data)
    reserved[25] |= 0b100
    with pytest.raises(CodecError, match="offset 25"):
        decode_record(bytes(reserved))
    with pytest.raises(ValueError, match="hash"):
        encode_record(_record([1], [0]), "abcd")


def test_manifest_hash_deterministic(config_path):
    cfg = load_config(config_path)
    a = build_manifest(cfg, out_files=["x.pqsr"])
    b = build_manifest(cfg, out_files=["elsewhere/y.pqsr"])
    assert a["manifest_hash"] == b["manifest_hash"]
    assert len(bytes.fromhex(a["manifest_hash"])) == 32


# ---------------------------------------------------------------------------
# subcommands end to end


def test_simulate_is_byte_reproducible(tmp_path, config_path):
    for sub in ("a", "b"):
        out = tmp_path / sub
        out.mkdir()
        code = main(["--out-dir", str(out), "simulate",
                     "--config", config_path])
        assert code == EXIT_OK
    rec_a = (tmp_path / "a" / "record.pqsr").read_bytes()
    rec_b = (tmp_path / "b" / "record.pqsr").read_bytes()
    assert rec_a == rec_b
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed"] == 5
    assert manifest["segment_length"] == 512


def test_spectrum_and_fit_pipeline(tmp_path, config_path):
    assert main(["--out-dir", str(tmp_path), "simulate",
                 "--config", config_path]) == EXIT_OK
    record = str(tmp_path / "record.pqsr")
    assert main(["--out-dir", str(tmp_path), "spectrum",
                 "--record", record, "--segment-length", "512"]) == EXIT_OK
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "frequency_hz,psd_s,stderr_s"
    assert len(lines) == 1 + 256
    meta = json.loads((tmp_path / "spectrum.json").read_text())
    assert meta["parseval_mean_power"] == pytest.approx(1.0, abs=1e-12)
    assert main(["--out-dir", str(tmp_path), "fit", "--record", record,
                 "--segment-length", "512",
                 "--window", "0.002", "0.02"]) == EXIT_OK
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert 0.0 < fit["center_hz"] < 0.02
    # a window narrower than 8 bins is a usage error
    assert main(["--out-dir", str(tmp_path), "fit", "--record", record,
                 "--window", "0.4", "0.401"]) == EXIT_CONFIG


def test_simulate_exit_codes(tmp_path, config_path):
    assert main(["simulate", "--config",
                 str(tmp_path / "missing.ini")]) == EXIT_CONFIG
    cramped = tmp_path / "cramped.ini"
    cramped.write_text(GOOD_CONFIG.replace("dim = 20", "dim = 6"))
    assert main(["--out-dir", str(tmp_path), "simulate",
                 "--config", str(cramped)]) == EXIT_NUMERIC


def test_device_subcommand(tmp_path):
    assert main(["--out-dir", str(tmp_path), "device"]) == EXIT_OK
    payload = json.loads((tmp_path / "device.json").read_text())
    assert payload["lambda"] == pytest.approx(1.2939, rel=1e-3)
    assert payload["n_th"] == pytest.approx(46.86, rel=1e-3)
    assert payload["X_zpf_m"] == pytest.approx(0.9263e-15, rel=1e-3)


def test_oracle_subcommand_passes(capsys):
    assert main(["oracle"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("PASS") == 2
