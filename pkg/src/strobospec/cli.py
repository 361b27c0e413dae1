"""Command-line front end: config parsing, run orchestration, persistence.

Configuration is INI-style with sections mirroring the parameter types
(oscillator, qubit, interaction, calibration, run); all frequencies in
the file are in Hz and are converted to rad/s once, here at the boundary.
Unknown keys are hard errors. Records are stored in a compact binary
format (one byte per cycle) with a trailing manifest hash so a rerun with
the same manifest reproduces the file byte for byte.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 check failure.
"""

import argparse
import configparser
import hashlib
import json
import struct
import sys
import time

import numpy as np
import scipy

from . import __version__
from .fock import OscillatorParams, TruncationError
from .measurement import (
    InteractionParams,
    QubitModel,
    effective_thermal_params,
    imperfect_kraus,
    kraus_maps,
    oracle_conditional_maps,
)
from .protocol import (
    CalibrationTone,
    MeasurementRecord,
    ProtocolConfig,
    TruncationBreachError,
    run_quantum,
    run_semiclassical,
)
from .spectral import (
    FitFailureError,
    area_to_phonons,
    asymmetry_analysis,
    estimate_psd,
    fit_lorentzian,
    split_by_prep,
    theory_spectrum,
)
from . import device as dev
from . import fluxonium as flx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_CHECK = 4

SCHEMA_VERSION = 1
CODEC_VERSION = 1
MAGIC = b"PQSR"
_HEADER = struct.Struct("<4sHHdQ")  # magic, version, flags, T, count
FLAG_SEMICLASSICAL = 0x0001


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


class CodecError(ValueError):
    """Malformed record file; message carries the byte offset."""


# ---------------------------------------------------------------------------
# configuration

TWO_PI = 2.0 * np.pi

_SCHEMA = {
    "meta": ("schema_version",),
    "oscillator": ("omega_m", "kappa_m", "n_th", "delta", "dim"),
    "qubit": ("eta_g", "eta_e", "eps_g", "eps_e", "t1", "t2"),
    "interaction": ("omega", "tau", "t", "prep"),
    "calibration": ("amplitude", "frequency", "phase"),
    "run": ("mode", "n_cycles", "n_trajectories", "burn_in", "seed"),
}


def load_config(path):
    """Parse an INI config file into a ProtocolConfig.

    Frequencies (omega_m, delta, omega, calibration frequency, kappa_m)
    are given in Hz in the file and converted to rad/s here; qubit
    lifetimes t1, t2 are in seconds and become decay rates 1/T.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}")
    if not read:
        raise ConfigError(f"config file not found or unreadable: {path}")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"unknown section [{section}]; valid sections: "
                + ", ".join(_SCHEMA)
            )
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {key!r} in [{section}]; valid keys: "
                    + ", ".join(_SCHEMA[section])
                )
    try:
        version = parser.getint("meta", "schema_version")
    except (configparser.Error, ValueError) as exc:
        raise ConfigError(f"missing or bad [meta] schema_version: {exc}")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version {version} != supported {SCHEMA_VERSION}; "
            "regenerate the config against this package version"
        )

    def get(section, key, cast=float, default=None):
        try:
            if default is not None and not parser.has_option(section, key):
                return default
            raw = parser.get(section, key)
            return cast(raw)
        except (configparser.Error, ValueError) as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {exc}")

    try:
        osc = OscillatorParams(
            omega_m=TWO_PI * get("oscillator", "omega_m"),
            kappa_m=TWO_PI * get("oscillator", "kappa_m"),
            n_th=get("oscillator", "n_th"),
            delta=TWO_PI * get("oscillator", "delta", default=0.0),
            dim=get("oscillator", "dim", cast=int),
        )
        qubit = QubitModel(
            eta_g=get("qubit", "eta_g", default=1.0),
            eta_e=get("qubit", "eta_e", default=1.0),
            eps_g=get("qubit", "eps_g", default=0.0),
            eps_e=get("qubit", "eps_e", default=0.0),
            kappa_1=1.0 / get("qubit", "t1", default=np.inf),
            kappa_2=1.0 / get("qubit", "t2", default=np.inf),
        )
        interaction = InteractionParams(
            Omega=TWO_PI * get("interaction", "omega"),
            tau=get("interaction", "tau"),
            T=get("interaction", "t"),
            prep=get("interaction", "prep", cast=str),
        )
        tone = CalibrationTone(
            amplitude=get("calibration", "amplitude", default=0.0),
            frequency=TWO_PI * get("calibration", "frequency", default=0.0),
            phase=get("calibration", "phase", default=0.0),
        ) if parser.has_section("calibration") else CalibrationTone()
        cfg = ProtocolConfig(
            oscillator=osc,
            qubit=qubit,
            interaction=interaction,
            calibration=tone,
            mode=get("run", "mode", cast=str, default="quantum"),
            n_cycles=get("run", "n_cycles", cast=int),
            n_trajectories=get("run", "n_trajectories", cast=int, default=64),
            burn_in=get("run", "burn_in", cast=int, default=512),
            seed=get("run", "seed", cast=int, default=0),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc))
    return cfg


# ---------------------------------------------------------------------------
# record codec


def encode_record(record: MeasurementRecord, manifest_hash):
    """Serialize a record: 24-byte header, one byte per cycle, 32-byte hash.

    Each outcome byte has bit0 = outcome (1 means +1) and bit1 = prep
    (1 means excited-state preparation); bits 2-7 are zero.
    """
    flags = 0
    body = ((record.outcomes > 0).astype(np.uint8)
            | (record.preps.astype(np.uint8) << 1))
    header = _HEADER.pack(MAGIC, CODEC_VERSION, flags, record.T, len(record))
    digest = bytes.fromhex(manifest_hash)
    if len(digest) != 32:
        raise ValueError("manifest hash must be 32 bytes of hex")
    return header + body.tobytes() + digest


def decode_record(data, segment_length=None):
    """Inverse of encode_record; returns (record, manifest_hash_hex)."""
    if len(data) < _HEADER.size:
        raise CodecError(f"truncated header: {len(data)} bytes at offset 0")
    magic, version, flags, T, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise CodecError(f"bad magic {magic!r} at offset 0")
    if version != CODEC_VERSION:
        raise CodecError(f"unsupported codec version {version} at offset 4")
    expected = _HEADER.size + count + 32
    if len(data) != expected:
        raise CodecError(
            f"length {len(data)} != expected {expected}; truncation at "
            f"offset {min(len(data), expected)}"
        )
    body = np.frombuffer(data, dtype=np.uint8, count=count, offset=_HEADER.size)
    if count and int(body.max()) > 3:
        bad = int(np.argmax(body > 3))
        raise CodecError(f"reserved bits set at offset {_HEADER.size + bad}")
    outcomes = np.where(body & 1, 1, -1).astype(np.int8)
    preps = ((body >> 1) & 1).astype(np.uint8)
    digest = data[_HEADER.size + count:]
    record = MeasurementRecord(
        outcomes=outcomes, preps=preps, T=T,
        fingerprint=digest.hex(), segment_length=segment_length,
    )
    return record, digest.hex()


# ---------------------------------------------------------------------------
# manifest


def build_manifest(cfg: ProtocolConfig, out_files=()):
    """Run manifest with a deterministic hash over physics and sampling.

    The hash covers the config snapshot, master seed, substream ids and
    code versions — not wall-clock or paths — so identical manifests
    imply byte-identical records.
    """
    deterministic = {
        "config": {
            "oscillator": vars(cfg.oscillator),
            "qubit": vars(cfg.qubit),
            "interaction": vars(cfg.interaction),
            "calibration": vars(cfg.calibration),
            "mode": cfg.mode,
            "n_cycles": cfg.n_cycles,
            "n_trajectories": cfg.n_trajectories,
            "burn_in": cfg.burn_in,
        },
        "seed": cfg.seed,
        "substreams": [[cfg.seed, i] for i in range(cfg.n_trajectories)],
        "versions": {
            "package": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "codec": CODEC_VERSION,
            "schema": SCHEMA_VERSION,
        },
    }
    blob = json.dumps(deterministic, sort_keys=True, default=float)
    digest = hashlib.sha256(blob.encode()).hexdigest()
    return {
        **deterministic,
        "manifest_hash": digest,
        "files": list(out_files),
        "wall_clock": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _write_csv(path, header, columns):
    data = np.column_stack(columns)
    np.savetxt(path, data, delimiter=",", header=header, comments="")


# ---------------------------------------------------------------------------
# subcommands


def _load_record(args):
    with open(args.record, "rb") as fh:
        data = fh.read()
    record, digest = decode_record(data, segment_length=args.segment_length)
    return record, digest


def cmd_simulate(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = ProtocolConfig(
            oscillator=cfg.oscillator, qubit=cfg.qubit,
            interaction=cfg.interaction, calibration=cfg.calibration,
            mode=cfg.mode, n_cycles=cfg.n_cycles,
            n_trajectories=cfg.n_trajectories, burn_in=cfg.burn_in,
            seed=args.seed,
        )
    runner = run_quantum if cfg.mode == "quantum" else run_semiclassical
    record = runner(cfg)
    record_path = f"{args.out_dir}/record.pqsr"
    manifest_path = f"{args.out_dir}/manifest.json"
    manifest = build_manifest(cfg, out_files=[record_path])
    manifest["segment_length"] = record.segment_length
    manifest["clamp_count"] = record.clamp_count
    with open(record_path, "wb") as fh:
        fh.write(encode_record(record, manifest["manifest_hash"]))
    _write_json(manifest_path, manifest)
    print(f"wrote {record_path} ({len(record)} cycles) and {manifest_path}")
    return EXIT_OK


def _psd_for(args, record):
    return estimate_psd(record, args.nfft, method=args.method)


def cmd_spectrum(args):
    record, digest = _load_record(args)
    spec = _psd_for(args, record)
    csv_path = f"{args.out_dir}/spectrum.csv"
    _write_csv(csv_path, "frequency_hz,psd_s,stderr_s",
               (spec.omega / TWO_PI, spec.psd, spec.stderr))
    _write_json(f"{args.out_dir}/spectrum.json", {
        "manifest_hash": digest,
        "n_batches": spec.n_batches,
        "N": spec.N,
        "T_s": spec.T,
        "parseval_mean_power": float(spec.psd.sum() / (spec.N * spec.T)),
    })
    print(f"wrote {csv_path} ({spec.n_batches} batches of {spec.N})")
    return EXIT_OK


def cmd_fit(args):
    record, digest = _load_record(args)
    spec = _psd_for(args, record)
    window = (TWO_PI * args.window[0], TWO_PI * args.window[1])
    fit = fit_lorentzian(spec, window)
    payload = {
        "manifest_hash": digest,
        "center_hz": fit.center / TWO_PI,
        "center_err_hz": fit.center_err / TWO_PI,
        "fwhm_hz": fit.fwhm / TWO_PI,
        "fwhm_err_hz": fit.fwhm_err / TWO_PI,
        "height_s": fit.height,
        "background_s": fit.background,
        "area": fit.area,
        "area_err": fit.area_err,
        "chi2_reduced": fit.chi2_reduced,
    }
    _write_json(f"{args.out_dir}/fit.json", payload)
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def cmd_asymmetry(args):
    cfg = load_config(args.config)
    if cfg.interaction.prep != "alternating":
        raise ConfigError("asymmetry requires prep = alternating")
    if args.record:
        record, _ = _load_record(args)
    else:
        runner = run_quantum if cfg.mode == "quantum" else run_semiclassical
        record = runner(cfg)
    halves = split_by_prep(record)
    results = {}
    for name, sub in halves.items():
        spec = estimate_psd(sub, args.nfft, method=args.method)
        window = _asymmetry_window(cfg, spec)
        fit = fit_lorentzian(spec, window)
        prep = "g" if name.endswith("_g") else "e"
        phonons = area_to_phonons(
            fit.area, cfg.interaction.Omega, cfg.interaction.tau,
            cfg.qubit, prep)
        err = area_to_phonons(
            fit.area_err, cfg.interaction.Omega, cfg.interaction.tau,
            cfg.qubit, prep)
        results[prep] = {
            "area": fit.area, "phonons": phonons, "phonons_err": abs(err),
            "fwhm_hz": fit.fwhm / TWO_PI,
        }
    pred = asymmetry_analysis(
        results["g"]["phonons"], results["e"]["phonons"], cfg.qubit,
        cfg.interaction.tau)
    payload = {
        "per_prep": results,
        "measured_difference": results["e"]["phonons"] - results["g"]["phonons"],
        "difference_err": float(np.hypot(results["e"]["phonons_err"],
                                         results["g"]["phonons_err"])),
        "predicted_difference": pred["predicted"],
    }
    _write_json(f"{args.out_dir}/asymmetry.json", payload)
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def _asymmetry_window(cfg, spec):
    """Fit window: the detuning peak ± a few effective linewidths."""
    kappa_eff, _ = effective_thermal_params(
        "alternating", cfg.interaction, cfg.qubit, cfg.oscillator)
    center = abs(cfg.oscillator.delta)
    d_omega = TWO_PI / (spec.N * spec.T)
    half = max(6 * kappa_eff, 12 * d_omega)
    nyquist = np.pi / spec.T
    return (max(center - half, d_omega), min(center + half, nyquist))


def cmd_device(args):
    g = dev.GeometryParams(d=args.d * 1e-6)
    masses = dev.effective_mass_lambda(g)
    omega_m = TWO_PI * args.omega_m
    scales = dev.zpf(masses["m_eff"], omega_m)
    coupling = dev.coupling_and_dispersive(
        TWO_PI * args.omega_q, args.phi_me, g.C_m, g.d, scales["X_zpf"],
        args.beta, args.v_b, args.v_offset,
        Delta=TWO_PI * (args.omega_m - args.omega_q))
    softening = dev.spring_softening(g, args.ec * 1e9, scales["X_zpf"],
                                     beta=args.beta)
    n_th = dev.thermal_occupation(args.temperature, omega_m)
    dp = dev.DPParams(M=masses["M"])
    times = dev.dp_times(dp, args.t1m, n_th, X_zpf=scales["X_zpf"])
    payload = {
        "inputs": vars(args).copy(),
        "lambda": masses["lambda"],
        "M_kg": masses["M"],
        "m_eff_kg": masses["m_eff"],
        "X_zpf_m": scales["X_zpf"],
        "Omega_hz": coupling["Omega"] / TWO_PI,
        "chi_hz": coupling["chi"] / TWO_PI,
        "zeta_hz_per_v2": softening["zeta"],
        "n_th": n_th,
        "tau_G_s": times["tau_G"],
        "tau_th_s": times["tau_th"],
        "tau_cat_s": times["tau_cat"],
    }
    payload["inputs"].pop("func", None)
    _write_json(f"{args.out_dir}/device.json", payload)
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def cmd_fluxonium(args):
    cp = flx.CircuitParams(
        E_J=args.ej * 1e9, E_C=args.ec * 1e9, E_L=args.el * 1e9,
        phi_ext=np.pi, omega_chain=args.omega_chain * 1e9,
        g_qc=args.g_qc * 1e6)
    eig = flx.diagonalize(cp)
    lines = flx.chain_coupled_spectrum(cp, [np.pi], n_fluxonium=10)
    distance = flx.estimate_gap_distance(
        args.omega_bfc * 1e6, args.omega_afc * 1e6,
        cp.E_J, cp.E_L, n_mc=args.n_mc, seed=args.seed)
    payload = {
        "inputs": {k: v for k, v in vars(args).items() if k != "func"},
        "bare_gap_hz": eig.transition(0, 1),
        "chain_coupled_gap_hz": lines[0, 0],
        "phi_ge": abs(eig.phi_elements[0, 1]),
        "n_ge": abs(eig.n_elements[0, 1]),
        "n_gf": abs(eig.n_elements[0, 2]),
        "n_eh": abs(eig.n_elements[1, 3]),
        "closed_form_gap_hz": flx.heavy_gap_approx(cp.E_J, cp.E_C, cp.E_L),
        "gap_distance_m": distance["d"],
        "gap_distance_sigma_m": distance["sigma_d"],
    }
    _write_json(f"{args.out_dir}/fluxonium.json", payload)
    if args.sweep:
        flux = np.linspace(np.pi - 0.5, np.pi + 0.5, args.sweep)
        sweep = flx.chain_coupled_spectrum(cp, flux, n_fluxonium=8)
        _write_csv(f"{args.out_dir}/fluxonium_sweep.csv",
                   "phi_ext_rad," + ",".join(
                       f"line{i}_hz" for i in range(sweep.shape[1])),
                   (flux,) + tuple(sweep.T))
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def cmd_stark(args):
    shift = flx.stark_shift(TWO_PI * args.omega_d, TWO_PI * args.delta_st,
                            args.n_up)
    rates = flx.dressed_rates(args.gamma_ge, args.gamma_fh,
                              shift["exact"], TWO_PI * args.delta_st,
                              args.amp_noise)
    payload = {
        "inputs": {k: v for k, v in vars(args).items() if k != "func"},
        "shift_exact_hz": shift["exact"] / TWO_PI,
        "shift_series_hz": shift["series"] / TWO_PI,
        "mixing_angle_rad": shift["theta"],
        "Gamma_1": rates["Gamma_1"],
        "Gamma_phi": rates["Gamma_phi"],
        "Gamma_2star": rates["Gamma_2star"],
    }
    _write_json(f"{args.out_dir}/stark.json", payload)
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def cmd_dp(args):
    dp = dev.DPParams(M=args.mass * 1e-12, alpha_sq=args.alpha_sq)
    times = dev.dp_times(dp, args.t1m, args.n_th, X_zpf=args.x_zpf * 1e-15)
    payload = {
        "inputs": {k: v for k, v in vars(args).items() if k != "func"},
        **{k: float(v) for k, v in times.items()},
    }
    _write_json(f"{args.out_dir}/dp.json", payload)
    print(json.dumps(payload, indent=2, default=float))
    return EXIT_OK


def cmd_oracle(args):
    """Joint-Lindblad cross-check: conditional-map error ∝ (Ωτ)³."""
    osc = OscillatorParams(omega_m=TWO_PI * 4.4e6, kappa_m=1e-3, n_th=0.5,
                           delta=0.0, dim=args.dim)
    qubit = QubitModel(kappa_1=1.0 / 7.4e-6, kappa_2=1.0 / 4.2e-6)
    taus = np.array([0.5e-6, 1e-6, 2e-6, 4e-6])
    Omega = TWO_PI * 4.0e3
    failures = []
    for prep in ("g", "e"):
        errs = []
        for tau in taus:
            oracle = oracle_conditional_maps(osc, qubit, Omega, tau, prep)
            model = imperfect_kraus(prep, qubit, Omega, tau, args.dim,
                                    include_free_evolution=osc)
            err = max(
                np.linalg.norm(oracle["K_plus"] - model["Kbar_plus"]),
                np.linalg.norm(oracle["K_minus"] - model["Kbar_minus"]),
            )
            errs.append(err)
        slope = np.polyfit(np.log(Omega * taus), np.log(errs), 1)[0]
        ok = abs(slope - 3.0) <= 0.3
        print(f"oracle prep={prep}: slope {slope:.3f} "
              f"{'PASS' if ok else 'FAIL'} (target 3.0 +- 0.3)")
        if not ok:
            failures.append(prep)
    return EXIT_OK if not failures else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing


def _add_record_args(sub):
    sub.add_argument("--record", required=True, help="record file path")
    sub.add_argument("--segment-length", type=int, default=None)
    sub.add_argument("--nfft", type=int, default=256)
    sub.add_argument("--method", default="periodogram",
                     choices=("periodogram", "autocorr"))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="strobospec",
        description="Stroboscopic weak-measurement simulator and analysis",
    )
    parser.add_argument("--out-dir", default=".")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a protocol and write a record")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="PSD of a record")
    _add_record_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", help="Lorentzian fit of a record's PSD")
    _add_record_args(p)
    p.add_argument("--window", type=float, nargs=2, required=True,
                   metavar=("LO_HZ", "HI_HZ"))
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("asymmetry", help="sideband asymmetry analysis")
    p.add_argument("--config", required=True)
    p.add_argument("--record", default=None)
    p.add_argument("--segment-length", type=int, default=None)
    p.add_argument("--nfft", type=int, default=256)
    p.add_argument("--method", default="periodogram",
                   choices=("periodogram", "autocorr"))
    p.set_defaults(func=cmd_asymmetry)

    p = sub.add_parser("device", help="electromechanics calculators")
    p.add_argument("--d", type=float, default=2.5, help="gap (um)")
    p.add_argument("--omega-m", type=float, default=4.4e6, help="Hz")
    p.add_argument("--omega-q", type=float, default=2.35e6, help="Hz")
    p.add_argument("--phi-me", type=float, default=3.04)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--v-b", type=float, default=5.6)
    p.add_argument("--v-offset", type=float, default=0.0)
    p.add_argument("--ec", type=float, default=0.418, help="GHz")
    p.add_argument("--temperature", type=float, default=0.010, help="K")
    p.add_argument("--t1m", type=float, default=5.9e-3, help="s")
    p.set_defaults(func=cmd_device)

    p = sub.add_parser("fluxonium", help="circuit spectrum and gap distance")
    p.add_argument("--ej", type=float, default=4.886, help="GHz")
    p.add_argument("--ec", type=float, default=0.408, help="GHz")
    p.add_argument("--el", type=float, default=0.135, help="GHz")
    p.add_argument("--omega-chain", type=float, default=3.650, help="GHz")
    p.add_argument("--g-qc", type=float, default=197.0, help="MHz")
    p.add_argument("--omega-bfc", type=float, default=4.93, help="MHz")
    p.add_argument("--omega-afc", type=float, default=2.35, help="MHz")
    p.add_argument("--n-mc", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", type=int, default=0,
                   help="flux points for a sweep CSV (0 = none)")
    p.set_defaults(func=cmd_fluxonium)

    p = sub.add_parser("stark", help="drive-dressed qubit shift and rates")
    p.add_argument("--omega-d", type=float, required=True, help="Hz")
    p.add_argument("--delta-st", type=float, required=True, help="Hz")
    p.add_argument("--n-up", type=float, default=1.0)
    p.add_argument("--gamma-ge", type=float, default=0.0, help="1/s")
    p.add_argument("--gamma-fh", type=float, default=0.0, help="1/s")
    p.add_argument("--amp-noise", type=float, default=0.006)
    p.set_defaults(func=cmd_stark)

    p = sub.add_parser("dp", help="gravitational-collapse timescales")
    p.add_argument("--mass", type=float, default=5.31, help="ng")
    p.add_argument("--alpha-sq", type=float, default=6.0)
    p.add_argument("--t1m", type=float, default=5.9e-3, help="s")
    p.add_argument("--n-th", type=float, default=47.0)
    p.add_argument("--x-zpf", type=float, default=0.9, help="fm")
    p.set_defaults(func=cmd_dp)

    p = sub.add_parser("oracle", help="joint-Lindblad scaling cross-check")
    p.add_argument("--dim", type=int, default=8)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CodecError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TruncationBreachError, TruncationError, FitFailureError,
            np.linalg.LinAlgError, flx.ConvergenceError,
            flx.NoSolutionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
