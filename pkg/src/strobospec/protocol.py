"""Stroboscopic measurement-record engines.

Two generators of ±1 records:

* run_quantum — conditional density-matrix trajectories. The free
  evolution between probes exploits that the damped-thermal Liouvillian
  never mixes density-matrix sidebands rho[m, m+k] with different k, so
  each cycle costs one small matrix product per sideband instead of a
  dim² x dim² superoperator application. The weak probe itself is applied
  in operator form (second order in theta_1), including qubit
  preparation, lifetime and readout imperfections.

* run_semiclassical — exact discrete Ornstein-Uhlenbeck update of a
  complex amplitude, outcomes drawn as Bernoulli trials with mean
  linear in Re(alpha).

Records from either engine feed the spectral module unchanged.
"""

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .fock import OscillatorParams, thermal_state
from .measurement import (
    InteractionParams,
    QubitModel,
    effective_thermal_params,
    kraus_coefficients,
)

PREP_G = 0
PREP_E = 1

TRUNCATION_BREACH_TOL = 1e-4


class TruncationBreachError(RuntimeError):
    """Conditional state climbed into the top Fock levels."""


class InsufficientDataError(ValueError):
    """Record too short for the requested batching."""


@dataclass(frozen=True)
class CalibrationTone:
    """Deterministic small rotation added to the outcome mean.

    amplitude : peak extra rotation (rad), must be well below 1
    frequency : tone frequency in the record's rotating frame (rad/s)
    phase     : phase offset (rad)
    """

    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.amplitude < 0.5:
            raise ValueError(
                f"calibration amplitude must be small, got {self.amplitude}"
            )

    def mean_shift(self, times):
        if self.amplitude == 0.0:
            return 0.0
        return self.amplitude * np.cos(self.frequency * times + self.phase)


@dataclass(frozen=True)
class ProtocolConfig:
    """Complete description of one stroboscopic run."""

    oscillator: OscillatorParams
    qubit: QubitModel
    interaction: InteractionParams
    n_cycles: int
    calibration: CalibrationTone = CalibrationTone()
    mode: str = "quantum"
    seed: int = 0
    n_trajectories: int = 64
    burn_in: int = 512

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValueError(f"n_cycles must be >= 1, got {self.n_cycles}")
        if self.mode not in ("quantum", "semiclassical"):
            raise ValueError(f"mode must be quantum or semiclassical, got {self.mode!r}")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")

    def fingerprint(self):
        """Stable hash of every physics- and sampling-relevant parameter."""
        blob = json.dumps(
            {
                "oscillator": vars(self.oscillator),
                "qubit": vars(self.qubit),
                "interaction": vars(self.interaction),
                "calibration": vars(self.calibration),
                "n_cycles": self.n_cycles,
                "mode": self.mode,
                "seed": self.seed,
                "n_trajectories": self.n_trajectories,
                "burn_in": self.burn_in,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class MeasurementRecord:
    """Ordered ±1 outcomes with per-cycle preparation labels.

    outcomes : int8 array of ±1
    preps    : uint8 array, PREP_G / PREP_E, same length
    T        : cycle period (s)
    segment_length : cycles per statistically independent trajectory;
        spectral batches must not straddle segment boundaries. None means
        the whole record is one segment.
    """

    outcomes: np.ndarray
    preps: np.ndarray
    T: float
    fingerprint: str = ""
    seed: int = 0
    segment_length: int = None
    clamp_count: int = 0

    def __post_init__(self):
        if len(self.outcomes) != len(self.preps):
            raise ValueError("outcomes and preps must have equal length")
        if self.segment_length is not None and len(self.outcomes) % self.segment_length:
            raise ValueError("record length must be a multiple of segment_length")

    def __len__(self):
        return len(self.outcomes)


def _prep_pattern(prep, n):
    if prep == "g":
        return np.full(n, PREP_G, dtype=np.uint8)
    if prep == "e":
        return np.full(n, PREP_E, dtype=np.uint8)
    pattern = np.empty(n, dtype=np.uint8)
    pattern[0::2] = PREP_G
    pattern[1::2] = PREP_E
    return pattern


# ---------------------------------------------------------------------------
# sideband propagators for the damped-thermal mode


def sideband_propagators(osc: OscillatorParams, t, extra_down=0.0, extra_up=0.0):
    """exp(G_k t) for every density-matrix sideband k of the thermal mode.

    The Liouvillian -i[Δ a†a, .] + γ↓ D[a] + γ↑ D[a†] maps the vector
    v_k[m] = rho[m, m+k] onto itself with the tridiagonal generator

        G_k[m, m]   = iΔk - γ↓(w↓(m)+w↓(m+k))/2 - γ↑(w↑(m)+w↑(m+k))/2
        G_k[m, m+1] = γ↓ sqrt((m+1)(m+1+k))
        G_k[m, m-1] = γ↑ sqrt(m(m+k))

    with w↓(m) = m and w↑(m) = m+1 except w↑(dim-1) = 0, the truncated
    diagonal of a a† — so the result agrees entrywise with
    exp(mech_liouvillian t) and preserves trace exactly. extra_down and
    extra_up add to the thermal rates (used by tests that fold dynamical
    backaction into free evolution).
    """
    g_down = osc.kappa_m * (osc.n_th + 1) + extra_down
    g_up = osc.kappa_m * osc.n_th + extra_up
    w_up_full = np.arange(1, osc.dim + 1, dtype=float)
    w_up_full[-1] = 0.0  # truncated a a† vanishes on the top level
    props = []
    for k in range(osc.dim):
        size = osc.dim - k
        m = np.arange(size, dtype=float)
        gen = np.zeros((size, size), dtype=complex)
        gen[np.arange(size), np.arange(size)] = (
            1j * osc.delta * k
            - g_down * (2 * m + k) / 2
            - g_up * (w_up_full[:size] + w_up_full[k:]) / 2
        )
        if size > 1:
            mm = np.arange(size - 1, dtype=float)
            gen[np.arange(size - 1), np.arange(1, size)] = g_down * np.sqrt(
                (mm + 1) * (mm + 1 + k)
            )
            gen[np.arange(1, size), np.arange(size - 1)] = g_up * np.sqrt(
                (mm + 1) * (mm + 1 + k)
            )
        props.append(expm(gen * t))
    return props


def _free_evolve(rho, props, dim):
    """Apply the sideband propagators to a (B, dim, dim) trajectory stack."""
    for k in range(dim):
        rows = np.arange(dim - k)
        cols = rows + k
        v = rho[:, rows, cols]
        v = v @ props[k].T
        rho[:, rows, cols] = v
        if k > 0:
            rho[:, cols, rows] = v.conj()
    return rho


# batched ladder-operator actions on (B, dim, dim) stacks


def _apply_meas(rho, c_a, c_adag, sq):
    """c_a (a rho + rho a†) + c_adag (a† rho + rho a)."""
    out = np.zeros_like(rho)
    if c_a != 0.0:
        out[:, :-1, :] += c_a * sq[:, None] * rho[:, 1:, :]
        out[:, :, :-1] += c_a * sq[None, :] * rho[:, :, 1:]
    if c_adag != 0.0:
        out[:, 1:, :] += c_adag * sq[:, None] * rho[:, :-1, :]
        out[:, :, 1:] += c_adag * sq[None, :] * rho[:, :, :-1]
    return out


def _apply_diss(rho, c_a, c_adag, sq, n_diag):
    """c_a D[a] rho + c_adag D[a†] rho."""
    out = np.zeros_like(rho)
    if c_a != 0.0:
        out[:, :-1, :-1] += c_a * (sq[:, None] * sq[None, :]) * rho[:, 1:, 1:]
        out -= c_a * 0.5 * (n_diag[:, None] + n_diag[None, :]) * rho
    if c_adag != 0.0:
        out[:, 1:, 1:] += c_adag * (sq[:, None] * sq[None, :]) * rho[:, :-1, :-1]
        out -= c_adag * 0.5 * (n_diag[:, None] + n_diag[None, :] + 2) * rho
    return out


def run_quantum(cfg: ProtocolConfig):
    """Generate a record by conditional quantum trajectories.

    Each of cfg.n_trajectories independent trajectories starts from the
    effective steady state, burns in cfg.burn_in cycles, then contributes
    n_cycles / n_trajectories outcomes. Per cycle: free evolution over T,
    then the (imperfect) weak probe with the outcome sampled from the
    conditional-branch probabilities. Deterministic given the seed.

    Raises TruncationBreachError when any trajectory puts more than
    1e-4 population in the top two Fock levels.
    """
    osc, qubit, ip = cfg.oscillator, cfg.qubit, cfg.interaction
    dim = osc.dim
    n_traj = cfg.n_trajectories
    if cfg.n_cycles % n_traj:
        raise ValueError(
            f"n_cycles={cfg.n_cycles} not divisible by n_trajectories={n_traj}"
        )
    length = cfg.n_cycles // n_traj
    if ip.prep == "alternating" and (length % 2 or cfg.burn_in % 2):
        raise ValueError("alternating prep needs even segment length and burn-in")

    coeffs = {}
    for prep in ("g", "e"):
        c = kraus_coefficients(ip, qubit, prep=prep)
        coeffs[prep] = c
    props = sideband_propagators(osc, ip.T)
    sq = np.sqrt(np.arange(1, dim, dtype=float))
    n_diag = np.arange(dim, dtype=float)

    # stationary start: thermal state at the schedule's effective occupation
    _, n_eff = effective_thermal_params(ip.prep, ip, qubit, osc)
    if not np.isfinite(n_eff):
        raise ValueError("effective occupation diverges (amplification regime)")
    rho = np.broadcast_to(
        thermal_state(dim, n_eff), (n_traj, dim, dim)
    ).copy()

    prep_seq = _prep_pattern(ip.prep, cfg.burn_in + length)
    times = np.arange(cfg.burn_in + length, dtype=float) * ip.T
    tone = np.broadcast_to(cfg.calibration.mean_shift(times),
                           times.shape).astype(float)

    master = np.random.SeedSequence(cfg.seed)
    streams = [np.random.default_rng(s) for s in master.spawn(n_traj)]
    uniforms = np.stack(
        [g.random(cfg.burn_in + length) for g in streams], axis=0
    )

    eps_g, eps_e = qubit.eps_g, qubit.eps_e
    outcomes = np.empty((n_traj, length), dtype=np.int8)
    for cyc in range(cfg.burn_in + length):
        rho = _free_evolve(rho, props, dim)
        c = coeffs["g" if prep_seq[cyc] == PREP_G else "e"]
        meas = _apply_meas(rho, c["m_a"], c["m_adag"], sq)
        diss = _apply_diss(rho, c["d_a"], c["d_adag"], sq, n_diag)
        # branch probabilities: Tr K_± rho = (1 ± Tr meas)/2 (Tr diss = 0)
        tr_meas = np.einsum("bii->b", meas).real
        p_plus = (1 + tr_meas) / 2
        pb_plus = (1 - eps_e) * p_plus + eps_g * (1 - p_plus)
        pb_plus = np.clip(pb_plus + tone[cyc] / 2, 0.0, 1.0)
        got_plus = uniforms[:, cyc] < pb_plus
        # Kbar_+ = (1-ε_e)K_+ + ε_g K_-, Kbar_- = ε_e K_+ + (1-ε_g)K_-
        w_plus = np.where(got_plus, 1 - eps_e, eps_e)
        w_minus = np.where(got_plus, eps_g, 1 - eps_g)
        mix = (w_plus - w_minus)[:, None, None]
        rho = ((w_plus + w_minus)[:, None, None] * (rho + diss) + mix * meas) / 2
        tr = np.einsum("bii->b", rho).real
        rho /= tr[:, None, None]
        top2 = (rho[:, dim - 1, dim - 1] + rho[:, dim - 2, dim - 2]).real
        if top2.max() > TRUNCATION_BREACH_TOL:
            raise TruncationBreachError(
                f"cycle {cyc}: top-two Fock population {top2.max():.2e} "
                f"exceeds {TRUNCATION_BREACH_TOL}; raise dim={dim}"
            )
        if cyc >= cfg.burn_in:
            outcomes[:, cyc - cfg.burn_in] = np.where(got_plus, 1, -1)

    preps = np.tile(prep_seq[cfg.burn_in:], n_traj)
    return MeasurementRecord(
        outcomes=outcomes.reshape(-1),
        preps=preps,
        T=ip.T,
        fingerprint=cfg.fingerprint(),
        seed=cfg.seed,
        segment_length=length,
    )


def run_semiclassical(cfg: ProtocolConfig):
    """Generate a record from classical thermal trajectories.

    The slowly-varying complex amplitude follows the exact discrete
    damped-diffusion step

        alpha' = alpha e^{(-iΔ - κm/2) T} + ξ,   E|ξ|² = n_th (1 - e^{-κm T})

    started from its stationary distribution. Outcomes are Bernoulli with
    mean s_i θ1 Re(alpha) (s_g = -1, s_e = +1), scaled by the qubit
    polarization and readout contrast, plus the calibration tone. Means
    outside [-1, 1] are clamped and counted.
    """
    osc, qubit, ip = cfg.oscillator, cfg.qubit, cfg.interaction
    n_traj = cfg.n_trajectories
    if cfg.n_cycles % n_traj:
        raise ValueError(
            f"n_cycles={cfg.n_cycles} not divisible by n_trajectories={n_traj}"
        )
    length = cfg.n_cycles // n_traj
    if ip.prep == "alternating" and length % 2:
        raise ValueError("alternating prep needs even segment length")

    decay = np.exp((-1j * osc.delta - osc.kappa_m / 2) * ip.T)
    noise_var = osc.n_th * (1 - np.exp(-osc.kappa_m * ip.T))

    prep_seq = _prep_pattern(ip.prep, length)
    s_prep = np.where(prep_seq == PREP_G, -1.0, 1.0)
    pol = np.where(prep_seq == PREP_G, qubit.eta_g, qubit.eta_e)
    contrast = 1 - qubit.eps_g - qubit.eps_e
    offset = qubit.eps_g - qubit.eps_e
    tone = np.broadcast_to(
        cfg.calibration.mean_shift(np.arange(length, dtype=float) * ip.T),
        (length,),
    ).astype(float)

    master = np.random.SeedSequence(cfg.seed)
    streams = [np.random.default_rng(s) for s in master.spawn(n_traj)]
    alpha = np.empty(n_traj, dtype=complex)
    xi = np.empty((n_traj, length), dtype=complex)
    u = np.empty((n_traj, length))
    for b, rng in enumerate(streams):
        a0 = rng.normal(size=2) * np.sqrt(osc.n_th / 2)
        alpha[b] = a0[0] + 1j * a0[1]
        noise = rng.normal(scale=np.sqrt(noise_var / 2), size=(length, 2))
        xi[b] = noise[:, 0] + 1j * noise[:, 1]
        u[b] = rng.random(length)

    means = np.empty((n_traj, length))
    for k in range(length):
        means[:, k] = s_prep[k] * pol[k] * ip.theta_1 * alpha.real
        alpha = alpha * decay + xi[:, k]
    means = contrast * means + offset + tone[None, :]
    clamped = int((np.abs(means) > 1).sum())
    means = np.clip(means, -1.0, 1.0)
    outcomes = np.where(u < (1 + means) / 2, 1, -1).astype(np.int8)

    if clamped:
        warnings.warn(
            f"{clamped} outcome means clamped to [-1, 1] "
            f"({clamped / cfg.n_cycles:.2e} of cycles)",
            stacklevel=2,
        )
    return MeasurementRecord(
        outcomes=outcomes.reshape(-1),
        preps=np.tile(prep_seq, n_traj),
        T=ip.T,
        fingerprint=cfg.fingerprint(),
        seed=cfg.seed,
        segment_length=length,
        clamp_count=clamped,
    )


def rabi_chevron(drive_rate, detunings, durations, qubit: QubitModel):
    """Ground-state probability map for a driven, decaying two-level system.

    drive_rate is the on-resonance Rabi rate (rad/s). The qubit starts in
    |g>; decay enters through the same symmetric jump model used for the
    joint-Liouvillian reference (rates κ1/2 on σ and σ†, κφ/2 on σz).
    Returns an array of shape (len(detunings), len(durations)).
    """
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    durations = np.atleast_1d(np.asarray(durations, dtype=float))
    if np.any(durations < 0):
        raise ValueError("durations must be non-negative")
    sigma = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|, basis (e, g)
    sigma_dag = sigma.conj().T
    sigma_z = np.array([[1, 0], [0, -1]], dtype=complex)
    sigma_x = sigma + sigma_dag

    def dsup(op, rate):
        ll = op.conj().T @ op
        return rate * (
            np.kron(op.conj(), op)
            - 0.5 * (np.kron(np.eye(2), ll) + np.kron(ll.T, np.eye(2)))
        )

    rho0 = np.array([0, 0, 0, 1], dtype=complex)  # vec(|g><g|), column stacking
    dual_g = np.array([0, 0, 0, 1], dtype=complex)
    grid = np.empty((len(detunings), len(durations)))
    for i, delta in enumerate(detunings):
        ham = delta / 2 * sigma_z + drive_rate / 2 * sigma_x
        lv = -1j * (np.kron(np.eye(2), ham) - np.kron(ham.T, np.eye(2)))
        lv = lv + dsup(sigma, qubit.kappa_1 / 2) + dsup(sigma_dag, qubit.kappa_1 / 2)
        if qubit.kappa_phi > 0:
            lv = lv + dsup(sigma_z, qubit.kappa_phi / 2)
        w, vmat = np.linalg.eig(lv)
        seed = np.linalg.solve(vmat, rho0)
        for j, t in enumerate(durations):
            grid[i, j] = np.real(dual_g @ (vmat @ (np.exp(w * t) * seed)))
    return grid
