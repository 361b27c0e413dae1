"""Record engines: sideband propagators, trajectories, and the chevron map."""

import numpy as np
import pytest

from strobospec.fock import OscillatorParams, thermal_state
from strobospec.lindblad import mech_liouvillian, propagate, unvec, vec
from strobospec.measurement import InteractionParams, QubitModel, effective_thermal_params
from strobospec.protocol import (
    PREP_E,
    PREP_G,
    CalibrationTone,
    MeasurementRecord,
    ProtocolConfig,
    TruncationBreachError,
    _free_evolve,
    rabi_chevron,
    run_quantum,
    run_semiclassical,
    sideband_propagators,
)
from tests.conftest import IDEAL_QUBIT, IP_G, OSC_G


def _random_density_matrix(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_sideband_propagators_match_full_liouvillian():
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.3, n_th=1.2, delta=0.4, dim=9)
    t = 0.8
    rho = _random_density_matrix(osc.dim, 5)
    full = unvec(propagate(mech_liouvillian(osc), t) @ vec(rho))
    stack = rho[None].copy()
    _free_evolve(stack, sideband_propagators(osc, t), osc.dim)
    np.testing.assert_allclose(stack[0], full, atol=1e-12)


def test_sideband_propagators_preserve_trace():
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.3, n_th=1.2, delta=0.0, dim=12)
    pop_prop = sideband_propagators(osc, 2.0)[0]
    np.testing.assert_allclose(pop_prop.real.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(pop_prop.imag, 0.0, atol=1e-12)


def test_sideband_extra_rates_shift_steady_state():
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.2, n_th=1.0, delta=0.0, dim=30)
    extra = 0.05  # extra upward rate raises the stationary occupation
    props = sideband_propagators(osc, 400.0, extra_up=extra)
    pops = props[0].real @ np.diag(thermal_state(osc.dim, osc.n_th)).real
    n_mean = np.arange(osc.dim) @ pops
    n_expected = osc.kappa_m * osc.n_th + extra
    n_expected /= osc.kappa_m * (osc.n_th + 1) - osc.kappa_m * osc.n_th - extra
    # n' = gamma_up / (gamma_down - gamma_up)
    n_expected = (osc.kappa_m * osc.n_th + extra) / (osc.kappa_m - extra)
    assert n_mean == pytest.approx(n_expected, rel=1e-3)


# ---------------------------------------------------------------------------
# quantum engine


def test_run_quantum_deterministic(quantum_record_g):
    cfg, record = quantum_record_g
    again = run_quantum(cfg)
    np.testing.assert_array_equal(record.outcomes, again.outcomes)
    assert record.fingerprint == again.fingerprint


def test_run_quantum_seed_changes_record(quantum_record_g):
    cfg, record = quantum_record_g
    small = ProtocolConfig(
        oscillator=cfg.oscillator, qubit=cfg.qubit, interaction=cfg.interaction,
        n_cycles=4096, seed=cfg.seed + 1, n_trajectories=8,
    )
    other = run_quantum(small)
    assert not np.array_equal(record.outcomes[:4096], other.outcomes)


def test_run_quantum_autocorrelation_matches_backaction_theory(quantum_record_g):
    """Lagged products reproduce C_r = 2 n' m_a^2 e^{-k'rT/2} cos(d T r)."""
    cfg, record = quantum_record_g
    osc, ip = cfg.oscillator, cfg.interaction
    kappa_eff, n_eff = effective_thermal_params("g", ip, IDEAL_QUBIT, osc)
    m = record.outcomes.astype(float).reshape(cfg.n_trajectories, -1)
    for lag in (1, 2, 3):
        emp = np.mean(m[:, :-lag] * m[:, lag:])
        sigma = 1.0 / np.sqrt(m[:, lag:].size)
        theory = (
            2 * n_eff * (ip.theta_1 / 2) ** 2
            * np.exp(-kappa_eff * lag * ip.T / 2)
            * np.cos(osc.delta * ip.T * lag)
        )
        assert emp == pytest.approx(theory, abs=4 * sigma)


def test_run_quantum_mean_reflects_confusion_offset():
    qubit = QubitModel(eps_g=0.10, eps_e=0.04)
    cfg = ProtocolConfig(
        oscillator=OSC_G, qubit=qubit, interaction=IP_G,
        n_cycles=2**14, seed=3, n_trajectories=16, burn_in=64,
    )
    record = run_quantum(cfg)
    sigma = 1.0 / np.sqrt(len(record))
    assert record.outcomes.mean() == pytest.approx(
        qubit.eps_g - qubit.eps_e, abs=4 * sigma)


def test_run_quantum_alternating_prep_pattern():
    ip = InteractionParams(Omega=0.3, tau=1.0, T=2.0, prep="alternating")
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.1, n_th=1.0, delta=0.25,
                           dim=26)  # headroom for conditional excursions
    cfg = ProtocolConfig(
        oscillator=osc, qubit=IDEAL_QUBIT, interaction=ip,
        n_cycles=1024, seed=0, n_trajectories=4, burn_in=32,
    )
    record = run_quantum(cfg)
    preps = record.preps.reshape(4, -1)
    assert np.all(preps[:, 0::2] == PREP_G)
    assert np.all(preps[:, 1::2] == PREP_E)
    assert record.segment_length == 256


def test_run_quantum_divisibility_and_parity_errors():
    with pytest.raises(ValueError):
        run_quantum(ProtocolConfig(
            oscillator=OSC_G, qubit=IDEAL_QUBIT, interaction=IP_G,
            n_cycles=100, n_trajectories=16,
        ))
    ip = InteractionParams(Omega=0.3, tau=1.0, T=2.0, prep="alternating")
    with pytest.raises(ValueError):
        run_quantum(ProtocolConfig(
            oscillator=OSC_G, qubit=IDEAL_QUBIT, interaction=ip,
            n_cycles=4 * 33, n_trajectories=4, burn_in=32,
        ))


def test_run_quantum_truncation_breach():
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.1, n_th=1.0, delta=0.25, dim=5)
    cfg = ProtocolConfig(
        oscillator=osc, qubit=IDEAL_QUBIT, interaction=IP_G,
        n_cycles=64, seed=0, n_trajectories=4, burn_in=16,
    )
    with pytest.raises(TruncationBreachError):
        run_quantum(cfg)


# ---------------------------------------------------------------------------
# semiclassical engine


def test_run_semiclassical_deterministic():
    cfg = ProtocolConfig(
        oscillator=OSC_G, qubit=IDEAL_QUBIT, interaction=IP_G,
        n_cycles=2**14, mode="semiclassical", seed=9, n_trajectories=16,
    )
    a = run_semiclassical(cfg)
    b = run_semiclassical(cfg)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert a.clamp_count == 0


def test_run_semiclassical_mean_offset_and_tone():
    qubit = QubitModel(eps_g=0.08, eps_e=0.02)
    tone = CalibrationTone(amplitude=0.1, frequency=0.0, phase=0.0)
    cfg = ProtocolConfig(
        oscillator=OSC_G, qubit=qubit, interaction=IP_G,
        n_cycles=2**16, mode="semiclassical", seed=2,
        n_trajectories=32, calibration=tone,
    )
    record = run_semiclassical(cfg)
    sigma = 1.0 / np.sqrt(len(record))
    expected = (qubit.eps_g - qubit.eps_e) + tone.amplitude
    assert record.outcomes.mean() == pytest.approx(expected, abs=4 * sigma)


def test_run_semiclassical_clamps_large_means():
    osc = OscillatorParams(omega_m=0.0, kappa_m=0.1, n_th=4.0, delta=0.0, dim=8)
    ip = InteractionParams(Omega=2.0, tau=1.0, T=2.0, prep="g")
    cfg = ProtocolConfig(
        oscillator=osc, qubit=IDEAL_QUBIT, interaction=ip,
        n_cycles=4096, mode="semiclassical", seed=1, n_trajectories=8,
    )
    with pytest.warns(UserWarning, match="clamped"):
        record = run_semiclassical(cfg)
    assert record.clamp_count > 0


def test_calibration_tone_validation():
    with pytest.raises(ValueError):
        CalibrationTone(amplitude=0.6)
    assert CalibrationTone().mean_shift(np.arange(4.0)) == 0.0


def test_record_validation():
    with pytest.raises(ValueError):
        MeasurementRecord(
            outcomes=np.ones(4, dtype=np.int8),
            preps=np.zeros(3, dtype=np.uint8), T=1.0)
    with pytest.raises(ValueError):
        MeasurementRecord(
            outcomes=np.ones(10, dtype=np.int8),
            preps=np.zeros(10, dtype=np.uint8), T=1.0, segment_length=4)


# ---------------------------------------------------------------------------
# chevron map


def test_rabi_chevron_resonant_oscillation():
    qubit = QubitModel()
    omega_r = 2 * np.pi * 1.0
    t = np.linspace(0.0, 1.5, 7)
    grid = rabi_chevron(omega_r, [0.0], t, qubit)
    np.testing.assert_allclose(grid[0], np.cos(omega_r * t / 2) ** 2, atol=1e-7)


def test_rabi_chevron_detuned_contrast():
    qubit = QubitModel()
    omega_r, delta = 1.0, 2.0
    gen = np.sqrt(omega_r**2 + delta**2)
    t_pi = np.pi / gen  # generalized half period: excitation maximum
    grid = rabi_chevron(omega_r, [delta], [t_pi], qubit)
    assert 1 - grid[0, 0] == pytest.approx(omega_r**2 / gen**2, abs=1e-10)


def test_rabi_chevron_decay_saturates():
    qubit = QubitModel(kappa_1=0.5, kappa_2=0.5)
    grid = rabi_chevron(3.0, [0.0], [200.0], qubit)
    assert grid[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_rabi_chevron_negative_duration():
    with pytest.raises(ValueError):
        rabi_chevron(1.0, [0.0], [-1.0], QubitModel())
