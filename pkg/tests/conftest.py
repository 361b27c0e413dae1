"""Shared fixtures: one moderately long quantum record reused across files."""

import pytest

from strobospec.fock import OscillatorParams
from strobospec.measurement import InteractionParams, QubitModel
from strobospec.protocol import ProtocolConfig, run_quantum

OSC_G = OscillatorParams(omega_m=0.0, kappa_m=0.1, n_th=1.0, delta=0.25, dim=18)
IP_G = InteractionParams(Omega=0.3, tau=1.0, T=2.0, prep="g")
IDEAL_QUBIT = QubitModel()


@pytest.fixture(scope="session")
def quantum_record_g():
    cfg = ProtocolConfig(
        oscillator=OSC_G,
        qubit=IDEAL_QUBIT,
        interaction=IP_G,
        n_cycles=2**16,
        seed=11,
        n_trajectories=32,
    )
    return cfg, run_quantum(cfg)
