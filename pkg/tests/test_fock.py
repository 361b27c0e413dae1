"""Truncated-oscillator primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strobospec.fock import (
    OscillatorParams,
    TruncationError,
    choose_cutoff,
    coherent_state,
    fock_operators,
    thermal_state,
)


def test_ladder_commutator_away_from_cutoff():
    ops = fock_operators(12)
    comm = ops["a"] @ ops["a_dag"] - ops["a_dag"] @ ops["a"]
    # [a, a†] = 1 except for the truncation defect in the last entry
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(11), atol=1e-14)
    assert comm[-1, -1] == pytest.approx(1 - 12, abs=1e-12)


def test_quadratures_hermitian_and_commutator():
    ops = fock_operators(10)
    for name in ("x", "p"):
        assert np.allclose(ops[name], ops[name].conj().T)
    comm = ops["x"] @ ops["p"] - ops["p"] @ ops["x"]
    np.testing.assert_allclose(np.diag(comm)[:-1], 0.5j, atol=1e-14)


@given(n_th=st.floats(min_value=0.0, max_value=20.0))
@settings(max_examples=40, deadline=None)
def test_thermal_state_normalized_and_monotone(n_th):
    rho = thermal_state(40, n_th)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    pops = np.diag(rho).real
    assert np.all(np.diff(pops) <= 1e-15)


def test_thermal_state_mean_occupation():
    n_th = 2.0
    dim = choose_cutoff(n_th, tail_tol=1e-12)
    rho = thermal_state(dim, n_th)
    n_mean = np.sum(np.arange(dim) * np.diag(rho).real)
    assert n_mean == pytest.approx(n_th, rel=1e-6)


def test_coherent_state_mean_amplitude():
    alpha = 0.8 - 0.3j
    vec = coherent_state(24, alpha)
    a = fock_operators(24)["a"]
    assert vec.conj() @ (a @ vec) == pytest.approx(alpha, abs=1e-10)


def test_coherent_state_truncation_error():
    with pytest.raises(TruncationError):
        coherent_state(4, 3.0)


def test_choose_cutoff_controls_tail():
    for n_th in (0.5, 2.0, 5.0):
        dim = choose_cutoff(n_th, tail_tol=1e-8)
        tail = (n_th / (n_th + 1)) ** dim
        assert tail <= 1e-8


def test_params_validation():
    with pytest.raises(ValueError):
        OscillatorParams(omega_m=1.0, kappa_m=0.0, n_th=1.0, delta=0.0, dim=8)
    with pytest.raises(ValueError):
        OscillatorParams(omega_m=1.0, kappa_m=0.1, n_th=-1.0, delta=0.0, dim=8)
    with pytest.raises(ValueError):
        OscillatorParams(omega_m=1.0, kappa_m=0.1, n_th=1.0, delta=0.0, dim=1)
