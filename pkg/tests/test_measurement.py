"""Probe-interaction measurement operators, Kraus maps, and backaction."""

import numpy as np
import pytest

from strobospec.fock import OscillatorParams, coherent_state, fock_operators, thermal_state
from strobospec.lindblad import choi_matrix, steady_state, unvec, vec
from strobospec.measurement import (
    InteractionParams,
    QubitModel,
    ZeroProbabilityBranchError,
    backaction_rates,
    conditional_update,
    decay_kernels,
    effective_liouvillian,
    effective_thermal_params,
    exact_interaction_unitary,
    imperfect_kraus,
    kraus_coefficients,
    kraus_maps,
    measurement_operators,
    oracle_conditional_maps,
)

IDEAL = QubitModel()
PAPER_QUBIT = QubitModel(eta_g=0.985, eta_e=0.983,
                         kappa_1=1 / 7.4e-6, kappa_2=1 / 4.2e-6)


def test_exact_unitary_is_unitary_away_from_cutoff():
    dim = 14
    u = exact_interaction_unitary(0.3, dim)
    gram = u.conj().T @ u
    # the cutoff defect is confined to the excited block's edge row
    interior = np.delete(np.arange(2 * dim), [dim - 1, 2 * dim - 1])
    np.testing.assert_allclose(gram[np.ix_(interior, interior)],
                               np.eye(2 * dim - 2), atol=1e-12)


@pytest.mark.parametrize("prep", ["g", "e"])
def test_povm_completeness_exact(prep):
    ms = measurement_operators(prep, 0.1, 12, order="exact")
    total = sum(m.conj().T @ m for m in ms.values())
    # excited-state preparation carries the truncation defect in the last
    # column (the |e, dim-1> amplitude has no swap partner)
    np.testing.assert_allclose(total[:-1, :-1], np.eye(11), atol=1e-12)
    if prep == "g":
        np.testing.assert_allclose(total, np.eye(12), atol=1e-12)


@pytest.mark.parametrize("theta", [0.02, 0.05, 0.1])
@pytest.mark.parametrize("prep", ["g", "e"])
def test_second_order_residual_cubic(theta, prep):
    exact = measurement_operators(prep, theta, 16, order="exact")
    approx = measurement_operators(prep, theta, 16, order="second")
    for key in exact:
        # measurement operators carry an unobservable global phase
        diff = min(
            np.linalg.norm(exact[key][:12, :12] - approx[key][:12, :12], 2),
            np.linalg.norm(exact[key][:12, :12] + approx[key][:12, :12], 2),
        )
        assert diff <= 5 * theta**3


@pytest.mark.parametrize("prep,sign", [("g", -1.0), ("e", +1.0)])
def test_outcome_mean_tracks_position(prep, sign):
    """<sigma_x> = ∓ theta_1 <x> to second order in the probe angle."""
    theta = 0.05
    alpha = 0.6
    psi = coherent_state(24, alpha)
    rho = np.outer(psi, psi.conj())
    ms = measurement_operators(prep, theta, 24, order="second")
    p_plus = np.trace(ms["M_plus"] @ rho @ ms["M_plus"].conj().T).real
    p_minus = np.trace(ms["M_minus"] @ rho @ ms["M_minus"].conj().T).real
    mean = (p_plus - p_minus) / (p_plus + p_minus)
    assert mean == pytest.approx(sign * theta * alpha, abs=theta**3)


@pytest.mark.parametrize("prep", ["g", "e"])
def test_kraus_maps_trace_preserving_and_cp(prep):
    theta = 0.1
    maps = kraus_maps(prep, theta, 10)
    total = maps["K_plus"] + maps["K_minus"]
    ident = vec(np.eye(10, dtype=complex))
    np.testing.assert_allclose(ident.conj() @ total, ident.conj(), atol=1e-12)
    # exact-order maps are exactly completely positive; the second-order
    # closed forms are CP only to the expansion order theta^3
    for key in ("K_plus", "K_minus"):
        exact = kraus_maps(prep, theta, 10, order="exact")[key]
        eigs = np.linalg.eigvalsh(choi_matrix(exact))
        assert eigs.min() >= -1e-12
        eigs2 = np.linalg.eigvalsh(choi_matrix(maps[key]))
        assert eigs2.min() >= -5 * theta**3


def test_kraus_matches_measurement_operators():
    """K_± rho = M_± rho M_±† to the stated order."""
    theta, dim = 0.1, 12
    maps = kraus_maps("g", theta, dim)
    ms = measurement_operators("g", theta, dim, order="second")
    rho = thermal_state(dim, 1.0)
    lhs = unvec(maps["K_plus"] @ vec(rho))
    rhs = ms["M_plus"] @ rho @ ms["M_plus"].conj().T
    assert np.linalg.norm(lhs - rhs) <= 5 * theta**3


def test_conditional_update_zero_probability():
    rho = np.zeros((6, 6), dtype=complex)
    rho[0, 0] = 1.0
    annihilate = fock_operators(6)["a"]
    with pytest.raises(ZeroProbabilityBranchError):
        conditional_update(rho, annihilate)


# ---------------------------------------------------------------------------
# backaction


def _desk_interaction(prep, n_th=2.0, ratio=0.1):
    """theta_1 = 0.1 probe with kappa/kappa_m = ratio."""
    theta, T = 0.1, 10.0
    kappa = theta**2 / (4 * T)
    osc = OscillatorParams(omega_m=0.0, kappa_m=kappa / ratio, n_th=n_th,
                           delta=0.0, dim=30)
    ip = InteractionParams(Omega=theta / 1.0, tau=1.0, T=T, prep=prep)
    return ip, osc


def test_measurement_backaction_rate():
    ip, _ = _desk_interaction("g")
    down, up = backaction_rates(ip, IDEAL)
    assert down == pytest.approx(ip.theta_1**2 / (4 * ip.T), rel=1e-12)
    assert up == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("prep,n_eff", [
    ("g", 20.0 / 11.0),        # kappa_m n_th / (kappa_m + kappa)
    ("e", 21.0 / 9.0),         # (kappa_m n_th + kappa) / (kappa_m - kappa)
    ("alternating", 2.05),     # n_th + kappa / (2 kappa_m)
])
def test_effective_thermal_params(prep, n_eff):
    ip, osc = _desk_interaction(prep)
    _, n = effective_thermal_params(prep, ip, IDEAL, osc)
    assert n == pytest.approx(n_eff, rel=1e-10)


@pytest.mark.parametrize("prep", ["g", "e"])
def test_effective_liouvillian_steady_state(prep):
    ip, osc = _desk_interaction(prep)
    report = effective_liouvillian(prep, ip, osc)
    rho = steady_state(report.superop)
    n_op = np.diag(np.arange(osc.dim, dtype=float))
    n_mean = np.trace(n_op @ rho).real
    _, n_eff = effective_thermal_params(prep, ip, IDEAL, osc)
    # finite cutoff leaves a (n/(n+1))^dim thermal tail
    assert n_mean == pytest.approx(n_eff, rel=1e-3)


def test_amplification_warns():
    ip, osc = _desk_interaction("e", ratio=2.0)  # kappa > kappa_m
    with pytest.warns(UserWarning):
        effective_liouvillian("e", ip, osc)


# ---------------------------------------------------------------------------
# decay kernels and the lossy probe


def test_decay_kernels_ideal_limit():
    ker = decay_kernels(0.7, 0.0, 0.0)
    for key in ("tau_1", "tau_2", "tau_sigma"):
        assert ker[key] == pytest.approx(0.7, rel=1e-12)


def test_decay_kernels_degenerate_continuity():
    k = 0.31
    near = decay_kernels(1.3, k, k * (1 + 1e-9))
    exact = decay_kernels(1.3, k, k)
    for key in ("tau_1", "tau_2", "tau_sigma"):
        assert near[key] == pytest.approx(exact[key], rel=1e-6)


def test_kernel_ratio_paper_prediction():
    """tau_2/tau_Sigma = 1.35 at the quoted lifetimes and tau = 4 us."""
    ker = decay_kernels(4e-6, 1 / 7.4e-6, 1 / 4.2e-6)
    assert ker["tau_2"] / ker["tau_sigma"] == pytest.approx(1.35084, abs=2e-4)


def test_imperfect_kraus_reduces_to_ideal():
    theta, dim = 0.1, 10
    ideal = kraus_maps("g", theta, dim)
    lossy = imperfect_kraus("g", IDEAL, theta / 1.0, 1.0, dim)
    np.testing.assert_allclose(lossy["Kbar_plus"], ideal["K_plus"], atol=1e-13)
    np.testing.assert_allclose(lossy["Kbar_minus"], ideal["K_minus"], atol=1e-13)


def test_imperfect_kraus_trace_preserving_with_confusion():
    qubit = QubitModel(eta_g=0.97, eta_e=0.95, eps_g=0.08, eps_e=0.03,
                       kappa_1=0.2, kappa_2=0.5)
    maps = imperfect_kraus("e", qubit, 0.08, 1.0, 8)
    total = maps["Kbar_plus"] + maps["Kbar_minus"]
    ident = vec(np.eye(8, dtype=complex))
    np.testing.assert_allclose(ident.conj() @ total, ident.conj(), atol=1e-10)


def test_kraus_coefficient_signs():
    """Ideal ground prep keeps only the emission quadrature, m_a = -theta/2."""
    ip = InteractionParams(Omega=0.1, tau=1.0, T=2.0, prep="g")
    coeff = kraus_coefficients(ip, IDEAL)
    assert coeff["m_a"] == pytest.approx(-0.05, rel=1e-12)
    assert coeff["m_adag"] == pytest.approx(0.0, abs=1e-15)
    ip_e = InteractionParams(Omega=0.1, tau=1.0, T=2.0, prep="e")
    coeff_e = kraus_coefficients(ip_e, IDEAL)
    assert coeff_e["m_adag"] == pytest.approx(0.05, rel=1e-12)
    assert coeff_e["m_a"] == pytest.approx(0.0, abs=1e-15)


def test_oracle_distance_scales_cubically():
    osc = OscillatorParams(omega_m=0.0, kappa_m=1e-6, n_th=0.4, delta=0.0,
                           dim=8)
    qubit = QubitModel(kappa_1=0.05, kappa_2=0.08)
    taus = np.array([0.25, 0.5, 1.0, 2.0])
    Omega = 0.05
    errs = []
    for tau in taus:
        oracle = oracle_conditional_maps(osc, qubit, Omega, tau, "g")
        model = imperfect_kraus("g", qubit, Omega, tau, osc.dim,
                                include_free_evolution=osc)
        errs.append(np.linalg.norm(oracle["K_plus"] - model["Kbar_plus"]))
    slope = np.polyfit(np.log(Omega * taus), np.log(errs), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.3)


def test_qubit_model_validation():
    with pytest.raises(ValueError):
        QubitModel(eta_g=1.2)
    with pytest.raises(ValueError):
        QubitModel(kappa_1=1.0, kappa_2=0.2)  # T2 limit kappa_2 >= kappa_1/2
    with pytest.raises(ValueError):
        InteractionParams(Omega=0.1, tau=2.0, T=1.0, prep="g")  # T < tau
    with pytest.raises(ValueError):
        InteractionParams(Omega=0.1, tau=1.0, T=2.0, prep="x")
