"""Heavy-fluxonium circuit numerics.

All circuit energies are in Hz (E/h), so eigenfrequencies come out in Hz
directly. The Hamiltonian

    H/h = 4 E_C n² - E_J cos(φ - φ_ext) + ½ E_L φ²

is diagonalized in the harmonic basis of the inductive (E_C, E_L)
oscillator, where φ = φ_zpf (b + b†) and n = i n_zpf (b† - b) with
φ_zpf = (2 E_C/E_L)^{1/4}, n_zpf = (E_L/32 E_C)^{1/4} (so φ_zpf n_zpf =
1/2 and [φ, n] = i). The cosine is evaluated by exponentiating iφ, which
keeps parity exact: at φ_ext = π the potential is even in φ and n-matrix
elements between same-parity states vanish to machine precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq
from scipy.special import zeta

from .constants import E_CHARGE, EPSILON_0, PLANCK


class ConvergenceError(RuntimeError):
    """Doubling the basis moved the qubit transition by more than 1%."""


class NoSolutionError(RuntimeError):
    """Gap-distance root not bracketed in the search interval."""


@dataclass(frozen=True)
class CircuitParams:
    """Fluxonium plus a single coupled chain mode.

    E_J, E_C, E_L : circuit energies over h (Hz)
    phi_ext       : external flux (rad); π is the sweet spot
    omega_chain   : chain-mode frequency (Hz)
    g_qc          : qubit-chain charge coupling (Hz)
    basis_dim     : harmonic-basis truncation
    chain_dim     : chain-mode Fock truncation
    """

    E_J: float
    E_C: float
    E_L: float
    phi_ext: float = np.pi
    omega_chain: float = 0.0
    g_qc: float = 0.0
    basis_dim: int = 150
    chain_dim: int = 4

    def __post_init__(self):
        if min(self.E_J, self.E_C, self.E_L) <= 0:
            raise ValueError("E_J, E_C, E_L must be positive")
        if self.basis_dim < 4:
            raise ValueError("basis_dim must be at least 4")

    @property
    def heavy_regime(self):
        """E_J >> E_C > E_L check (reported, not enforced)."""
        return self.E_J > 4 * self.E_C and self.E_C > self.E_L


@dataclass(frozen=True)
class Eigensystem:
    """Ascending eigenfrequencies with charge/phase matrix elements."""

    frequencies: np.ndarray   # Hz, absolute
    vectors: np.ndarray       # columns in the harmonic basis
    n_elements: np.ndarray    # <i|n|j> in the eigenbasis
    phi_elements: np.ndarray  # <i|φ|j>

    def transition(self, i, j):
        """Transition frequency f_j - f_i (Hz)."""
        return self.frequencies[j] - self.frequencies[i]


def _operators(cp: CircuitParams, dim):
    phi_zpf = (2 * cp.E_C / cp.E_L) ** 0.25
    n_zpf = (cp.E_L / (32 * cp.E_C)) ** 0.25
    b = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    phi = phi_zpf * (b + b.conj().T)
    n = 1j * n_zpf * (b.conj().T - b)
    return phi, n


def _hamiltonian(cp: CircuitParams, dim):
    phi, n = _operators(cp, dim)
    u = expm(1j * phi)
    cos_phi = (u + u.conj().T) / 2
    sin_phi = (u - u.conj().T) / 2j
    cos_shifted = np.cos(cp.phi_ext) * cos_phi + np.sin(cp.phi_ext) * sin_phi
    ham = 4 * cp.E_C * (n @ n) - cp.E_J * cos_shifted + 0.5 * cp.E_L * (phi @ phi)
    return (ham + ham.conj().T) / 2, phi, n


def diagonalize(cp: CircuitParams, n_levels=10, check_convergence=True):
    """Eigensystem of the fluxonium alone.

    Raises ConvergenceError when doubling basis_dim moves the g-e
    transition by more than 1%.
    """
    ham, phi, n = _hamiltonian(cp, cp.basis_dim)
    vals, vecs = np.linalg.eigh(ham)
    if check_convergence:
        ham2, _, _ = _hamiltonian(cp, 2 * cp.basis_dim)
        vals2 = np.linalg.eigvalsh(ham2)
        gap, gap2 = vals[1] - vals[0], vals2[1] - vals2[0]
        if abs(gap2 - gap) > 0.01 * abs(gap2):
            raise ConvergenceError(
                f"g-e transition moved from {gap:.6g} to {gap2:.6g} Hz when "
                f"doubling basis_dim={cp.basis_dim}"
            )
    keep = min(n_levels, cp.basis_dim)
    vecs = vecs[:, :keep]
    return Eigensystem(
        frequencies=vals[:keep],
        vectors=vecs,
        n_elements=vecs.conj().T @ n @ vecs,
        phi_elements=vecs.conj().T @ phi @ vecs,
    )


def chain_coupled_spectrum(cp: CircuitParams, phi_ext_values, n_fluxonium=8,
                           n_lines=6):
    """Transition frequencies versus flux with one coupled chain mode.

    The fluxonium is projected on its lowest n_fluxonium levels and
    coupled to the chain oscillator through ω_chain b†b + g_qc (b + b†) n.
    Returns an (len(phi_ext_values), n_lines) array of transition
    frequencies from the joint ground state, ascending.
    """
    if cp.chain_dim < 3:
        raise ValueError(f"chain_dim must be at least 3, got {cp.chain_dim}")
    phi_ext_values = np.atleast_1d(np.asarray(phi_ext_values, dtype=float))
    b = np.diag(np.sqrt(np.arange(1, cp.chain_dim, dtype=float)), k=1)
    chain_num = np.diag(np.arange(cp.chain_dim, dtype=float))
    chain_x = b + b.T
    eye_c = np.eye(cp.chain_dim)
    lines = np.empty((len(phi_ext_values), n_lines))
    for i, phi_ext in enumerate(phi_ext_values):
        local = CircuitParams(
            E_J=cp.E_J, E_C=cp.E_C, E_L=cp.E_L, phi_ext=phi_ext,
            omega_chain=cp.omega_chain, g_qc=cp.g_qc,
            basis_dim=cp.basis_dim, chain_dim=cp.chain_dim,
        )
        eig = diagonalize(local, n_levels=n_fluxonium, check_convergence=False)
        hq = np.diag(eig.frequencies - eig.frequencies[0]).astype(complex)
        joint = (
            np.kron(hq, eye_c)
            + cp.omega_chain * np.kron(np.eye(n_fluxonium), chain_num)
            + cp.g_qc * np.kron(eig.n_elements, chain_x)
        )
        vals = np.linalg.eigvalsh(joint)
        lines[i] = vals[1:n_lines + 1] - vals[0]
    return lines


def heavy_gap_approx(E_J, E_C, E_L):
    """Closed-form tunneling-splitting estimate of the qubit gap (Hz).

    ω_ge = (8·2^{3/4}/√π) E_J^{3/4} E_C^{1/4}
           exp[-√(8 E_J/E_C) + 14 ζ(3) E_L / √(8 E_J E_C)]

    valid at φ_ext = π deep in the heavy regime; inputs and output in Hz.
    """
    root = np.sqrt(8 * E_J / E_C)
    correction = 14 * zeta(3) * E_L / np.sqrt(8 * E_J * E_C)
    return (
        8 * 2**0.75 / np.sqrt(np.pi)
        * E_J**0.75 * E_C**0.25
        * np.exp(-root + correction)
    )


def _invert_gap_for_ec(omega_ge, E_J, E_L, bracket=(1e6, 2e10)):
    """E_C (Hz) solving heavy_gap_approx(E_J, E_C, E_L) = omega_ge."""
    lo, hi = bracket
    f = lambda ec: heavy_gap_approx(E_J, ec, E_L) - omega_ge
    if f(lo) * f(hi) > 0:
        raise NoSolutionError(
            f"no E_C in [{lo:.3g}, {hi:.3g}] Hz gives a {omega_ge:.3g} Hz gap"
        )
    return brentq(f, lo, hi, xtol=1e-3, rtol=1e-12)


def membrane_capacitance(d):
    """Empirical qubit-membrane capacitance fit C_m(d) = ε0·54e-9/d^0.8.

    d in meters, result in farads (both SI, matching the simulation fit).
    """
    return EPSILON_0 * 54e-9 / d**0.8


def gap_frequency_at_distance(d, ec_infinity, E_J, E_L):
    """Qubit gap (Hz) at membrane gap d, from the capacitance load.

    The membrane adds C_m(d) to the qubit island capacitance:
    e²/E_C(d) = e²/E_C(∞) + C_m(d) with the energies in joules (the
    capacitance must add, so that E_C and the gap drop after assembly).
    """
    cap_sum = E_CHARGE**2 / (PLANCK * ec_infinity) + membrane_capacitance(d)
    ec_d = E_CHARGE**2 / (PLANCK * cap_sum)
    return heavy_gap_approx(E_J, ec_d, E_L)


def estimate_gap_distance(omega_bfc, omega_afc, E_J, E_L, n_mc=500, seed=0,
                          d_bracket=(0.1e-6, 20e-6)):
    """Qubit-membrane gap from the before/after-assembly gap drop.

    Inverts the closed-form gap for E_C(∞) at omega_bfc, loads it with
    the empirical C_m(d), and solves omega_q(d) = omega_afc by bisection
    on log d. Uncertainty from a Monte Carlo over independent 10% normal
    perturbations of E_J and E_L (truncated at ±3σ).

    All frequencies and energies in Hz; returns d and sigma_d in meters.
    """
    if not omega_afc < omega_bfc:
        raise ValueError("omega_afc must lie below omega_bfc (capacitive load)")

    def solve_d(ej, el):
        ec_inf = _invert_gap_for_ec(omega_bfc, ej, el)
        f = lambda logd: gap_frequency_at_distance(
            np.exp(logd), ec_inf, ej, el) - omega_afc
        lo, hi = np.log(d_bracket[0]), np.log(d_bracket[1])
        if f(lo) * f(hi) > 0:
            raise NoSolutionError(
                f"no gap distance in [{d_bracket[0]:.2g}, {d_bracket[1]:.2g}] m"
            )
        return np.exp(brentq(f, lo, hi, xtol=1e-12)), ec_inf

    d_central, ec_inf = solve_d(E_J, E_L)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(n_mc):
        zj = np.clip(rng.standard_normal(), -3, 3)
        zl = np.clip(rng.standard_normal(), -3, 3)
        try:
            d_mc, _ = solve_d(E_J * (1 + 0.1 * zj), E_L * (1 + 0.1 * zl))
        except NoSolutionError:
            continue
        samples.append(d_mc)
    samples = np.asarray(samples)
    return {
        "d": d_central,
        "sigma_d": float(samples.std(ddof=1)) if len(samples) > 1 else np.nan,
        "E_C_infinity": ec_inf,
        "bfc_residual": heavy_gap_approx(E_J, ec_inf, E_L) - omega_bfc,
        "n_mc_used": len(samples),
    }


# ---------------------------------------------------------------------------
# AC-Stark dressing


def stark_shift(Omega_d, Delta_st, n_up):
    """Drive-induced qubit frequency shift via an off-resonant transition.

    Exact two-level dressing δω_q = √(Δ_st² + Ω_d² n_up²) - Δ_st, its
    fourth-order series Δ(x²/2 - x⁴/8) with x = Ω_d n_up / Δ_st, and the
    mixing angle tan Θ = Ω_d n_up / |Δ_st|. Rates in rad/s (or any
    single consistent frequency unit).
    """
    if Delta_st == 0:
        raise ValueError("Delta_st must be nonzero")
    coupling = Omega_d * n_up
    exact = np.sqrt(Delta_st**2 + coupling**2) - abs(Delta_st)
    x = coupling / abs(Delta_st)
    series = abs(Delta_st) * (x**2 / 2 - x**4 / 8)
    theta = np.arctan(abs(x))
    return {"exact": exact, "series": series, "theta": theta}


def dressed_rates(Gamma_ge, Gamma_fh, delta_wq, Delta_st, amp_noise):
    """Decoherence rates of the Stark-dressed qubit.

    The dressing mixes the bare g-e transition with the far transition at
    detuning Delta_st: Γ1 = cos²(Θ/2) Γ_ge + sin²(Θ/2) Γ_fh with the
    mixing angle recovered from the observed shift δω_q. Drive amplitude
    noise dephases at Γφ = 2 δω_q (δΩ_d/Ω_d).
    """
    if min(Gamma_ge, Gamma_fh) < 0 or delta_wq < 0:
        raise ValueError("rates and shift must be non-negative")
    coupling = np.sqrt(delta_wq * (delta_wq + 2 * abs(Delta_st)))
    theta = np.arctan2(coupling, abs(Delta_st))
    gamma_1 = np.cos(theta / 2) ** 2 * Gamma_ge + np.sin(theta / 2) ** 2 * Gamma_fh
    gamma_phi = 2 * delta_wq * amp_noise
    return {
        "Gamma_1": gamma_1,
        "Gamma_phi": gamma_phi,
        "Gamma_2star": gamma_1 / 2 + gamma_phi,
        "theta": theta,
    }
