"""Electromechanical device calculators.

Closed-form metrology for a high-tension membrane capacitively coupled to
a low-frequency superconducting qubit: motional mass of a drum mode with
the electrode-area normalization, zero-point scales, the vacuum Rabi rate
set by the bias voltage, electrostatic spring softening, gravitational
self-collapse timescales for cat states, the Bose thermal occupation, and
the linear algebra of preparation/readout fidelity calibration.

SI units throughout: lengths in meters, capacitances in farads, energies
over h in Hz where noted, rates in rad/s unless a docstring says Hz.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import ATOMIC_MASS, E_CHARGE, EPSILON_0, G_NEWTON, HBAR, K_B


class DegenerateNormalizationError(ValueError):
    """Electrode region averages the mode shape to ~zero."""


class IllConditionedError(ValueError):
    """Fidelity inversion system is singular."""


# Electrode overlap rectangles as fractions of (L_y, L_z); one rectangle
# per vacuum-gap capacitor, sitting on opposite lobes of the (1,2) mode.
# These are calibrated defaults reproducing the simulated normalization.
DEFAULT_ELECTRODES = (
    (0.25, 0.75, 0.10, 0.40),
    (0.25, 0.75, 0.60, 0.90),
)


@dataclass(frozen=True)
class GeometryParams:
    """Membrane geometry, electrode layout, and circuit capacitances.

    Lengths in meters, densities in kg/m³, capacitances in farads,
    voltages in volts, trapped charges in coulombs. Electrode rectangles
    are (y0, y1, z0, z1) fractions of the membrane sides.
    """

    L_y: float = 110e-6
    L_z: float = 140e-6
    t: float = 90e-9
    pad_y: float = 90e-6
    pad_z: float = 120e-6
    t_pad: float = 30e-9
    rho_sin: float = 3200.0
    rho_al: float = 2700.0
    electrodes: tuple = DEFAULT_ELECTRODES
    d: float = 2.5e-6
    C_m: float = 13.9e-15
    C_g: float = 44.3e-15
    C_q: float = 5.7e-15
    C_b: float = 1e-12
    V_b: float = 0.0
    V_offset: float = 0.0
    Q2: float = 0.0
    Q3: float = 0.0

    def __post_init__(self):
        for name in ("L_y", "L_z", "t", "pad_y", "pad_z", "t_pad",
                     "rho_sin", "rho_al", "d", "C_m", "C_g", "C_q", "C_b"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for rect in self.electrodes:
            y0, y1, z0, z1 = rect
            if not (0 <= y0 < y1 <= 1 and 0 <= z0 < z1 <= 1):
                raise ValueError(f"electrode rectangle {rect} outside membrane")

    @property
    def physical_mass(self):
        """Total moving mass of nitride film plus metal pad (kg)."""
        return (self.rho_sin * self.L_y * self.L_z * self.t
                + self.rho_al * self.pad_y * self.pad_z * self.t_pad)

    @property
    def beta(self):
        """Bias dilution factor C_g/(C_g + C_m)."""
        return self.C_g / (self.C_g + self.C_m)


@dataclass(frozen=True)
class DPParams:
    """Inputs for gravitational self-collapse timescales.

    a: nucleus radius (m); A: mass number; M: physical mode mass (kg);
    alpha_sq: coherent amplitude squared of the cat branches.
    """

    a: float = 2.7e-15
    A: float = 28.0
    M: float = 5.31e-12
    alpha_sq: float = 6.0
    G: float = G_NEWTON

    def __post_init__(self):
        if min(self.a, self.A, self.M, self.alpha_sq, self.G) <= 0:
            raise ValueError("all DP parameters must be positive")

    @property
    def m_a(self):
        """Nucleus mass A·m_u (kg)."""
        return self.A * ATOMIC_MASS


def effective_mass_lambda(g: GeometryParams, mode=(1, 2), grid=256):
    """Motional mass of a membrane drum mode with electrode normalization.

    The mode shape sin(mπy/L_y)sin(nπz/L_z) is scaled by λ such that its
    average over the electrode overlap area equals one, which makes the
    parallel-plate expansion of the gap capacitors exact to first order
    in the displacement. Then m_eff = M λ²/4. The electrode average is a
    midpoint quadrature on a grid×grid mesh per rectangle; rectangles on
    the negative lobe count with |mean|.
    """
    if grid < 64:
        raise ValueError("grid must be at least 64 points per axis")
    m, n = mode
    means = []
    for y0, y1, z0, z1 in g.electrodes:
        ys = (y0 + (y1 - y0) * (np.arange(grid) + 0.5) / grid)
        zs = (z0 + (z1 - z0) * (np.arange(grid) + 0.5) / grid)
        u = np.sin(m * np.pi * ys)[:, None] * np.sin(n * np.pi * zs)[None, :]
        means.append(u.mean())
    means = np.asarray(means)
    if np.any(np.abs(means) < 1e-6):
        raise DegenerateNormalizationError(
            f"electrode mean displacement {means} ~ 0 for mode {mode}; "
            "rectangle straddles a node"
        )
    lam = 1.0 / np.mean(np.abs(means))
    M = g.physical_mass
    return {"lambda": lam, "m_eff": M * lam**2 / 4, "M": M}


def zpf(m_eff, omega_m):
    """Zero-point position and momentum scales of the mode.

    m_eff in kg, omega_m in rad/s; X_zpf·P_zpf = ħ/2 by construction.
    """
    if m_eff <= 0 or omega_m <= 0:
        raise ValueError("mass and frequency must be positive")
    return {
        "X_zpf": np.sqrt(HBAR / (2 * m_eff * omega_m)),
        "P_zpf": np.sqrt(HBAR * m_eff * omega_m / 2),
    }


def coupling_and_dispersive(omega_q, phi_me, C_m, d, X_zpf, beta, V_b,
                            V_offset, Delta=None):
    """Vacuum Rabi rate of the capacitive qubit-membrane coupling.

    Ω = ω_q |⟨g|φ|e⟩| (2 X_zpf C_m/d) β(V_b − V_offset)/(2e), with the
    gap-capacitor derivative taken from the parallel-plate form. The
    dispersive shift χ = Ω²/4Δ is included when Delta is given. omega_q
    and Delta in rad/s; Ω and χ come back in rad/s.
    """
    if d <= 0:
        raise ValueError("gap distance must be positive")
    v_eff = beta * (V_b - V_offset)
    dcm_dx = 2 * X_zpf * C_m / d
    omega = omega_q * phi_me * dcm_dx * v_eff / (2 * E_CHARGE)
    out = {"Omega": omega, "V_eff": v_eff, "vanishing_coupling": v_eff == 0.0}
    if Delta is not None:
        if Delta == 0:
            raise ValueError("Delta must be nonzero for the dispersive shift")
        out["chi"] = omega**2 / (4 * Delta)
    return out


def spring_softening(g: GeometryParams, E_C, X_zpf, beta=None):
    """Electrostatic spring-softening coefficient of the membrane.

    ζ = 2 C_m (C_g + 2 C_q) (E_C/ħe²) (X_zpf²/d²) β² with E_C in joules
    here computed from E_C given in Hz (E/h). Returns the positive
    coefficient (Hz/V²) and the signed frequency shift at the current
    bias, δω_m = −ζ(V_b − V_offset)² (a softening, hence negative).
    """
    if beta is None:
        beta = g.beta
    ec_joule = E_C * 2 * np.pi * HBAR  # E/h in Hz -> joules
    zeta = (2 * g.C_m * (g.C_g + 2 * g.C_q) * ec_joule
            / (HBAR * E_CHARGE**2) * X_zpf**2 / g.d**2 * beta**2)
    # ζ above is in rad/s per V²; report Hz/V² like the measured value
    zeta_hz = zeta / (2 * np.pi)
    dv = g.V_b - g.V_offset
    return {"zeta": zeta_hz, "delta_omega_m": -zeta_hz * dv**2}


def effective_bias(C_g, C_m, C_b, V_b, Q2=0.0, Q3=0.0):
    """Effective bias seen by the qubit through the capacitive divider.

    Full form V_eff = (C_g V_b − Q2/2 + (C_g/C_b)Q3) /
    (C_g + C_m + 2 C_g C_m/C_b) and its C_g/C_b → 0 limit
    β(V_b − V_offset) with β = C_g/(C_g + C_m), V_offset = Q2/(2C_g).
    """
    if min(C_g, C_m, C_b) <= 0:
        raise ValueError("capacitances must be positive")
    v_full = ((C_g * V_b - Q2 / 2 + (C_g / C_b) * Q3)
              / (C_g + C_m + 2 * C_g * C_m / C_b))
    beta = C_g / (C_g + C_m)
    v_offset = Q2 / (2 * C_g)
    return {
        "V_eff": v_full,
        "beta": beta,
        "V_offset": v_offset,
        "V_eff_limit": beta * (V_b - v_offset),
    }


def dp_times(dp: DPParams, T1m, n_th, X_zpf=None):
    """Gravitational-collapse versus decoherence timescales for a cat.

    τ_G = 5ħa/(48πG m_a M) is the self-energy collapse time once the
    branches are separated beyond the nucleus size; τ_th = 2T1m/n_th is
    the single-phonon thermal decoherence time and τ_cat = T1m/(4 n_th
    |α|²) the cat coherence time. When X_zpf is given, the branch
    separation ΔX = 2|α|X_zpf is checked against 2a.
    """
    if T1m <= 0 or n_th <= 0:
        raise ValueError("T1m and n_th must be positive")
    tau_g = 5 * HBAR * dp.a / (48 * np.pi * dp.G * dp.m_a * dp.M)
    tau_th = 2 * T1m / n_th
    tau_cat = T1m / (4 * n_th * dp.alpha_sq)
    out = {"tau_G": tau_g, "tau_th": tau_th, "tau_cat": tau_cat,
           "collapse_resolvable": tau_cat > tau_g}
    if X_zpf is not None:
        dx = 2 * np.sqrt(dp.alpha_sq) * X_zpf
        out["DeltaX"] = dx
        out["separated"] = dx > 2 * dp.a
        out["feasible"] = out["separated"] and out["collapse_resolvable"]
    return out


def thermal_occupation(T, omega):
    """Bose occupation 1/(e^{ħω/k_BT} − 1); T in K, omega in rad/s."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    if omega <= 0:
        raise ValueError("frequency must be positive")
    return 1.0 / np.expm1(HBAR * omega / (K_B * T))


def fidelity_calibration(C_g, C_e, C_th, P_g_meas=None, P_e_meas=None):
    """Preparation and readout fidelities from Rabi contrasts.

    The Rabi contrast after each preparation is proportional to the
    ground-state population, so η_g = C_g/C_th − 1 and η_e = 1 − C_e/C_th.
    Given threshold probabilities P(correct side | preparation), the
    intrinsic readout fidelities solve

        P_g_meas = p_g F_g + (1 − p_g)(1 − F_e)
        P_e_meas = (1 − p_e) F_e + p_e (1 − F_g)

    with populations p_g = (1 + η_g)/2, p_e = (1 − η_e)/2. The 2×2
    system is singular when η_g + η_e ≈ 0 (no preparation contrast).
    """
    if min(C_g, C_th) <= 0 or C_e < 0:
        raise ValueError("contrasts must be positive (C_e may be zero)")
    eta_g = C_g / C_th - 1.0
    eta_e = 1.0 - C_e / C_th
    out = {"eta_g": eta_g, "eta_e": eta_e}
    if P_g_meas is None or P_e_meas is None:
        return out
    if not (0 < P_g_meas < 1 and 0 < P_e_meas < 1):
        raise ValueError("measured probabilities must lie in (0, 1)")
    p_g = (1 + eta_g) / 2
    p_e = (1 - eta_e) / 2
    # [P_g_meas - (1-p_g); P_e_meas - p_e] = A [F_g; F_e]
    A = np.array([[p_g, -(1 - p_g)], [-p_e, 1 - p_e]])
    if abs(np.linalg.det(A)) < 1e-12:
        raise IllConditionedError(
            f"fidelity system singular (eta_g + eta_e = {eta_g + eta_e:.3g})"
        )
    rhs = np.array([P_g_meas - (1 - p_g), P_e_meas - p_e])
    F_g, F_e = np.linalg.solve(A, rhs)
    out.update({"F_g": F_g, "F_e": F_e})
    return out


def readout_probabilities(F_g, F_e, eta_g, eta_e):
    """Forward model: measured threshold probabilities from fidelities."""
    p_g = (1 + eta_g) / 2
    p_e = (1 - eta_e) / 2
    return {
        "P_g_meas": p_g * F_g + (1 - p_g) * (1 - F_e),
        "P_e_meas": (1 - p_e) * F_e + p_e * (1 - F_g),
    }
