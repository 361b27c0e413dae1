"""Weak-measurement machinery for the stroboscopic protocol.

The qubit basis is ordered (|e>, |g>) so that the vectorized joint density
matrix reads (rho_ee, rho_eg, rho_ge, rho_gg). Measurement operators are
M_{±,i} = <±|U_I|i> with |±> = (|g> ± |e>)/sqrt(2); the ideal second-order
forms are

    M_{±,g} = (1 ∓ (θ1/2) a  - (θ1²/8) a†a ) / sqrt(2)
    M_{±,e} = (1 ± (θ1/2) a† - (θ1²/8) a a†) / sqrt(2)

which the exact unitary reproduces. Sign conventions throughout are fixed
by that unitary: <σx> = -θ1 <x> for ground preparation, +θ1 <x> for
excited preparation.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .fock import OscillatorParams, fock_operators
from .lindblad import (
    dissipator,
    hamiltonian_superop,
    measurement_superop,
    mech_liouvillian,
    spre,
    spost,
    unvec,
    vec,
)

SECOND_ORDER_ANGLE_WARN = 0.3


class ZeroProbabilityBranchError(RuntimeError):
    """Conditional update on an outcome of vanishing probability."""


@dataclass(frozen=True)
class QubitModel:
    """Two-level imperfection model.

    eta_g, eta_e : preparation fidelities
    eps_g, eps_e : single-shot assignment error probabilities (1 - F)
    kappa_1      : relaxation rate 1/T1 (1/s)
    kappa_2      : total decoherence rate 1/T2 (1/s)
    """

    eta_g: float = 1.0
    eta_e: float = 1.0
    eps_g: float = 0.0
    eps_e: float = 0.0
    kappa_1: float = 0.0
    kappa_2: float = 0.0

    def __post_init__(self):
        for name in ("eta_g", "eta_e", "eps_g", "eps_e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.kappa_2 < self.kappa_1 / 2 - 1e-12 * max(self.kappa_1, 1.0):
            raise ValueError(
                f"kappa_2={self.kappa_2} below kappa_1/2={self.kappa_1 / 2}"
            )

    @property
    def kappa_phi(self):
        return max(self.kappa_2 - self.kappa_1 / 2, 0.0)

    @property
    def is_ideal(self):
        return (
            self.eta_g == self.eta_e == 1.0
            and self.eps_g == self.eps_e == 0.0
            and self.kappa_1 == self.kappa_2 == 0.0
        )


@dataclass(frozen=True)
class InteractionParams:
    """Stroboscopic schedule.

    Omega : vacuum Rabi rate (rad/s)
    tau   : interaction duration (s)
    T     : full cycle period (s)
    prep  : 'g', 'e' or 'alternating'
    """

    Omega: float
    tau: float
    T: float
    prep: str = "g"

    def __post_init__(self):
        if self.Omega < 0 or self.tau < 0:
            raise ValueError("Omega and tau must be non-negative")
        if self.T < self.tau:
            raise ValueError(f"cycle period T={self.T} shorter than tau={self.tau}")
        if self.prep not in ("g", "e", "alternating"):
            raise ValueError(f"prep must be g, e or alternating, got {self.prep!r}")

    @property
    def theta_1(self):
        """Single-phonon rotation angle Omega * tau (rad)."""
        return self.Omega * self.tau


# ---------------------------------------------------------------------------
# ideal measurement operators and Kraus maps


def exact_interaction_unitary(theta_1, dim):
    """Resonant Jaynes-Cummings evolution on qubit (x) oscillator.

    Block structure: cos((θ1/2) sqrt(N+1)) on the excited block,
    cos((θ1/2) sqrt(N)) on the ground block, with the sine couplings on
    the off-diagonal blocks. Unitary except for the cutoff edge column,
    where the |e, dim-1> amplitude has nowhere to swap to.
    """
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    n = np.arange(dim, dtype=float)
    cos_e = np.diag(np.cos(theta_1 / 2 * np.sqrt(n + 1))).astype(complex)
    cos_g = np.diag(np.cos(theta_1 / 2 * np.sqrt(n))).astype(complex)
    sine = np.sin(theta_1 / 2 * np.sqrt(n[1:]))
    u_eg = np.diag(-sine, k=1).astype(complex)  # -a sin((θ1/2)√N)/√N
    u_ge = np.diag(sine, k=-1).astype(complex)  # a† sin((θ1/2)√(N+1))/√(N+1)
    top = np.hstack([cos_e, u_eg])
    bottom = np.hstack([u_ge, cos_g])
    return np.vstack([top, bottom])


def measurement_operators(prep, theta_1, dim, order="exact"):
    """POVM elements {M_plus, M_minus} on the oscillator space.

    order='exact' slices the exact unitary; order='second' returns the
    second-order expansion (warns for theta_1 above 0.3 rad).
    """
    if prep not in ("g", "e"):
        raise ValueError(f"prep must be 'g' or 'e', got {prep!r}")
    if order == "second":
        if theta_1 > SECOND_ORDER_ANGLE_WARN:
            warnings.warn(
                f"second-order measurement operators at theta_1={theta_1:.3g} rad; "
                "expansion error grows as theta_1^3",
                stacklevel=2,
            )
        ops = fock_operators(dim)
        a, a_dag = ops["a"], ops["a_dag"]
        eye = np.eye(dim, dtype=complex)
        if prep == "g":
            base = eye - theta_1**2 / 8 * (a_dag @ a)
            m_plus = (base - theta_1 / 2 * a) / np.sqrt(2)
            m_minus = (base + theta_1 / 2 * a) / np.sqrt(2)
        else:
            base = eye - theta_1**2 / 8 * (a @ a_dag)
            m_plus = (base + theta_1 / 2 * a_dag) / np.sqrt(2)
            m_minus = (base - theta_1 / 2 * a_dag) / np.sqrt(2)
        return {"M_plus": m_plus, "M_minus": m_minus}
    if order != "exact":
        raise ValueError(f"order must be 'exact' or 'second', got {order!r}")
    u = exact_interaction_unitary(theta_1, dim)
    u_ee, u_eg = u[:dim, :dim], u[:dim, dim:]
    u_ge, u_gg = u[dim:, :dim], u[dim:, dim:]
    if prep == "g":
        col_e, col_g = u_eg, u_gg
    else:
        col_e, col_g = u_ee, u_ge
    m_plus = (col_g + col_e) / np.sqrt(2)
    m_minus = (col_g - col_e) / np.sqrt(2)
    return {"M_plus": m_plus, "M_minus": m_minus}


def kraus_maps(prep, theta_1, dim, order="second"):
    """Outcome-resolved superoperators K_± and their sum K_mean.

    Second order (the closed form used by the protocol analysis):

        K_{±,g} = (1 ∓ (θ1/2) M[a]  + (θ1²/4) D[a] ) / 2
        K_{±,e} = (1 ± (θ1/2) M[a†] + (θ1²/4) D[a†]) / 2

    order='exact' builds them from the exact measurement operators.
    """
    if order == "exact":
        m = measurement_operators(prep, theta_1, dim, order="exact")
        k_plus = np.kron(m["M_plus"].conj(), m["M_plus"])
        k_minus = np.kron(m["M_minus"].conj(), m["M_minus"])
        return {"K_plus": k_plus, "K_minus": k_minus, "K_mean": k_plus + k_minus}
    ops = fock_operators(dim)
    a, a_dag = ops["a"], ops["a_dag"]
    eye = np.eye(dim * dim, dtype=complex)
    if prep == "g":
        meas, diss = measurement_superop(a), dissipator(a)
        sign = -1.0
    else:
        meas, diss = measurement_superop(a_dag), dissipator(a_dag)
        sign = +1.0
    common = eye + theta_1**2 / 4 * diss
    k_plus = (common + sign * theta_1 / 2 * meas) / 2
    k_minus = (common - sign * theta_1 / 2 * meas) / 2
    return {"K_plus": k_plus, "K_minus": k_minus, "K_mean": k_plus + k_minus}


def conditional_update(rho, m_op):
    """Probability and post-measurement state for one POVM element."""
    post = m_op @ rho @ m_op.conj().T
    p = np.trace(post).real
    if p < 1e-14:
        raise ZeroProbabilityBranchError(f"branch probability {p:.3g}")
    return {"p": p, "rho_post": post / p}


# ---------------------------------------------------------------------------
# dynamical backaction


@dataclass(frozen=True)
class BackactionReport:
    """Effective damped-thermal parameters after stroboscopic probing."""

    kappa: float           # dynamical backaction rate θ1²/4T (ideal qubit)
    kappa_eff: float       # effective linewidth κ'
    n_eff: float           # effective occupation n'
    superop: np.ndarray    # effective Liouvillian


def backaction_rates(ip: InteractionParams, qubit: QubitModel, prep=None):
    """Per-cycle extra down/up rates (kappa_down, kappa_up) in 1/s.

    These are the D[a] and D[a†] coefficients of the mean Kraus map,
    divided by the cycle period. For an ideal qubit both second-order
    coefficients collapse to θ1²/4 and the up rate vanishes for ground
    preparation.
    """
    coeff = kraus_coefficients(ip, qubit, prep=prep)
    return coeff["d_a"] / ip.T, coeff["d_adag"] / ip.T


def effective_liouvillian(prep, ip: InteractionParams, osc: OscillatorParams):
    """Mechanical Liouvillian including ideal-qubit dynamical backaction.

    Ground preparation adds κ D[a], excited κ D[a†], alternating
    (κ/2)(D[a] + D[a†]) with κ = θ1²/4T. Returns a BackactionReport with
    the equivalent thermal-environment parameters.
    """
    theta_1 = ip.theta_1
    kappa = theta_1**2 / (4 * ip.T)
    ops = fock_operators(osc.dim)
    a, a_dag = ops["a"], ops["a_dag"]
    lv = mech_liouvillian(osc)
    km, nth = osc.kappa_m, osc.n_th
    if prep == "g":
        lv = lv + kappa * dissipator(a)
        k_eff = km + kappa
        n_eff = km * nth / k_eff
    elif prep == "e":
        if kappa >= km:
            warnings.warn(
                f"backaction rate {kappa:.3g} >= kappa_m {km:.3g}: "
                "amplification instability (non-positive linewidth)",
                stacklevel=2,
            )
        lv = lv + kappa * dissipator(a_dag)
        k_eff = km - kappa
        n_eff = (km * nth + kappa) / k_eff if k_eff > 0 else np.inf
    elif prep == "alternating":
        lv = lv + kappa / 2 * (dissipator(a) + dissipator(a_dag))
        k_eff = km
        n_eff = nth + kappa / (2 * km)
    else:
        raise ValueError(f"prep must be g, e or alternating, got {prep!r}")
    return BackactionReport(kappa=kappa, kappa_eff=k_eff, n_eff=n_eff, superop=lv)


def effective_thermal_params(prep, ip: InteractionParams, qubit: QubitModel,
                             osc: OscillatorParams):
    """(kappa_eff, n_eff) including qubit imperfections.

    Derived from the mean-Kraus extra rates: the mode sees total down
    rate κm(n_th+1) + κ↓ and up rate κm n_th + κ↑ per unit time.
    """
    if prep in ("g", "e"):
        k_down, k_up = backaction_rates(ip, qubit, prep=prep)
    elif prep == "alternating":
        kg_down, kg_up = backaction_rates(ip, qubit, prep="g")
        ke_down, ke_up = backaction_rates(ip, qubit, prep="e")
        k_down = (kg_down + ke_down) / 2
        k_up = (kg_up + ke_up) / 2
    else:
        raise ValueError(f"prep must be g, e or alternating, got {prep!r}")
    total_down = osc.kappa_m * (osc.n_th + 1) + k_down
    total_up = osc.kappa_m * osc.n_th + k_up
    kappa_eff = total_down - total_up
    if kappa_eff <= 0:
        return kappa_eff, np.inf
    return kappa_eff, total_up / kappa_eff



# ---------------------------------------------------------------------------
# imperfect Kraus maps


def decay_kernels(t, kappa_1, kappa_2):
    """Time kernels tau_1, tau_2, tau_sigma of the lossy-qubit expansion.

    tau_i(t) = (1 - exp(-kappa_i t))/kappa_i and
    tau_sigma = (kappa_1 tau_1 - kappa_2 tau_2)/(kappa_1 - kappa_2),
    with the degenerate limit tau_sigma -> t exp(-kappa_1 t) taken
    analytically when |kappa_1 - kappa_2| t < 1e-6.
    """
    t1 = _phi(t, kappa_1)
    t2 = _phi(t, kappa_2)
    if abs(kappa_1 - kappa_2) * t < 1e-6:
        ts = t * np.exp(-kappa_1 * t)
    else:
        ts = (kappa_1 * t1 - kappa_2 * t2) / (kappa_1 - kappa_2)
    return {"tau_1": t1, "tau_2": t2, "tau_sigma": ts}


def _phi(t, kappa):
    """(1 - exp(-kappa t))/kappa, series-stable for small kappa t."""
    x = kappa * t
    if abs(x) < 1e-6:
        return t * (1 - x / 2 + x * x / 6)
    return (1 - np.exp(-x)) / kappa


def _psi(t, kappa):
    """(t - tau(t))/kappa, the double-integrated decay kernel."""
    x = kappa * t
    if abs(x) < 1e-4:
        return t * t * (0.5 - x / 6 + x * x / 24)
    return (t - _phi(t, kappa)) / kappa


def _dphi(t, kappa_1, kappa_2):
    """(tau_2 - tau_1)/(kappa_1 - kappa_2), stable in the equal-rate limit."""
    if abs(kappa_1 - kappa_2) * t < 1e-6:
        # -d tau/d kappa = (tau - t exp(-kappa t))/kappa at kappa_1
        x = kappa_1 * t
        if abs(x) < 1e-4:
            return t * t * (0.5 - x / 3 + x * x / 8)
        return (_phi(t, kappa_1) - t * np.exp(-x)) / kappa_1
    return (_phi(t, kappa_2) - _phi(t, kappa_1)) / (kappa_1 - kappa_2)


def kraus_coefficients(ip: InteractionParams, qubit: QubitModel,
                               prep=None):
    """Operator coefficients of the lossy-qubit conditional maps.

    Returns the outcome-dependent measurement coefficients m_a, m_adag
    (carried with outcome sign s = ±1 as s * m) and the
    outcome-independent dissipative coefficients d_a, d_adag, all for the
    kernels evaluated at t = tau.
    """
    prep = prep if prep is not None else ip.prep
    if prep not in ("g", "e"):
        raise ValueError(f"prep must be 'g' or 'e', got {prep!r}")
    pol = qubit.eta_g if prep == "g" else -qubit.eta_e  # 2 p_i - 1
    ker = decay_kernels(ip.tau, qubit.kappa_1, qubit.kappa_2)
    ts, t2 = ker["tau_sigma"], ker["tau_2"]
    om = ip.Omega
    # overall sign fixed by the exact unitary: the '+' outcome carries
    # -(θ1/2) M[a] for ground prep and +(θ1/2) M[a†] for excited prep
    m_a = -om / 4 * (pol * ts + t2)
    m_adag = -om / 4 * (pol * ts - t2)
    sym = _psi(ip.tau, qubit.kappa_2)
    asym = pol * _dphi(ip.tau, qubit.kappa_1, qubit.kappa_2)
    d_a = om**2 / 4 * (sym + asym)
    d_adag = om**2 / 4 * (sym - asym)
    return {"m_a": m_a, "m_adag": m_adag, "d_a": d_a, "d_adag": d_adag}


def imperfect_kraus(prep, qubit: QubitModel, Omega, tau, dim, T=None,
                    include_free_evolution=None):
    """Conditional maps {Kbar_plus, Kbar_minus} for a lossy, misread qubit.

    Second order in Omega*tau, with preparation infidelity entering
    through the qubit polarization, finite T1/T2 through the decay
    kernels, and readout errors through the confusion-matrix mixing
    Kbar_+ = (1-ε_e) K_+ + ε_g K_-, Kbar_- = ε_e K_+ + (1-ε_g) K_-,
    i.e. the '+' record collects true '+' kept with probability 1-ε_e
    plus true '-' misread with probability ε_g (this assignment keeps
    Kbar_+ + Kbar_- trace preserving).

    When include_free_evolution is an OscillatorParams, the maps are
    premultiplied by exp(L_m tau) as in the joint-evolution picture.
    """
    ip = InteractionParams(Omega=Omega, tau=tau, T=T if T is not None else tau,
                           prep=prep if prep in ("g", "e") else "g")
    coeff = kraus_coefficients(ip, qubit, prep=prep)
    ops = fock_operators(dim)
    a, a_dag = ops["a"], ops["a_dag"]
    eye = np.eye(dim * dim, dtype=complex)
    meas = coeff["m_a"] * measurement_superop(a) \
        + coeff["m_adag"] * measurement_superop(a_dag)
    diss = coeff["d_a"] * dissipator(a) + coeff["d_adag"] * dissipator(a_dag)
    k_plus = (eye + meas + diss) / 2
    k_minus = (eye - meas + diss) / 2
    kb_plus = (1 - qubit.eps_e) * k_plus + qubit.eps_g * k_minus
    kb_minus = qubit.eps_e * k_plus + (1 - qubit.eps_g) * k_minus
    if include_free_evolution is not None:
        prop = expm(mech_liouvillian(include_free_evolution) * tau)
        kb_plus = prop @ kb_plus
        kb_minus = prop @ kb_minus
    return {"Kbar_plus": kb_plus, "Kbar_minus": kb_minus}


# ---------------------------------------------------------------------------
# joint-Lindblad oracle


def joint_liouvillian_oracle(osc: OscillatorParams, qubit: QubitModel, Omega):
    """Full vectorized Liouvillian on qubit (x) oscillator.

    Qubit basis ordered (|e>, |g>); Hamiltonian Δ a†a + i(Ω/2)(a†σ - aσ†);
    qubit jumps sqrt(κ1/2) σ, sqrt(κ1/2) σ†, sqrt(κφ/2) σz. Intended as a
    small-dim brute-force reference.
    """
    dim = osc.dim
    ops = fock_operators(dim)
    a, a_dag = ops["a"], ops["a_dag"]
    eye_q = np.eye(2, dtype=complex)
    eye_m = np.eye(dim, dtype=complex)
    sigma = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|
    sigma_dag = sigma.conj().T
    sigma_z = np.array([[1, 0], [0, -1]], dtype=complex)  # +1 on |e>

    ham = osc.delta * np.kron(eye_q, a_dag @ a)
    ham = ham + 1j * Omega / 2 * (
        np.kron(sigma, a_dag) - np.kron(sigma_dag, a)
    )
    lv = hamiltonian_superop(ham)
    am_down = np.sqrt(osc.kappa_m * (osc.n_th + 1)) * np.kron(eye_q, a)
    lv = lv + dissipator(am_down)
    if osc.n_th > 0:
        am_up = np.sqrt(osc.kappa_m * osc.n_th) * np.kron(eye_q, a_dag)
        lv = lv + dissipator(am_up)
    if qubit.kappa_1 > 0:
        rate = np.sqrt(qubit.kappa_1 / 2)
        lv = lv + dissipator(rate * np.kron(sigma, eye_m))
        lv = lv + dissipator(rate * np.kron(sigma_dag, eye_m))
    if qubit.kappa_phi > 0:
        lv = lv + dissipator(np.sqrt(qubit.kappa_phi / 2) * np.kron(sigma_z, eye_m))
    return lv


def oracle_conditional_maps(osc: OscillatorParams, qubit: QubitModel, Omega, tau,
                            prep):
    """Exact conditional maps on the oscillator from the joint Liouvillian.

    K_± rho = Tr_q[ |±><±| exp(L tau) (rho_q,i (x) rho) ] with the qubit
    prepared in the diagonal mixture of ground population p_i. Returns
    superoperators on the oscillator space (no readout confusion).
    """
    dim = osc.dim
    lv = joint_liouvillian_oracle(osc, qubit, Omega)
    prop = expm(lv * tau)
    p_i = (1 + qubit.eta_g) / 2 if prep == "g" else (1 - qubit.eta_e) / 2
    rho_q = np.diag([1 - p_i, p_i]).astype(complex)  # (e, g) ordering
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)   # (|g>+|e>)/√2
    minus = np.array([-1, 1], dtype=complex) / np.sqrt(2)
    proj_plus = np.outer(plus, plus.conj())
    proj_minus = np.outer(minus, minus.conj())

    k_plus = np.zeros((dim * dim, dim * dim), dtype=complex)
    k_minus = np.zeros_like(k_plus)
    for i in range(dim):
        for j in range(dim):
            basis = np.zeros((dim, dim), dtype=complex)
            basis[i, j] = 1.0
            joint = np.kron(rho_q, basis)
            out = unvec(prop @ vec(joint))
            col = j * dim + i
            k_plus[:, col] = vec(_project_trace_qubit(out, proj_plus, dim))
            k_minus[:, col] = vec(_project_trace_qubit(out, proj_minus, dim))
    return {"K_plus": k_plus, "K_minus": k_minus}


def _project_trace_qubit(joint, projector, dim):
    """Tr_q[(P (x) I) rho_joint] for a 2 (x) dim joint state."""
    blocks = joint.reshape(2, dim, 2, dim)
    # sum_{q,q'} P[q', q] * blocks[q, :, q', :]
    return np.einsum("qr,qirj->ij", projector.T, blocks)
