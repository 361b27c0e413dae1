"""Open-system evolution of the mechanical mode.

Superoperators act on column-stacked density matrices: vec(rho) stacks
the columns of rho, so vec(A rho B) = (B.T kron A) vec(rho).
"""

import numpy as np
from scipy.linalg import expm, svd

from .fock import OscillatorParams, fock_operators, thermal_state


class NonUniqueSteadyStateError(RuntimeError):
    """The Liouvillian null space is (numerically) degenerate."""


def spre(op):
    """Superoperator for left multiplication, vec(op rho)."""
    d = op.shape[0]
    return np.kron(np.eye(d), op)


def spost(op):
    """Superoperator for right multiplication, vec(rho op)."""
    d = op.shape[0]
    return np.kron(op.T, np.eye(d))


def hamiltonian_superop(ham):
    """-i[H, .] in column-stacked form."""
    return -1j * (spre(ham) - spost(ham))


def dissipator(jump):
    """Lindblad dissipator D[L]rho = L rho L† - {L†L, rho}/2."""
    jump = np.asarray(jump)
    if jump.ndim != 2 or jump.shape[0] != jump.shape[1]:
        raise ValueError(f"jump operator must be square, got shape {jump.shape}")
    ll = jump.conj().T @ jump
    return np.kron(jump.conj(), jump) - 0.5 * (spre(ll) + spost(ll))


def measurement_superop(op):
    """M[L]rho = L rho + rho L†, the linear measurement-backaction term."""
    return spre(op) + spost(op.conj().T)


def mech_liouvillian(params: OscillatorParams):
    """Rotating-frame Liouvillian of the thermally damped mode.

    H/hbar = delta a†a, jump operators sqrt(kappa_m (n_th+1)) a and
    sqrt(kappa_m n_th) a†.
    """
    ops = fock_operators(params.dim)
    a, a_dag = ops["a"], ops["a_dag"]
    lv = hamiltonian_superop(params.delta * (a_dag @ a))
    lv = lv + params.kappa_m * (params.n_th + 1) * dissipator(a)
    if params.n_th > 0:
        lv = lv + params.kappa_m * params.n_th * dissipator(a_dag)
    return lv


def propagate(liouvillian, t):
    """exp(L t) by scaling-and-squaring; exact semigroup property."""
    if t < 0:
        raise ValueError(f"propagation time must be non-negative, got {t}")
    return expm(liouvillian * t)


def steady_state(liouvillian, tol=1e-10):
    """Unit-trace Hermitian null vector of the Liouvillian.

    Uses the smallest right singular vector, then Hermitizes and
    renormalizes. Raises NonUniqueSteadyStateError when the two smallest
    singular values are not separated.
    """
    dim = int(round(np.sqrt(liouvillian.shape[0])))
    _, s, vh = svd(liouvillian)
    if s[-2] < 1e-8 * max(s[0], 1.0):
        raise NonUniqueSteadyStateError(
            f"two near-zero singular values {s[-2]:.3g}, {s[-1]:.3g}"
        )
    rho = vh[-1].conj().reshape(dim, dim, order="F")
    rho = (rho + rho.conj().T) / 2
    rho = rho / np.trace(rho).real
    resid = np.linalg.norm(liouvillian @ rho.reshape(-1, order="F"))
    if resid > tol * max(1.0, np.abs(liouvillian).max()):
        raise NonUniqueSteadyStateError(f"steady-state residual {resid:.3g}")
    return rho


def analytic_spectra(params: OscillatorParams, omega):
    """Emission/absorption Lorentzians of the damped thermal mode.

    S_adag_a peaks at +omega_m with area n_th (d omega / 2 pi measure),
    S_a_adag peaks at -omega_m with area n_th + 1; S_xx is their sum.
    """
    omega = np.asarray(omega, dtype=float)
    km, nth, wm = params.kappa_m, params.n_th, params.omega_m
    half = (km / 2) ** 2
    s_em = nth * km / ((omega - wm) ** 2 + half)
    s_ab = (nth + 1) * km / ((omega + wm) ** 2 + half)
    return {"S_adag_a": s_em, "S_a_adag": s_ab, "S_xx": s_em + s_ab}


def vec(rho):
    """Column-stack a density matrix."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v):
    """Inverse of vec."""
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d, order="F")


def choi_matrix(superop):
    """Choi matrix of a superoperator; PSD iff completely positive."""
    d = int(round(np.sqrt(superop.shape[0])))
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            basis = np.zeros((d, d), dtype=complex)
            basis[i, j] = 1.0
            out = unvec(superop @ vec(basis))
            choi[i * d:(i + 1) * d, j * d:(j + 1) * d] = out
    return choi


def _regression_correlator(liouvillian, op_late, op_early, rho, times):
    """<A(t) B(0)> by the quantum regression theorem (test utility).

    Evaluates Tr[A exp(L t) (B rho)] at each time.
    """
    seed = vec(op_early @ rho)
    dual = vec(op_late.conj().T).conj()
    out = np.empty(len(times), dtype=complex)
    for k, t in enumerate(times):
        out[k] = dual @ (propagate(liouvillian, t) @ seed)
    return out


def thermal_reference(params: OscillatorParams):
    """Thermal state at the params' occupation on the params' cutoff."""
    return thermal_state(params.dim, params.n_th)
