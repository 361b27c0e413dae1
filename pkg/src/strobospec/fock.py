"""Truncated Fock-space states and operators.

All operators are dense complex matrices on a dim-dimensional number basis.
The dimensionless quadratures follow x = (a + a†)/2, p = i(a† - a)/2, so
[x, p] = i/2 and the vacuum has <x²> = <p²> = 1/4.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln


class TruncationError(ValueError):
    """State does not fit in the requested Fock cutoff."""


@dataclass(frozen=True)
class OscillatorParams:
    """Mechanical mode in the frame rotating at the qubit frequency.

    omega_m : lab-frame angular frequency (rad/s), informational
    kappa_m : energy decay rate (rad/s)
    n_th    : mean thermal occupation of the bath
    delta   : qubit-mode detuning (rad/s); the thermal peak sits here
    dim     : Fock cutoff
    """

    omega_m: float
    kappa_m: float
    n_th: float
    delta: float
    dim: int

    def __post_init__(self):
        if self.kappa_m <= 0:
            raise ValueError(f"kappa_m must be positive, got {self.kappa_m}")
        if self.n_th < 0:
            raise ValueError(f"n_th must be non-negative, got {self.n_th}")
        if self.dim < 2:
            raise ValueError(f"dim must be at least 2, got {self.dim}")


def fock_operators(dim):
    """Return dict with ladder operators a, a_dag and quadratures x, p."""
    if dim < 2:
        raise ValueError(f"dim must be at least 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    a_dag = a.conj().T
    x = (a + a_dag) / 2
    p = 1j * (a_dag - a) / 2
    return {"a": a, "a_dag": a_dag, "x": x, "p": p}


def thermal_state(dim, n_th):
    """Gibbs-distributed diagonal density matrix, renormalized on the cutoff.

    Populations are proportional to (n_th/(n_th+1))**n.
    """
    if n_th < 0:
        raise ValueError(f"n_th must be non-negative, got {n_th}")
    if n_th == 0:
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    r = n_th / (n_th + 1.0)
    pops = r ** np.arange(dim)
    pops /= pops.sum()
    return np.diag(pops).astype(complex)


def coherent_state(dim, alpha, tail_tol=1e-8):
    """Normalized coherent state vector with Poissonian amplitudes.

    Raises TruncationError when the neglected tail above the cutoff
    exceeds tail_tol.
    """
    n = np.arange(dim)
    # log-domain to avoid overflow of alpha**n / sqrt(n!)
    if alpha == 0:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    logmag = n * np.log(np.abs(alpha)) - 0.5 * gammaln(n + 1)
    phase = np.angle(alpha) * n
    vec = np.exp(logmag - abs(alpha) ** 2 / 2 + 1j * phase)
    norm2 = np.sum(np.abs(vec) ** 2)
    if 1.0 - norm2 > tail_tol:
        raise TruncationError(
            f"coherent state |alpha|^2={abs(alpha) ** 2:.3g} loses "
            f"{1.0 - norm2:.3g} probability above cutoff dim={dim}"
        )
    return vec / np.sqrt(norm2)


def choose_cutoff(n_th, tail_tol=1e-8, safety=1.0):
    """Smallest dim whose thermal tail population is below tail_tol.

    The tail of the Gibbs distribution above dim is (n_th/(n_th+1))**dim.
    `safety` multiplies the result; raise it when coherent displacements
    ride on top of the thermal state.
    """
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if n_th <= 0:
        dim = 2
    else:
        r = n_th / (n_th + 1.0)
        dim = max(2, int(np.ceil(np.log(tail_tol) / np.log(r))))
    return max(2, int(np.ceil(dim * safety)))
