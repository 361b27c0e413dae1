"""Spectral estimation and analysis of ±1 measurement records.

The PSD convention follows the batched periodogram

    S(omega_r) = <|F[m_k]_r|^2> * T / N,   omega_r = 2 pi r / (N T),

whose bin average (1/(NT)) sum_r S(omega_r) equals the record variance —
exactly 1 for a ±1 alphabet. Theory curves are computed from the exact
discrete autocorrelation sum, so they include aliasing and can be
compared to estimated spectra bin by bin.
"""

from dataclasses import dataclass

import numpy as np

from .fock import OscillatorParams
from .measurement import (
    InteractionParams,
    QubitModel,
    decay_kernels,
    effective_thermal_params,
    kraus_coefficients,
)
from .protocol import PREP_G, InsufficientDataError, MeasurementRecord


class FitFailureError(RuntimeError):
    """Nonlinear fit failed to converge."""


class CalibrationNotFoundError(RuntimeError):
    """No calibration peak resolvable above the background."""


@dataclass(frozen=True)
class PowerSpectrum:
    """Batched-periodogram estimate with per-bin standard errors.

    omega holds the N circular bins 2 pi r/(N T); psd is in seconds.
    batch_psd optionally keeps the per-batch periodograms for bootstrap
    resampling.
    """

    omega: np.ndarray
    psd: np.ndarray
    stderr: np.ndarray
    n_batches: int
    N: int
    T: float
    batch_psd: np.ndarray = None

    def __post_init__(self):
        if np.any(self.psd < 0):
            raise ValueError("PSD values must be non-negative")


@dataclass(frozen=True)
class LorentzianFit:
    """Constant background plus Lorentzian peak.

    Model: b + h (k/2)^2 / ((omega - w0)^2 + (k/2)^2); area is the peak's
    integral in the d omega / (2 pi) measure, h*k/4.
    """

    center: float
    fwhm: float
    height: float
    background: float
    area: float
    covariance: np.ndarray      # over (center, fwhm, height, background)
    chi2_reduced: float
    n_iterations: int

    @property
    def center_err(self):
        return np.sqrt(self.covariance[0, 0])

    @property
    def fwhm_err(self):
        return np.sqrt(self.covariance[1, 1])

    @property
    def area_err(self):
        # area = h k / 4: linear error propagation over (k, h)
        jac = np.array([0.0, self.height / 4, self.fwhm / 4, 0.0])
        return float(np.sqrt(jac @ self.covariance @ jac))


def estimate_psd(record: MeasurementRecord, N, method="periodogram",
                 keep_batches=False):
    """Batch-averaged PSD of a ±1 record.

    Splits every independent segment of the record into batches of N
    cycles (rectangular window, remainder discarded) and averages the
    squared DFT magnitudes; errors are the inter-batch standard error of
    the mean. method='autocorr' instead transforms the biased empirical
    autocorrelation of each batch, circularly folded — identical to the
    periodogram up to rounding.
    """
    m = np.asarray(record.outcomes, dtype=float)
    seg = record.segment_length if record.segment_length else len(m)
    if N > seg:
        raise InsufficientDataError(
            f"batch length N={N} exceeds segment length {seg}"
        )
    per_seg = seg // N
    n_seg = len(m) // seg
    batches = (
        m[: n_seg * seg]
        .reshape(n_seg, seg)[:, : per_seg * N]
        .reshape(n_seg * per_seg, N)
    )
    if len(batches) < 2:
        raise InsufficientDataError(
            f"need at least 2 batches of N={N}, record provides {len(batches)}"
        )
    if method == "periodogram":
        spec = np.abs(np.fft.fft(batches, axis=1)) ** 2 * record.T / N
    elif method == "autocorr":
        spec = np.empty_like(batches)
        for b, row in enumerate(batches):
            c = np.correlate(row, row, mode="full")[N - 1:] / N
            folded = c.copy()
            folded[1:] += c[1:][::-1]
            spec[b] = record.T * np.fft.fft(folded).real
        spec = np.maximum(spec, 0.0)
    else:
        raise ValueError(f"method must be periodogram or autocorr, got {method!r}")
    omega = 2 * np.pi * np.arange(N) / (N * record.T)
    psd = spec.mean(axis=0)
    stderr = spec.std(axis=0, ddof=1) / np.sqrt(len(spec))
    return PowerSpectrum(
        omega=omega,
        psd=psd,
        stderr=stderr,
        n_batches=len(spec),
        N=N,
        T=record.T,
        batch_psd=spec if keep_batches else None,
    )


def split_by_prep(record: MeasurementRecord):
    """Partition an alternating record into per-preparation sub-records.

    Requires strict g/e interleaving within every segment; the
    sub-records carry period 2T and halved segment length.
    """
    preps = record.preps
    labels = np.unique(preps)
    if len(labels) < 2:
        raise ValueError(
            "record carries a single preparation label; nothing to split"
        )
    seg = record.segment_length if record.segment_length else len(record)
    if seg % 2:
        raise ValueError("alternating segments must have even length")
    per_seg = preps[:seg]
    if (
        not np.all(preps.reshape(-1, seg) == per_seg)
        or len(np.unique(per_seg[0::2])) != 1
        or len(np.unique(per_seg[1::2])) != 1
        or per_seg[0] == per_seg[1]
    ):
        raise ValueError("record preparations do not strictly alternate")
    out = {}
    for phase in (0, 1):
        label = "record_g" if per_seg[phase] == PREP_G else "record_e"
        out[label] = MeasurementRecord(
            outcomes=record.outcomes.reshape(-1, seg)[:, phase::2].reshape(-1),
            preps=preps.reshape(-1, seg)[:, phase::2].reshape(-1),
            T=2 * record.T,
            fingerprint=record.fingerprint,
            seed=record.seed,
            segment_length=seg // 2,
        )
    return out


# ---------------------------------------------------------------------------
# Lorentzian fitting


def _lorentzian_model(params, omega):
    w0, log_k, log_h, b = params
    k, h = np.exp(log_k), np.exp(log_h)
    half_sq = (k / 2) ** 2
    denom = (omega - w0) ** 2 + half_sq
    model = b + h * half_sq / denom
    # Jacobian w.r.t. (w0, log k, log h, b)
    jac = np.empty((len(omega), 4))
    jac[:, 0] = h * half_sq * 2 * (omega - w0) / denom**2
    jac[:, 1] = h * 2 * half_sq * (omega - w0) ** 2 / denom**2  # d/d log k
    jac[:, 2] = h * half_sq / denom
    jac[:, 3] = 1.0
    return model, jac


def fit_lorentzian(spec: PowerSpectrum, window, max_iter=200, tol=1e-10):
    """Weighted least-squares fit of background + Lorentzian on a window.

    window is an (omega_lo, omega_hi) range in rad/s. Initial guesses:
    peak bin for the center, second-moment width, max - median height,
    median background. Damped Gauss-Newton with the width and height in
    log parameters; errors from the weighted Jacobian at the optimum.
    """
    lo, hi = window
    mask = (spec.omega >= lo) & (spec.omega <= hi)
    if mask.sum() < 8:
        raise ValueError(f"window [{lo}, {hi}] contains {mask.sum()} bins (< 8)")
    omega = spec.omega[mask]
    y = spec.psd[mask]
    sig = spec.stderr[mask]
    if np.all(sig > 0):
        weights = 1.0 / sig
    else:
        weights = np.ones_like(y)

    b0 = np.median(y)
    excess = np.maximum(y - b0, 0.0)
    h0 = max(y.max() - b0, 1e-12 * max(b0, 1.0))
    w0 = omega[np.argmax(y)]
    norm = excess.sum()
    if norm > 0:
        mu = (omega * excess).sum() / norm
        var = ((omega - mu) ** 2 * excess).sum() / norm
        k0 = max(2 * np.sqrt(var), 2 * (omega[1] - omega[0]))
    else:
        k0 = (hi - lo) / 4
    params = np.array([w0, np.log(k0), np.log(h0), b0])

    lam = 1e-3
    model, jac = _lorentzian_model(params, omega)
    resid = (y - model) * weights
    cost = resid @ resid
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        jw = jac * weights[:, None]
        grad = jw.T @ resid
        hess = jw.T @ jw
        damped = hess + lam * np.diag(np.maximum(np.diag(hess), 1e-30))
        try:
            step = np.linalg.solve(damped, grad)
        except np.linalg.LinAlgError:
            lam *= 10
            if lam > 1e12:
                raise FitFailureError(
                    f"singular normal equations after {n_iter} iterations"
                )
            continue
        trial = params + step
        model_t, jac_t = _lorentzian_model(trial, omega)
        resid_t = (y - model_t) * weights
        cost_t = resid_t @ resid_t
        rel = np.abs(step) / np.maximum(np.abs(params), 1e-30)
        if cost_t < cost:
            improvement = (cost - cost_t) / max(cost, 1e-300)
            params, model, jac, resid, cost = trial, model_t, jac_t, resid_t, cost_t
            lam = max(lam / 3, 1e-12)
            if rel.max() < tol or improvement < 1e-14:
                break
        else:
            lam *= 10
            if rel.max() < tol:
                break  # converged: even the damped step no longer moves us
            if lam > 1e12:
                raise FitFailureError(
                    f"no descent direction after {n_iter} iterations; "
                    f"residual rms {np.sqrt(cost / len(y)):.3g}"
                )
    else:
        raise FitFailureError(
            f"no convergence in {max_iter} iterations; "
            f"residual rms {np.sqrt(cost / len(y)):.3g}"
        )

    w0, log_k, log_h, b = params
    k, h = np.exp(log_k), np.exp(log_h)
    jw = jac * weights[:, None]
    dof = max(len(y) - 4, 1)
    chi2_red = cost / dof
    try:
        cov_log = np.linalg.inv(jw.T @ jw)
    except np.linalg.LinAlgError as exc:
        raise FitFailureError(f"singular Jacobian at optimum: {exc}") from exc
    if not np.all(sig > 0):
        cov_log = cov_log * chi2_red  # scale by residual variance when unweighted
    # transform (w0, log k, log h, b) covariance to (w0, k, h, b)
    scale = np.diag([1.0, k, h, 1.0])
    cov = scale @ cov_log @ scale
    return LorentzianFit(
        center=w0,
        fwhm=k,
        height=h,
        background=b,
        area=h * k / 4,
        covariance=cov,
        chi2_reduced=chi2_red,
        n_iterations=n_iter,
    )


def bootstrap_area(spec: PowerSpectrum, window, n_boot=100, seed=0):
    """Standard deviation of the fitted area over batch resamples.

    Requires a spectrum estimated with keep_batches=True.
    """
    if spec.batch_psd is None:
        raise ValueError("spectrum was estimated without keep_batches=True")
    rng = np.random.default_rng(seed)
    nb = len(spec.batch_psd)
    areas = []
    for _ in range(n_boot):
        pick = rng.integers(0, nb, size=nb)
        sub = spec.batch_psd[pick]
        boot = PowerSpectrum(
            omega=spec.omega,
            psd=sub.mean(axis=0),
            stderr=sub.std(axis=0, ddof=1) / np.sqrt(nb),
            n_batches=nb,
            N=spec.N,
            T=spec.T,
        )
        try:
            areas.append(fit_lorentzian(boot, window).area)
        except FitFailureError:
            continue
    if len(areas) < n_boot // 2:
        raise FitFailureError(
            f"only {len(areas)}/{n_boot} bootstrap fits converged"
        )
    return float(np.std(areas, ddof=1))


def normalize_and_area(spec: PowerSpectrum, fit: LorentzianFit, cal_freq):
    """Express a spectrum and its fitted peak area in calibration units.

    The calibration amplitude is the background-subtracted PSD at the bin
    closest to cal_freq; it must exceed 5 standard errors of that bin.
    """
    idx = int(np.argmin(np.abs(spec.omega - cal_freq)))
    cal_amp = spec.psd[idx] - fit.background
    threshold = 5 * spec.stderr[idx]
    if cal_amp <= threshold:
        raise CalibrationNotFoundError(
            f"calibration peak at {cal_freq:.4g} rad/s is {cal_amp:.3g} above "
            f"background, below the 5 sigma threshold {threshold:.3g}"
        )
    normalized = (spec.psd - fit.background) / cal_amp
    return {
        "normalized": normalized,
        "omega": spec.omega,
        "cal_amplitude": float(cal_amp),
        "area": fit.area / cal_amp,
    }


# ---------------------------------------------------------------------------
# theory curves and asymmetry


def _discrete_lorentzian_sum(omega, delta, kappa, T_s):
    """sum_r e^{-kappa |r| T_s / 2} cos(delta T_s r) e^{-i omega T_s r}.

    Closed geometric form; the exact discrete counterpart of a pair of
    Lorentzians at ±delta, including all aliases.
    """
    rho = np.exp(-kappa * T_s / 2)

    def pole(x):
        return (1 - rho**2) / (1 - 2 * rho * np.cos(x * T_s) + rho**2)

    return (pole(omega - delta) + pole(omega + delta)) / 2


def _sideband_weight(coeff_early, coeff_late, n_eff, contrast):
    """Record-autocorrelation amplitude for one (early, late) prep pair."""
    late = coeff_late["m_a"] + coeff_late["m_adag"]
    early = 2 * n_eff * coeff_early["m_a"] + 2 * (n_eff + 1) * coeff_early["m_adag"]
    return contrast**2 * late * early


def theory_spectrum(prep, osc: OscillatorParams, ip: InteractionParams,
                    qubit: QubitModel, omega):
    """Closed-form PSD of the stroboscopic record.

    The record autocorrelation at lag r != 0 is

        C_r = contrast^2 (m_a' + m_adag')(2 n m_a + 2(n+1) m_adag)
              e^{-kappa_eff |r| T_s / 2} cos(Delta T_s r)

    with the probe coefficients of the early/late preparations, the
    readout contrast 1 - eps_g - eps_e, and (kappa_eff, n_eff) the
    schedule's effective thermal parameters. The zero-lag term is
    1 - (eps_g - eps_e)^2 once the record's DC offset is split off (the
    offset itself lands in the omega = 0 bin and is not included here).

    prep selects a sub-record ('g' or 'e', sampled at T_s = 2T when the
    schedule alternates) or 'alternating' for the full interleaved
    record, whose signal is modulated at the Nyquist frequency.
    """
    omega = np.asarray(omega, dtype=float)
    schedule = ip.prep
    kappa_eff, n_eff = effective_thermal_params(schedule, ip, qubit, osc)
    if not np.isfinite(n_eff) or kappa_eff <= 0:
        raise ValueError("schedule has no stationary spectrum (amplification)")
    contrast = 1 - qubit.eps_g - qubit.eps_e
    c0 = 1 - (qubit.eps_g - qubit.eps_e) ** 2
    coeff = {p: kraus_coefficients(ip, qubit, prep=p) for p in ("g", "e")}

    if prep in ("g", "e"):
        T_s = 2 * ip.T if schedule == "alternating" else ip.T
        if schedule in ("g", "e") and schedule != prep:
            raise ValueError(
                f"schedule {schedule!r} produces no prep-{prep} sub-record"
            )
        amp = _sideband_weight(coeff[prep], coeff[prep], n_eff, contrast)
        series = _discrete_lorentzian_sum(omega, osc.delta, kappa_eff, T_s)
        return T_s * (c0 + amp * (series - 1))
    if prep != "alternating":
        raise ValueError(f"prep must be g, e or alternating, got {prep!r}")
    if schedule != "alternating":
        raise ValueError("full alternating curve requires an alternating schedule")
    amp_even = (
        _sideband_weight(coeff["g"], coeff["g"], n_eff, contrast)
        + _sideband_weight(coeff["e"], coeff["e"], n_eff, contrast)
    ) / 2
    amp_odd = (
        _sideband_weight(coeff["g"], coeff["e"], n_eff, contrast)
        + _sideband_weight(coeff["e"], coeff["g"], n_eff, contrast)
    ) / 2
    full = _discrete_lorentzian_sum(omega, osc.delta, kappa_eff, ip.T)
    even = _discrete_lorentzian_sum(omega, osc.delta, kappa_eff, 2 * ip.T)
    return ip.T * (c0 + amp_even * (even - 1) + amp_odd * (full - even))


def area_to_phonons(area, Omega, tau, qubit: QubitModel, prep):
    """Convert a fitted one-sided peak area to a phonon number.

    Inverts the normalized-area relation: dividing the raw area by
    contrast^2 eta_i^2 (Omega tau_Sigma)^2 / 4 yields
    n_eff + 1/2 ∓ tau_2/(2 eta_i tau_Sigma).
    """
    ker = decay_kernels(tau, qubit.kappa_1, qubit.kappa_2)
    eta = qubit.eta_g if prep == "g" else qubit.eta_e
    contrast = 1 - qubit.eps_g - qubit.eps_e
    denom = contrast**2 * eta**2 * (Omega * ker["tau_sigma"]) ** 2 / 4
    return area / denom


def asymmetry_analysis(area_g, area_e, qubit: QubitModel, tau):
    """Measured vs predicted emission/absorption area difference.

    Areas must already be in phonon units (see area_to_phonons). The
    prediction (tau_2/tau_Sigma)(eta_g + eta_e)/(2 eta_g eta_e) reduces
    to exactly one phonon for an ideal qubit.
    """
    ker = decay_kernels(tau, qubit.kappa_1, qubit.kappa_2)
    ratio = ker["tau_2"] / ker["tau_sigma"]
    predicted = ratio * (qubit.eta_g + qubit.eta_e) / (2 * qubit.eta_g * qubit.eta_e)
    return {
        "measured": float(area_e - area_g),
        "predicted": float(predicted),
    }
