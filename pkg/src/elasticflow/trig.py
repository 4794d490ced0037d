"""Trigonometric (FFT) tools for periodic samples on a uniform grid."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _wavenumbers(n):
    k = np.fft.fftfreq(n, d=1.0 / n)
    k.setflags(write=False)
    return k


def wavenumbers(n):
    """Integer wavenumbers in FFT order; the Nyquist entry is ``-n/2``."""
    return _wavenumbers(n)


@lru_cache(maxsize=64)
def _rmult(n):
    k = np.arange(n // 2 + 1) * 1j
    k[-1] = 0.0
    k.setflags(write=False)
    return k


def rdiff(values):
    """First derivative of real ``2 pi``-periodic samples (fast path)."""
    n = values.shape[-1]
    return np.fft.irfft(_rmult(n) * np.fft.rfft(values), n)


def diff(values, order=1, period=2 * np.pi):
    """Spectral derivative of periodic samples.

    The Nyquist mode is dropped for odd orders so real data stays real.
    """
    n = values.shape[-1]
    k = wavenumbers(n) * (2 * np.pi / period)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(values))
    if np.isrealobj(values):
        return out.real
    return out


FILTER_TOL = 1e-14


def krasny_filter(coef, tol=FILTER_TOL):
    """Zero the Fourier coefficients below ``tol`` times the largest one.

    Removes round-off noise that repeated differentiation would otherwise
    amplify like a power of the mode number.
    """
    mag = np.abs(coef)
    return np.where(mag < tol * mag.max(), 0.0, coef)


def pad_coefficients(coef, m):
    """Zero-pad FFT coefficients of length n to length m >= n (unnormalised ifft scaling kept)."""
    n = coef.shape[-1]
    if m == n:
        return coef.copy()
    out = np.zeros(m, dtype=complex)
    h = n // 2
    out[:h] = coef[:h]
    out[m - h + 1:] = coef[h + 1:]
    # split the Nyquist coefficient between +n/2 and -n/2
    out[h] = 0.5 * coef[h]
    out[m - h] = 0.5 * coef[h]
    return out * (m / n)


def truncate_coefficients(coef, n):
    """Inverse of :func:`pad_coefficients`: keep the lowest ``n`` modes."""
    m = coef.shape[-1]
    if m == n:
        return coef.copy()
    h = n // 2
    out = np.empty(n, dtype=complex)
    out[:h] = coef[:h]
    out[h + 1:] = coef[m - h + 1:]
    out[h] = coef[h] + coef[m - h]
    return out * (n / m)


def resample(values, m):
    """Band-limited interpolation of periodic samples onto ``m`` uniform points."""
    coef = np.fft.fft(values)
    n = values.shape[-1]
    if m >= n:
        out = np.fft.ifft(pad_coefficients(coef, m))
    else:
        out = np.fft.ifft(truncate_coefficients(coef, m))
    if np.isrealobj(values):
        return out.real
    return out


def evaluate(values, x, period=2 * np.pi):
    """Evaluate the trigonometric interpolant of ``values`` at arbitrary points ``x``."""
    n = values.shape[-1]
    coef = np.fft.fft(values) / n
    k = wavenumbers(n)
    # symmetric Nyquist treatment keeps the interpolant real for real data
    coef = coef.copy()
    nyq = coef[n // 2]
    coef[n // 2] = 0.0
    phase = np.exp(1j * np.outer(np.asarray(x, dtype=float), k) * (2 * np.pi / period))
    out = phase @ coef
    out = out + nyq * np.cos(np.asarray(x, dtype=float) * (n // 2) * (2 * np.pi / period))
    if np.isrealobj(values):
        return out.real
    return out


def antiderivative(values, period=2 * np.pi):
    """Periodic antiderivative of the mean-free part, zero at the first sample.

    Returns ``(mean, F)`` with ``int_0^x values = mean * x + F(x)``.
    """
    n = values.shape[-1]
    coef = np.fft.fft(values)
    k = wavenumbers(n) * (2 * np.pi / period)
    mean = coef[0].real / n if np.isrealobj(values) else coef[0] / n
    integ = np.zeros_like(coef)
    nz = k != 0
    integ[nz] = coef[nz] / (1j * k[nz])
    integ[n // 2] = 0.0
    out = np.fft.ifft(integ)
    if np.isrealobj(values):
        out = out.real
    return mean, out - out[0]


def trapezoid(values, period=2 * np.pi):
    """Trapezoidal rule for one period of uniformly sampled periodic data."""
    return values.sum(axis=-1) * (period / values.shape[-1])


def invert_monotone(mean, periodic, offset, targets, tol=1e-12, max_iter=100):
    """Solve ``F(x) = target`` for ``F(x) = offset + mean * x + P(x)`` strictly increasing on ``[0, 2 pi]``.

    ``periodic`` samples ``P`` on a uniform grid with ``P(0) = 0``. A linear
    interpolation guess is polished by Newton steps on the trigonometric
    interpolant, falling back to bisection whenever a step leaves the bracket.
    """
    n = periodic.shape[0]
    targets = np.asarray(targets, dtype=float)
    x = 2 * np.pi * np.arange(n + 1) / n
    samp = offset + mean * x + np.append(periodic, periodic[0])
    idx = np.clip(np.searchsorted(samp, targets) - 1, 0, n - 1)
    lo, hi = x[idx], x[idx + 1]
    u = lo + (targets - samp[idx]) / (samp[idx + 1] - samp[idx]) * (hi - lo)

    coef = np.fft.fft(periodic) / n
    coef[n // 2] = 0.0
    k = wavenumbers(n)
    dcoef = 1j * k * coef
    for _ in range(max_iter):
        phase = np.exp(1j * np.outer(u, k))
        resid = offset + mean * u + (phase @ coef).real - targets
        if np.max(np.abs(resid), initial=0.0) < tol:
            return u
        slope = mean + (phase @ dcoef).real
        lo = np.where(resid < 0, u, lo)
        hi = np.where(resid > 0, u, hi)
        step = u - resid / slope
        bad = ~((step > lo) & (step < hi))
        u = np.where(bad, 0.5 * (lo + hi), step)
    raise ArithmeticError("monotone inversion did not converge")
