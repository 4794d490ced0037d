"""Spectral constants of the linearised rescaled flow about an omega-circle.

For a mean-zero curvature perturbation on the circle of length ``2 pi omega``
the quadratic form ``4|f_ss|^2 - 10|f_s|^2 + 8|f|^2`` is diagonal in the
Fourier basis with symbol ``p(n / omega)``, ``p(x) = 4x^4 - 10x^2 + 8``.
"""

from dataclasses import dataclass, asdict
from fractions import Fraction
import math

import numpy as np

from . import trig

GLOBAL_MIN = 7.0 / 4.0
GLOBAL_ARGMIN = math.sqrt(5.0) / 2.0


def p_poly(x):
    """``4x^4 - 10x^2 + 8``; exact for ``Fraction`` input."""
    x2 = x * x
    return 4 * x2 * x2 - 10 * x2 + 8


@dataclass(frozen=True)
class SpectralReport:
    omega: int
    lambda_omega: float
    argmin_n: int
    delta_omega: float
    realizable_gap: float
    realizable_argmin_n: int
    mu_omega: float
    n_max_scanned: int

    def to_dict(self):
        return asdict(self)


def default_n_max(omega):
    return max(2 * omega, 4)


def lattice_gap(omega, n_max=None):
    """Minimum of ``p(n / omega)`` over ``|n| <= n_max``.

    ``p`` increases for ``x >= sqrt(5)/2``, so ``n_max = 2 omega`` already
    contains every candidate minimiser; ``n_max`` must also reach
    ``omega + 1`` so the realizable gap (``n not in {0, +-omega}``) and
    ``mu_omega`` are defined.
    """
    if omega < 1:
        raise ValueError("omega must be a positive integer")
    if n_max is None:
        n_max = default_n_max(omega)
    required = max(2 * omega, omega + 1)
    if n_max < required:
        raise ValueError(f"n_max = {n_max} is too small for omega = {omega}; need n_max >= {required}")
    best = None
    real = None
    mu = None
    for n in range(0, n_max + 1):
        x = Fraction(n, omega)
        val = p_poly(x)
        if best is None or val < best[0]:
            best = (val, n)
        if n != 0 and n != omega:
            if real is None or val < real[0]:
                real = (val, n)
            gap = abs(1 - x * x)
            if mu is None or gap < mu:
                mu = gap
    lam = float(best[0])
    return SpectralReport(
        omega=omega,
        lambda_omega=lam,
        argmin_n=best[1],
        delta_omega=float(best[0] - Fraction(7, 4)),
        realizable_gap=float(real[0]),
        realizable_argmin_n=real[1],
        mu_omega=float(mu),
        n_max_scanned=n_max,
    )


def predicted_rate(omega, m):
    """Linearised decay rate of ``e`` for a single support mode ``m``."""
    return float(p_poly(Fraction(m, omega)))


MEAN_TOL = 1e-10


def coercivity_form(f, omega):
    """``4 int f_ss^2 - 10 int f_s^2 + 8 int f^2`` on the circle of length ``2 pi omega``.

    ``f`` holds uniform samples over one period.
    """
    f = np.asarray(f, dtype=float)
    period = 2 * np.pi * omega
    mean = trig.trapezoid(f, period)
    scale = max(1.0, float(np.sqrt(trig.trapezoid(f * f, period))))
    if abs(mean) > MEAN_TOL * scale:
        raise ValueError(f"f must have zero mean; int f = {mean:.3e}")
    fs = trig.diff(f, 1, period)
    fss = trig.diff(f, 2, period)
    return float(trig.trapezoid(4 * fss ** 2 - 10 * fs ** 2 + 8 * f ** 2, period))


def gap_table(omegas, n_max=None):
    return [lattice_gap(w, n_max if n_max is not None else None) for w in omegas]
