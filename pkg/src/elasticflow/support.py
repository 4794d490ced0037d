"""Normal-angle parametrisation of strictly convex curves.

The support function is taken against the *outward* normal
``n(theta) = (cos theta, sin theta)`` so that the centred unit circle has
``h = 1``; the position is ``gamma = h n + h_theta t`` with
``t = (-sin theta, cos theta)``.
"""

from dataclasses import dataclass

import numpy as np

from . import trig
from .geometry import ClosedCurve, GeometryError, _Fields, _turning


class NotConvexError(GeometryError):
    """The curve has a non-positive curvature sample and has no normal-angle gauge."""


INVERSION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SupportDecomposition:
    omega: int
    theta: np.ndarray
    h: np.ndarray
    h_theta: np.ndarray
    rho: np.ndarray
    a1: float
    a2: float
    mean: float
    w: np.ndarray
    u: np.ndarray

    @property
    def g(self):
        return self.h - 1.0

    @property
    def period(self):
        return 2 * np.pi * self.omega

    @property
    def translation(self):
        return float(np.hypot(self.a1, self.a2))

    def integrate(self, values):
        return float(trig.trapezoid(values, self.period))

    @property
    def w_norm(self):
        return float(np.sqrt(self.integrate(self.w ** 2)))

    def reconstruct(self):
        """Minkowski reconstruction ``h n + h_theta t`` on the theta grid (complex)."""
        n = np.exp(1j * self.theta)
        return self.h * n + self.h_theta * 1j * n


def _oriented(z):
    """Orientation-normalised curve (counter-clockwise) and its fields."""
    f = _Fields(z, order=0)
    omega, _ = _turning(f)
    if omega < 0:
        z = z[::-1]
        f = _Fields(z, order=0)
        omega = -omega
    return z, f, omega


def support_decomposition(curve, n_theta=None):
    """Support function ``h`` on a uniform normal-angle grid over ``[0, 2 pi omega)``.

    Also returns ``rho = h + h_theta_theta``, the translation amplitudes
    ``a_i = (1 / pi omega) int h phi_i`` and the residual ``w`` of ``g = h - 1``
    after removing its mean and first harmonics.

    Raises
    ------
    NotConvexError
        If the curvature is not strictly positive after orientation normalisation.
    """
    z = curve.z if isinstance(curve, ClosedCurve) else np.asarray(curve, dtype=complex)
    z, f, omega = _oriented(z)
    if omega < 1 or f.k.min() <= 0:
        raise NotConvexError(f"curve is not strictly convex (min k = {f.k.min():.3e}, omega = {omega})")
    n = z.shape[0]
    m = n_theta or n
    # theta(u) - pi/2 is the outward-normal angle; d theta / du = k |gamma_u|
    q = f.k * f.g
    mean, periodic = trig.antiderivative(q)
    theta0 = float(np.angle(f.zu[0])) - np.pi / 2
    period = 2 * np.pi * omega
    theta = period * np.arange(m) / m
    targets = theta0 + np.mod(theta - theta0, period)
    try:
        u = trig.invert_monotone(mean, trig.resample(periodic, n), theta0, targets, tol=INVERSION_TOL)
    except ArithmeticError as exc:
        raise GeometryError(str(exc)) from None
    zi = trig.evaluate(z, u)
    normal = np.exp(1j * theta)
    h = (zi * normal.conjugate()).real
    h_theta = trig.diff(h, 1, period)
    rho = h + trig.diff(h, 2, period)
    g = h - 1.0
    cos, sin = np.cos(theta), np.sin(theta)
    a1 = float(trig.trapezoid(h * cos, period) / (np.pi * omega))
    a2 = float(trig.trapezoid(h * sin, period) / (np.pi * omega))
    gbar = float(trig.trapezoid(g, period) / period)
    w = g - gbar - a1 * cos - a2 * sin
    return SupportDecomposition(omega, theta, h, h_theta, rho, a1, a2, gbar, w, np.mod(u, 2 * np.pi))


def distance_to_omega_circle(curve, omega=None, decomposition=None):
    """``L^2(d theta)`` distance to the centred unit ``omega``-circle.

    Returns ``(raw, support_proxy)``: the norm of ``(h - 1) n + h_theta t`` and
    ``(int (h - 1)^2 + h_theta^2)^(1/2)``. They coincide because ``n, t`` are
    orthonormal; both are reported.
    """
    d = decomposition or support_decomposition(curve)
    if omega is not None and d.omega != omega:
        raise GeometryError(f"curve has turning number {d.omega}, expected {omega}")
    n = np.exp(1j * d.theta)
    diff = d.g * n + d.h_theta * 1j * n
    raw = np.sqrt(d.integrate(np.abs(diff) ** 2))
    proxy = np.sqrt(d.integrate(d.g ** 2 + d.h_theta ** 2))
    return float(raw), float(proxy)
