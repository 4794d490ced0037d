"""Closed plane curves on a uniform periodic grid and their geometry.

Conventions
-----------
Points are stored as an ``(n, 2)`` array and handled internally as complex
numbers ``z = x + iy``. The unit normal is the unit tangent rotated by
``+pi/2`` (``nu = i tau``), so a counter-clockwise circle has curvature
``+1/r``, an inward normal and ``gamma . nu = -r`` when centred at the origin.
"""

from dataclasses import dataclass, field
import json
import re

import numpy as np

from . import trig


class GeometryError(ValueError):
    """Raised for curves that violate a geometric precondition."""


class ImmersionError(GeometryError):
    def __init__(self, index, speed):
        super().__init__(f"curve is not immersed: |gamma_u| = {speed:.3e} at sample {index}")
        self.index = index
        self.speed = speed


class AliasingError(GeometryError):
    pass


IMMERSION_TOL = 1e-10
TURNING_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Periodic sampled plane curve, ``points[j] = gamma(2 pi j / n)``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise GeometryError(f"points must have shape (n, 2), got {pts.shape}")
        n = pts.shape[0]
        if n < 16 or n % 2:
            raise GeometryError(f"n_samples must be even and >= 16, got {n}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_complex(cls, z):
        z = np.asarray(z, dtype=complex)
        return cls(np.column_stack([z.real, z.imag]))

    @property
    def n_samples(self):
        return self.points.shape[0]

    @property
    def z(self):
        return self.points[:, 0] + 1j * self.points[:, 1]

    @property
    def parameter(self):
        return 2 * np.pi * np.arange(self.n_samples) / self.n_samples

    def scaled(self, factor):
        return ClosedCurve(self.points * factor)

    def translated(self, dx, dy):
        return ClosedCurve(self.points + np.array([dx, dy]))

    def refined(self, n):
        """The same band-limited curve sampled on ``n`` points."""
        return ClosedCurve.from_complex(trig.resample(self.z, n))

    def to_json(self):
        return {"n": self.n_samples, "points": self.points.tolist()}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        pts = np.asarray(obj["points"], dtype=float)
        if "n" in obj and int(obj["n"]) != pts.shape[0]:
            raise GeometryError(f"'n' = {obj['n']} does not match {pts.shape[0]} points")
        return cls(pts)


@dataclass(frozen=True, eq=False)
class GeometricData:
    """Per-sample fields and scalar invariants of a closed curve.

    Per-sample arrays live on the curve's own grid; scalars are computed by
    the trapezoidal rule on the twice-refined grid.
    """

    metric: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    k: np.ndarray
    k_s: np.ndarray
    k_ss: np.ndarray
    k_sss: np.ndarray
    length: float
    turning_number: int
    turning_residual: float
    mean_curvature: float
    energy: float
    k_osc: float
    deviation: float
    ks2: float
    k4: float
    support: np.ndarray = field(repr=False)

    @property
    def omega(self):
        return self.turning_number

    @property
    def e(self):
        return self.deviation


# -- internal kernel ---------------------------------------------------------


class _Fields:
    """Geometric fields of a complex curve on the 2x zero-padded grid."""

    __slots__ = ("n", "m", "z", "zu", "g", "tau", "nu", "k", "ks", "kss", "ksss", "du")

    def __init__(self, z, order=2):
        n = z.shape[0]
        m = 2 * n
        coef = trig.pad_coefficients(trig.krasny_filter(np.fft.fft(z)), m)
        kk = trig.wavenumbers(m)
        self.n, self.m = n, m
        self.du = 2 * np.pi / m
        ikc = 1j * kk * coef
        self.z, self.zu, zuu = np.fft.ifft(np.stack([coef, ikc, 1j * kk * ikc]), axis=-1)
        self.g = np.abs(self.zu)
        gmin = self.g.min()
        if not gmin > IMMERSION_TOL:
            j = int(np.argmin(self.g))
            raise ImmersionError(j // 2, float(self.g[j]))
        self.tau = self.zu / self.g
        self.nu = 1j * self.tau
        self.k = (self.zu.conjugate() * zuu).imag / self.g ** 3
        self.ks = self.kss = self.ksss = None
        if order >= 1:
            self.k = np.fft.irfft(trig.krasny_filter(np.fft.rfft(self.k)), m)
            self.ks = trig.rdiff(self.k) / self.g
        if order >= 2:
            self.kss = trig.rdiff(self.ks) / self.g
        if order >= 3:
            self.ksss = trig.rdiff(self.kss) / self.g

    def integrate(self, values):
        """Integral of ``values`` against arclength ``ds``."""
        return float(np.sum(values * self.g) * self.du)

    @property
    def length(self):
        return float(np.sum(self.g) * self.du)

    @property
    def support(self):
        """``gamma . nu`` on the padded grid."""
        return (self.z.conjugate() * self.nu).real


def _turning(fields):
    ang = np.angle(fields.zu)
    jumps = np.diff(np.append(ang, ang[0]))
    jumps = (jumps + np.pi) % (2 * np.pi) - np.pi
    winding = jumps.sum() / (2 * np.pi)
    omega = int(np.rint(winding))
    total = fields.integrate(fields.k) / (2 * np.pi)
    residual = abs(total - omega)
    if np.max(np.abs(jumps)) > 0.5 * np.pi:
        residual = max(residual, 1.0)
    return omega, residual


def _down(values):
    return values[::2]


def _pairs(z):
    return np.column_stack([z.real, z.imag])


def compute_geometry(curve, check_turning=True):
    """All geometric fields and functionals of ``curve``.

    Raises
    ------
    ImmersionError
        If ``|gamma_u|`` vanishes (to tolerance) at some sample.
    AliasingError
        If the total curvature is not within ``TURNING_TOL`` of an integer multiple of ``2 pi``.
    """
    z = curve.z if isinstance(curve, ClosedCurve) else np.asarray(curve, dtype=complex)
    f = _Fields(z, order=3)
    omega, residual = _turning(f)
    if check_turning and residual > TURNING_TOL:
        raise AliasingError(f"turning number residual {residual:.2e} exceeds {TURNING_TOL}; curve under-resolved")
    length = f.length
    kbar = 2 * np.pi * omega / length
    dev = f.integrate((f.k - kbar) ** 2)
    return GeometricData(
        metric=_down(f.g),
        tangent=_pairs(_down(f.tau)),
        normal=_pairs(_down(f.nu)),
        k=_down(f.k),
        k_s=_down(f.ks),
        k_ss=_down(f.kss),
        k_sss=_down(f.ksss),
        length=length,
        turning_number=omega,
        turning_residual=residual,
        mean_curvature=kbar,
        energy=f.integrate(f.k ** 2),
        k_osc=length * dev,
        deviation=dev,
        ks2=f.integrate(f.ks ** 2),
        k4=f.integrate(f.k ** 4),
        support=_down(f.support),
    )


def turning_number(curve):
    """Turning number of an immersed curve.

    Returns ``(omega, residual)`` where the residual is the distance of the
    total curvature ``(1/2 pi) int k ds`` from ``omega``.
    """
    f = _Fields(curve.z, order=0)
    omega, residual = _turning(f)
    if residual > TURNING_TOL:
        raise AliasingError(f"turning number residual {residual:.2e} exceeds {TURNING_TOL}; curve under-resolved")
    return omega, residual


# -- constructors --------------------------------------------------------------


def omega_circle(omega=1, radius=1.0, n_samples=128, center=(0.0, 0.0)):
    """Circle of the given radius traversed ``omega`` times counter-clockwise."""
    u = 2 * np.pi * np.arange(n_samples) / n_samples
    z = complex(*center) + radius * np.exp(1j * omega * u)
    return ClosedCurve.from_complex(z)


def translated_circle(cx, cy, omega=1, n_samples=128):
    return omega_circle(omega, 1.0, n_samples, center=(cx, cy))


def ellipse(a=2.0, b=1.0, n_samples=256):
    u = 2 * np.pi * np.arange(n_samples) / n_samples
    return ClosedCurve.from_complex(a * np.cos(u) + 1j * b * np.sin(u))


def figure_eight(n_samples=128):
    """Lemniscate of Gerono ``(cos u, sin 2u / 2)``; turning number zero."""
    u = 2 * np.pi * np.arange(n_samples) / n_samples
    return ClosedCurve.from_complex(np.cos(u) + 0.5j * np.sin(2 * u))


def curve_from_support(h, omega, n_samples):
    """Curve with support function ``h(theta)`` over ``theta in [0, 2 pi omega)``.

    ``h`` is a callable returning ``(h, h_theta)``; the curve is sampled at
    ``theta = omega * u`` and rebuilt as ``gamma = h n + h_theta t`` with
    ``n = (cos theta, sin theta)``, ``t = (-sin theta, cos theta)``.
    """
    theta = omega * 2 * np.pi * np.arange(n_samples) / n_samples
    hv, hd = h(theta)
    n = np.exp(1j * theta)
    return ClosedCurve.from_complex(hv * n + hd * 1j * n)


def perturbed_omega_circle(omega, mode, amplitude, phase=0.0, n_samples=128):
    """Unit ``omega``-circle with support function ``1 + eps cos(m theta / omega + phase)``.

    Raises
    ------
    GeometryError
        For ``mode == 0`` (changes the length) or amplitudes that make the
        radius of curvature non-positive.
    """
    return perturbed_multimode(omega, {mode: amplitude}, phase={mode: phase}, n_samples=n_samples)


def perturbed_multimode(omega, amplitudes, phase=None, n_samples=128):
    """Superposition of support modes ``{m: eps_m}`` on the unit ``omega``-circle."""
    if omega < 1:
        raise GeometryError("omega must be >= 1")
    phase = phase or {}
    modes = {int(m): float(a) for m, a in amplitudes.items()}
    if any(m == 0 and a != 0 for m, a in modes.items()):
        raise GeometryError("mode m = 0 changes the length of the curve; use m != 0")
    grid = omega * 2 * np.pi * np.arange(4 * n_samples) / (4 * n_samples)
    rho = np.ones_like(grid)
    for m, a in modes.items():
        rho += a * (1 - (m / omega) ** 2) * np.cos(m * grid / omega + phase.get(m, 0.0))
    if rho.min() <= 0:
        raise GeometryError(f"requested perturbation is not convex: min radius of curvature {rho.min():.3e}")

    def support(theta):
        h = np.ones_like(theta)
        hd = np.zeros_like(theta)
        for m, a in modes.items():
            arg = m * theta / omega + phase.get(m, 0.0)
            h += a * np.cos(arg)
            hd -= a * (m / omega) * np.sin(arg)
        return h, hd

    return curve_from_support(support, omega, n_samples)


def random_convex_curve(seed, omega=1, n_modes=8, n_samples=256, max_relative=0.5, translation=True):
    """Seeded band-limited convex curve.

    Support modes ``m = 2 .. n_modes + 1`` get normal coefficients with a
    ``m**-4`` envelope, rescaled so that the radius-of-curvature perturbation
    is at most ``max_relative``. Uses numpy's PCG64 generator.
    """
    rng = np.random.default_rng(seed)
    modes = np.arange(2, n_modes + 2)
    ca = rng.standard_normal(n_modes) * modes ** -4.0
    cb = rng.standard_normal(n_modes) * modes ** -4.0
    weight = np.abs(1 - (modes / omega) ** 2) * np.hypot(ca, cb)
    scale = max_relative / weight.sum()
    ca, cb = ca * scale, cb * scale
    shift = rng.uniform(-0.2, 0.2, size=2) if translation else np.zeros(2)

    def support(theta):
        arg = np.outer(theta, modes) / omega
        freq = modes / omega
        c, s = np.cos(arg), np.sin(arg)
        h = 1 + c @ ca + s @ cb + shift[0] * np.cos(theta) + shift[1] * np.sin(theta)
        hd = (c * freq) @ cb - (s * freq) @ ca - shift[0] * np.sin(theta) + shift[1] * np.cos(theta)
        return h, hd

    return curve_from_support(support, omega, n_samples)


def sheared_circle(strength=0.3, n_samples=128):
    """Unit circle with a non-uniform parametrisation ``u -> u + s sin u``."""
    u = 2 * np.pi * np.arange(n_samples) / n_samples
    return ClosedCurve.from_complex(np.exp(1j * (u + strength * np.sin(u))))


# -- scenario specs ------------------------------------------------------------

_FLOAT = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _floats(text):
    return [float(x) for x in re.findall(_FLOAT, text)]


def _kv(text):
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise GeometryError(f"expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = float(value)
    return out


def parse_curve_spec(spec, n_samples=None):
    """Build a curve from a string such as ``"omega_circle:3"`` or ``"ellipse:2,1"``.

    Recognised kinds: ``circle[:r]``, ``omega_circle:w[,r]``, ``ellipse:a,b``,
    ``translated_circle:cx,cy[,w]``, ``perturbed:omega=..,m=..,eps=..[,phase=..]``,
    ``multimode:omega=..,m2=..,m4=..`` (``mK`` is the amplitude of mode K),
    ``random:seed[,omega]``, ``figure_eight``, ``sheared:s`` and ``file:path.json``.
    """
    kind, _, arg = spec.partition(":")
    kind = kind.strip().lower()
    n = n_samples
    if kind == "file":
        with open(arg) as fh:
            curve = ClosedCurve.from_json(json.load(fh))
        return curve if n is None or n == curve.n_samples else curve.refined(n)
    if kind == "circle":
        vals = _floats(arg)
        return omega_circle(1, vals[0] if vals else 1.0, n or 128)
    if kind == "omega_circle":
        vals = _floats(arg)
        if not vals:
            raise GeometryError("omega_circle needs the turning number, e.g. omega_circle:3")
        return omega_circle(int(vals[0]), vals[1] if len(vals) > 1 else 1.0, n or 128)
    if kind == "ellipse":
        vals = _floats(arg)
        if len(vals) != 2:
            raise GeometryError("ellipse needs two semi-axes, e.g. ellipse:2,1")
        return ellipse(vals[0], vals[1], n or 256)
    if kind == "translated_circle":
        vals = _floats(arg)
        if len(vals) not in (2, 3):
            raise GeometryError("translated_circle needs cx,cy[,omega]")
        omega = int(vals[2]) if len(vals) == 3 else 1
        return translated_circle(vals[0], vals[1], omega, n or 128)
    if kind == "perturbed":
        kv = _kv(arg)
        try:
            return perturbed_omega_circle(
                int(kv["omega"]), int(kv["m"]), kv["eps"], kv.get("phase", 0.0), n or 128
            )
        except KeyError as exc:
            raise GeometryError(f"perturbed spec is missing {exc.args[0]!r}") from None
    if kind == "multimode":
        kv = _kv(arg)
        omega = int(kv.pop("omega", 1))
        amps = {int(k[1:]): v for k, v in kv.items() if k.startswith("m")}
        return perturbed_multimode(omega, amps, n_samples=n or 128)
    if kind == "random":
        vals = _floats(arg)
        if not vals:
            raise GeometryError("random needs a seed, e.g. random:7")
        omega = int(vals[1]) if len(vals) > 1 else 1
        return random_convex_curve(int(vals[0]), omega=omega, n_samples=n or 256)
    if kind == "figure_eight":
        return figure_eight(n or 128)
    if kind == "sheared":
        vals = _floats(arg)
        return sheared_circle(vals[0] if vals else 0.3, n or 128)
    raise GeometryError(f"unknown curve spec {spec!r}")
