"""Time stepping of the free and the length-preserving rescaled elastic flow.

Both flows move the curve along the normal ``nu`` with speed
``V = -(2 k_ss + k^3 - lam (gamma . nu))``, where ``lam = 0`` for the free
flow and ``lam = (2 int k_s^2 - int k^4) / L`` for the rescaled flow.

Two schemes are available:

``semi_implicit_spectral``
    First-order splitting in the (approximately) uniform-arclength gauge.
    The leading stiff operator ``-2 d_s^4`` is frozen per step with the mean
    metric, where it is diagonal in the Fourier basis with symbol
    ``A = 2 (2 pi n / L)^4``, and treated implicitly on the stiff modes; the
    rest is explicit::

        z_{n+1} = z_n + dt * vel(z_n) / (1 + dt * A)

    Fixed points of the flow are fixed points of the scheme.
``explicit_rk4``
    Classical Runge-Kutta; stability-limited to ``dt ~ (ds)^4``.
"""

from dataclasses import dataclass, field, asdict, fields
import csv
import io
import json
import math
from functools import lru_cache

import numpy as np

from . import trig
from .geometry import IMMERSION_TOL, ClosedCurve, GeometryError, _Fields, _turning, compute_geometry
from .support import NotConvexError, support_decomposition, distance_to_omega_circle

MODES = ("free", "rescaled")
SCHEMES = ("explicit_rk4", "semi_implicit_spectral")
SEMI_IMPLICIT_DT = 1e-4
RK4_STABILITY = 2.8
CURVATURE_LIMIT = 1e8
DT_FLOOR = 1e-14
IMPLICIT_CUTOFF = 0.25


class FlowError(RuntimeError):
    """A step was rejected; ``state`` holds the last accepted state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FlowConfig:
    mode: str = "rescaled"
    scheme: str = "semi_implicit_spectral"
    dt: object = "auto"
    t_end: float = 1.0
    target_length: object = None
    resample_ratio_threshold: float = 1.2
    renormalize_length: object = None
    output_every: float = 0.01
    n_samples: object = None
    diagnostics: bool = True
    snapshot_every: object = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ConfigError(f"dt must be a positive number or 'auto', got {self.dt!r}")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not self.output_every > 0:
            raise ConfigError("output_every must be positive")
        if not self.resample_ratio_threshold > 1:
            raise ConfigError("resample_ratio_threshold must exceed 1")
        if self.n_samples is not None and (int(self.n_samples) < 16 or int(self.n_samples) % 2):
            raise ConfigError("n_samples must be even and >= 16")
        if self.renormalize_length is None:
            object.__setattr__(self, "renormalize_length", self.mode == "rescaled")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown FlowConfig keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    curve: ClosedCurve
    lam: float = float("nan")
    step_count: int = 0
    _geometry: list = field(default_factory=list, repr=False)

    @property
    def geometry(self):
        if not self._geometry:
            self._geometry.append(compute_geometry(self.curve))
        return self._geometry[0]


# -- right-hand side -------------------------------------------------------------


def lambda_coefficient(geometry):
    """``(2 int k_s^2 ds - int k^4 ds) / L``."""
    return (2 * geometry.ks2 - geometry.k4) / geometry.length


def normal_speed(geometry, mode="rescaled", lam=None):
    """Per-sample normal speed ``V`` (motion is ``V nu``)."""
    speed = -(2 * geometry.k_ss + geometry.k ** 3)
    if mode == "rescaled":
        if lam is None:
            lam = lambda_coefficient(geometry)
        speed = speed + lam * geometry.support
    return speed


def _velocity(z, mode):
    """Dealiased velocity coefficients (length-n FFT), plus ``(L, lam, fields)``."""
    f = _Fields(z, order=2)
    k = f.k
    if not np.all(np.isfinite(k)) or np.max(np.abs(k)) > CURVATURE_LIMIT:
        raise FlowError(f"curvature overflow (max |k| = {np.max(np.abs(k)):.3e})")
    length = f.length
    lam = (2 * f.integrate(f.ks ** 2) - f.integrate(k ** 4)) / length
    speed = -(2 * f.kss + k ** 3)
    if mode == "rescaled":
        speed += lam * f.support
    coef = trig.truncate_coefficients(np.fft.fft(speed * f.nu), z.shape[0])
    return coef, length, lam, f


def _stiff_symbol(n, length, dt):
    """Implicit symbol ``2 (2 pi n / L)^4``, restricted to the stiff modes.

    Modes with ``dt * symbol <= IMPLICIT_CUTOFF`` are resolved by explicit
    Euler and are left out, which keeps translations and other slow geometric
    motions free of the ``O(dt * symbol)`` splitting error.
    """
    a = (2 * (2 * np.pi / length) ** 4) * _k4(n)
    return np.where(dt * a > IMPLICIT_CUTOFF, a, 0.0)


@lru_cache(maxsize=32)
def _k4(n):
    return trig.wavenumbers(n) ** 4


def auto_dt(config, n, length):
    if config.scheme == "semi_implicit_spectral":
        return SEMI_IMPLICIT_DT
    kmax = np.pi * n / length
    return 0.5 * RK4_STABILITY / (2 * kmax ** 4)


def _length(zcoef):
    n = zcoef.shape[0]
    zu = np.fft.ifft(1j * trig.wavenumbers(n) * zcoef)
    return float(np.abs(zu).mean() * 2 * np.pi)


def resample_uniform_arclength(curve):
    """Same trace, resampled so that ``|gamma_u|`` is constant; ``gamma(0)`` is kept."""
    z = curve.z if isinstance(curve, ClosedCurve) else np.asarray(curve, dtype=complex)
    out = _resample_z(z)
    return ClosedCurve.from_complex(out) if isinstance(curve, ClosedCurve) else out


def _resample_z(z):
    n = z.shape[0]
    f = _Fields(z, order=0)
    mean, periodic = trig.antiderivative(f.g)
    length = 2 * np.pi * mean
    targets = length * np.arange(n) / n
    u = trig.invert_monotone(mean, trig.resample(periodic, n), 0.0, targets, tol=1e-13 * max(1.0, length))
    return trig.evaluate(z, u)


class Integrator:
    """Mutable stepping kernel on complex samples; one instance per run."""

    def __init__(self, curve, config, normalize_initial=True):
        self.config = config
        z = curve.z if isinstance(curve, ClosedCurve) else np.asarray(curve, dtype=complex)
        if config.n_samples and int(config.n_samples) != z.shape[0]:
            z = trig.resample(z, int(config.n_samples))
        f = _Fields(z, order=0)
        self.omega, _ = _turning(f)
        self.target = config.target_length
        if self.target is None:
            self.target = 2 * np.pi * abs(self.omega) if self.omega else f.length
        if config.renormalize_length and normalize_initial:
            z = z * (self.target / f.length)
        self.z = z
        self.t = 0.0
        self.steps = 0
        self.resamples = 0
        self.lam = float("nan")
        self._maybe_resample()

    def _maybe_resample(self, fields=None):
        f = fields or _Fields(self.z, order=0)
        if f.g.max() / f.g.min() > self.config.resample_ratio_threshold:
            self.z = _resample_z(self.z)
            self.resamples += 1
            return True
        return False

    def dt_now(self):
        if self.config.dt != "auto":
            return float(self.config.dt)
        return auto_dt(self.config, self.z.shape[0], _length(np.fft.fft(self.z)))

    def step(self, dt):
        mode = self.config.mode
        z = self.z
        coef = np.fft.fft(z)
        if self.config.scheme == "semi_implicit_spectral":
            vel, length, lam, f = _velocity(z, mode)
            new = coef + dt * vel / (1 + dt * _stiff_symbol(z.shape[0], length, dt))
        else:
            k1, length, lam, f = _velocity(z, mode)
            k2 = _velocity(np.fft.ifft(coef + 0.5 * dt * k1), mode)[0]
            k3 = _velocity(np.fft.ifft(coef + 0.5 * dt * k2), mode)[0]
            k4 = _velocity(np.fft.ifft(coef + dt * k3), mode)[0]
            new = coef + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        zu, znew = np.fft.ifft(np.stack([1j * trig.wavenumbers(new.shape[0]) * new, new]), axis=-1)
        speed = np.abs(zu)
        if self.config.renormalize_length:
            scale = self.target / (speed.mean() * 2 * np.pi)
            znew *= scale
            speed *= scale
        if not np.all(np.isfinite(znew)):
            raise FlowError(f"non-finite state at t = {self.t + dt:.6g}")
        if not speed.min() > IMMERSION_TOL:
            raise FlowError(f"immersion failure at t = {self.t + dt:.6g} (sample {int(np.argmin(speed))})")
        self.z = znew
        self.lam = lam
        self.t += dt
        self.steps += 1
        if speed.max() / speed.min() > self.config.resample_ratio_threshold:
            self.z = _resample_z(self.z)
            self.resamples += 1

    def advance(self, duration):
        """Advance by ``duration`` in equal sub-steps no longer than the configured dt."""
        dt = self.dt_now()
        if dt < DT_FLOOR:
            raise FlowError(f"dt underflow ({dt:.3e}) at t = {self.t:.6g}")
        n_sub = max(1, math.ceil(duration / dt - 1e-9))
        h = duration / n_sub
        t0 = self.t
        for i in range(n_sub):
            self.step(h)
        # avoid drift from repeated addition
        self.t = t0 + duration

    def state(self):
        return FlowState(self.t, ClosedCurve.from_complex(self.z), self.lam, self.steps)


def step(state, config, dt=None):
    """One step of the configured scheme from ``state``; returns a new state."""
    integ = Integrator(state.curve, config, normalize_initial=False)
    integ.t, integ.steps = state.t, state.step_count
    if dt is None:
        dt = integ.dt_now()
    try:
        integ.step(dt)
    except FlowError as exc:
        exc.state = state
        raise
    return integ.state()


# -- time series -------------------------------------------------------------------

COLUMNS = ("t", "L", "E", "Kosc", "e", "ks2", "lambda", "a1", "a2", "wnorm", "dist")


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    L: float
    E: float
    Kosc: float
    e: float
    ks2: float
    lam: float
    a1: object = None
    a2: object = None
    wnorm: object = None
    dist: object = None

    def row(self):
        vals = (self.t, self.L, self.E, self.Kosc, self.e, self.ks2, self.lam, self.a1, self.a2, self.wnorm, self.dist)
        return ["" if v is None else format(v, ".17g") for v in vals]


class TimeSeries:
    def __init__(self, records=None, meta=None):
        self.records = list(records or [])
        self.meta = dict(meta or {})
        self.snapshots = []

    def __len__(self):
        return len(self.records)

    def append(self, record):
        self.records.append(record)

    def column(self, name):
        attr = "lam" if name == "lambda" else name
        if name == "a":
            return np.array([np.nan if r.a1 is None else math.hypot(r.a1, r.a2) for r in self.records])
        return np.array([np.nan if getattr(r, attr) is None else getattr(r, attr) for r in self.records], dtype=float)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in self.records:
            writer.writerow(r.row())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        out = cls()
        for row in reader:
            vals = [None if v == "" else float(v) for v in row]
            out.append(TimeSeriesRecord(*vals))
        return out


def diagnostics(t, z, lam=None, with_support=True):
    curve = z if isinstance(z, ClosedCurve) else ClosedCurve.from_complex(z)
    g = compute_geometry(curve)
    if lam is None or not np.isfinite(lam):
        lam = lambda_coefficient(g)
    a1 = a2 = wn = dist = None
    if with_support and g.turning_number >= 1 and g.k.min() > 0:
        try:
            d = support_decomposition(curve)
        except (NotConvexError, GeometryError):
            d = None
        if d is not None:
            a1, a2, wn = d.a1, d.a2, d.w_norm
            dist = distance_to_omega_circle(curve, decomposition=d)[1]
    return TimeSeriesRecord(t, g.length, g.energy, g.k_osc, g.deviation, g.ks2, float(lam), a1, a2, wn, dist)


def run(initial, config, callback=None):
    """Integrate from ``initial`` to ``config.t_end`` recording diagnostics every ``output_every``.

    Non-convex states only blank the normal-angle columns. A step failure
    raises :class:`FlowError` whose ``series`` attribute holds the records so far.
    """
    integ = Integrator(initial, config)
    series = TimeSeries(meta={"omega": integ.omega, "target_length": integ.target})
    n_out = max(1, int(round(config.t_end / config.output_every)))
    dt_out = config.t_end / n_out
    snap_stride = None
    if config.snapshot_every:
        snap_stride = max(1, int(round(config.snapshot_every / dt_out)))

    def record(i):
        series.append(diagnostics(integ.t, integ.z, None, config.diagnostics))
        if snap_stride and i % snap_stride == 0:
            series.snapshots.append({"t": integ.t, "curve": ClosedCurve.from_complex(integ.z).to_json()})
        if callback:
            callback(integ, series)

    record(0)
    for i in range(1, n_out + 1):
        try:
            integ.advance(dt_out)
        except (FlowError, GeometryError) as exc:
            err = exc if isinstance(exc, FlowError) else FlowError(str(exc))
            err.state = integ.state()
            err.series = series
            raise err from None
        integ.t = i * dt_out
        record(i)
    series.meta.update(steps=integ.steps, resamples=integ.resamples)
    return series
