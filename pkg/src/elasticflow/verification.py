"""Numerical checks of the integral identities behind the decay estimates.

Time derivatives along the flow are measured two independent ways:

* ``trajectory``: a centred difference of the functional over two actual
  steps of the time-stepping scheme, ``(F(z_{n+1}) - F(z_{n-1})) / 2 dt``;
* ``tangent``: a centred difference along the instantaneous velocity field,
  ``(F(z + h v) - F(z - h v)) / 2h`` on the ladder ``h = 1e-4, 1e-5`` with
  Richardson extrapolation.

Neither uses the closed-form right-hand side being checked.
"""

from dataclasses import dataclass, asdict, field

import numpy as np

from . import trig
from .flow import RK4_STABILITY, FlowConfig, Integrator, _velocity
from .geometry import ClosedCurve, _Fields, _turning, perturbed_multimode

FD_LADDER = (1e-4, 1e-5)
FLOW_DT = 1e-5
RATE_TOL = 0.02
ZERO_TOL = 1e-10


@dataclass
class IdentityReport:
    name: str
    left: float
    right: float
    abs_residual: float
    rel_residual: float
    tolerance: float
    passed: bool
    n: int
    curve: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _report(name, left, right, tol, n, curve="", zero_tol=ZERO_TOL, scale=None, **extra):
    # ``scale`` lets a sum with cancelling terms be judged against the size of its terms
    left, right = float(left), float(right)
    absr = abs(left - right)
    scale = max(abs(left), abs(right), scale or 0.0)
    relr = absr / scale if scale > 0 else 0.0
    passed = bool(np.isfinite(absr) and (relr <= tol or absr <= zero_tol))
    return IdentityReport(name, left, right, absr, relr, tol, passed, n, curve, extra)


def _z(curve):
    return curve.z if isinstance(curve, ClosedCurve) else np.asarray(curve, dtype=complex)


# -- static identities ---------------------------------------------------------------


def check_key_identity(curve, tol=1e-8, label=""):
    """``int (2 k_ss + k^3)(gamma . nu) ds = -int k^2 ds``."""
    z = _z(curve)
    f = _Fields(z, order=2)
    left = f.integrate((2 * f.kss + f.k ** 3) * f.support)
    right = -f.integrate(f.k ** 2)
    return _report("key_identity", left, right, tol, z.shape[0], label)


def check_support_identity(curve, tol=1e-8, label=""):
    """``int k (gamma . nu) ds = -L``."""
    z = _z(curve)
    f = _Fields(z, order=0)
    return _report("support_identity", f.integrate(f.k * f.support), -f.length, tol, z.shape[0], label)


def check_frenet_closure(curve, tol=1e-10, label=""):
    """``|oint tau ds| = 0``."""
    z = _z(curve)
    f = _Fields(z, order=0)
    closure = abs(np.sum(f.tau * f.g) * f.du)
    return _report("frenet_closure", closure, 0.0, 0.0, z.shape[0], label, zero_tol=tol)


# -- derivatives along the flow ----------------------------------------------------------


def _normalise(z):
    f = _Fields(z, order=0)
    omega, _ = _turning(f)
    if omega < 1:
        raise ValueError("curve needs a positive turning number to be normalised to L = 2 pi omega")
    return z * (2 * np.pi * omega / f.length), omega


def tangent_derivative(z, functional, mode, ladder=FD_LADDER):
    """Richardson-extrapolated centred difference of ``functional`` along the flow velocity."""
    vel = np.fft.ifft(_velocity(z, mode)[0])
    vals = [(functional(z + h * vel) - functional(z - h * vel)) / (2 * h) for h in ladder]
    r2 = (ladder[0] / ladder[1]) ** 2
    return (r2 * vals[1] - vals[0]) / (r2 - 1), vals


def trajectory_derivative(z, functionals, mode, dt=FLOW_DT):
    """Centred difference over two steps of length ``dt``; returns the derivatives and the midpoint state.

    Each step is taken with RK4 sub-steps inside its stability region, so the
    only error left is the ``O(dt^2)`` of the centred difference.
    """
    length = _Fields(z, order=0).length
    kmax = np.pi * z.shape[0] / length
    n_sub = max(1, int(np.ceil(dt / (0.9 * RK4_STABILITY / (2 * kmax ** 4)))))
    h = dt / n_sub
    cfg = FlowConfig(mode=mode, dt=h, t_end=2 * dt, output_every=dt, renormalize_length=(mode == "rescaled"),
                     target_length=length, scheme="explicit_rk4")
    integ = Integrator(z, cfg, normalize_initial=False)
    states = [integ.z]
    for _ in range(2):
        for _ in range(n_sub):
            integ.step(h)
        states.append(integ.z)
    z0, z1, z2 = states
    return [(F(z2) - F(z0)) / (2 * dt) for F in functionals], z1


def _e(z):
    f = _Fields(z, order=0)
    return f.integrate((f.k - 1.0) ** 2)


def _E(z):
    f = _Fields(z, order=0)
    return f.integrate(f.k ** 2)


def _L(z):
    return _Fields(z, order=0).length


def _ks2(z):
    f = _Fields(z, order=1)
    return f.integrate(f.ks ** 2)


def e_rate_formula(z):
    """``-int (2k_ss + k^3)^2 ds - lam int k^2 ds``."""
    f = _Fields(z, order=2)
    lam = (2 * f.integrate(f.ks ** 2) - f.integrate(f.k ** 4)) / f.length
    return -f.integrate((2 * f.kss + f.k ** 3) ** 2) - lam * f.integrate(f.k ** 2)


def ks_rate_formula(z, omega):
    """Closed-form ``d/dt |k_s|^2`` along the rescaled flow at ``L = 2 pi omega``."""
    f = _Fields(z, order=3)
    k, ks, kss, ksss = f.k, f.ks, f.kss, f.ksss
    ks2 = f.integrate(ks ** 2)
    return (
        -4 * f.integrate(ksss ** 2)
        + 10 * f.integrate(kss ** 2 * k ** 2)
        - 10 / 3 * f.integrate(ks ** 4)
        - 11 * f.integrate(ks ** 2 * k ** 4)
        - 3 / (2 * omega * np.pi) * ks2 * (2 * ks2 - f.integrate(k ** 4))
    )


def _flow_check(name, z, functional, formula, mode, dt, tol, label, magnitude=None):
    tangent, raw = tangent_derivative(z, functional, mode)
    if dt is None:
        # keep the relative change of the functional per step near 1e-5
        value = abs(functional(z))
        dt = FLOW_DT if tangent == 0 else float(np.clip(1e-5 * value / abs(tangent), 1e-8, FLOW_DT))
    (traj,), zmid = trajectory_derivative(z, [functional], mode, dt)
    tangent, raw = tangent_derivative(zmid, functional, mode)
    rhs = formula(zmid)
    scale = None if magnitude is None else float(magnitude(zmid))
    rep = _report(name, traj, rhs, tol, z.shape[0], label, zero_tol=ZERO_TOL, scale=scale, tangent=float(tangent),
                  tangent_raw=[float(v) for v in raw], dt=dt)
    tangent_rep = _report(name, tangent, rhs, tol, z.shape[0], label, scale=scale)
    rep.passed = bool(rep.passed and tangent_rep.passed)
    rep.extra["tangent_rel_residual"] = tangent_rep.rel_residual
    return rep


def check_e_evolution(curve, mode="rescaled", dt=None, tol=RATE_TOL, label=""):
    """``de/dt`` along the rescaled flow against ``-int (2k_ss + k^3)^2 - lam int k^2``.

    The curve is first scaled to ``L = 2 pi omega``.
    """
    if mode != "rescaled":
        raise ValueError("the e-evolution identity holds along the rescaled flow")
    z, _ = _normalise(_z(curve))
    return _flow_check("e_evolution", z, _e, e_rate_formula, mode, dt, tol, label)


def check_ks_evolution(curve, dt=None, tol=RATE_TOL, label=""):
    """``d/dt |k_s|^2`` along the rescaled flow against its closed form."""
    z, omega = _normalise(_z(curve))
    rep = _flow_check("ks_evolution", z, _ks2, lambda w: ks_rate_formula(w, omega), "rescaled", dt, tol, label)
    return rep


def check_dissipation_and_length(curve, dt=None, tol=RATE_TOL, label=""):
    """Free flow: ``dE/dt = -int (2k_ss + k^3)^2`` and ``dL/dt = -2 int k_s^2 + int k^4``."""
    z = _z(curve)

    def dissipation(w):
        f = _Fields(w, order=2)
        return -f.integrate((2 * f.kss + f.k ** 3) ** 2)

    def length_rate(w):
        f = _Fields(w, order=1)
        return -2 * f.integrate(f.ks ** 2) + f.integrate(f.k ** 4)

    def length_terms(w):
        f = _Fields(w, order=1)
        return 2 * f.integrate(f.ks ** 2) + f.integrate(f.k ** 4)

    energy = _flow_check("energy_dissipation", z, _E, dissipation, "free", dt, tol, label)
    energy.extra["non_increasing"] = bool(energy.left <= 0 and energy.right <= 0)
    energy.passed = bool(energy.passed and energy.extra["non_increasing"])
    # E sets the stiff time scale; L alone would allow a step that is far too long
    length = _flow_check("length_law", z, _L, length_rate, "free", energy.extra["dt"], tol, label,
                         magnitude=length_terms)
    return [energy, length]


# -- quadratic expansion ---------------------------------------------------------------

REMAINDER_NAMES = tuple(f"R{i}" for i in range(1, 13))


def remainder_ledger(z):
    """Exact ``de/dt``, the quadratic line and the twelve remainder terms for ``f = k - 1``."""
    f = _Fields(z, order=2)
    L = f.length
    I = f.integrate
    k = f.k
    fk = k - 1.0
    fs, fss = f.ks, f.kss
    e = I(fk ** 2)
    lam = (2 * I(fs ** 2) - I(k ** 4)) / L
    dedt = -I((2 * fss + k ** 3) ** 2) - lam * I(k ** 2)
    quad = -4 * I(fss ** 2) + 10 * I(fs ** 2) - 8 * I(fk ** 2)
    f3, f4 = I(fk ** 3), I(fk ** 4)
    terms = {
        "R1": -12 * I(fk ** 2 * fss),
        "R2": -4 * I(fk ** 3 * fss),
        "R3": -20 * f3,
        "R4": -15 * f4,
        "R5": -6 * I(fk ** 5),
        "R6": -I(fk ** 6),
        "R7": 4 * f3,
        "R8": f4,
        "R9": -2 / L * e * I(fs ** 2),
        "R10": 6 / L * e ** 2,
        "R11": 4 / L * e * f3,
        "R12": 1 / L * e * f4,
    }
    return {
        "dedt": dedt,
        "quadratic": quad,
        "residual": dedt - quad,
        "terms": terms,
        "sum": sum(terms.values()),
        "e": e,
        "fss2": I(fss ** 2),
        "mean_f": I(fk),
        "power_combination": I(-6 * fk ** 5 - 14 * fk ** 4 - fk ** 6) + 5 * f4,
        "r9_nonpositive": terms["R9"] <= 0,
    }


@dataclass
class ExpansionProbe:
    omega: int
    modes: dict
    eps: list
    residual: list
    ledger_sum: list
    ledger_mismatch: list
    ledger_rel_error: list
    exponent: object
    halving_ratios: list
    sign_checks_ok: bool
    conclusive: bool
    reason: str = ""
    remainder_constant: list = None

    def to_dict(self):
        return asdict(self)


TRIAD = {2: 1.0, 4: 0.1}


def check_quadratic_expansion(omega=1, modes=None, eps_ladder=(1e-2, 5e-3, 2.5e-3), n_samples=256):
    """Scaling of ``de/dt + Q(f)`` in the perturbation size and the remainder ledger.

    ``modes`` is a single support mode or a map ``{mode: weight}``; each rung
    uses amplitudes ``eps * weight``. A single mode has no resonant cubic
    interaction, so its residual falls like ``eps^4``; a resonant pair such as
    the default ``{2: 1, 4: 0.1}`` exposes the ``eps^3`` term.
    """
    if modes is None:
        modes = TRIAD
    modes = {int(modes): 1.0} if np.isscalar(modes) else {int(m): float(w) for m, w in modes.items()}
    ladder = [float(e) for e in eps_ladder]
    if any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("eps ladder must be strictly decreasing")
    resid, ledger, mismatch, rel, signs, const = [], [], [], [], True, []
    for eps in ladder:
        led = remainder_ledger(perturbed_multimode(omega, {m: eps * w for m, w in modes.items()},
                                                   n_samples=n_samples).z)
        resid.append(float(led["residual"]))
        ledger.append(float(led["sum"]))
        diff = abs(led["residual"] - led["sum"])
        mismatch.append(float(diff))
        rel.append(float(diff / abs(led["residual"])) if diff > 1e-12 else 0.0)
        signs = signs and led["r9_nonpositive"] and led["power_combination"] <= 1e-12
        # smallest C with R <= C (e int f_ss^2 + e^2) on this rung
        denom = led["e"] * led["fss2"] + led["e"] ** 2
        const.append(float(led["residual"] / denom) if denom > 0 else float("nan"))
    absr = np.abs(resid)
    ratios = [float(a / b) if b > 0 else float("nan") for a, b in zip(absr, absr[1:])]
    fit = np.array(ladder) > 0
    exponent, conclusive, reason = None, True, ""
    if fit.sum() < 2 or np.any(absr[fit] <= 1e-12):
        conclusive, reason = False, "residuals at round-off; no scaling to fit"
    elif np.any(np.diff(absr[fit]) >= 0):
        conclusive, reason = False, "residuals are not monotone in eps"
    else:
        exponent = float(np.polyfit(np.log(np.array(ladder)[fit]), np.log(absr[fit]), 1)[0])
    return ExpansionProbe(omega, modes, ladder, resid, ledger, mismatch, rel, exponent, ratios, bool(signs),
                          conclusive, reason, const)


# -- inequality toolbox ---------------------------------------------------------------

INEQUALITIES = ("IBP", "GN_inf", "L4", "L3")


def random_mean_zero(seed, omega=1, n_samples=64, n_modes=8, decay=2.0):
    """Seeded mean-zero trigonometric polynomial on the circle of length ``2 pi omega`` (PCG64)."""
    rng = np.random.default_rng(seed)
    s = 2 * np.pi * omega * np.arange(n_samples) / n_samples
    modes = np.arange(1, n_modes + 1)
    a = rng.standard_normal(n_modes) * modes ** -decay
    b = rng.standard_normal(n_modes) * modes ** -decay
    arg = np.outer(s, modes) / omega
    return np.cos(arg) @ a + np.sin(arg) @ b


def inequality_ratio(f, omega, which):
    f = np.asarray(f, dtype=float)
    period = 2 * np.pi * omega
    mean = trig.trapezoid(f, period)
    if abs(mean) > 1e-10 * max(1.0, np.sqrt(trig.trapezoid(f * f, period))):
        raise ValueError(f"f must have zero mean; int f = {mean:.3e}")
    fs = trig.diff(f, 1, period)
    fss = trig.diff(f, 2, period)
    n0 = np.sqrt(trig.trapezoid(f * f, period))
    n1 = np.sqrt(trig.trapezoid(fs * fs, period))
    n2 = np.sqrt(trig.trapezoid(fss * fss, period))
    e = n0 ** 2
    if which == "IBP":
        return n1 ** 2 / (n0 * n2)
    if which == "GN_inf":
        return np.max(np.abs(f)) ** 2 / (n0 * n1)
    if which == "L4":
        return trig.trapezoid(f ** 4, period) / (n0 * n1 * e)
    if which == "L3":
        return trig.trapezoid(np.abs(f) ** 3, period) / (np.sqrt(n0 * n1) * e)
    raise ValueError(f"unknown inequality {which!r}; choose from {INEQUALITIES}")


def inequality_probe(which, omega=1, n_samples=64, seeds=range(1000), n_modes=8):
    """Worst-case ratio of an inequality over a seeded family, at ``n`` and ``2n`` samples.

    Only ``IBP`` carries a known constant (1); the others report an empirical
    supremum and its change under grid refinement.
    """
    seeds = list(seeds)
    ratios = np.array([inequality_ratio(random_mean_zero(s, omega, n_samples, n_modes), omega, which) for s in seeds])
    fine = np.array([inequality_ratio(random_mean_zero(s, omega, 2 * n_samples, n_modes), omega, which) for s in seeds])
    sup, sup_fine = float(ratios.max()), float(fine.max())
    out = {
        "inequality": which,
        "omega": omega,
        "n_samples": n_samples,
        "family_size": len(seeds),
        "sup": sup,
        "sup_refined": sup_fine,
        "refinement_change": abs(sup_fine - sup) / sup,
        "worst_seed": int(seeds[int(np.argmax(ratios))]),
    }
    if which == "IBP":
        out["constant"] = 1.0
        out["passed"] = bool(sup <= 1 + 1e-10)
    else:
        out["passed"] = bool(np.isfinite(sup) and out["refinement_change"] <= 0.05)
    return out


# -- suites --------------------------------------------------------------------------


def identity_suite(curve, label=""):
    reports = [check_key_identity(curve, label=label), check_support_identity(curve, label=label),
               check_frenet_closure(curve, label=label)]
    reports += check_dissipation_and_length(curve, label=label)
    z = _z(curve)
    f = _Fields(z, order=0)
    omega, _ = _turning(f)
    if omega >= 1:
        reports.append(check_e_evolution(curve, label=label))
        reports.append(check_ks_evolution(curve, label=label))
    return reports
