"""Acceptance checks, one group per criterion.

Every group records a single PASS/FAIL line (printed immediately and again in
the terminal summary). Run with ``pytest tests/test_acceptance.py -v -s``.
"""

import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import ACCEPTANCE
from elasticflow.experiments import (
    main_theorem_experiment,
    mode_decay_experiment,
    translation_decay_experiment,
)
from elasticflow.flow import FlowConfig, Integrator, resample_uniform_arclength, run
from elasticflow.geometry import (
    ellipse,
    omega_circle,
    perturbed_multimode,
    perturbed_omega_circle,
    random_convex_curve,
)
from elasticflow.spectral_theory import GLOBAL_ARGMIN, GLOBAL_MIN, lattice_gap, p_poly
from elasticflow.verification import (
    check_dissipation_and_length,
    check_key_identity,
    check_quadratic_expansion,
    check_support_identity,
)

_parts = {}


@contextmanager
def criterion(n, part="main", budget=None):
    """Record the outcome of one part of criterion ``n``; all parts must pass."""
    info = {}
    start = time.perf_counter()
    ok = False
    try:
        yield info
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        if budget is not None and elapsed > budget:
            ok = False
            info["over_budget"] = f"{elapsed:.1f}s > {budget}s"
        detail = ", ".join(f"{k}={v}" for k, v in info.items()) + f" [{elapsed:.1f}s]"
        _parts.setdefault(n, {})[part] = (ok, detail)
        passed = all(p for p, _ in _parts[n].values())
        ACCEPTANCE[n] = (passed, "; ".join(f"{k}: {d}" if k != "main" else d for k, (_, d) in _parts[n].items()))
        print(f"\ncriterion {n}: {'PASS' if passed else 'FAIL'}  {ACCEPTANCE[n][1]}")


# -- 1 -----------------------------------------------------------------------------------


def test_criterion_1_identities():
    with criterion(1, budget=10) as info:
        curves = [omega_circle(1, n_samples=256), ellipse(2, 1, 256)]
        curves += [random_convex_curve(seed, n_samples=256) for seed in range(100)]
        worst = 0.0
        for c in curves:
            for rep in (check_key_identity(c, tol=1e-7), check_support_identity(c, tol=1e-7)):
                worst = max(worst, rep.rel_residual)
        info["curves"] = len(curves)
        info["max_rel_residual"] = f"{worst:.2e}"
        assert worst <= 1e-7


# -- 2 -----------------------------------------------------------------------------------


def test_criterion_2_circle_law():
    with criterion(2, budget=30) as info:
        times = np.linspace(0.0, 1.0, 21)
        cfg = FlowConfig(mode="free", scheme="explicit_rk4", dt="auto", t_end=1.0, output_every=0.05)
        series = run(omega_circle(1, n_samples=16), cfg)
        rho = series.column("L") / (2 * np.pi)
        oracle = solve_ivp(lambda t, r: r ** -3, (0.0, 1.0), [1.0], t_eval=times, rtol=1e-12, atol=1e-14).y[0]
        err = float(np.max(np.abs(rho - oracle)))
        info["max_abs_drho"] = f"{err:.2e}"
        info["rho(1)"] = f"{rho[-1]:.8f}"
        assert np.allclose(series.column("t"), times)
        assert err <= 1e-5


# -- 3 -----------------------------------------------------------------------------------


@pytest.mark.parametrize("omega", [1, 2, 3])
def test_criterion_3_stationarity(omega):
    with criterion(3, part=f"omega={omega}", budget=30) as info:
        cfg = FlowConfig(dt=1e-4, t_end=5.0, output_every=0.05)
        series = run(omega_circle(omega, n_samples=64), cfg)
        kosc = float(np.max(series.column("Kosc")))
        drift = float(np.max(np.abs(series.column("L") - 2 * np.pi * omega)) / (2 * np.pi * omega))
        info["max_Kosc"] = f"{kosc:.1e}"
        info["max_L_drift"] = f"{drift:.1e}"
        assert kosc <= 1e-8 and drift <= 1e-6


# -- 4 -----------------------------------------------------------------------------------


def test_criterion_4_spectral_table():
    with criterion(4, part="table", budget=1) as info:
        g1, g3, g9 = lattice_gap(1), lattice_gap(3), lattice_gap(9)
        info["lambda1"] = g1.lambda_omega
        info["lambda3"] = g3.lambda_omega
        info["argmin9"] = g9.argmin_n
        info["p(sqrt5/2)-7/4"] = f"{p_poly(GLOBAL_ARGMIN) - GLOBAL_MIN:.1e}"
        assert g1.lambda_omega == 2 and abs(g1.argmin_n) == 1
        assert g3.lambda_omega == 2
        assert abs(g9.argmin_n) == 10
        assert all(lattice_gap(w).lambda_omega > 7 / 4 for w in range(1, 51))
        assert abs(p_poly(GLOBAL_ARGMIN) - 7 / 4) <= 4 * np.finfo(float).eps * 7 / 4


def test_criterion_4_lambda9_exact():
    # the minimiser n = 10 gives the exact rational value
    assert lattice_gap(9).lambda_omega == float(p_poly(Fraction(10, 9))) == 11488 / 6561


@pytest.mark.xfail(strict=True, reason="exact lambda_9 = 11488/6561 = 1.7509526 lies 2.3e-5 from the stated 1.75093")
def test_criterion_4_lambda9_literal():
    with criterion(4, part="lambda9 vs 1.75093+-1e-5") as info:
        lam9 = lattice_gap(9).lambda_omega
        info["lambda9"] = f"{lam9:.10f}"
        info["offset"] = f"{lam9 - 1.75093:.2e}"
        assert abs(lam9 - 1.75093) <= 1e-5


# -- 5 -----------------------------------------------------------------------------------


@pytest.mark.parametrize("omega,m,target", [(1, 2, 32.0), (3, 4, 2.8642), (9, 10, 1.7509)])
def test_criterion_5_mode_rates(omega, m, target):
    with criterion(5, part=f"({omega},{m})", budget=60) as info:
        _, fit, verdict = mode_decay_experiment(omega, m, eps=1e-3, n_samples=128)
        info["predicted"] = f"{verdict['predicted_rate']:.5f}"
        info["fitted"] = f"{fit.rate:.5f}"
        assert verdict["predicted_rate"] == pytest.approx(target, abs=1e-4)
        assert fit.conclusive
        assert abs(fit.rate - verdict["predicted_rate"]) <= 0.03 * verdict["predicted_rate"]


# -- 6 -----------------------------------------------------------------------------------


def test_criterion_6_main_theorem_bounds():
    with criterion(6, budget=120) as info:
        series, report = main_theorem_experiment(strict=False)
        info["e_bound_margin"] = f"{report['e_bound_margin']:.3f}"
        info["dist_rate"] = f"{report['dist_fit']['rate']:.4f}"
        info["ks2_t0"] = report["ks2_t0"]
        info["violations"] = len(report["violations"])
        t, e = series.column("t"), series.column("e")
        assert np.all(e <= 2 * e[0] * np.exp(-7 * t / 4))
        assert report["dist_fit"]["rate"] >= 7 / 8 * (1 - 0.03)
        assert report["ks2_t0"] is not None
        assert report["passed"]


# -- 7 -----------------------------------------------------------------------------------


def test_criterion_7_translation():
    with criterion(7, budget=60) as info:
        rates = {}
        for omega, offset in [(1, (0.1, 0.0)), (2, (0.05, 0.05))]:
            _, fit, verdict = translation_decay_experiment(omega, offset)
            rates[omega] = fit.rate
            info[f"rate_omega{omega}"] = f"{fit.rate:.5f}"
            assert verdict["passed"]
        assert all(abs(r - 1) <= 0.03 for r in rates.values())
        assert abs(rates[1] - rates[2]) <= 0.03 * max(rates.values())


# -- 8 -----------------------------------------------------------------------------------


def test_criterion_8_expansion_ledger():
    with criterion(8, budget=60) as info:
        probe = check_quadratic_expansion()
        mismatch = probe.ledger_mismatch[0] / abs(probe.residual[0])
        info["exponent"] = f"{probe.exponent:.3f}"
        info["ledger_rel_mismatch"] = f"{mismatch:.1e}"
        assert probe.eps[0] == 1e-2 and len(probe.eps) == 3
        assert probe.conclusive
        assert abs(probe.exponent - 3) <= 0.3
        assert mismatch <= 0.01


# -- 9 -----------------------------------------------------------------------------------


def test_criterion_9_dissipation_and_length():
    with criterion(9, budget=30) as info:
        energy, length = check_dissipation_and_length(ellipse(2, 1, 256), dt=1e-5)
        info["dE_rel"] = f"{energy.rel_residual:.1e}"
        info["dL_rel"] = f"{length.rel_residual:.1e}"
        assert energy.rel_residual <= 0.02 and length.rel_residual <= 0.02
        assert energy.extra["dt"] == length.extra["dt"] == 1e-5


# -- 10 ----------------------------------------------------------------------------------

T10 = 0.01
OUT10 = np.linspace(0.0, T10, 11)


def _march(z, cfg, times):
    integ = Integrator(z, cfg)
    states = [integ.z.copy()]
    for a, b in zip(times[:-1], times[1:]):
        integ.advance(b - a)
        states.append(integ.z.copy())
    return np.array(states)


def _scenario():
    return perturbed_omega_circle(1, 2, 1e-3, n_samples=64)


@pytest.fixture(scope="module")
def rk4_reference():
    cfg = FlowConfig(scheme="explicit_rk4", dt="auto", t_end=T10)
    return _march(_scenario(), cfg, OUT10)


def test_criterion_10_schemes_agree(rk4_reference):
    with criterion(10, part="rk4 vs semi-implicit", budget=60) as info:
        si = _march(_scenario(), FlowConfig(dt=1e-4, t_end=T10), OUT10)
        diff = float(np.max(np.abs(si - rk4_reference)))
        info["sup_diff"] = f"{diff:.1e}"
        assert diff <= 1e-6


def test_criterion_10_semi_implicit_order(rk4_reference):
    with criterion(10, part="semi-implicit order") as info:
        dts = [4e-5, 2e-5, 1e-5]
        errs = [np.max(np.abs(_march(_scenario(), FlowConfig(dt=h, t_end=T10), OUT10)[-1] - rk4_reference[-1]))
                for h in dts]
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        info["orders"] = "/".join(f"{o:.2f}" for o in orders)
        assert all(abs(o - 1) <= 0.1 for o in orders)


def test_criterion_10_rk4_order():
    # a richer spectrum makes the RK4 error visible above round-off; resampling is
    # done once up front so that the step sequence alone determines the error
    with criterion(10, part="rk4 order") as info:
        z0 = resample_uniform_arclength(perturbed_multimode(1, {2: 0.05, 5: 0.01, 7: 0.003}, n_samples=32))
        dt0 = 0.5 * 2.8 / (2 * (np.pi * 32 / (2 * np.pi)) ** 4)
        t_end = 64 * dt0

        def final(h):
            cfg = FlowConfig(scheme="explicit_rk4", dt=h, t_end=t_end, resample_ratio_threshold=100.0)
            integ = Integrator(z0, cfg)
            integ.advance(t_end)
            return integ.z

        ref = final(dt0 / 32)
        errs = [np.max(np.abs(final(dt0 / d) - ref)) for d in (2, 4, 8)]
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        info["orders"] = "/".join(f"{o:.2f}" for o in orders)
        assert all(abs(o - 4) <= 0.5 for o in orders)

