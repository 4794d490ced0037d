import numpy as np
import pytest

from elasticflow.experiments import (
    BoundViolation,
    default_config,
    fit_decay_rate,
    main_theorem_experiment,
    mode_decay_experiment,
    run_batch,
    translation_decay_experiment,
    unrescaled_asymptotics_experiment,
)
from elasticflow.flow import FlowConfig
from elasticflow.geometry import ellipse, omega_circle, perturbed_omega_circle


def _series(t, v):
    return {"t": t, "e": v}


def test_fit_exact_exponential():
    t = np.linspace(0, 5, 101)
    fit = fit_decay_rate(_series(t, 3 * np.exp(-2 * t)), "e")
    assert fit.conclusive
    assert fit.rate == pytest.approx(2, abs=1e-10)
    assert fit.goodness == pytest.approx(1, abs=1e-12)


def test_fit_late_window_picks_slow_mode():
    t = np.linspace(0, 4, 401)
    fit = fit_decay_rate(_series(t, np.exp(-2 * t) + np.exp(-10 * t)), "e", window=(2, 4))
    assert fit.rate == pytest.approx(2, abs=1e-3)
    assert fit.window[0] >= 2 and fit.window[1] <= 4


def test_fit_constant_series():
    t = np.linspace(0, 1, 50)
    fit = fit_decay_rate(_series(t, np.full_like(t, 0.7)), "e")
    assert fit.rate == pytest.approx(0, abs=1e-12)


def test_fit_stops_at_floor_and_reports_inconclusive():
    t = np.linspace(0, 10, 101)
    v = np.exp(-2 * t)
    fit = fit_decay_rate(_series(t, v), "e", floor=1e-4)
    assert fit.rate == pytest.approx(2, abs=1e-10)
    assert np.exp(-2 * fit.window[1]) > 1e-4
    short = fit_decay_rate(_series(t[:8], v[:8]), "e")
    assert not short.conclusive and short.rate is None
    assert "samples" in short.reason


def test_mode_decay_rejects_kernel_modes():
    with pytest.raises(ValueError):
        mode_decay_experiment(2, 2)
    with pytest.raises(ValueError):
        mode_decay_experiment(1, 0)


def test_mode_decay_short_run():
    cfg = default_config(dt=1e-4, t_end=0.3, output_every=0.003)
    _, fit, verdict = mode_decay_experiment(1, 2, config=cfg, n_samples=64)
    assert verdict["passed"]
    assert fit.rate == pytest.approx(32, rel=0.03)
    assert verdict["above_global_min"]


def test_translation_zero_offset_skips_fit():
    cfg = default_config(dt=1e-4, t_end=0.2, output_every=0.01)
    series, fit, verdict = translation_decay_experiment(1, (0.0, 0.0), config=cfg, n_samples=32)
    assert not fit.conclusive and verdict["passed"]
    assert np.nanmax(series.column("a")) <= 1e-10


def test_translation_offset_limit():
    with pytest.raises(ValueError):
        translation_decay_experiment(1, (0.2, 0.1))


def test_main_theorem_vacuous_on_circle():
    cfg = default_config(dt=1e-4, t_end=0.1, output_every=0.01)
    series, report = main_theorem_experiment(2, 0, 0.0, (0.0, 0.0), config=cfg, n_samples=64)
    assert report["vacuous"] and report["passed"]
    assert np.all(series.column("e") < 1e-20)


def test_main_theorem_shape_dominated_distance_rate_is_half_e_rate():
    cfg = default_config(t_end=0.6, output_every=0.006)
    _, report = main_theorem_experiment(1, 2, 1e-3, (0.0, 0.0), config=cfg, n_samples=64)
    assert report["passed"]
    assert report["e_fit"]["rate"] == pytest.approx(32, rel=0.03)
    assert report["dist_fit"]["rate"] == pytest.approx(report["e_fit"]["rate"] / 2, rel=0.05)


def test_main_theorem_smallness_precondition():
    with pytest.raises(ValueError, match="smallness"):
        main_theorem_experiment(1, 2, 0.05, (0.0, 0.0), config=default_config(t_end=0.01))


def test_bound_violation_is_hard_failure():
    # a run too short for |k_s|^2 to fall to 10% of its start cannot anchor t0
    cfg = default_config(t_end=0.01, output_every=0.001)
    with pytest.raises(BoundViolation) as info:
        main_theorem_experiment(1, 2, 1e-3, (0.0, 0.0), config=cfg, n_samples=64)
    assert info.value.report["violations"]
    _, report = main_theorem_experiment(1, 2, 1e-3, (0.0, 0.0), config=cfg, n_samples=64, strict=False)
    assert not report["passed"]


def test_unrescaled_circle_is_trivial():
    cfg = FlowConfig(mode="free", dt=1e-3, t_end=0.5, output_every=0.05)
    _, report = unrescaled_asymptotics_experiment(omega_circle(1, n_samples=32), cfg)
    assert report["kosc_max"] <= 1e-12
    assert report["length_increasing"]


def test_unrescaled_requires_free_mode():
    with pytest.raises(ValueError):
        unrescaled_asymptotics_experiment(omega_circle(1), default_config())


@pytest.mark.parametrize("n", [32, 64])
def test_unrescaled_mild_ellipse(n):
    cfg = FlowConfig(mode="free", dt=1e-3, t_end=10, output_every=0.1)
    _, report = unrescaled_asymptotics_experiment(ellipse(1.1, 1.0, n), cfg)
    assert report["passed"] and report["eventually_decreasing"]
    assert np.isfinite(report["exponent"]) and report["exponent"] < 0
    assert report["length_increasing"]


def test_unrescaled_exponent_is_resolution_independent():
    cfg = FlowConfig(mode="free", dt=1e-3, t_end=5, output_every=0.1)
    a = unrescaled_asymptotics_experiment(ellipse(1.1, 1.0, 32), cfg)[1]["exponent"]
    b = unrescaled_asymptotics_experiment(ellipse(1.1, 1.0, 64), cfg)[1]["exponent"]
    assert a == pytest.approx(b, rel=1e-3)


def test_unrescaled_perturbed_two_circle():
    cfg = FlowConfig(mode="free", dt=1e-3, t_end=3, output_every=0.1)
    series, report = unrescaled_asymptotics_experiment(perturbed_omega_circle(2, 3, 1e-2, n_samples=64), cfg)
    assert report["length_increasing"]
    kosc = series.column("Kosc")
    assert np.all(np.diff(kosc) < 0) and kosc[-1] < 0.1 * kosc[0]


def test_batch_preserves_order():
    cfg = default_config(dt=1e-4, t_end=0.05, output_every=0.01)
    jobs = [("translation", {"omega": 1, "offset": (c, 0.0), "config": cfg, "n_samples": 32}) for c in (0.0, 0.05)]
    results = run_batch(jobs, max_workers=1)
    assert results[0][2]["offset"] == [0.0, 0.0] and results[1][2]["offset"] == [0.05, 0.0]
