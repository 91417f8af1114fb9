import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import qcanary as qc
from qcanary import AuditConfig, DomainError, ModelSpec, NoiseSpec, TrainConfig
from qcanary.audit import _calibration


def small_config(**kw) -> AuditConfig:
    base = dict(
        n=4, K=3, d=0.1,
        model=ModelSpec(qubits=3, ansatz_reps=2),
        train=TrainConfig(epochs=8, learning_rate=0.1),
        noise=NoiseSpec.depolarizing(0.05),
        seed=17,
    )
    base.update(kw)
    return AuditConfig(**base)


@pytest.fixture(scope="module")
def dataset():
    return qc.synth_gaussians(3, 20, 2.5, np.random.default_rng(99))


# confidence bounds ----------------------------------------------------------

def test_bound_degenerate_all_ones():
    # zero variance leaves only the 7 ln(2/eta) / (3 (n-1)) term:
    # n = 100, eta = 0.025 gives 1 - 0.10328008903271774
    ones = np.ones((100, 5))
    assert qc.bound_lower(ones, 0.025) == pytest.approx(0.8967199109672823, abs=1e-12)
    assert qc.bound_upper(np.zeros((100, 5)), 0.025) == pytest.approx(
        0.10328008903271774, abs=1e-12)


def test_bound_requires_two_trials():
    with pytest.raises(ValueError):
        qc.bound_lower(np.ones((1, 4)), 0.05)
    with pytest.raises(ValueError):
        qc.bound_upper(np.ones((1, 4)), 0.05)


def test_bound_rejects_bad_inputs():
    with pytest.raises(ValueError):
        qc.bound_lower(np.full((4, 2), 1.5), 0.05)
    with pytest.raises(ValueError):
        qc.bound_lower(np.ones((4, 2)), 1.5)


@settings(max_examples=150, deadline=None)
@given(arrays(np.int8, (8, 5), elements=st.integers(0, 1)),
       st.floats(0.001, 0.5))
def test_bounds_bracket_the_mean(matrix, eta):
    mean = matrix.mean()
    assert qc.bound_lower(matrix, eta) <= mean + 1e-12
    assert qc.bound_upper(matrix, eta) >= mean - 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 0.5))
def test_epsilon_hat_nonnegative_and_monotone(p1, p0, delta):
    eps = qc.epsilon_hat(p1, p0, delta)
    assert eps >= 0.0
    # growing the seen rate can only grow the estimate
    assert qc.epsilon_hat(min(1.0, p1 + 0.1), p0, delta) >= eps - 1e-12


def test_epsilon_hat_values():
    assert qc.epsilon_hat(0.9, 0.3) == pytest.approx(math.log(3.0), abs=1e-12)
    assert qc.epsilon_hat(0.2, 0.5) == 0.0
    assert qc.epsilon_hat(0.1, 0.4, delta=0.2) == 0.0  # numerator clamps
    assert math.isfinite(qc.epsilon_hat(0.9, 0.0))
    with pytest.raises(ValueError):
        qc.epsilon_hat(1.2, 0.3)


# closed-form bounds ---------------------------------------------------------

def test_depolarizing_bound_values():
    assert qc.theory_epsilon_depolarizing(0.5, 1.0, 2) == pytest.approx(
        math.log(3.0), abs=1e-12)
    assert qc.theory_epsilon_depolarizing(1.0, 0.5, 8) == 0.0
    assert qc.theory_epsilon_depolarizing(0.0, 0.5, 8) == math.inf
    assert qc.theory_epsilon_depolarizing(0.01, 0.1, 16) == pytest.approx(
        5.071416766356115, abs=1e-12)
    with pytest.raises(ValueError):
        qc.theory_epsilon_depolarizing(0.5, 0.0, 2)
    with pytest.raises(ValueError):
        qc.theory_epsilon_depolarizing(0.5, 0.5, 1)


def test_measurement_bound_known_point():
    # independently solved with scipy.optimize.brentq on the same equation
    eps, c = qc.theory_epsilon_measurement(100, 0.001, 1, 0.2, 0.01)
    assert c == pytest.approx(0.06584547731499699, abs=1e-10)
    assert eps == pytest.approx(0.07724229261075678, abs=1e-9)


def test_measurement_bound_zero_distance_is_free():
    eps, _ = qc.theory_epsilon_measurement(1000, 0.0, 1, 0.3, 0.01)
    assert eps == 0.0


def test_measurement_bound_domain_error_names_condition():
    with pytest.raises(DomainError) as err:
        qc.theory_epsilon_measurement(10000, 0.9, 1, 0.5, 0.01)
    assert "mu" in str(err.value) and "N d r" in str(err.value)


def test_measurement_bound_residual_small():
    for N in (50, 500, 5000):
        for mu in (0.05, 0.2, 0.4):
            _, c = qc.theory_epsilon_measurement(N, 1e-4, 1, mu, 0.005)
            sigma = math.sqrt(mu * (1 - mu) / N)
            resid = math.sqrt(2 * math.pi) * sigma * math.erfc(
                c / (math.sqrt(2) * sigma)) - 0.005
            assert abs(resid) < 1e-10


def test_sample_complexity_values():
    assert qc.sample_complexity_estimate(0.2, 0.05, 1) == 75
    assert qc.sample_complexity_estimate(0.2, 0.05, 16) == 5
    with pytest.raises(ValueError):
        qc.sample_complexity_estimate(0.0, 0.05, 1)


# canary generation ----------------------------------------------------------

def test_generate_canaries_fit_and_clamp(dataset, rng):
    feats, labels = qc.generate_canaries(dataset, 500, rng)
    assert feats.shape == (500, 3)
    assert feats.min() >= 0.0 and feats.max() <= 1.0
    assert set(np.unique(labels)) <= {0, 1}
    # feature means should track the dataset's fit
    assert np.abs(feats.mean(axis=0) - dataset.features.mean(axis=0)).max() < 0.1


def test_generate_canaries_constant_feature(rng):
    ds = qc.Dataset(features=np.full((10, 2), 0.5), labels=np.zeros(10, dtype=np.int64),
                    feature_names=("a", "b"), feature_mins=np.zeros(2),
                    feature_maxs=np.ones(2), class_names=("x", "y"))
    feats, _ = qc.generate_canaries(ds, 20, rng)
    assert np.all(feats == 0.5)


# trial machinery ------------------------------------------------------------

def test_run_trial_shapes_and_determinism(dataset):
    cfg = small_config()
    x1, y1 = qc.run_trial(0, cfg, dataset, kappa=0.7)
    x2, y2 = qc.run_trial(0, cfg, dataset, kappa=0.7)
    assert x1.shape == (3,) and y1.shape == (3,)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
    x3, _ = qc.run_trial(1, cfg, dataset, kappa=0.7)
    # different trial index redraws canaries and init
    assert x3.shape == (3,)


def test_run_trial_threshold_extremes(dataset):
    cfg = small_config()
    x_hi, y_hi = qc.run_trial(0, cfg, dataset, kappa=math.inf)
    assert x_hi.all() and y_hi.all()
    x_lo, y_lo = qc.run_trial(0, cfg, dataset, kappa=0.0)
    assert not x_lo.any() and not y_lo.any()


def test_calibrate_kappa_fixed_and_median(dataset):
    fixed = small_config(kappa_rule="fixed", kappa_value=0.42)
    assert qc.calibrate_kappa(dataset, fixed) == 0.42
    cal = small_config()
    k1 = qc.calibrate_kappa(dataset, cal)
    k2 = qc.calibrate_kappa(dataset, cal)
    assert k1 == k2 and k1 > 0.0


def test_calibration_mu_floor(dataset):
    _, mu = _calibration(dataset, small_config())
    assert 1e-3 <= mu <= 0.5


def test_config_validation(dataset):
    with pytest.raises(ValueError):
        small_config(d=0.0)
    with pytest.raises(ValueError):
        small_config(kappa_rule="fixed")  # no value given
    with pytest.raises(ValueError):
        small_config(eval_encoding="phi3")
    with pytest.raises(ValueError):
        small_config(statistic="disjunction")
    with pytest.raises(ValueError):
        small_config(beta=1.0)


def test_audit_report_coherent(dataset):
    report = qc.audit(small_config(), dataset)
    est = report.estimate
    assert report.trials.x.shape == (4, 3)
    assert 0.0 <= est.p1_lower <= 1.0 and 0.0 <= est.p0_upper <= 1.0
    assert est.epsilon_hat >= 0.0
    assert est.delta == 0.0  # depolarizing audit resolves delta to zero
    assert report.theory["kind"] == "depolarizing"
    assert est.theory_epsilon == pytest.approx(
        qc.theory_epsilon_depolarizing(0.05, 0.1, 8), abs=1e-12)
    assert report.seeds["master"] == 17
    assert len(report.trial_means_x) == 4
    assert set(report.timings) == {"calibration_s", "trials_s", "bounds_s"}


def test_audit_rejects_bad_shapes(dataset):
    with pytest.raises(ValueError):
        qc.audit(small_config(n=1), dataset)
    wrong = qc.synth_gaussians(2, 10, 2.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        qc.audit(small_config(), wrong)


def test_audit_conjunction_statistic(dataset):
    report = qc.audit(small_config(statistic="conjunction"), dataset)
    assert report.trials.x.shape == (4, 1)
    assert report.trials.y.shape == (4, 1)


def test_audit_phi1_evaluation(dataset):
    report = qc.audit(small_config(eval_encoding="phi1"), dataset)
    assert report.estimate.epsilon_hat >= 0.0


def test_audit_measurement_noise_attaches_shot_theory(dataset):
    cfg = small_config(noise=NoiseSpec.measurement(400), d=1e-4)
    report = qc.audit(cfg, dataset)
    assert report.theory["kind"] == "measurement_shots"
    assert report.estimate.delta == cfg.theory_delta
    # mu comes from the calibration pass and sits above the floor
    assert report.theory["params"]["mu"] >= 1e-3
    assert (report.theory["epsilon"] is None) == ("note" in report.theory)


def test_baseline_uses_single_canary(dataset):
    est = qc.baseline_qdp_audit(small_config(), dataset)
    assert est.epsilon_hat >= 0.0


def test_worker_pool_matches_serial(dataset):
    cfg = small_config(n=4)
    serial = qc.audit(cfg, dataset, workers=1)
    pooled = qc.audit(cfg, dataset, workers=4)
    assert np.array_equal(serial.trials.x, pooled.trials.x)
    assert np.array_equal(serial.trials.y, pooled.trials.y)
    assert serial.estimate == pooled.estimate


def test_fully_private_oracle_audits_to_zero(dataset):
    cfg = small_config(noise=NoiseSpec.depolarizing(1.0))
    report = qc.audit(cfg, dataset)
    assert report.kappa == math.log(2.0)
    assert not report.trials.x.any() and not report.trials.y.any()
    assert report.estimate.epsilon_hat == 0.0


# synthetic harness ----------------------------------------------------------

def test_simulate_known_mechanism_recovers_gap(rng):
    est = qc.simulate_known_mechanism(math.log(3.0), 2048, 16, 0.05, rng)
    assert 0.5 < est.epsilon_hat <= math.log(3.0) + 0.05
    assert est.theory_epsilon == pytest.approx(math.log(3.0))


def test_simulate_zero_epsilon_stays_zero_mostly(rng):
    overshoots = sum(
        qc.simulate_known_mechanism(0.0, 128, 8, 0.05, rng).epsilon_hat > 0.0
        for _ in range(200))
    assert overshoots <= 14  # beta/2 per side at 5 percent, plus slack


def test_simulate_validation(rng):
    with pytest.raises(ValueError):
        qc.simulate_known_mechanism(-0.5, 16, 4, 0.05, rng)
    with pytest.raises(ValueError):
        qc.simulate_known_mechanism(0.5, 16, 4, 0.05, rng, p0=0.0)


def test_trials_to_target_doubling_grid(rng):
    n = qc.trials_to_target(0.5, math.log(3.0), 4, 0.05, rng)
    assert n >= 8 and (n & (n - 1)) == 0  # power of two on the grid
    capped = qc.trials_to_target(10.0, 0.01, 1, 0.05, rng, max_n=64)
    assert capped == 64
