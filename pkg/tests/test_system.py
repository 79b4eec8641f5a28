"""Ground-truth dynamics, measurement models, and the GNSS schedule."""

import numpy as np
import pytest

from lislam.liegroups import constants
from lislam.system import (
    GnssSchedule,
    ImuInput,
    MeasurementBundle,
    NoiseParams,
    REFERENCE_LANDMARKS,
    SystemParams,
    circle_truth,
    circular_trajectory_input,
    initial_true_state,
    measure_bundle,
    measure_gnss,
    measure_landmarks,
    measure_landmarks_matrix,
    measure_magnetometer,
    propagate_truth,
)


@pytest.fixture(scope="module")
def params():
    return SystemParams()


@pytest.fixture(scope="module")
def consts(params):
    return constants(params.n, params.g)


def test_params_normalize_mag_direction():
    p = SystemParams(ring_ym=np.array([0.0, 2.0, 0.0]))
    assert np.allclose(p.ring_ym, [0.0, 1.0, 0.0])


def test_params_reject_zero_mag_direction():
    with pytest.raises(ValueError):
        SystemParams(ring_ym=np.zeros(3))


def test_params_reject_bad_landmarks():
    with pytest.raises(ValueError):
        SystemParams(landmarks0=np.zeros((3, 2)))


def test_imu_input_rejects_nan():
    with pytest.raises(ValueError):
        ImuInput(np.array([np.nan, 0, 0]), np.zeros(3))


def test_circular_input_is_constant(params):
    u0 = circular_trajectory_input(0.0, params.g)
    u1 = circular_trajectory_input(17.3, params.g)
    assert np.allclose(u0.Omega, [0, 0, 1])
    assert np.allclose(u0.a, [-1, 0, -params.g])
    assert np.allclose(u1.a, u0.a)


def test_initial_state_matches_circle_oracle(params):
    x0 = initial_true_state(params)
    oracle = circle_truth(0.0, params)
    assert np.abs(x0.as_matrix() - oracle.as_matrix()).max() < 1e-15


def test_truth_propagation_closes_the_circle(params, consts):
    """After 2*pi seconds the analytic circle returns to its start."""
    dt = 5e-4
    steps = int(round(2 * np.pi / dt))
    x = initial_true_state(params)
    u = circular_trajectory_input(0.0, params.g)
    for _ in range(steps):
        x = propagate_truth(x, u, dt, consts)
    # steps*dt is only approximately 2*pi; compare against the oracle at
    # the actually integrated time.
    oracle = circle_truth(steps * dt, params)
    assert np.abs(x.position - oracle.position).max() < 1e-3
    assert np.abs(x.velocity - oracle.velocity).max() < 1e-3
    assert np.abs(x.rot - oracle.rot).max() < 1e-3
    assert np.abs(x.position - np.array([1.0, 0.0, 1.0])).max() < 1e-3


def test_truth_propagation_matches_oracle_along_the_way(params, consts):
    dt = 1e-3
    x = initial_true_state(params)
    u = circular_trajectory_input(0.0, params.g)
    for k in range(1000):
        x = propagate_truth(x, u, dt, consts)
    oracle = circle_truth(1000 * dt, params)
    assert np.abs(x.V - oracle.V).max() < 5e-4


def test_landmarks_do_not_drift(params, consts):
    x = initial_true_state(params)
    u = circular_trajectory_input(0.0, params.g)
    for _ in range(2000):
        x = propagate_truth(x, u, 5e-4, consts)
    assert np.abs(x.landmarks - REFERENCE_LANDMARKS.T).max() < 1e-12


def test_hover_equilibrium(consts):
    """Zero input, zero velocity: gravity term cancels and nothing moves."""
    params = SystemParams()
    x = initial_true_state(params)
    x = type(x)(x.rot, np.column_stack([np.zeros(3), x.position, x.landmarks]))
    u = ImuInput(np.zeros(3), np.array([0.0, 0.0, -consts.g]))
    y = propagate_truth(x, u, 1e-2, consts)
    assert np.abs(y.V - x.V).max() < 1e-12


def test_landmark_measurement_forms_agree(params, consts):
    x = circle_truth(1.234, params)
    per_column = measure_landmarks(x)
    matrix_form = measure_landmarks_matrix(x, consts)
    assert np.abs(per_column - matrix_form).max() < 1e-13


def test_landmark_measurement_is_body_frame(params):
    x = initial_true_state(params)  # R = I at t=0
    Yp = measure_landmarks(x)
    assert np.allclose(Yp, REFERENCE_LANDMARKS.T - x.position[:, None])


def test_magnetometer_is_unit_norm(params):
    x = circle_truth(0.7, params)
    ym = measure_magnetometer(x, params)
    assert np.linalg.norm(ym) == pytest.approx(1.0, abs=1e-13)


# --- GNSS schedule -----------------------------------------------------------

def test_reference_schedule_sigma_values():
    s = GnssSchedule.reference_default()
    assert [s.sigma(t) for t in (0, 4.9, 5.0, 9.9, 10.0, 14.9, 15.0)] == \
        [0, 0, 1, 1, 0, 0, 1]


def test_schedule_on_time():
    s = GnssSchedule.reference_default()
    assert s.on_time(0.0, 40.0) == pytest.approx(20.0)
    assert s.on_time(7.5, 17.5) == pytest.approx(5.0)


def test_reference_schedule_passes_excitation_scan():
    ok, worst, _ = GnssSchedule.reference_default().validate_tpe(40.0)
    assert ok
    assert worst == pytest.approx(5.0)


def test_gappy_schedule_fails_excitation_scan():
    """A 20 s outage starves some windows entirely."""
    s = GnssSchedule("windows", T=10.0, tau=5.0,
                     windows=[(0.0, 5.0), (25.0, 30.0)])
    ok, worst, worst_t = s.validate_tpe(40.0)
    assert not ok
    assert worst == 0.0
    assert 5.0 <= worst_t <= 15.0


def test_always_on_schedule():
    s = GnssSchedule.always_on()
    ok, worst, _ = s.validate_tpe(5.0)
    assert ok and worst == s.T
    assert s.sigma(123.0) == 1


def test_schedule_rejects_bad_constants():
    with pytest.raises(ValueError):
        GnssSchedule("periodic", T=1.0, tau=2.0, on_duration_s=1, period_s=2)
    with pytest.raises(ValueError):
        GnssSchedule("nonsense", T=10.0, tau=5.0)


def test_measure_gnss_gating(params):
    s = GnssSchedule.reference_default()
    x = circle_truth(6.0, params)
    yx, sigma = measure_gnss(x, s, 6.0)
    assert sigma == 1 and np.allclose(yx, x.position)
    yx0, sigma0 = measure_gnss(x, s, 1.0)
    assert sigma0 == 0 and np.all(yx0 == 0.0)


def test_bundle_rejects_inconsistent_sigma():
    with pytest.raises(ValueError):
        MeasurementBundle(np.zeros((3, 5)), np.array([1.0, 0, 0]),
                          np.ones(3), 0)


def test_measure_bundle_noise_is_reproducible(params):
    s = GnssSchedule.reference_default()
    x = circle_truth(6.0, params)
    noise = NoiseParams(landmark_std=0.01, mag_std=0.01, gnss_std=0.02)
    a = measure_bundle(x, params, s, 6.0, noise, np.random.default_rng(1))
    b = measure_bundle(x, params, s, 6.0, noise, np.random.default_rng(1))
    assert np.array_equal(a.Yp, b.Yp) and np.array_equal(a.yx, b.yx)
    assert np.linalg.norm(a.ym) == pytest.approx(1.0, abs=1e-13)
    assert not np.array_equal(a.Yp, measure_landmarks(x))
