"""Synchronous Lie-group observer for GNSS/magnetometer-aided landmark-inertial SLAM."""

from .liegroups import (
    ConstantMatrices,
    SEn3Element,
    SETangent,
    SIMn3Element,
    SIMTangent,
    constants,
    hat,
    mixed_euler_step,
    so3_exp,
    tangent_exp,
    vee,
)
from .observer import (
    ErrorState,
    Gains,
    ObserverState,
    TangentCorrection,
    combine_corrections,
    compute_error,
    gnss_correction,
    landmark_correction,
    lyapunov,
    magnetometer_correction,
    observer_step,
    reference_gains,
)
from .gains import (
    PMatrix,
    az_from_P0,
    build_P0,
    check_gain_condition,
    eq_intervals,
    p_bounds,
    p_from_az,
    reference_az0,
)
from .harness import RunConfig, RunResult, load_config, reference_config, run
from .metrics import MetricsRow, attitude_error_angle, metrics_row
from .system import (
    GnssSchedule,
    ImuInput,
    MeasurementBundle,
    NoiseParams,
    SystemParams,
    circular_trajectory_input,
    initial_true_state,
    measure_bundle,
    measure_gnss,
    measure_landmarks,
    measure_magnetometer,
    propagate_truth,
)

__all__ = [name for name in dir() if not name.startswith("_")]
