"""Run-loop harness: configuration, simulation, CSV/JSON export.

The harness wires the ground-truth system, the observer, the runtime
diagnostics and the metrics logger into one deterministic loop, and is
the single producer of the run artifacts:

- a metrics CSV (fixed header, one row per log interval, floats written
  with round-trip-exact repr formatting), and
- a flat summary JSON holding final/initial errors, the largest per-step
  Lyapunov increase, per-sensor correction-norm suprema and a list of
  monitor violations (empty on a healthy run).

Feasibility is enforced up front: a run refuses to start with gains that
fail the convergence margin or with a schedule that fails the excitation
scan, unless explicitly overridden.
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .gains import (
    az_from_P0,
    build_P0,
    check_gain_condition,
    default_scalar_seeds,
    p_bounds,
    p_from_az,
    reference_az0,
    schur_complement_det,
)
from .liegroups import constants
from .metrics import MetricsRow, correction_norm, metrics_row
from .observer import (
    Gains,
    apply_correction_step,
    all_corrections,
    combine_corrections,
    compute_error,
    default_initial_observer,
    lyapunov,
    reference_gains,
)
from .system import (
    GnssSchedule,
    NoiseParams,
    SystemParams,
    circular_trajectory_input,
    initial_true_state,
    measure_bundle,
    propagate_truth,
)

TRAJECTORIES = ("circle",)
AZ_SOURCES = ("verbatim", "factorized")

# How often (in steps) the cheap Schur-determinant monitor is
# cross-checked against a full eigensolve of P.
EIG_CROSSCHECK_EVERY = 1000


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run bit-for-bit."""

    params: SystemParams = field(default_factory=SystemParams)
    gains: Gains = field(default_factory=reference_gains)
    schedule: GnssSchedule = field(default_factory=GnssSchedule.reference_default)
    trajectory: str = "circle"
    dt: float = 5e-4
    horizon_s: float = 40.0
    log_interval: int = 4
    az_source: str = "verbatim"
    scalar_seed_preset: str = "verbatim"
    rhat0_normalized_axis: bool = False
    noise: NoiseParams = field(default_factory=NoiseParams)
    seed: int = 0
    allow_infeasible: bool = False

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon_s < 0.0:
            raise ValueError("horizon_s must be nonnegative")
        if self.log_interval < 1:
            raise ValueError("log_interval must be >= 1")
        if self.trajectory not in TRAJECTORIES:
            raise ValueError(f"unknown trajectory {self.trajectory!r}")
        if self.az_source not in AZ_SOURCES:
            raise ValueError(f"az_source must be one of {AZ_SOURCES}")


def reference_config(**overrides) -> RunConfig:
    """The reference scenario: 2000 Hz, 40 s, periodic GNSS, verbatim A_Z(0)."""
    return replace(RunConfig(), **overrides) if overrides else RunConfig()


def initial_az(config: RunConfig) -> np.ndarray:
    """A_Z(0) per the configured source (verbatim matrix or P_0 factor)."""
    n = config.params.n
    if config.az_source == "verbatim":
        if n != 5:
            raise ValueError(
                "the verbatim A_Z(0) is only defined for the 5-landmark "
                "scenario; use az_source='factorized'"
            )
        return reference_az0(n)
    seeds = default_scalar_seeds(config.gains, n, config.scalar_seed_preset)
    return az_from_P0(build_P0(config.gains, n, *seeds))


def check_preconditions(config: RunConfig) -> list[str]:
    """Feasibility problems that block a run (empty list when clean)."""
    problems = []
    feasible, margin = check_gain_condition(config.gains, config.params.n)
    if not feasible:
        problems.append(f"gain condition violated (margin {margin:.6g} <= 0)")
    span = max(config.horizon_s, config.schedule.T)
    ok, worst, worst_t = config.schedule.validate_tpe(span)
    if not ok:
        problems.append(
            f"schedule fails the excitation scan: window starting at "
            f"t={worst_t:.6g} s accumulates only {worst:.6g} s of GNSS "
            f"(need tau={config.schedule.tau:.6g})"
        )
    return problems


CSV_COLUMNS_FIXED = [
    "t", "att_err", "vel_err", "pos_err",
]
CSV_COLUMNS_TAIL = [
    "lm_err_rms", "lyap", "sigma", "tr_RE_plus1",
    "corr_gnss", "corr_lm", "corr_mag",
    "s_x", "s_vx", "s_v", "schur_det", "min_sv_AZ", "margin",
    "mu_x_1", "mu_x_2", "mu_x_3", "mu_z_1", "mu_z_2", "mu_z_3",
    "true_x_1", "true_x_2", "true_x_3", "est_x_1", "est_x_2", "est_x_3",
]


def csv_header(n: int) -> list[str]:
    return (
        CSV_COLUMNS_FIXED
        + [f"lm_err_{i + 1}" for i in range(n)]
        + CSV_COLUMNS_TAIL
    )


def _fmt(x) -> str:
    return repr(int(x)) if isinstance(x, (int, np.integer)) else repr(float(x))


@dataclass
class _Monitors:
    """Running extrema and interval violations of the auxiliary-state Gram
    matrix P(t) = A_Z A_Z^T, tracked at log cadence."""

    gains: Gains
    n: int
    bounds: dict
    slack: float = 1e-6
    max_recorded: int = 1000
    violations: list[str] = field(default_factory=list)
    dropped: int = 0
    schur_min: float = np.inf
    min_sv_az: float = np.inf
    s_x_min: float = np.inf
    s_x_max: float = -np.inf
    sp_dev_max: float = 0.0

    @property
    def total_violations(self) -> int:
        return len(self.violations) + self.dropped

    def _record(self, msg: str) -> None:
        if len(self.violations) < self.max_recorded:
            self.violations.append(msg)
        else:
            self.dropped += 1

    def check(self, t: float, az: np.ndarray, step: int) -> tuple[float, float, float, float, float]:
        p = p_from_az(az)
        kp, q = self.gains.kp, self.gains.q
        scalars = {"s_x": p.s_x, "s_vx": p.s_vx, "s_v": p.s_v}
        for name, val in scalars.items():
            lo, hi = self.bounds[name]
            if not (lo - self.slack <= val <= hi + self.slack):
                self._record(
                    f"t={t:.6g}: {name}={val:.9g} outside [{lo:.9g}, {hi:.9g}]"
                )
        blocks = (
            ("S_p", p.S_p - (kp / (2 * q)) * np.eye(self.n)),
            ("S_px", p.S_px - (-kp / (2 * q))),
            ("S_pv", p.S_pv - kp / (4 * q * q)),
        )
        for name, dev in blocks:
            d = float(np.abs(dev).max())
            if name == "S_p":
                self.sp_dev_max = max(self.sp_dev_max, d)
            if d > self.slack:
                self._record(f"t={t:.6g}: {name} deviates by {d:.3e}")
        det = schur_complement_det(p, self.gains)
        if det < self.bounds["schur_det_lower"] - self.slack:
            self._record(
                f"t={t:.6g}: schur_det={det:.9g} below "
                f"{self.bounds['schur_det_lower']:.9g}"
            )
        min_sv = float(np.linalg.svd(az, compute_uv=False)[-1])
        if min_sv < 1e-9:
            self._record(f"t={t:.6g}: min_sv_AZ={min_sv:.3e} below 1e-9")
        if step % EIG_CROSSCHECK_EVERY == 0:
            # Cross-check the Schur proxy: P must be positive definite
            # whenever the proxy and its landmark block say it is.
            min_eig = float(np.linalg.eigvalsh(p.P)[0])
            if det > 0.0 and min_eig <= 0.0:
                self._record(
                    f"t={t:.6g}: Schur proxy positive but min eig(P)={min_eig:.3e}"
                )
        self.schur_min = min(self.schur_min, det)
        self.min_sv_az = min(self.min_sv_az, min_sv)
        self.s_x_min = min(self.s_x_min, p.s_x)
        self.s_x_max = max(self.s_x_max, p.s_x)
        return p.s_x, p.s_vx, p.s_v, det, min_sv


@dataclass
class RunResult:
    """Artifacts of one run: CSV text, summary dict, and final states."""

    csv_text: str
    summary: dict
    rows: list
    final_truth: object
    final_observer: object

    def write(self, out_dir) -> tuple[str, str]:
        import os

        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "metrics.csv")
        json_path = os.path.join(out_dir, "summary.json")
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(self.csv_text)
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump(self.summary, f, indent=2, sort_keys=True)
            f.write("\n")
        return csv_path, json_path


def run(config: RunConfig) -> RunResult:
    """Simulate truth + observer under the configured scenario.

    Raises ValueError before any integration if the gains or schedule
    fail their feasibility checks (unless allow_infeasible is set).
    """
    problems = check_preconditions(config)
    if problems and not config.allow_infeasible:
        raise ValueError(
            "refusing to run: " + "; ".join(problems)
            + " (set allow_infeasible to override)"
        )

    params, gains, sched = config.params, config.gains, config.schedule
    n = params.n
    consts = constants(n, params.g)
    dt = config.dt
    steps = int(round(config.horizon_s / dt))
    rng = np.random.default_rng(config.seed)
    noise = config.noise if any(
        (config.noise.landmark_std, config.noise.mag_std, config.noise.gnss_std)
    ) else None

    truth = initial_true_state(params)
    obs = default_initial_observer(
        params, initial_az(config), normalized_axis=config.rhat0_normalized_axis
    )
    bounds = p_bounds(gains, n)
    monitors = _Monitors(gains=gains, n=n, bounds=bounds)
    margin = bounds["margin"]

    out = io.StringIO()
    header = csv_header(n)
    out.write(",".join(header) + "\n")
    rows: list[MetricsRow] = []

    lyap_prev = None
    max_lyap_inc = -np.inf
    corr_max = [0.0, 0.0, 0.0]
    initial_row = None
    final_row = None
    t_wall = time.perf_counter()

    for k in range(steps + 1):
        t = k * dt
        u = circular_trajectory_input(t, params.g)
        meas = measure_bundle(truth, params, sched, t, noise, rng)
        az_inv = obs.az_inverse()
        parts = all_corrections(obs, meas, gains, params, consts, az_inv)
        err = compute_error(truth, obs)
        ly = lyapunov(err)
        if lyap_prev is not None:
            max_lyap_inc = max(max_lyap_inc, ly - lyap_prev)
        lyap_prev = ly
        norms = (correction_norm(parts[0]), correction_norm(parts[1]),
                 correction_norm(parts[2]))
        for i in range(3):
            corr_max[i] = max(corr_max[i], norms[i])

        log_now = (k % config.log_interval == 0) or k == steps
        if log_now:
            row = metrics_row(truth, obs, parts, t, meas.sigma, err=err)
            s_x, s_vx, s_v, schur, min_sv = monitors.check(t, obs.Z.A, k)
            if initial_row is None:
                initial_row = row
            final_row = row
            # horizon 0 keeps the CSV body empty but still records the
            # initial metrics in the summary.
            if steps > 0:
                vals = (
                    [row.t, row.att_err, row.vel_err, row.pos_err]
                    + list(row.lm_err)
                    + [row.lm_err_rms, row.lyap, row.sigma, row.tr_RE_plus1,
                       norms[0], norms[1], norms[2],
                       s_x, s_vx, s_v, schur, min_sv, margin]
                    + list(row.mu_x) + list(row.mu_z)
                    + list(truth.position) + list(obs.Xhat.position)
                )
                out.write(",".join(_fmt(v) for v in vals) + "\n")
                rows.append(row)

        if k == steps:
            break
        corr = combine_corrections(parts)
        obs = apply_correction_step(obs, u, corr, consts, dt, az_inv)
        truth = propagate_truth(truth, u, dt, consts)

    wall = time.perf_counter() - t_wall
    summary = {
        "n_landmarks": n,
        "dt": dt,
        "horizon_s": config.horizon_s,
        "steps": steps,
        "log_interval": config.log_interval,
        "seed": config.seed,
        "margin": margin,
        "feasible": int(bounds["feasible"]),
        "att_err_initial": initial_row.att_err,
        "pos_err_initial": initial_row.pos_err,
        "vel_err_initial": initial_row.vel_err,
        "lm_err_rms_initial": initial_row.lm_err_rms,
        "lyap_initial": initial_row.lyap,
        "att_err_final": final_row.att_err,
        "pos_err_final": final_row.pos_err,
        "vel_err_final": final_row.vel_err,
        "lm_err_rms_final": final_row.lm_err_rms,
        "lm_err_max_final": float(final_row.lm_err.max()),
        "lyap_final": final_row.lyap,
        "max_lyap_increase": float(max_lyap_inc) if steps > 0 else 0.0,
        "corr_gnss_max": corr_max[0],
        "corr_lm_max": corr_max[1],
        "corr_mag_max": corr_max[2],
        "schur_det_min": monitors.schur_min,
        "min_sv_az_min": monitors.min_sv_az,
        "s_x_min": monitors.s_x_min,
        "s_x_max": monitors.s_x_max,
        "sp_dev_max": monitors.sp_dev_max,
        "p_violations": monitors.total_violations,
        "wall_clock_s": wall,
        "violations": monitors.violations,
    }
    return RunResult(
        csv_text=out.getvalue(),
        summary=summary,
        rows=rows,
        final_truth=truth,
        final_observer=obs,
    )


# ---------------------------------------------------------------------------
# configuration files

def _build_schedule(d: dict) -> GnssSchedule:
    mode = d.get("mode", "periodic")
    kwargs = dict(T=d.get("T", 10.0), tau=d.get("tau", 5.0))
    if mode == "periodic":
        return GnssSchedule(
            "periodic",
            start_s=d.get("start_s", 5.0),
            on_duration_s=d.get("on_duration_s", 5.0),
            period_s=d.get("period_s", 10.0),
            **kwargs,
        )
    if mode == "windows":
        return GnssSchedule("windows", windows=d.get("windows", []), **kwargs)
    return GnssSchedule(mode, **kwargs)


def config_from_dict(d: dict) -> RunConfig:
    """Build a RunConfig from a parsed configuration mapping.

    Every key is optional; omitted keys fall back to the reference
    scenario.  SI units throughout.
    """
    params_kwargs = {}
    if "gravity" in d:
        params_kwargs["g"] = float(d["gravity"])
    if "mag_direction" in d:
        params_kwargs["ring_ym"] = np.asarray(d["mag_direction"], dtype=float)
    if "landmarks" in d:
        params_kwargs["landmarks0"] = np.asarray(d["landmarks"], dtype=float)
    params = SystemParams(**params_kwargs)
    gains = Gains(**d.get("gains", {}))
    sched = _build_schedule(d.get("schedule", {}))
    noise = NoiseParams(**d.get("noise", {}))
    return RunConfig(
        params=params,
        gains=gains,
        schedule=sched,
        trajectory=d.get("trajectory", "circle"),
        dt=float(d.get("dt", 5e-4)),
        horizon_s=float(d.get("horizon_s", 40.0)),
        log_interval=int(d.get("log_interval", 4)),
        az_source=d.get("az_source", "verbatim"),
        scalar_seed_preset=d.get("scalar_seed_preset", "verbatim"),
        rhat0_normalized_axis=bool(d.get("rhat0_normalized_axis", False)),
        noise=noise,
        seed=int(d.get("seed", 0)),
        allow_infeasible=bool(d.get("allow_infeasible", False)),
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"configuration file {path} must contain a mapping")
    return config_from_dict(data)
