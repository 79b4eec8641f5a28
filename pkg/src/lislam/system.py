"""Ground-truth landmark-inertial SLAM system and measurement models.

Continuous dynamics: Rdot = R hat(Omega), vdot = R a + g e3, xdot = v,
pdot_i = 0.  On the group this is Xdot = X U + G X + N X - X N, which is
integrated here by the exact splitting
X+ = exp(dt (G+N)) . X . exp(dt (U-N)).

Measurements: body-frame landmark positions, a unit magnetometer
direction, and an intermittently available GNSS position gated by a
switching signal sigma(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .liegroups import ConstantMatrices, SEn3Element, SIMTangent, mixed_euler_step

# Landmark layout of the reference simulation scenario (meters).
REFERENCE_LANDMARKS = np.array(
    [
        [0.5, 0.5, 0.0],
        [0.5, -0.5, 0.0],
        [-1.0, 0.5, 0.0],
        [1.0, 1.0, 0.0],
        [-1.2, -1.2, 0.0],
    ]
)

DEFAULT_GRAVITY = 9.81
DEFAULT_MAG_DIRECTION = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class SystemParams:
    """Scenario constants: gravity, magnetic direction and landmarks."""

    g: float = DEFAULT_GRAVITY
    ring_ym: np.ndarray = field(default_factory=lambda: DEFAULT_MAG_DIRECTION.copy())
    landmarks0: np.ndarray = field(default_factory=lambda: REFERENCE_LANDMARKS.copy())

    def __post_init__(self):
        ring = np.asarray(self.ring_ym, dtype=float)
        norm = np.linalg.norm(ring)
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("reference magnetic direction must be a nonzero vector")
        object.__setattr__(self, "ring_ym", ring / norm)
        lm = np.atleast_2d(np.asarray(self.landmarks0, dtype=float))
        if lm.shape[1] != 3 or lm.shape[0] < 1:
            raise ValueError("landmarks0 must be an (n, 3) array with n >= 1")
        object.__setattr__(self, "landmarks0", lm)

    @property
    def n(self) -> int:
        return self.landmarks0.shape[0]


@dataclass(frozen=True)
class ImuInput:
    """Body-frame angular velocity (rad/s) and proper acceleration (m/s^2)."""

    Omega: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.Omega, dtype=float)
        a = np.asarray(self.a, dtype=float)
        if not (np.all(np.isfinite(omega)) and np.all(np.isfinite(a))):
            raise ValueError("IMU input must be finite")
        object.__setattr__(self, "Omega", omega)
        object.__setattr__(self, "a", a)


@dataclass(frozen=True)
class NoiseParams:
    """Optional additive Gaussian noise (std devs); zero disables a term."""

    landmark_std: float = 0.0
    mag_std: float = 0.0
    gnss_std: float = 0.0


@dataclass(frozen=True)
class MeasurementBundle:
    """All sensor outputs at one timestamp."""

    Yp: np.ndarray
    ym: np.ndarray
    yx: np.ndarray
    sigma: int

    def __post_init__(self):
        if self.sigma not in (0, 1):
            raise ValueError("sigma must be 0 or 1")
        if self.sigma == 0 and np.any(self.yx != 0.0):
            raise ValueError("yx must be zero when sigma = 0")


_CIRCLE_INPUT_CACHE: dict[float, ImuInput] = {}


def circular_trajectory_input(t: float, g: float = DEFAULT_GRAVITY) -> ImuInput:
    """IMU inputs of the reference circular trajectory (constant in time).

    The same (immutable) instance is returned for repeated calls so that
    downstream exponentials of the constant input can be reused.
    """
    u = _CIRCLE_INPUT_CACHE.get(g)
    if u is None:
        u = ImuInput(np.array([0.0, 0.0, 1.0]), np.array([-1.0, 0.0, -g]))
        _CIRCLE_INPUT_CACHE[g] = u
    return u


def initial_true_state(params: SystemParams) -> SEn3Element:
    """Reference scenario start: R = I, v = e2, x = e1 + e3."""
    return SEn3Element.from_components(
        np.eye(3),
        np.array([0.0, 1.0, 0.0]),
        np.array([1.0, 0.0, 1.0]),
        params.landmarks0,
    )


def circle_truth(t: float, params: SystemParams) -> SEn3Element:
    """Closed-form truth for the circular scenario (test oracle)."""
    rot = np.array(
        [[np.cos(t), -np.sin(t), 0.0], [np.sin(t), np.cos(t), 0.0], [0.0, 0.0, 1.0]]
    )
    v = np.array([-np.sin(t), np.cos(t), 0.0])
    x = np.array([np.cos(t), np.sin(t), 1.0])
    return SEn3Element.from_components(rot, v, x, params.landmarks0)


# Inputs held constant across many steps produce the same right factor
# exp(dt (U - N)) every time; memoise the tangent by object identity so
# the exponential memo downstream can reuse it.  Entries pin their keys,
# so ids cannot be recycled while an entry is alive.
_INPUT_TANGENT_MEMO: dict = {}


def input_tangent(u: ImuInput, consts: ConstantMatrices) -> SIMTangent:
    """Tangent U - N driving the right group factor of one Euler step."""
    key = (id(u), id(consts))
    hit = _INPUT_TANGENT_MEMO.get(key)
    if hit is not None and hit[0] is u and hit[1] is consts:
        return hit[2]
    WU = np.zeros((3, consts.n + 2))
    WU[:, 0] = u.a
    right = SIMTangent(u.Omega, WU, -consts.SN)
    if len(_INPUT_TANGENT_MEMO) >= 64:
        _INPUT_TANGENT_MEMO.clear()
    _INPUT_TANGENT_MEMO[key] = (u, consts, right)
    return right


def propagate_truth(
    state: SEn3Element, u: ImuInput, dt: float, consts: ConstantMatrices
) -> SEn3Element:
    """One Lie-group Euler step of the true system dynamics."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return mixed_euler_step(state, consts.GN, input_tangent(u, consts), dt)


def measure_landmarks(state: SEn3Element) -> np.ndarray:
    """Per-landmark body-frame positions: column i is R^T (p_i - x)."""
    return state.rot.T @ (state.landmarks - state.position[:, None])


def measure_landmarks_matrix(state: SEn3Element, consts: ConstantMatrices) -> np.ndarray:
    """Matrix form of the landmark measurement: -R^T V C."""
    return -(state.rot.T @ state.V @ consts.C)


def measure_magnetometer(state: SEn3Element, params: SystemParams) -> np.ndarray:
    return state.rot.T @ params.ring_ym


class GnssSchedule:
    """GNSS availability signal sigma(t) with declared excitation constants.

    The excitation check verifies that every window of length T over the
    horizon accumulates at least tau seconds of availability, which is
    the property the observer's auxiliary-state bounds actually consume.
    """

    def __init__(self, mode: str, T: float, tau: float, *, start_s: float = 0.0,
                 on_duration_s: float = 0.0, period_s: float = 0.0,
                 windows: list | None = None):
        if not (0.0 < tau < T):
            raise ValueError("need 0 < tau < T")
        if mode not in ("periodic", "windows", "always-on"):
            raise ValueError(f"unknown schedule mode {mode!r}")
        if mode == "periodic":
            if not (0.0 < on_duration_s <= period_s):
                raise ValueError("periodic mode needs 0 < on_duration_s <= period_s")
        if mode == "windows":
            windows = [(float(a), float(b)) for a, b in (windows or [])]
            if any(b <= a for a, b in windows):
                raise ValueError("windows must have positive length")
            windows.sort()
        self.mode = mode
        self.T = float(T)
        self.tau = float(tau)
        self.start_s = float(start_s)
        self.on_duration_s = float(on_duration_s)
        self.period_s = float(period_s)
        self.windows = windows

    @staticmethod
    def reference_default() -> "GnssSchedule":
        """5 s on / 5 s off from t = 5 s, declared (T, tau) = (10, 5)."""
        return GnssSchedule(
            "periodic", T=10.0, tau=5.0, start_s=5.0, on_duration_s=5.0, period_s=10.0
        )

    @staticmethod
    def always_on(T: float = 1.0, tau: float = 0.5) -> "GnssSchedule":
        return GnssSchedule("always-on", T=T, tau=tau)

    def sigma(self, t: float) -> int:
        if self.mode == "always-on":
            return 1
        if self.mode == "periodic":
            if t < self.start_s:
                return 0
            return 1 if (t - self.start_s) % self.period_s < self.on_duration_s else 0
        return 1 if any(a <= t < b for a, b in self.windows) else 0

    def on_intervals(self, t0: float, t1: float) -> list[tuple[float, float]]:
        """Maximal on-intervals intersected with [t0, t1)."""
        if self.mode == "always-on":
            return [(t0, t1)] if t1 > t0 else []
        if self.mode == "periodic":
            out = []
            k = max(0, int(np.floor((t0 - self.start_s) / self.period_s)) - 1)
            while True:
                a = self.start_s + k * self.period_s
                b = a + self.on_duration_s
                if a >= t1:
                    break
                lo, hi = max(a, t0), min(b, t1)
                if hi > lo:
                    out.append((lo, hi))
                k += 1
            return out
        return [(max(a, t0), min(b, t1)) for a, b in self.windows
                if min(b, t1) > max(a, t0)]

    def on_time(self, t0: float, t1: float) -> float:
        return sum(b - a for a, b in self.on_intervals(t0, t1))

    def validate_tpe(self, horizon: float) -> tuple[bool, float, float]:
        """Scan every length-T window over [0, horizon].

        Returns (ok, worst on-time, worst window start).  The on-time of
        a sliding window is piecewise linear in the start time, so the
        minimum is attained at a switching time or at a switching time
        minus T; only those candidates are evaluated.
        """
        if horizon < self.T:
            raise ValueError("horizon shorter than one excitation window")
        if self.mode == "always-on":
            return True, self.T, 0.0
        edges = set()
        for a, b in self.on_intervals(0.0, horizon + self.T):
            edges.update((a, b, a - self.T, b - self.T))
        candidates = sorted(
            {0.0, horizon - self.T} | {e for e in edges if 0.0 <= e <= horizon - self.T}
        )
        worst_t, worst = 0.0, np.inf
        for t in candidates:
            on = self.on_time(t, t + self.T)
            if on < worst:
                worst, worst_t = on, t
        return worst >= self.tau - 1e-9, worst, worst_t


def measure_gnss(
    state: SEn3Element, sched: GnssSchedule, t: float
) -> tuple[np.ndarray, int]:
    s = sched.sigma(t)
    return (state.position.copy(), 1) if s else (np.zeros(3), 0)


def measure_bundle(
    state: SEn3Element,
    params: SystemParams,
    sched: GnssSchedule,
    t: float,
    noise: NoiseParams | None = None,
    rng: np.random.Generator | None = None,
) -> MeasurementBundle:
    """All sensors at time t; optional additive Gaussian noise (default off)."""
    Yp = measure_landmarks(state)
    ym = measure_magnetometer(state, params)
    yx, sigma = measure_gnss(state, sched, t)
    if noise is not None and rng is not None:
        if noise.landmark_std > 0.0:
            Yp = Yp + noise.landmark_std * rng.standard_normal(Yp.shape)
        if noise.mag_std > 0.0:
            ym = ym + noise.mag_std * rng.standard_normal(3)
            ym = ym / np.linalg.norm(ym)
        if noise.gnss_std > 0.0 and sigma:
            yx = yx + noise.gnss_std * rng.standard_normal(3)
    return MeasurementBundle(Yp=Yp, ym=ym, yx=yx, sigma=sigma)
