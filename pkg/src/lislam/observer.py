"""Synchronous observer: per-sensor corrections, coupled update, error.

The observer carries a state estimate Xhat in SE_{n+2}(3) and an
auxiliary state Z = (I, V_Z, A_Z) in SIM_{n+2}(3).  Each sensor
contributes a Lie-algebra correction pair (Delta, Gamma) designed so
that a common Lyapunov function of the conjugated error
E = Z^-1 X Xhat^-1 Z is non-increasing; the applied correction is the
sum of the per-sensor terms.  The error dynamics are independent of the
IMU input (synchrony), which is what makes the per-sensor design sound.

The discrete update freezes corrections over each step (zero-order hold)
and advances both states by exact one-parameter subgroup flows:

    Xhat+ = exp(dt (G + N + Z Delta Z^-1)) . Xhat . exp(dt (U - N))
    Z+    = exp(dt (G + N)) . Z . exp(-dt Gamma)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .liegroups import (
    ConstantMatrices,
    SEn3Element,
    SETangent,
    SIMn3Element,
    SIMTangent,
    SINGULARITY_TOL,
    _I3,
    hat,
    mixed_euler_step,
    so3_exp,
)
from .system import ImuInput, MeasurementBundle, SystemParams, input_tangent


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3-vector cross product without np.cross's broadcasting overhead."""
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


@dataclass(frozen=True)
class Gains:
    """Observer gains plus the declared GNSS excitation constants (T, tau)."""

    kx: float = 1.0
    kp: float = 2.0
    kRx: float = 0.001
    kRp: float = 0.0005
    km: float = 0.1
    q: float = 0.1
    T: float = 10.0
    tau: float = 5.0

    def __post_init__(self):
        for name in ("kx", "kp", "kRx", "kRp", "km", "q"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"gain {name} must be strictly positive")
        if not (0.0 < self.tau < self.T):
            raise ValueError("need 0 < tau < T")


def reference_gains() -> Gains:
    """Gains of the reference simulation scenario."""
    return Gains(kx=1.0, kp=2.0, kRx=0.001, kRp=0.0005, km=0.1, q=0.1, T=10.0, tau=5.0)


@dataclass(frozen=True)
class TangentCorrection:
    """Correction pair (Delta in se_{n+2}(3), Gamma in sim_{n+2}(3))."""

    delta: SETangent
    gamma: SIMTangent

    @staticmethod
    def zero(n: int) -> "TangentCorrection":
        k = n + 2
        return TangentCorrection(
            SETangent(np.zeros(3), np.zeros((3, k))),
            SIMTangent(np.zeros(3), np.zeros((3, k)), np.zeros((k, k))),
        )

    def __add__(self, other: "TangentCorrection") -> "TangentCorrection":
        return TangentCorrection(
            SETangent(self.delta.Omega + other.delta.Omega,
                      self.delta.W + other.delta.W),
            SIMTangent(self.gamma.Omega + other.gamma.Omega,
                       self.gamma.W + other.gamma.W,
                       self.gamma.S + other.gamma.S),
        )


def combine_corrections(parts, n: int | None = None) -> TangentCorrection:
    """Componentwise sum of per-sensor corrections."""
    parts = list(parts)
    if not parts:
        if n is None:
            raise ValueError("need n to build a zero correction from no parts")
        return TangentCorrection.zero(n)
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


@dataclass(frozen=True)
class ObserverState:
    """Estimate Xhat and auxiliary state Z (rotation block pinned to I)."""

    Xhat: SEn3Element
    Z: SIMn3Element

    def __post_init__(self):
        if self.Z.rot is not _I3 and not np.array_equal(self.Z.rot, _I3):
            raise ValueError("auxiliary state rotation block must be exactly I")

    def az_inverse(self) -> np.ndarray:
        # 1/||A^-1||_F lower-bounds the smallest singular value, so this
        # guard is slightly conservative but avoids an SVD per call.
        try:
            az_inv = np.linalg.inv(self.Z.A)
        except np.linalg.LinAlgError as exc:
            raise ValueError("A_Z numerically singular") from exc
        smin_lb = 1.0 / math.sqrt(float(np.sum(az_inv * az_inv)))
        if smin_lb <= SINGULARITY_TOL:
            raise ValueError(
                f"A_Z numerically singular (smallest singular value <= {smin_lb:.3e})"
            )
        return az_inv


def default_initial_observer(
    params: SystemParams,
    az0: np.ndarray,
    vz0: np.ndarray | None = None,
    normalized_axis: bool = False,
) -> ObserverState:
    """Reference-scenario estimate initialisation.

    Rhat(0) = exp(0.25 pi hat(b)) with b = (1,1,1); the printed form is
    ambiguous about whether b is normalized, so both readings are offered
    (literal, un-normalized b is the default).  All translational
    estimates start at zero, as does V_Z.
    """
    b = np.array([1.0, 1.0, 1.0])
    if normalized_axis:
        b = b / np.linalg.norm(b)
    rhat0 = so3_exp(0.25 * np.pi * b)
    n = params.n
    xhat = SEn3Element(rhat0, np.zeros((3, n + 2)))
    vz = np.zeros((3, n + 2)) if vz0 is None else np.asarray(vz0, dtype=float)
    z = SIMn3Element(np.eye(3), vz, np.asarray(az0, dtype=float))
    return ObserverState(Xhat=xhat, Z=z)


def gnss_correction(
    obs: ObserverState,
    yx: np.ndarray,
    sigma: int,
    gains: Gains,
    az_inv: np.ndarray | None = None,
) -> TangentCorrection:
    """GNSS position correction terms (intermittency-aware)."""
    if az_inv is None:
        az_inv = obs.az_inverse()
    k = az_inv.shape[0]
    ax = az_inv[:, 1]                           # A_Z^-1 Cx; its transpose is Cx^T A_Z^-T
    b = obs.Z.V @ ax                            # V_Z A_Z^-1 Cx
    xhat = obs.Xhat.position
    kxr = gains.kx + gains.kRx
    W_delta = kxr * np.outer(yx - sigma * xhat, ax)
    W_gamma = -kxr * np.outer(yx - sigma * b, ax)
    Omega_delta = 4.0 * gains.kRx * sigma * _cross(xhat - b, yx - sigma * b)
    S_gamma = -(gains.kx * sigma / 2.0) * np.outer(ax, ax)
    S_gamma.ravel()[:: k + 1] += gains.q
    return TangentCorrection(
        SETangent(Omega_delta, W_delta),
        SIMTangent(np.zeros(3), W_gamma, S_gamma),
    )


def landmark_correction(
    obs: ObserverState,
    Yp: np.ndarray,
    gains: Gains,
    consts: ConstantMatrices,
    az_inv: np.ndarray | None = None,
) -> TangentCorrection:
    """Landmark position correction terms."""
    if az_inv is None:
        az_inv = obs.az_inverse()
    n = consts.n
    rhat, vhat = obs.Xhat.rot, obs.Xhat.V
    yhat = -(rhat.T @ vhat @ consts.C)
    resid = rhat @ (Yp - yhat)                  # Rhat (Y - Yhat)
    ac = az_inv @ consts.C                      # A_Z^-1 C
    ct_azt = ac.T                               # C^T A_Z^-T
    kpn = gains.kp + n * gains.kRp
    W_delta = -kpn * (resid @ ct_azt)
    W_gamma = kpn * (obs.Z.V @ ac @ ct_azt)
    S_gamma = -(gains.kp / 2.0) * (ac @ ac.T)
    mu_z = obs.Z.V @ ac.sum(axis=1)             # V_Z A_Z^-1 C 1_n
    Omega_delta = 4.0 * gains.kRp * _cross(mu_z, resid.sum(axis=1))
    return TangentCorrection(
        SETangent(Omega_delta, W_delta),
        SIMTangent(np.zeros(3), W_gamma, S_gamma),
    )


def magnetometer_correction(
    obs: ObserverState, ym: np.ndarray, gains: Gains, params: SystemParams
) -> TangentCorrection:
    """Magnetometer direction correction (rotation only)."""
    ym = np.asarray(ym, dtype=float)
    ym = ym / np.sqrt(ym @ ym)
    k = obs.Xhat.V.shape[1]
    Omega_delta = 4.0 * gains.km * _cross(obs.Xhat.rot @ ym, params.ring_ym)
    return TangentCorrection(
        SETangent(Omega_delta, np.zeros((3, k))),
        SIMTangent(np.zeros(3), np.zeros((3, k)), np.zeros((k, k))),
    )


def all_corrections(
    obs: ObserverState,
    meas: MeasurementBundle,
    gains: Gains,
    params: SystemParams,
    consts: ConstantMatrices,
    az_inv: np.ndarray | None = None,
) -> tuple[TangentCorrection, TangentCorrection, TangentCorrection]:
    """(GNSS, landmark, magnetometer) correction terms.

    A_Z is inverted once (with its conditioning check) and shared by the
    per-sensor terms.
    """
    if az_inv is None:
        az_inv = obs.az_inverse()
    return (
        gnss_correction(obs, meas.yx, meas.sigma, gains, az_inv),
        landmark_correction(obs, meas.Yp, gains, consts, az_inv),
        magnetometer_correction(obs, meas.ym, gains, params),
    )


def conjugate_to_se(
    Z: SIMn3Element, delta: SETangent, az_inv: np.ndarray | None = None
) -> SETangent:
    """Z Delta Z^-1, which stays in se_{n+2}(3) when R_Z = I.

    With Z = (I, V_Z, A_Z) the conjugation has the closed form
    (Omega, W A_Z^-1 - hat(Omega) V_Z A_Z^-1), so the lower blocks vanish
    identically and no dense projection is needed.
    """
    if az_inv is None:
        az_inv = np.linalg.inv(Z.A)
    W = delta.W @ az_inv - hat(delta.Omega) @ (Z.V @ az_inv)
    return SETangent(delta.Omega, W)


def apply_correction_step(
    obs: ObserverState,
    u: ImuInput,
    corr: TangentCorrection,
    consts: ConstantMatrices,
    dt: float,
    az_inv: np.ndarray | None = None,
) -> ObserverState:
    """Advance (Xhat, Z) one step under a frozen correction pair."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    dconj = conjugate_to_se(obs.Z, corr.delta, az_inv)
    if not math.isfinite(float(dconj.W.sum()) + float(corr.gamma.S.sum())):
        raise ValueError("non-finite correction term; check gain configuration")
    left = SIMTangent(dconj.Omega, consts.WG + dconj.W, consts.SN)
    right = input_tangent(u, consts)
    xhat_next = mixed_euler_step(obs.Xhat, left, right, dt)
    z_next = mixed_euler_step(obs.Z, consts.GN, corr.gamma.scaled(-1.0), dt)
    # Gamma has no rotation part and neither does G + N, so R_Z stays I;
    # rebuild it exactly to keep the invariant bit-true.
    z_next = SIMn3Element(_I3, z_next.V, z_next.A)
    return ObserverState(Xhat=xhat_next, Z=z_next)


def observer_step(
    obs: ObserverState,
    u: ImuInput,
    meas: MeasurementBundle,
    gains: Gains,
    params: SystemParams,
    consts: ConstantMatrices,
    dt: float,
) -> ObserverState:
    """Full synchronous observer update from one measurement bundle."""
    az_inv = obs.az_inverse()
    corr = combine_corrections(all_corrections(obs, meas, gains, params, consts, az_inv))
    return apply_correction_step(obs, u, corr, consts, dt, az_inv)


@dataclass(frozen=True)
class ErrorState:
    """Conjugated observer error E = (R_E, V_E) in SE_{n+2}(3)."""

    RE: np.ndarray
    VE: np.ndarray


def compute_error(
    truth: SEn3Element, obs: ObserverState, check: bool = False
) -> ErrorState:
    """Observer error Z^-1 X Xhat^-1 Z via its component closed form.

    With check=True the dense group-product form is evaluated as well and
    the two must agree (guards the component algebra in tests).
    """
    re = truth.rot @ obs.Xhat.rot.T
    va = truth.V @ obs.Z.A - obs.Z.V
    vahat = obs.Xhat.V @ obs.Z.A - obs.Z.V
    ve = va - re @ vahat
    if check:
        from .liegroups import promote

        zi = obs.Z.inverse()
        dense = zi.compose(promote(truth)).compose(promote(obs.Xhat.inverse())).compose(obs.Z)
        scale = 1.0 + np.abs(ve).max()
        if np.abs(dense.rot - re).max() > 1e-11 or np.abs(dense.V - ve).max() > 1e-11 * scale:
            raise AssertionError("group-product and component error forms disagree")
    return ErrorState(RE=re, VE=ve)


def lyapunov(err: ErrorState) -> float:
    """|V_E|^2 + tr(I - R_E); zero iff the error is the identity.

    Clamped at zero: rounding can push tr(R_E) marginally above 3 once
    the error rotation has converged to machine precision.
    """
    val = float(np.sum(err.VE * err.VE) + 3.0 - err.RE.trace())
    return val if val > 0.0 else 0.0


def error_dynamics_rhs(
    err: ErrorState, corr: TangentCorrection
) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time error derivatives under a correction pair.

    dR_E = -R_E hat(Omega_Delta),
    dV_E = -V_E S_Gamma + (I - R_E) W_Gamma - R_E W_Delta.
    """
    dre = -(err.RE @ hat(corr.delta.Omega))
    dve = (
        -(err.VE @ corr.gamma.S)
        + (np.eye(3) - err.RE) @ corr.gamma.W
        - err.RE @ corr.delta.W
    )
    return dre, dve


def lyapunov_rate(err: ErrorState, corr: TangentCorrection) -> float:
    """Analytic derivative of the Lyapunov function along the error flow."""
    _, dve = error_dynamics_rhs(err, corr)
    rot_part = np.trace(err.RE @ hat(corr.delta.Omega))
    return float(2.0 * np.sum(err.VE * dve) + rot_part)


def gnss_rate_bound(
    err: ErrorState, obs: ObserverState, yx: np.ndarray, sigma: int, gains: Gains
) -> float:
    """Certified upper bound on the Lyapunov rate under the GNSS correction."""
    az_inv = obs.az_inverse()
    ax = az_inv[:, 1]
    b = obs.Z.V @ ax
    ve_cx = err.VE @ ax
    i_re2 = np.eye(3) - err.RE @ err.RE
    return float(
        -2.0 * gains.kRx
        * (np.linalg.norm(i_re2 @ (yx - sigma * b)) - sigma * np.linalg.norm(ve_cx)) ** 2
        - sigma * gains.kx * np.sum(ve_cx * ve_cx)
        - 2.0 * gains.q * np.sum(err.VE * err.VE)
    )


def landmark_rate_bound(
    err: ErrorState, obs: ObserverState, gains: Gains, consts: ConstantMatrices
) -> float:
    """Certified upper bound on the Lyapunov rate under the landmark correction."""
    az_inv = obs.az_inverse()
    ac = az_inv @ consts.C
    ve_c = err.VE @ ac
    mu_z = obs.Z.V @ ac @ np.ones(consts.n)
    i_re2 = np.eye(3) - err.RE @ err.RE
    return float(
        -2.0 * gains.kRp
        * (np.sqrt(consts.n) * np.linalg.norm(ve_c) - np.linalg.norm(i_re2 @ mu_z)) ** 2
        - gains.kp * np.sum(ve_c * ve_c)
    )


def magnetometer_rate(err: ErrorState, gains: Gains, params: SystemParams) -> float:
    """Exact Lyapunov rate under the magnetometer correction."""
    i_re2 = np.eye(3) - err.RE @ err.RE
    return float(-2.0 * gains.km * np.sum((i_re2 @ params.ring_ym) ** 2))
