"""Scalar health and convergence metrics for logging and acceptance checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .liegroups import SEn3Element
from .observer import ErrorState, ObserverState, TangentCorrection, compute_error, lyapunov


def attitude_error_angle(RE: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, arccos((tr(R) - 1) / 2), in [0, pi]."""
    c = (float(RE.trace()) - 1.0) / 2.0
    return math.acos(min(1.0, max(-1.0, c)))


def rotation_axis_angle(R: np.ndarray) -> tuple[np.ndarray, float]:
    """(axis, angle) of a rotation; the axis of an identity rotation is e3."""
    angle = attitude_error_angle(R)
    if angle < 1e-12:
        return np.array([0.0, 0.0, 1.0]), angle
    if abs(angle - math.pi) < 1e-6:
        # Near a half-turn the antisymmetric part vanishes; recover the
        # axis from the symmetric part R + I = 2 axis axis^T (+ O(eps)).
        M = R + np.eye(3)
        axis = M[:, int(np.argmax(M.diagonal()))]
        return axis / np.linalg.norm(axis), angle
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return w / (2.0 * math.sin(angle)), angle


def yaw_angle(R: np.ndarray) -> float:
    """Heading (rotation about e3) of a rotation matrix, atan2 convention."""
    return math.atan2(R[1, 0], R[0, 0])


def correction_norm(corr: TangentCorrection) -> float:
    """Frobenius norm of all blocks of a correction pair."""
    d, g = corr.delta, corr.gamma
    return math.sqrt(
        float(d.Omega @ d.Omega) + float(np.sum(d.W * d.W))
        + float(g.Omega @ g.Omega) + float(np.sum(g.W * g.W))
        + float(np.sum(g.S * g.S))
    )


@dataclass(frozen=True)
class MetricsRow:
    """One logged sample of truth-vs-estimate health metrics.

    lm_err holds per-landmark position error norms; lm_err_rms is their
    root-mean-square aggregate.  tr_RE_plus1 near zero flags proximity to
    the unstable set of attitude errors.  mu_x and mu_z are the internal
    estimator vectors x_hat - V_Z A_Z^-1 Cx and V_Z A_Z^-1 C 1_n.
    """

    t: float
    att_err: float
    vel_err: float
    pos_err: float
    lm_err: np.ndarray
    lm_err_rms: float
    lyap: float
    sigma: int
    tr_RE_plus1: float
    corr_gnss: float
    corr_lm: float
    corr_mag: float
    mu_x: np.ndarray
    mu_z: np.ndarray

    def __post_init__(self):
        if self.lyap < -1e-12:
            raise ValueError("Lyapunov value must be nonnegative")
        if not (0.0 <= self.att_err <= math.pi):
            raise ValueError("attitude error must lie in [0, pi]")


def metrics_row(
    truth: SEn3Element,
    obs: ObserverState,
    corr_parts: tuple[TangentCorrection, TangentCorrection, TangentCorrection],
    t: float,
    sigma: int,
    err: ErrorState | None = None,
) -> MetricsRow:
    """Assemble one metrics sample; err may be passed to avoid recomputation."""
    if err is None:
        err = compute_error(truth, obs)
    diff = obs.Xhat.V - truth.V
    lm_err = np.sqrt(np.sum(diff[:, 2:] * diff[:, 2:], axis=0))
    az_inv = obs.az_inverse()
    # C 1_n = (0, n, -1, ..., -1)^T, so A_Z^-1 C 1_n = n ax - sum_i a_{p_i}.
    mu_z = obs.Z.V @ (truth.n * az_inv[:, 1] - az_inv[:, 2:].sum(axis=1))
    mu_x = obs.Xhat.position - obs.Z.V @ az_inv[:, 1]
    gnss, lm, mag = corr_parts
    return MetricsRow(
        t=float(t),
        att_err=attitude_error_angle(err.RE),
        vel_err=float(np.linalg.norm(diff[:, 0])),
        pos_err=float(np.linalg.norm(diff[:, 1])),
        lm_err=lm_err,
        lm_err_rms=float(np.sqrt(np.mean(lm_err * lm_err))),
        lyap=lyapunov(err),
        sigma=int(sigma),
        tr_RE_plus1=float(err.RE.trace()) + 1.0,
        corr_gnss=correction_norm(gnss),
        corr_lm=correction_norm(lm),
        corr_mag=correction_norm(mag),
        mu_x=mu_x,
        mu_z=mu_z,
    )
