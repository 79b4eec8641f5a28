"""Gain feasibility, auxiliary-state initialisation, and runtime bounds.

The observer's convergence guarantee asks for gains satisfying a scalar
inequality that couples (kx, kp, q) with the GNSS excitation constants
(T, tau), and for A_Z(0) whose Gram matrix P_0 = A_Z(0) A_Z(0)^T matches
a template: fixed landmark blocks at their steady values plus three free
scalars inside derived intervals.  P(t) = A_Z(t) A_Z(t)^T then obeys a
linear matrix ODE whose scalar blocks stay inside those intervals; this
module provides the interval set, a Schur-complement determinant bound,
and the drift matrices of V_Z, all of which the harness monitors along
a run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .liegroups import ConstantMatrices
from .observer import Gains, ObserverState


def check_gain_condition(gains: Gains, n: int) -> tuple[bool, float]:
    """Feasibility margin: 2 n tau q e^{-2qT} kp + (8 q^2 tau^2 e^{-4qT} - 1) kx."""
    if n < 1:
        raise ValueError("landmark count n must be >= 1")
    q, T, tau = gains.q, gains.T, gains.tau
    margin = (
        2.0 * n * tau * q * np.exp(-2.0 * q * T) * gains.kp
        + (8.0 * q * q * tau * tau * np.exp(-4.0 * q * T) - 1.0) * gains.kx
    )
    return bool(margin > 0.0), float(margin)


def eq_intervals(gains: Gains, n: int) -> dict:
    """Admissible intervals for the three free scalars of P_0."""
    kx, kp, q, T, tau = gains.kx, gains.kp, gains.q, gains.T, gains.tau
    delta = kx * np.exp(-2.0 * q * T) * tau
    return {
        "delta": delta,
        "s_x": (n * kp / (2 * q) + delta, (n * kp + kx) / (2 * q)),
        "s_vx": (-(n * kp + kx) / (4 * q * q),
                 -n * kp / (4 * q * q) - delta / (2 * q)),
        "s_v": (n * kp / (4 * q ** 3) + delta / (2 * q * q),
                (n * kp + kx) / (4 * q ** 3)),
    }


@dataclass(frozen=True)
class PMatrix:
    """Gram matrix P = A_Z A_Z^T with named blocks (rows/cols: v, x, p_1..p_n)."""

    P: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[0] - 2

    @property
    def s_v(self) -> float:
        return float(self.P[0, 0])

    @property
    def s_vx(self) -> float:
        return float(self.P[0, 1])

    @property
    def s_x(self) -> float:
        return float(self.P[1, 1])

    @property
    def S_pv(self) -> np.ndarray:
        return self.P[0, 2:]

    @property
    def S_px(self) -> np.ndarray:
        return self.P[1, 2:]

    @property
    def S_p(self) -> np.ndarray:
        return self.P[2:, 2:]


def p_from_az(az: np.ndarray) -> PMatrix:
    az = np.asarray(az, dtype=float)
    return PMatrix(az @ az.T)


def schur_complement_det(p: PMatrix, gains: Gains) -> float:
    """det of the 2x2 Schur complement of the landmark block of P."""
    n, kp, q = p.n, gains.kp, gains.q
    a = p.s_v - n * kp / (8.0 * q ** 3)
    d = p.s_x - n * kp / (2.0 * q)
    b = p.s_vx + n * kp / (4.0 * q * q)
    return float(a * d - b * b)


def build_P0(gains: Gains, n: int, sx0: float, svx0: float, sv0: float) -> PMatrix:
    """P_0 template: steady landmark blocks plus validated free scalars."""
    iv = eq_intervals(gains, n)
    for name, val in (("s_x", sx0), ("s_vx", svx0), ("s_v", sv0)):
        lo, hi = iv[name]
        if not (lo <= val <= hi):
            raise ValueError(
                f"{name}(0) = {val:.6g} outside its admissible interval "
                f"[{lo:.6g}, {hi:.6g}]"
            )
    kp, q = gains.kp, gains.q
    P = np.zeros((n + 2, n + 2))
    P[0, 0] = sv0
    P[0, 1] = P[1, 0] = svx0
    P[1, 1] = sx0
    P[0, 2:] = P[2:, 0] = kp / (4.0 * q * q)
    P[1, 2:] = P[2:, 1] = -kp / (2.0 * q)
    P[2:, 2:] = (kp / (2.0 * q)) * np.eye(n)
    p = PMatrix(P)
    # Positive definiteness via the Schur argument: the landmark block is
    # a positive multiple of the identity, so P > 0 iff the 2x2 Schur
    # complement is positive definite.
    det = schur_complement_det(p, gains)
    a = p.s_v - n * kp / (8.0 * q ** 3)
    if det <= 0.0 or a <= 0.0:
        raise ValueError("P_0 template is not positive definite for these scalars")
    return p


def default_scalar_seeds(gains: Gains, n: int, preset: str = "verbatim") -> tuple:
    """Free scalars of P_0: values realized by the reference A_Z(0), or midpoints."""
    if preset == "verbatim":
        p = p_from_az(reference_az0(n))
        return p.s_x, p.s_vx, p.s_v
    if preset == "midpoint":
        iv = eq_intervals(gains, n)
        return tuple(0.5 * (iv[k][0] + iv[k][1]) for k in ("s_x", "s_vx", "s_v"))
    raise ValueError(f"unknown scalar seed preset {preset!r}")


def az_from_P0(p0) -> np.ndarray:
    """Any square root of P_0 works; the (deterministic) choice here is the
    lower Cholesky factor."""
    P = p0.P if isinstance(p0, PMatrix) else np.asarray(p0, dtype=float)
    try:
        return np.linalg.cholesky(P)
    except np.linalg.LinAlgError as exc:
        raise ValueError("az_from_P0: input is not positive definite") from exc


def reference_az0(n: int = 5) -> np.ndarray:
    """A_Z(0) of the reference simulation scenario, verbatim."""
    az = np.zeros((n + 2, n + 2))
    az[0, 0] = 36.7423
    az[0, 2:] = 15.8114
    az[1, 0] = -0.2722
    az[1, 1] = 1.3878
    az[1, 2:] = -3.1623
    az[2:, 2:] = 3.1623 * np.eye(n)
    return az


def p_dynamics_rhs(
    P: np.ndarray, sigma: int, gains: Gains, consts: ConstantMatrices
) -> np.ndarray:
    """dP/dt = (SN - qI)P + P(SN - qI)^T + sigma kx Cx Cx^T + kp C C^T."""
    P = P.P if isinstance(P, PMatrix) else np.asarray(P, dtype=float)
    k = P.shape[0]
    A = consts.SN - gains.q * np.eye(k)
    return (
        A @ P + P @ A.T
        + sigma * gains.kx * (consts.Cx @ consts.Cx.T)
        + gains.kp * (consts.C @ consts.C.T)
    )


def p_bounds(gains: Gains, n: int) -> dict:
    """Scalar interval bounds plus the Schur-determinant lower bound."""
    feasible, margin = check_gain_condition(gains, n)
    out = eq_intervals(gains, n)
    out["schur_det_lower"] = gains.kx * margin / (16.0 * gains.q ** 4)
    out["margin"] = margin
    out["feasible"] = feasible
    return out


@dataclass(frozen=True)
class VzDrift:
    """V_Z drift matrices: dV_Z/dt = -V_Z M + B with M >= qI."""

    M: np.ndarray
    B: np.ndarray


def vz_drift(
    obs: ObserverState,
    sigma: int,
    gains: Gains,
    yx: np.ndarray,
    consts: ConstantMatrices,
) -> VzDrift:
    az_inv = obs.az_inverse()
    k = az_inv.shape[0]
    ax = az_inv[:, 1]
    ac = az_inv @ consts.C
    M = (
        sigma * (gains.kx / 2.0 + gains.kRx) * np.outer(ax, ax)
        + (gains.kp / 2.0 + consts.n * gains.kRp) * (ac @ ac.T)
        + gains.q * np.eye(k)
    )
    B = consts.WG @ obs.Z.A + (gains.kx + gains.kRx) * np.outer(yx, ax)
    min_eig = float(np.linalg.eigvalsh(M - gains.q * np.eye(k))[0])
    if min_eig < -1e-10:
        raise AssertionError(f"M - qI lost positive semidefiniteness ({min_eig:.3e})")
    return VzDrift(M=M, B=B)
