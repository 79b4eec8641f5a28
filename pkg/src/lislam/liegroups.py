"""Matrix Lie group numerics for SO(3), SE_{n+2}(3) and SIM_{n+2}(3).

The state space of landmark-inertial SLAM with n landmarks embeds in
SE_{n+2}(3): a rotation plus a 3x(n+2) translational block holding the
velocity, position and landmark columns.  The observer's auxiliary state
lives in SIM_{n+2}(3), which additionally carries an invertible
(n+2)x(n+2) lower-right block.

All elements are immutable values and all operations are pure functions,
so everything here is safe to share between threads.  Integration steps
are products of one-parameter subgroup flows (matrix exponentials), so
group membership is preserved without re-orthonormalisation; a tolerance
check guards against silent numerical corruption instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

# Group-membership tolerance for double precision over ~80k-step runs.
ORTHONORMALITY_TOL = 1e-9
# Tolerance for group axioms on randomized elements (vs dense arithmetic).
GROUP_AXIOM_TOL = 1e-11
# Smallest acceptable singular value before an (n+2)x(n+2) block is
# treated as numerically singular.
SINGULARITY_TOL = 1e-9

_SMALL_ANGLE = 1e-4

_I3 = np.eye(3)
_EYE_CACHE: dict[int, np.ndarray] = {}


def _eye(k: int) -> np.ndarray:
    """Cached identity; callers must not mutate the result."""
    m = _EYE_CACHE.get(k)
    if m is None:
        m = np.eye(k)
        m.setflags(write=False)
        _EYE_CACHE[k] = m
    return m


def hat(omega: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(w) @ v == cross(w, v)."""
    wx, wy, wz = np.asarray(omega, dtype=float)
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of hat.  Rejects inputs that are not antisymmetric."""
    m = np.asarray(m, dtype=float)
    defect = np.linalg.norm(m + m.T)
    if defect >= 1e-9:
        raise ValueError(
            f"vee: input is not antisymmetric (||m + m^T|| = {defect:.3e})"
        )
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def _rodrigues_coeffs(theta: float) -> tuple[float, float]:
    """(sin t / t, (1 - cos t) / t^2) with series for small angles."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    return np.sin(theta) / theta, (1.0 - np.cos(theta)) / (theta * theta)


def so3_exp(omega: np.ndarray, dt: float = 1.0) -> np.ndarray:
    """Closed-form (Rodrigues) exponential of hat(omega * dt)."""
    w = np.asarray(omega, dtype=float) * dt
    theta = float(np.sqrt(w @ w))
    if theta == 0.0:
        return np.eye(3)
    a, b = _rodrigues_coeffs(theta)
    wx = hat(w)
    return _I3 + a * wx + b * (wx @ wx)


def _jacobian_coeffs(theta: float) -> tuple[float, float]:
    """Quadratic-polynomial coefficients of the SO(3) left Jacobian."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return (0.5 - t2 / 24.0 + t2 * t2 / 720.0,
                1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0)
    return ((1.0 - np.cos(theta)) / (theta * theta),
            (theta - np.sin(theta)) / (theta ** 3))


def _second_jacobian_coeffs(theta: float) -> tuple[float, float]:
    """Coefficients of sum_{k>=0} hat(w)^k / (k+2)! (constant term is 1/2)."""
    if theta < _SMALL_ANGLE:
        t2 = theta * theta
        return (1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
                1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0)
    return ((theta - np.sin(theta)) / (theta ** 3),
            (np.cos(theta) - 1.0 + 0.5 * theta * theta) / (theta ** 4))


def left_jacobian(omega: np.ndarray) -> np.ndarray:
    """Left Jacobian of SO(3): sum_{k>=0} hat(w)^k / (k+1)!."""
    w = np.asarray(omega, dtype=float)
    theta = float(np.sqrt(w @ w))
    wx = hat(w)
    c1, c2 = _jacobian_coeffs(theta)
    return _I3 + c1 * wx + c2 * (wx @ wx)


def _second_jacobian(omega: np.ndarray) -> np.ndarray:
    """sum_{k>=0} hat(w)^k / (k+2)!; pairs with a nilpotent right block."""
    w = np.asarray(omega, dtype=float)
    theta = float(np.sqrt(w @ w))
    wx = hat(w)
    c1, c2 = _second_jacobian_coeffs(theta)
    return 0.5 * _I3 + c1 * wx + c2 * (wx @ wx)


def _phi_series(s: np.ndarray) -> np.ndarray:
    """sum_{k>=0} s^k / (k+1)!, the coupling factor of exp([[0, W], [0, S]])."""
    term = _eye(s.shape[0])
    out = term
    for k in range(2, 40):
        term = term @ s / k
        out = out + term
        if np.abs(term).max() < 1e-17:
            break
    return out


def _exp_series(s: np.ndarray) -> np.ndarray:
    """exp(s) = I + s phi(s), sharing the phi series."""
    return _eye(s.shape[0]) + s @ _phi_series(s)


@dataclass(frozen=True)
class SEn3Element:
    """Element of SE_{n+2}(3): rotation plus 3x(n+2) translational block.

    Column layout of V: velocity, position, then n landmark positions.
    """

    rot: np.ndarray
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.V.shape[1] - 2

    @property
    def velocity(self) -> np.ndarray:
        return self.V[:, 0]

    @property
    def position(self) -> np.ndarray:
        return self.V[:, 1]

    @property
    def landmarks(self) -> np.ndarray:
        return self.V[:, 2:]

    @staticmethod
    def identity(n: int) -> "SEn3Element":
        return SEn3Element(np.eye(3), np.zeros((3, n + 2)))

    @staticmethod
    def from_components(rot, v, x, landmarks) -> "SEn3Element":
        landmarks = np.atleast_2d(np.asarray(landmarks, dtype=float))
        V = np.column_stack([np.asarray(v, float), np.asarray(x, float), landmarks.T])
        return SEn3Element(np.asarray(rot, dtype=float), V)

    def compose(self, other: "SEn3Element") -> "SEn3Element":
        if self.V.shape != other.V.shape:
            raise ValueError("SEn3Element dimension mismatch in compose")
        return SEn3Element(self.rot @ other.rot, self.rot @ other.V + self.V)

    def inverse(self) -> "SEn3Element":
        rt = self.rot.T
        return SEn3Element(rt, -(rt @ self.V))

    def as_matrix(self) -> np.ndarray:
        k = self.V.shape[1]
        m = np.eye(3 + k)
        m[:3, :3] = self.rot
        m[:3, 3:] = self.V
        return m


@dataclass(frozen=True)
class SIMn3Element:
    """Element of SIM_{n+2}(3): (R, V, A) with A invertible."""

    rot: np.ndarray
    V: np.ndarray
    A: np.ndarray

    @property
    def n(self) -> int:
        return self.V.shape[1] - 2

    @staticmethod
    def identity(n: int) -> "SIMn3Element":
        return SIMn3Element(np.eye(3), np.zeros((3, n + 2)), np.eye(n + 2))

    def compose(self, other: "SIMn3Element") -> "SIMn3Element":
        if self.V.shape != other.V.shape:
            raise ValueError("SIMn3Element dimension mismatch in compose")
        return SIMn3Element(
            self.rot @ other.rot,
            self.rot @ other.V + self.V @ other.A,
            self.A @ other.A,
        )

    def inverse(self) -> "SIMn3Element":
        smin = np.linalg.svd(self.A, compute_uv=False)[-1]
        if smin <= SINGULARITY_TOL:
            raise ValueError(
                f"SIMn3Element.inverse: A block numerically singular "
                f"(smallest singular value {smin:.3e})"
            )
        rt = self.rot.T
        a_inv = np.linalg.inv(self.A)
        return SIMn3Element(rt, -(rt @ self.V @ a_inv), a_inv)

    def as_matrix(self) -> np.ndarray:
        k = self.V.shape[1]
        m = np.zeros((3 + k, 3 + k))
        m[:3, :3] = self.rot
        m[:3, 3:] = self.V
        m[3:, 3:] = self.A
        return m


def promote(x: SEn3Element) -> SIMn3Element:
    """Embed an SE_{n+2}(3) element in SIM_{n+2}(3) (unit A block)."""
    return SIMn3Element(x.rot, x.V, _eye(x.V.shape[1]))


@dataclass(frozen=True)
class SETangent:
    """Element of se_{n+2}(3), stored as (Omega, W)."""

    Omega: np.ndarray
    W: np.ndarray

    def as_matrix(self) -> np.ndarray:
        k = self.W.shape[1]
        m = np.zeros((3 + k, 3 + k))
        m[:3, :3] = hat(self.Omega)
        m[:3, 3:] = self.W
        return m

    def scaled(self, c: float) -> "SETangent":
        return SETangent(c * self.Omega, c * self.W)


@dataclass(frozen=True)
class SIMTangent:
    """Element of sim_{n+2}(3), stored as (Omega, W, S)."""

    Omega: np.ndarray
    W: np.ndarray
    S: np.ndarray

    def as_matrix(self) -> np.ndarray:
        k = self.W.shape[1]
        m = np.zeros((3 + k, 3 + k))
        m[:3, :3] = hat(self.Omega)
        m[:3, 3:] = self.W
        m[3:, 3:] = self.S
        return m

    def scaled(self, c: float) -> "SIMTangent":
        return SIMTangent(c * self.Omega, c * self.W, c * self.S)


@dataclass(frozen=True)
class ConstantMatrices:
    """Constant selectors and tangents shared by the system and observer.

    C selects landmark-relative positions, Cx selects the robot position,
    WG carries gravity, and SN couples velocity into position (nilpotent).
    """

    n: int
    g: float
    C: np.ndarray
    Cx: np.ndarray
    WG: np.ndarray
    SN: np.ndarray
    G: SETangent = field(repr=False, default=None)
    N: SIMTangent = field(repr=False, default=None)
    GN: SIMTangent = field(repr=False, default=None)


def constants(n: int, g: float = 9.81) -> ConstantMatrices:
    if n < 1:
        raise ValueError("landmark count n must be >= 1")
    C = np.zeros((n + 2, n))
    C[1, :] = 1.0
    C[2:, :] = -np.eye(n)
    Cx = np.zeros((n + 2, 1))
    Cx[1, 0] = 1.0
    WG = np.zeros((3, n + 2))
    WG[2, 0] = g
    SN = np.zeros((n + 2, n + 2))
    SN[0, 1] = -1.0
    G = SETangent(np.zeros(3), WG)
    N = SIMTangent(np.zeros(3), np.zeros((3, n + 2)), SN)
    GN = SIMTangent(np.zeros(3), WG, SN)
    return ConstantMatrices(n=n, g=g, C=C, Cx=Cx, WG=WG, SN=SN, G=G, N=N, GN=GN)


def _rot_and_jacobian(w: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Rodrigues rotation and left Jacobian from one shared hat/angle pass."""
    theta = float(np.sqrt(w @ w))
    if theta == 0.0:
        return np.eye(3), np.eye(3), 0.0
    wx = hat(w)
    wx2 = wx @ wx
    a, b = _rodrigues_coeffs(theta)
    c1, c2 = _jacobian_coeffs(theta)
    return _I3 + a * wx + b * wx2, _I3 + c1 * wx + c2 * wx2, theta


def tangent_exp(t, dt: float = 1.0):
    """Exponential map of a scaled tangent onto its group.

    Closed forms are used wherever the structure permits: Rodrigues for
    the rotation factor, the left-Jacobian series for the coupling block,
    and exact low-order polynomials when the S block is nilpotent (the
    gravity/velocity tangents satisfy S^2 = 0, so their exponentials
    terminate).  The general case falls back to dense scaling-and-squaring.
    """
    if isinstance(t, SETangent):
        w = t.Omega * dt
        rot, jl, _ = _rot_and_jacobian(w)
        return SEn3Element(rot, jl @ (t.W * dt))

    w = t.Omega * dt
    W = t.W * dt
    S = t.S * dt
    k = S.shape[0]
    if not S.any():
        rot, jl, _ = _rot_and_jacobian(w)
        return SIMn3Element(rot, jl @ W, _eye(k))
    if not (S @ S).any():
        # S nilpotent of index 2: exp terminates exactly.
        rot, jl, theta = _rot_and_jacobian(w)
        if theta == 0.0:
            psi = W + 0.5 * W @ S
        else:
            psi = jl @ W + _second_jacobian(w) @ W @ S
        return SIMn3Element(rot, psi, _eye(k) + S)
    if not w.any() and np.abs(S).sum() < 1.0:
        phi = _phi_series(S)
        return SIMn3Element(np.eye(3), W @ phi, _eye(k) + S @ phi)
    m = expm(t.scaled(dt).as_matrix())
    return SIMn3Element(m[:3, :3], m[:3, 3:], m[3:, 3:])


# Exponentials of tangents that are reused across many steps (constant
# drift terms, constant inputs) are memoised by object identity.  Entries
# pin their key object, so an id can never be recycled while its entry is
# alive; a size cap bounds memory for callers that never reuse tangents.
_EXP_MEMO: dict[tuple[int, float], tuple[object, object]] = {}
_EXP_MEMO_CAP = 128


def _memo_exp(t, dt: float):
    key = (id(t), dt)
    hit = _EXP_MEMO.get(key)
    if hit is not None and hit[0] is t:
        return hit[1]
    val = tangent_exp(t, dt)
    if len(_EXP_MEMO) >= _EXP_MEMO_CAP:
        _EXP_MEMO.clear()
    _EXP_MEMO[key] = (t, val)
    return val


def mixed_euler_step(x, left, right, dt: float):
    """One Lie-group Euler step: exp(dt*left) . x . exp(dt*right).

    Both factors are genuine one-parameter subgroup flows, so the result
    stays on the group to machine precision.  When x is an SE element the
    A blocks of the two factors must cancel (they do for the system and
    observer splittings, whose S blocks are +/- the nilpotent SN).
    """
    lf = _memo_exp(left, dt)
    rf = _memo_exp(right, dt)
    if isinstance(lf, SEn3Element):
        lf = promote(lf)
    if isinstance(rf, SEn3Element):
        rf = promote(rf)
    if isinstance(x, SEn3Element):
        # Inline (lf . x . rf) with the unit A block of x elided.
        rot1 = lf.rot @ x.rot
        V1 = lf.rot @ x.V + lf.V
        A = lf.A @ rf.A
        defect = np.abs(A - _eye(A.shape[0])).max()
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(
                f"mixed_euler_step: SE step left the group (A defect {defect:.3e})"
            )
        return SEn3Element(rot1 @ rf.rot, rot1 @ rf.V + V1 @ rf.A)
    return lf.compose(x).compose(rf)
