"""Group arithmetic and closed-form exponentials against dense oracles."""

import numpy as np
import pytest
from scipy.linalg import expm

from lislam.liegroups import (
    GROUP_AXIOM_TOL,
    SEn3Element,
    SETangent,
    SIMn3Element,
    SIMTangent,
    constants,
    hat,
    left_jacobian,
    mixed_euler_step,
    promote,
    so3_exp,
    tangent_exp,
    vee,
)

rng = np.random.default_rng(42)


def random_se(n=5):
    return SEn3Element(so3_exp(rng.standard_normal(3)),
                       rng.standard_normal((3, n + 2)))


def random_sim(n=5):
    k = n + 2
    return SIMn3Element(
        so3_exp(rng.standard_normal(3)),
        rng.standard_normal((3, k)),
        np.eye(k) + 0.3 * rng.standard_normal((k, k)),
    )


# --- so(3) basics ----------------------------------------------------------

def test_hat_vee_roundtrip():
    w = rng.standard_normal(3)
    assert np.allclose(vee(hat(w)), w)


def test_hat_is_cross_product():
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    assert np.allclose(hat(a) @ b, np.cross(a, b))


def test_vee_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        vee(np.eye(3))


@pytest.mark.parametrize("scale", [1.0, 1e-3, 1e-6, 1e-9])
def test_so3_exp_matches_expm(scale):
    w = scale * rng.standard_normal(3)
    assert np.abs(so3_exp(w) - expm(hat(w))).max() < 1e-13


def test_so3_exp_is_rotation():
    R = so3_exp(rng.standard_normal(3) * 3.0)
    assert np.abs(R @ R.T - np.eye(3)).max() < 1e-14
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("scale", [2.0, 1e-5])
def test_left_jacobian_series(scale):
    """J_l(w) = sum hat(w)^k/(k+1)! -- compare a brute-force partial sum."""
    import math

    w = scale * rng.standard_normal(3)
    acc = sum(np.linalg.matrix_power(hat(w), k) / math.factorial(k + 1)
              for k in range(25))
    assert np.abs(left_jacobian(w) - acc).max() < 1e-13


# --- group axioms vs dense matrices ---------------------------------------

@pytest.mark.parametrize("make", [random_se, random_sim])
def test_compose_matches_dense_product(make):
    a, b = make(), make()
    dense = a.as_matrix() @ b.as_matrix()
    assert np.abs(a.compose(b).as_matrix() - dense).max() < GROUP_AXIOM_TOL


@pytest.mark.parametrize("make", [random_se, random_sim])
def test_inverse_is_two_sided(make):
    a = make()
    k = a.V.shape[1] + 3
    assert np.abs(a.compose(a.inverse()).as_matrix() - np.eye(k)).max() < 1e-10
    assert np.abs(a.inverse().compose(a).as_matrix() - np.eye(k)).max() < 1e-10


def test_compose_associativity():
    a, b, c = random_sim(), random_sim(), random_sim()
    lhs = a.compose(b).compose(c).as_matrix()
    rhs = a.compose(b.compose(c)).as_matrix()
    assert np.abs(lhs - rhs).max() < 1e-10


def test_sim_inverse_rejects_singular_A():
    bad = SIMn3Element(np.eye(3), np.zeros((3, 7)), np.zeros((7, 7)))
    with pytest.raises(ValueError):
        bad.inverse()


def test_se_element_column_accessors():
    x = SEn3Element.from_components(
        np.eye(3), [1, 2, 3], [4, 5, 6], [[7, 8, 9], [10, 11, 12]]
    )
    assert np.allclose(x.velocity, [1, 2, 3])
    assert np.allclose(x.position, [4, 5, 6])
    assert x.landmarks.shape == (3, 2)
    assert x.n == 2


def test_promote_embeds_with_unit_block():
    x = random_se()
    z = promote(x)
    assert np.array_equal(z.A, np.eye(7))
    assert np.abs(z.as_matrix()[:3, :] - x.as_matrix()[:3, :]).max() == 0.0


# --- tangent exponentials --------------------------------------------------

def naive_expm(m, order=60):
    """Independent series-with-scaling oracle (no scipy)."""
    k = int(max(0, np.ceil(np.log2(max(1e-30, np.abs(m).max())))) + 4)
    ms = m / 2.0 ** k
    acc = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for i in range(1, order):
        term = term @ ms / i
        acc = acc + term
    for _ in range(k):
        acc = acc @ acc
    return acc


@pytest.mark.parametrize("dt", [1.0, 0.3, 5e-4])
def test_se_tangent_exp(dt):
    t = SETangent(rng.standard_normal(3), rng.standard_normal((3, 7)))
    got = tangent_exp(t, dt).as_matrix()
    assert np.abs(got - naive_expm(dt * t.as_matrix())).max() < 1e-12


@pytest.mark.parametrize("dt", [1.0, 0.2])
def test_sim_tangent_exp_general(dt):
    t = SIMTangent(rng.standard_normal(3), rng.standard_normal((3, 7)),
                   rng.standard_normal((7, 7)))
    got = tangent_exp(t, dt).as_matrix()
    assert np.abs(got - naive_expm(dt * t.as_matrix())).max() < 1e-11


def test_sim_tangent_exp_nilpotent_block():
    """The drift tangent has S^2 = 0, so its exponential terminates."""
    consts = constants(5)
    got = tangent_exp(consts.GN, 0.37).as_matrix()
    assert np.abs(got - naive_expm(0.37 * consts.GN.as_matrix())).max() < 1e-12


def test_sim_tangent_exp_zero_rotation():
    t = SIMTangent(np.zeros(3), rng.standard_normal((3, 7)),
                   0.1 * rng.standard_normal((7, 7)))
    got = tangent_exp(t, 1.0).as_matrix()
    assert np.abs(got - naive_expm(t.as_matrix())).max() < 1e-12


def test_gn_is_nilpotent_of_index_three():
    A = constants(3).GN.as_matrix()
    assert np.abs(A @ A @ A).max() == 0.0


def test_tangent_scaled():
    t = SIMTangent(np.ones(3), np.ones((3, 7)), np.ones((7, 7)))
    s = t.scaled(-2.0)
    assert np.all(s.Omega == -2.0) and np.all(s.S == -2.0)


# --- splitting integrator ---------------------------------------------------

def dense_rk4(m0, left, right, dt, substeps=200):
    """Integrate dM/dt = left M + M right densely (oracle)."""
    m = m0.copy()
    h = dt / substeps
    f = lambda M: left @ M + M @ right
    for _ in range(substeps):
        k1 = f(m)
        k2 = f(m + 0.5 * h * k1)
        k3 = f(m + 0.5 * h * k2)
        k4 = f(m + h * k3)
        m = m + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return m


def test_mixed_euler_step_exactness_for_constant_tangents():
    """exp(dt L) X exp(dt R) solves dX/dt = L X + X R exactly."""
    consts = constants(4)
    x = random_se(4)
    u = SIMTangent(rng.standard_normal(3), rng.standard_normal((3, 6)),
                   -consts.SN)
    dt = 0.05
    got = mixed_euler_step(x, consts.GN, u, dt)
    oracle = dense_rk4(promote(x).as_matrix(), consts.GN.as_matrix(),
                       u.as_matrix(), dt)
    assert np.abs(got.as_matrix()[:3, :] - oracle[:3, :]).max() < 1e-9


def test_mixed_euler_step_first_order_convergence():
    """One-step defect vs the coupled nonlinear flow shrinks ~linearly in dt."""
    consts = constants(5)
    x = random_se(5)
    # a 'nonlinear' reference: two half steps with tangents re-split
    u1 = SIMTangent(np.array([0.1, -0.2, 0.3]), rng.standard_normal((3, 7)),
                    -consts.SN)
    u2 = SIMTangent(np.array([-0.3, 0.1, 0.2]), rng.standard_normal((3, 7)),
                    -consts.SN)

    def two_piece(dt):
        y = mixed_euler_step(x, consts.GN, u1, dt / 2)
        return mixed_euler_step(y, consts.GN, u2, dt / 2)

    def one_piece(dt):
        mid = SIMTangent(0.5 * (u1.Omega + u2.Omega), 0.5 * (u1.W + u2.W),
                         -consts.SN)
        return mixed_euler_step(x, consts.GN, mid, dt)

    errs = []
    for dt in (0.2, 0.1):
        d = np.abs(two_piece(dt).as_matrix() - one_piece(dt).as_matrix()).max()
        errs.append(d)
    ratio = errs[0] / errs[1]
    assert 1.8 < ratio < 4.5  # at least first order


def test_mixed_euler_step_keeps_se_membership():
    consts = constants(5)
    x = random_se(5)
    u = SIMTangent(np.ones(3), np.ones((3, 7)), -consts.SN)
    y = x
    for _ in range(50):
        y = mixed_euler_step(y, consts.GN, u, 1e-3)
    R = y.rot
    assert np.abs(R @ R.T - np.eye(3)).max() < 1e-12


def test_mixed_euler_step_rejects_non_cancelling_blocks():
    consts = constants(5)
    x = random_se(5)
    bad = SIMTangent(np.zeros(3), np.zeros((3, 7)), 0.5 * np.eye(7))
    with pytest.raises(ValueError):
        mixed_euler_step(x, consts.GN, bad, 0.1)


def test_constants_shapes():
    c = constants(4, g=9.7)
    assert c.C.shape == (6, 4)
    assert c.Cx[1, 0] == 1.0 and c.Cx.sum() == 1.0
    assert c.WG[2, 0] == 9.7
    assert c.SN[0, 1] == -1.0 and np.count_nonzero(c.SN) == 1


def test_constants_rejects_bad_n():
    with pytest.raises(ValueError):
        constants(0)
