import math

import numpy as np
import pytest

from telearm import mathcore as mc
from telearm.kinematics import (DHChain, DHRow, fkm, load_chain,
                                rotation_jacobian, save_chain,
                                translation_jacobian, umirobot_chain)

from oracles import fk_homogeneous, quat_dist_up_to_sign, rotmat_to_quat

rng = np.random.default_rng(42)
PI = math.pi


def random_q(chain, n):
    return rng.uniform(chain.q_min, chain.q_max, size=(n, len(chain)))


def test_chain_table_values():
    ch = umirobot_chain()
    assert len(ch) == 5
    assert ch.rows[1] == DHRow(-PI / 2, 0.0, 0.0813, PI)
    assert ch.rows[3] == DHRow(0.0, 0.16519, 0.0, -PI / 2)
    assert ch.rows[0] == DHRow(0.0, 0.00245, 0.0, -PI / 2)
    assert ch.rows[2] == DHRow(0.0, 0.0, 0.0, PI / 2)
    assert ch.rows[4] == DHRow(0.0, 0.0, 0.0, PI / 2)
    assert np.array_equal(ch.q_min, np.full(5, -PI / 2))
    assert np.array_equal(ch.q_max, np.full(5, PI / 2))


def test_fkm_zero_matches_oracle():
    ch = umirobot_chain()
    pose = fkm(ch, np.zeros(5))
    R, p = fk_homogeneous(ch, np.zeros(5))
    assert np.max(np.abs(mc.vec3(pose.t) - p)) < 1e-12
    assert quat_dist_up_to_sign(mc.vec4(pose.r), rotmat_to_quat(R)) < 1e-12


def test_fkm_random_matches_oracle():
    ch = umirobot_chain()
    for q in random_q(ch, 1000):
        pose = fkm(ch, q)
        R, p = fk_homogeneous(ch, q)
        assert np.max(np.abs(mc.vec3(pose.t) - p)) < 1e-12
        assert quat_dist_up_to_sign(mc.vec4(pose.r), rotmat_to_quat(R)) < 1e-11
        assert abs(pose.r.norm() - 1.0) < 1e-9


def test_single_z_revolute():
    ch = DHChain((DHRow(0, 0, 0, 0),))
    theta = 0.8
    pose = fkm(ch, [theta])
    want = mc.from_axis_angle(mc.K_, theta)
    assert np.max(np.abs(mc.vec4(pose.r) - mc.vec4(want))) < 1e-15
    assert pose.t.norm() == 0.0


def test_dimension_mismatch():
    ch = umirobot_chain()
    with pytest.raises(ValueError):
        fkm(ch, np.zeros(4))
    with pytest.raises(ValueError):
        rotation_jacobian(ch, np.zeros(3))
    with pytest.raises(ValueError):
        translation_jacobian(ch, np.zeros(6))


def _fd_jacobian(fn, q, h=1e-6):
    J = np.zeros((4, len(q)))
    for i in range(len(q)):
        qp = q.copy(); qp[i] += h
        qm = q.copy(); qm[i] -= h
        J[:, i] = (fn(qp) - fn(qm)) / (2 * h)
    return J


def _vec4_r(chain, qref):
    """vec4 of the FK rotation, sign-aligned to the pose at qref."""
    ref = mc.vec4(fkm(chain, qref).r)

    def fn(q):
        v = mc.vec4(fkm(chain, q).r)
        return v if v @ ref >= 0 else -v
    return fn


def test_rotation_jacobian_finite_difference():
    ch = umirobot_chain()
    for q in random_q(ch, 100):
        J = rotation_jacobian(ch, q)
        Jfd = _fd_jacobian(_vec4_r(ch, q), q)
        assert np.max(np.abs(J - Jfd)) < 1e-6


def test_translation_jacobian_finite_difference():
    ch = umirobot_chain()
    for q in random_q(ch, 100):
        J = translation_jacobian(ch, q)
        Jfd = _fd_jacobian(lambda qq: mc.vec4(fkm(ch, qq).t), q)
        assert np.max(np.abs(J - Jfd)) < 1e-6


def test_translation_jacobian_row0_zero():
    ch = umirobot_chain()
    for q in random_q(ch, 20):
        assert np.all(translation_jacobian(ch, q)[0] == 0.0)


def test_single_z_revolute_jacobians():
    # rotation: column is 1/2 vec4(k * r) at any q
    ch = DHChain((DHRow(0, 0, 0, 0),))
    for theta in (0.0, 0.3, -1.2):
        r = fkm(ch, [theta]).r
        J = rotation_jacobian(ch, np.array([theta]))
        want = 0.5 * mc.vec4(mc.mul(mc.K_, r))
        assert np.max(np.abs(J[:, 0] - want)) < 1e-15
    # translation with a=L at q=0: d/dtheta (L cos, L sin, 0) = (0, L, 0)
    L = 0.2
    chL = DHChain((DHRow(0, 0, L, 0),))
    Jt = translation_jacobian(chL, np.zeros(1))
    assert np.max(np.abs(Jt[:, 0] - np.array([0, 0, L, 0]))) < 1e-15


def test_empty_chain_jacobian():
    ch = DHChain((), np.zeros(0), np.zeros(0))
    # zero-length limits need explicit arrays; q_min < q_max holds vacuously
    assert rotation_jacobian(ch, np.zeros(0)).shape == (4, 0)
    assert translation_jacobian(ch, np.zeros(0)).shape == (4, 0)


def test_jacobian_first_order_consistency():
    # halving dt shrinks the linearization error ~4x
    ch = umirobot_chain()
    q = rng.uniform(-1.0, 1.0, 5)
    qdot = rng.normal(size=5)
    Jt = translation_jacobian(ch, q)
    t0 = mc.vec4(fkm(ch, q).t)

    def err(dt):
        pred = t0 + Jt @ qdot * dt
        real = mc.vec4(fkm(ch, q + qdot * dt).t)
        return np.max(np.abs(pred - real))

    e1, e2 = err(1e-3), err(5e-4)
    assert e2 < e1 / 3.0  # ~4x for O(dt^2)


def test_chain_file_roundtrip(tmp_path):
    ch = umirobot_chain()
    path = tmp_path / "chain.txt"
    save_chain(ch, path)
    back = load_chain(path)
    assert back.rows == ch.rows
    assert np.array_equal(back.q_min, ch.q_min)
    assert np.array_equal(back.q_max, ch.q_max)


def test_chain_file_errors(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("0 0 0\n")
    with pytest.raises(ValueError):
        load_chain(p)
    p.write_text("")
    with pytest.raises(ValueError):
        load_chain(p)
