import numpy as np
import pytest

from cfsmooth.robot import (RobotModel, forward_kinematics, random_configuration,
                            surface_signed_distance)


def test_fk_straight_chain(two_link):
    chain = forward_kinematics(two_link, [0.0, 0.0])
    expected = [[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]]
    np.testing.assert_allclose(chain.points, expected, atol=1e-15)


def test_fk_rotated_chain(two_link):
    chain = forward_kinematics(two_link, [np.pi / 2, 0.0])
    expected = [[0.0, 0.0], [0.0, 0.5], [0.0, 1.0]]
    np.testing.assert_allclose(chain.points, expected, atol=1e-15)


def test_fk_elbow_tip(two_link):
    # Hand-computed: first link up, second link bends back to horizontal.
    chain = forward_kinematics(two_link, [np.pi / 2, -np.pi / 2])
    np.testing.assert_allclose(chain.points[-1], [0.5, 0.5], atol=1e-15)


def test_fk_chain_continuity_random(two_link, arm_3d):
    rng = np.random.default_rng(7)
    for model in (two_link, arm_3d):
        for _ in range(50):
            q = random_configuration(model, rng)
            chain = forward_kinematics(model, q)
            assert chain.points.shape == (model.dof + 1, model.workspace_dim)
            assert np.all(np.isfinite(chain.points))
            # Segment k starts exactly where segment k-1 ends.
            segs = chain.segments
            for k in range(1, len(segs)):
                np.testing.assert_allclose(segs[k][0], segs[k - 1][1],
                                           atol=1e-12, rtol=0)
            assert chain.points is not None and len(segs) == model.dof


def test_fk_dimension_mismatch(two_link):
    with pytest.raises(ValueError):
        forward_kinematics(two_link, [0.0, 0.0, 0.0])


def test_signed_distance_examples(two_link):
    # Perpendicular offset 0.30 from the first link axis, radius 0.05.
    assert surface_signed_distance(two_link, [0.0, 0.0], [0.25, 0.30]) == pytest.approx(0.25)
    # On the capsule surface.
    assert surface_signed_distance(two_link, [0.0, 0.0], [0.25, 0.05]) == pytest.approx(0.0)
    # On the link axis: negative by the capsule radius.
    assert surface_signed_distance(two_link, [0.0, 0.0], [0.25, 0.0]) == pytest.approx(-0.05)


def test_signed_distance_lipschitz(two_link):
    rng = np.random.default_rng(3)
    q = random_configuration(two_link, rng)
    for _ in range(200):
        p1 = rng.uniform(-1.5, 1.5, size=2)
        p2 = rng.uniform(-1.5, 1.5, size=2)
        d1 = surface_signed_distance(two_link, q, p1)
        d2 = surface_signed_distance(two_link, q, p2)
        assert abs(d1 - d2) <= np.linalg.norm(p1 - p2) + 1e-12


def test_signed_distance_sign_matches_membership(two_link):
    rng = np.random.default_rng(11)
    q = random_configuration(two_link, rng)
    chain = forward_kinematics(two_link, q)
    pts = rng.uniform(-1.2, 1.2, size=(10_000, 2))
    from cfsmooth.geometry import point_segment_distance
    inside = np.zeros(len(pts), dtype=bool)
    for a, b, r in chain.segments:
        inside |= point_segment_distance(pts, a, b) < r
    from cfsmooth.robot import clearance_to_points
    sd = clearance_to_points(two_link, q, pts)
    np.testing.assert_array_equal(sd < 0, inside)


def test_random_configuration_degenerate_limits():
    model = RobotModel(link_lengths=[1.0], link_radii=[0.1],
                       joint_lower=[0.7], joint_upper=[0.7],
                       vel_max=[1.0], acc_max=[1.0])
    rng = np.random.default_rng(0)
    q = random_configuration(model, rng)
    assert q[0] == 0.7


def test_random_configuration_deterministic(two_link):
    q1 = random_configuration(two_link, np.random.default_rng(42))
    q2 = random_configuration(two_link, np.random.default_rng(42))
    np.testing.assert_array_equal(q1, q2)


def test_random_configuration_uniform_mean(two_link):
    rng = np.random.default_rng(5)
    n = 10_000
    qs = np.array([random_configuration(two_link, rng) for _ in range(n)])
    lo, hi = two_link.joint_lower, two_link.joint_upper
    mid = 0.5 * (lo + hi)
    sigma = (hi - lo) / np.sqrt(12.0 * n)
    assert np.all(np.abs(qs.mean(axis=0) - mid) < 3.0 * sigma)


def test_invariant_validation():
    with pytest.raises(ValueError):
        RobotModel(link_lengths=[], link_radii=[], joint_lower=[], joint_upper=[],
                   vel_max=[], acc_max=[])
    with pytest.raises(ValueError):
        RobotModel(link_lengths=[1.0], link_radii=[-0.1], joint_lower=[0],
                   joint_upper=[1], vel_max=[1], acc_max=[1])
    with pytest.raises(ValueError):
        RobotModel(link_lengths=[1.0], link_radii=[0.1], joint_lower=[2],
                   joint_upper=[1], vel_max=[1], acc_max=[1])


def test_signature_stability(two_link):
    assert two_link.signature() == two_link.signature()
    other = RobotModel(link_lengths=[0.5, 0.6], link_radii=[0.05, 0.05],
                       joint_lower=[-np.pi, -np.pi], joint_upper=[np.pi, np.pi],
                       vel_max=[1, 1], acc_max=[1, 1])
    assert other.signature() != two_link.signature()


def test_fk_3d_chain(arm_3d):
    # Zero configuration stretches straight along x whatever the axes are.
    pts = forward_kinematics(arm_3d, np.zeros(6)).points
    np.testing.assert_allclose(pts[-1], [np.sum(arm_3d.link_lengths), 0, 0], atol=1e-12)
    # Link lengths are preserved under any configuration.
    rng = np.random.default_rng(2)
    q = random_configuration(arm_3d, rng)
    pts = forward_kinematics(arm_3d, q).points
    lens = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    np.testing.assert_allclose(lens, arm_3d.link_lengths, atol=1e-12)
