import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ballmax.errors import DimensionMismatch, EmptySet, InvalidInstance
from ballmax.geometry import (Ball, BallSet, Instance, dc_objective, dc_objective_pieces, dc_pieces,
                              g_value, h_value, hull_contains, qset_at, qset_params)

from conftest import single

coords = st.floats(-5, 5, allow_nan=False)


@st.composite
def instances(draw, max_dim=4, max_m=6):
    n = draw(st.integers(1, max_dim))
    m = draw(st.integers(1, max_m))
    C = draw(arrays(float, (m, n), elements=coords))
    r = draw(arrays(float, m, elements=st.floats(0.1, 5)))
    c0 = draw(arrays(float, n, elements=coords))
    lam = draw(st.floats(0.05, 0.95))
    return Instance(BallSet(C, r), c0, lam)


# h_value

def test_h_center_of_unit_ball():
    assert h_value(BallSet([[0, 0]], [1]), [0, 0]) == -1.0


def test_h_boundary_point():
    assert h_value(BallSet([[0, 0]], [1]), [1, 0]) == 0.0


def test_h_lens_origin():
    q = BallSet([[-0.5, 0], [0.5, 0]], [1, 1])
    assert h_value(q, [0, 0]) == pytest.approx(-0.75, abs=1e-15)


def test_h_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        h_value(BallSet([[0, 0]], [1]), [0, 0, 0])


# g_value

@pytest.mark.parametrize("lam, c0, x, expected", [
    (0.5, [0, 0], [0, 0], 0.0),
    (0.5, [0, 0], [2, 0], 2.0),
    (0.25, [1, 1], [1, 2], 0.25),
])
def test_g_examples(lam, c0, x, expected):
    inst = single([5, 5], 1, c0, lam)
    assert g_value(inst, x) == pytest.approx(expected, abs=1e-15)


# dc_objective

def test_dc_single_far_ball_both_forms():
    inst = single([2, 0], 1, [0, 0], 0.5)
    assert dc_objective(inst, [0, 0]) == pytest.approx(3.0, abs=1e-14)
    assert dc_objective_pieces(inst, [0, 0]) == pytest.approx(3.0, abs=1e-14)


def test_dc_unit_ball_center():
    inst = single([0, 0], 1, [0, 0], 0.5)
    assert dc_objective(inst, [0, 0]) == -1.0


def test_dc_pieces_objects_match_arrays(four_disk):
    x = np.array([0.3, -0.2])
    vals = [p.evaluate(x) for p in dc_pieces(four_disk)]
    assert max(vals) == pytest.approx(float(dc_objective_pieces(four_disk, x)), abs=1e-14)


@given(instances(), arrays(float, (8, 4), elements=coords))
def test_dc_identity_property(inst, pts):
    x = pts[:, :inst.dim]
    direct = dc_objective(inst, x)
    pieces = dc_objective_pieces(inst, x)
    scale = np.maximum(1.0, np.abs(direct)) * max(1.0, inst.scale() ** 2)
    assert np.all(np.abs(direct - pieces) <= 1e-9 * scale)


@given(instances(), arrays(float, (16, 4), elements=coords))
def test_membership_duality(inst, pts):
    x = pts[:, :inst.dim]
    assert np.array_equal(h_value(inst.q, x) <= 0, inst.q.contains(x))


# qset_at

def test_qset_at_zero_probe_example():
    q = qset_at(single([1, 0], 1, [0, 0], 0.5), 0.0)
    np.testing.assert_allclose(q.centers, [[2, 0]])
    assert q.radii_sq[0] == pytest.approx(4.0)


def test_qset_at_empty():
    with pytest.raises(EmptySet) as exc:
        qset_at(single([1, 0], 1, [0, 0], 0.5), 10.0)
    assert exc.value.indices == [0]
    _, r2 = qset_params(single([1, 0], 1, [0, 0], 0.5), 10.0)
    assert r2[0] == pytest.approx(2 * (-5 + 1 + 1))


def test_qset_rejects_negative_probe(four_disk):
    with pytest.raises(ValueError):
        qset_params(four_disk, -1.0)


def test_q_inside_q0_by_sampling(four_disk, rng):
    pts = rng.uniform(-1.5, 2.5, (200_000, 2))
    inq = pts[h_value(four_disk.q, pts) <= 0][:1000]
    assert len(inq) == 1000
    assert np.all(dc_objective(four_disk, inq) <= 0)
    assert np.all(qset_at(four_disk, 0.0).contains(inq, tol=1e-12))


@given(instances(), st.floats(0, 10), arrays(float, (16, 4), elements=coords))
def test_qset_is_sublevel_set(inst, r_sq, pts):
    x = pts[:, :inst.dim]
    C, r2 = qset_params(inst, r_sq)
    in_balls = np.all(np.sum((x[:, None, :] - C) ** 2, axis=-1) <= r2, axis=-1)
    f = dc_objective(inst, x) + inst.lam * r_sq
    clear = np.abs(f) > 1e-8 * max(1.0, inst.scale() ** 2)
    assert np.array_equal(in_balls[clear], (f <= 0)[clear])


# hull_contains

CROSS = [[1, 0], [-1, 0], [0, 1], [0, -1]]


def test_hull_inside_symmetric():
    assert hull_contains(CROSS, [0, 0]).inside


def test_hull_outside_with_normal():
    res = hull_contains(CROSS, [2, 0])
    assert not res.inside
    np.testing.assert_allclose(res.normal, [-1, 0], atol=1e-6)
    assert res.normal @ [2, 0] + res.offset < 0
    assert np.all(np.asarray(CROSS) @ res.normal + res.offset > 0)


def test_hull_single_point():
    assert hull_contains([[1, 1]], [1, 1]).inside


def test_hull_degenerate_repeated_centers():
    res = hull_contains([[1, 1], [1, 1]], [0, 0])
    assert not res.inside


@given(arrays(float, (5, 3), elements=coords), arrays(float, 3, elements=coords))
def test_hull_separation_is_valid(C, c0):
    res = hull_contains(C, c0)
    if res.inside:
        assert res.distance <= 1e-9 or res.normal is None
    else:
        assert res.normal @ c0 + res.offset < 0
        assert np.all(C @ res.normal + res.offset > 0)


# types

def test_invalid_radius():
    with pytest.raises(InvalidInstance):
        Ball([0, 0], 0.0)
    with pytest.raises(InvalidInstance):
        BallSet([[0, 0]], [np.inf])


def test_invalid_lambda():
    with pytest.raises(InvalidInstance):
        single([0, 0], 1, [0, 0], 1.0)


def test_from_balls_mixed_dims():
    with pytest.raises(DimensionMismatch):
        BallSet.from_balls([Ball([0, 0], 1), Ball([0, 0, 0], 1)])


def test_arrays_are_immutable(four_disk):
    with pytest.raises(ValueError):
        four_disk.q.centers[0, 0] = 3.0
