import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjpair import (
    BoundViolationError,
    ConstantGamma,
    Coordinate,
    DimensionError,
    DistToAxis,
    DistToPoint,
    GradNormGamma,
    InclusionGamma,
    InvalidSpecError,
    Nodal,
    build_ball_mesh,
    build_cube_mesh,
    make_gamma,
    sample_w,
    unitarity_report,
)
from conjpair.fields import gradient_norms

POINT = (0.0, 0.0, -2.0)


def at(spec, x):
    return float(spec.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))[0])


# Values checked against the closed forms of the three ball examples:
# sqrt(x1^2 + x2^2 + (x3+2)^2), sqrt(x1^2 + (x3+2)^2) and x3 + 2.
def test_dist_to_point_at_origin():
    assert at(DistToPoint(POINT), (0, 0, 0)) == 2.0


def test_coordinate_with_offset():
    assert at(Coordinate(3, 2.0), (0.5, 0.5, 1.0)) == 3.0


def test_dist_to_axis_at_origin():
    assert at(DistToAxis(POINT, (0, 1, 0)), (0, 0, 0)) == 2.0


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-1, 1)] * 3))
def test_closed_forms_agree(x):
    x1, x2, x3 = x
    assert at(DistToPoint(POINT), x) == pytest.approx(math.sqrt(x1**2 + x2**2 + (x3 + 2) ** 2), rel=1e-14)
    assert at(DistToAxis(POINT, (0, 3, 0)), x) == pytest.approx(math.sqrt(x1**2 + (x3 + 2) ** 2), rel=1e-13)
    assert at(Coordinate(3, 2.0), x) == x3 + 2


def test_sample_is_exact_at_nodes(ball2):
    w = sample_w(DistToPoint(POINT), ball2)
    expected = np.sqrt(((ball2.vertices - np.array(POINT)) ** 2).sum(axis=1))
    np.testing.assert_array_equal(w, expected)


def test_nodal_returned_as_is(cube2):
    vals = np.arange(cube2.n_vertices, dtype=float)
    np.testing.assert_array_equal(sample_w(Nodal(vals), cube2), vals)


def test_nodal_wrong_length(cube2):
    with pytest.raises(DimensionError):
        sample_w(Nodal(np.zeros(3)), cube2)


@pytest.mark.parametrize("p", [(0, 0, 0), (0.5, 0.5, 0.5), (0, 0, -1.0), (0.6, 0.8, 0.0)])
def test_point_inside_closed_ball_rejected(ball2, p):
    with pytest.raises(InvalidSpecError):
        sample_w(DistToPoint(p), ball2)


@pytest.mark.parametrize("p", [(0.5, 0.5, 0.5), (1.0, 1.0, 1.0), (0, 0.3, 0.2)])
def test_point_inside_closed_cube_rejected(cube2, p):
    with pytest.raises(InvalidSpecError):
        sample_w(DistToPoint(p), cube2)


def test_axis_meeting_domain_rejected(ball2, cube2):
    with pytest.raises(InvalidSpecError):
        sample_w(DistToAxis((0, 0, -0.5), (0, 1, 0)), ball2)
    with pytest.raises(InvalidSpecError):
        sample_w(DistToAxis((0.5, 0.5, -3), (0, 0, 1)), cube2)
    sample_w(DistToAxis((0.5, 0.5, -2), (0, 1, 0)), cube2)  # passes below the cube


def test_bad_specs():
    with pytest.raises(InvalidSpecError):
        Coordinate(axis=4)
    with pytest.raises(InvalidSpecError):
        DistToAxis(direction=(0, 0, 0))


def test_unitarity_affine(cube4):
    assert unitarity_report(cube4, cube4.coordinate(3))[0] == 0.0
    assert unitarity_report(cube4, 2 * cube4.coordinate(3))[0] == pytest.approx(1.0, abs=1e-14)


def test_unitarity_decreases_on_ball():
    devs = [unitarity_report(m, sample_w(DistToPoint(POINT), m))[0] for m in map(build_ball_mesh, (2, 3, 4))]
    assert devs[0] > devs[1] > devs[2]


def test_unitarity_report_mean_below_max(ball2):
    mx, mean = unitarity_report(ball2, sample_w(DistToAxis(POINT, (0, 1, 0)), ball2))
    assert 0 < mean <= mx


def test_gamma_constant_and_gradnorm(cube2):
    assert np.all(make_gamma(ConstantGamma(1.0), cube2) == 1.0)
    g = make_gamma(GradNormGamma(2), cube2, 2 * cube2.coordinate(3))
    np.testing.assert_allclose(g, 4.0, atol=1e-12)
    g1 = make_gamma(GradNormGamma(1), cube2, 2 * cube2.coordinate(3))
    np.testing.assert_allclose(g1, 2.0, atol=1e-12)


def test_gamma_bounds(cube2):
    with pytest.raises(BoundViolationError):
        make_gamma(ConstantGamma(20.0), cube2)
    with pytest.raises(BoundViolationError):
        make_gamma(ConstantGamma(0.05), cube2)
    make_gamma(ConstantGamma(20.0), cube2, bound=0.04)
    with pytest.raises(InvalidSpecError):
        make_gamma(GradNormGamma(1), cube2)


def test_inclusion_phase_fraction():
    # oracle: volume of the ball of radius r inside the cube, compared with
    # the volume of tets whose centroid falls inside; the difference is at
    # most one layer of elements around the sphere
    n = 12
    mesh = build_cube_mesh(n)
    spec = InclusionGamma((0.5, 0.5, 0.5), 0.25, 2.0, 1.0)
    g = make_gamma(spec, mesh)
    inside_vol = mesh.volumes[g == 2.0].sum()
    exact = 4.0 / 3.0 * math.pi * 0.25**3
    shell = 4.0 * math.pi * 0.25**2 * mesh.h
    assert abs(inside_vol - exact) <= shell
    assert set(np.unique(g)) == {1.0, 2.0}


def test_gradient_norms_match_affine(cube2):
    np.testing.assert_allclose(gradient_norms(cube2, cube2.vertices @ np.array([3.0, 4.0, 0.0])), 5.0)
