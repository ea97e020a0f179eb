"""Tests for moments, generating functions and adjoints of polytopes."""

from fractions import Fraction

import numpy as np
import pytest

from polymoments.algebra import TruncSeries, multi_indices
from polymoments.errors import (
    DimensionError,
    MissingDataError,
    NormalizationError,
)
from polymoments.geometry import (
    AffineMap,
    Polytope,
    apply_affine,
    cross_polytope,
    quad_diagonal_point,
    random_convex_polygon,
    random_point,
    random_simplex,
    simplex_triangulation,
    star_triangulation,
)
from polymoments.moments import (
    MomentVector,
    adjoint_from_terms,
    adjoint_poly,
    canonical_spline_moments,
    evaluate_adjoint,
    linear_density_moments,
    mgf_to_moments,
    monte_carlo_moments,
    monte_carlo_standard_errors,
    nonface_vanishing_check,
    nonfaces,
    polytope_mgf,
    polytope_moments,
    project_moments,
    quad_mgf,
    segment_moments,
    simplex_moment_direct,
    simplex_moments,
    transform_moments,
    wachspress_coords,
)


def moments_of(p, r, apex=None):
    return polytope_moments(p, star_triangulation(p, apex), r)


def test_unit_square_moments(unit_square):
    """Test exact moments of [0, 1]^2."""
    m = moments_of(unit_square, 3)
    assert m[(0, 0)] == 1
    assert m[(1, 0)] == Fraction(1, 2)
    assert m[(2, 0)] == Fraction(1, 3)
    assert m[(1, 1)] == Fraction(1, 4)
    assert m[(2, 1)] == Fraction(1, 6)
    assert m[(0, 3)] == Fraction(1, 4)


def test_standard_triangle_moments(standard_triangle):
    """Test moments of the triangle with vertices 0, e1, e2."""
    m = simplex_moments(standard_triangle.vertices, 2)
    assert m[(1, 0)] == Fraction(1, 3)
    assert m[(2, 0)] == Fraction(1, 6)
    assert m[(1, 1)] == Fraction(1, 12)


@pytest.mark.parametrize("d", [2, 3])
def test_direct_formula_matches_generating_function(d):
    """Test the closed-form simplex moments against the MGF on random simplices."""
    for trial in range(20):
        rng = np.random.default_rng((d, trial))
        vertices = random_simplex(rng, d, bound=5, denominator_bound=4).vertices
        m = simplex_moments(vertices, 5 if d == 2 else 4)
        for index in multi_indices(d, m.r):
            assert simplex_moment_direct(index, vertices) == m[index]


@pytest.mark.slow
def test_monte_carlo_agrees_within_standard_errors(quadrilateral):
    """Test empirical moments against exact ones."""
    t = star_triangulation(quadrilateral)
    exact = polytope_moments(quadrilateral, t, 3)
    estimate = monte_carlo_moments(quadrilateral, t, 3, 1_000_000, seed=5)
    errors = monte_carlo_standard_errors(quadrilateral, t, 3, 1_000_000, seed=5)
    for index in multi_indices(2, 3)[1:]:
        assert abs(estimate[index] - float(exact[index])) <= 3 * errors[index]


def test_standard_errors_need_two_samples(unit_square):
    """Test the sample count check."""
    with pytest.raises(DimensionError):
        monte_carlo_standard_errors(unit_square, star_triangulation(unit_square), 2, 1, seed=0)


def test_triangulation_independence_on_pentagons():
    """Test that two star triangulations give identical moments and adjoints."""
    for trial in range(10):
        p = random_convex_polygon(np.random.default_rng((5, trial)), 5)
        centroid = p.centroid
        apex = tuple((c + v) / 2 for c, v in zip(centroid, p.vertices[0], strict=True))
        first = star_triangulation(p)
        second = star_triangulation(p, apex)
        assert polytope_moments(p, first, 4) == polytope_moments(p, second, 4)
        assert adjoint_poly(p, first) == adjoint_poly(p, second)


def test_parallel_moments_match_serial(hexagon):
    """Test that worker threads do not change the result."""
    t = star_triangulation(hexagon)
    assert polytope_moments(hexagon, t, 4, workers=3) == polytope_moments(hexagon, t, 4)


def test_simplex_adjoint_is_one(standard_tetrahedron):
    """Test that simplices have trivial adjoint."""
    assert adjoint_poly(standard_tetrahedron, simplex_triangulation(standard_tetrahedron)) == 1
    assert adjoint_poly(standard_tetrahedron, star_triangulation(standard_tetrahedron)) == 1


def test_octahedron_adjoint_is_one():
    """Test the adjoint of the cross-polytope with vertices +-e_i."""
    octahedron = cross_polytope(3)
    assert adjoint_poly(octahedron, star_triangulation(octahedron)) == 1


def test_quadrilateral_adjoint_is_diagonal_form():
    """Test Ad = 1 - delta . t on random quadrilaterals."""
    for trial in range(10):
        q = random_convex_polygon(np.random.default_rng((4, trial)), 4)
        delta = quad_diagonal_point(q)
        expected = adjoint_from_terms(2, {(0, 0): 1, (1, 0): -delta[0], (0, 1): -delta[1]})
        ad = adjoint_poly(q, star_triangulation(q))
        assert ad == expected
        assert evaluate_adjoint(ad, [Fraction(1, 2), 1]) == 1 - delta[0] / 2 - delta[1]


def test_quad_mgf_matches_triangulation(quadrilateral):
    """Test the diagonal-point generating function."""
    assert quad_mgf(quadrilateral, 4) == polytope_mgf(
        quadrilateral, star_triangulation(quadrilateral), 4
    )


def test_nonfaces_of_quadrilateral_are_diagonals(quadrilateral):
    """Test non-face enumeration; the diagonal through the origin has no finite point."""
    assert nonfaces(quadrilateral) == [(0, 2), (1, 3)]
    ad = adjoint_poly(quadrilateral, star_triangulation(quadrilateral))
    results = nonface_vanishing_check(quadrilateral, ad)
    assert [item.status for item in results] == ["vacuous", "vanishes"]


def test_nonface_vanishing_on_hexagon(hexagon):
    """Test that the adjoint vanishes on every non-edge of a hexagon."""
    ad = adjoint_poly(hexagon, star_triangulation(hexagon))
    results = nonface_vanishing_check(hexagon, ad)
    assert len(results) == 9
    assert all(item.status in ("vanishes", "vacuous") for item in results)
    assert any(item.status == "vanishes" for item in results)


def test_canonical_spline_of_simplex_vertices(standard_triangle):
    """Test that d+1 points give the simplex moments."""
    vertices = standard_triangle.vertices
    assert canonical_spline_moments(vertices, 3) == simplex_moments(vertices, 3)
    with pytest.raises(DimensionError):
        canonical_spline_moments(vertices[:2], 3)


def test_segment_moments_match_polytope_path():
    """Test the closed form on [2, 3]."""
    segment = Polytope.segment(2, 3)
    m = moments_of(segment, 4)
    assert [m[(i,)] for i in range(5)] == segment_moments(2, 3, 4)
    assert segment_moments(2, 3, 2) == [1, Fraction(5, 2), Fraction(19, 3)]
    assert segment_moments(3, 3, 3) == [1, 3, 9, 27]


def test_projection_of_square_onto_diagonal(unit_square):
    """Test moments of x + y for uniform (x, y) on the square."""
    m = moments_of(unit_square, 3)
    assert project_moments(m, [1, 1])[:3] == [1, 1, Fraction(7, 6)]


def test_transform_commutes_with_moments(quadrilateral):
    """Test moments of g(P) against pushed-forward moments of P."""
    for trial in range(5):
        rng = np.random.default_rng((9, trial))
        rows = [random_point(rng, 2, 3, 3) for _ in range(2)]
        if rows[0][0] * rows[1][1] == rows[0][1] * rows[1][0]:
            continue
        g = AffineMap.from_rows(rows, random_point(rng, 2, 3, 3))
        image = apply_affine(quadrilateral, g)
        assert transform_moments(moments_of(quadrilateral, 3), g) == moments_of(image, 3)


@pytest.mark.parametrize("scale", [Fraction(2), Fraction(1, 3)])
def test_moments_are_homogeneous_under_scaling(hexagon, scale):
    """Test m_I(lambda X) = lambda^|I| m_I(X)."""
    scaled = Polytope.polygon([tuple(scale * x for x in v) for v in hexagon.vertices])
    m, ms = moments_of(hexagon, 4), moments_of(scaled, 4)
    for index in multi_indices(2, 4):
        assert ms[index] == scale ** sum(index) * m[index]


def test_linear_density_moments(standard_triangle):
    """Test M_I = alpha m_{I+e1} + beta m_{I+e2} + gamma m_I."""
    m = simplex_moments(standard_triangle.vertices, 3)
    density = linear_density_moments(m, [2, -1], 3)
    assert density.r == 2
    assert not density.normalized
    assert density[(0, 0)] == 2 * m[(1, 0)] - m[(0, 1)] + 3
    assert density[(1, 1)] == 2 * m[(2, 1)] - m[(1, 2)] + 3 * m[(1, 1)]
    with pytest.raises(DimensionError):
        linear_density_moments(m, [1], 0)


def test_wachspress_coordinates_partition_unity():
    """Test that the coordinates sum to one and reduce to volume shares at 0."""
    square = Polytope.polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    coords = wachspress_coords(square, [Fraction(1, 3), Fraction(-1, 5)])
    assert sum(coords) == 1
    assert wachspress_coords(square, [0, 0]) == [Fraction(1, 4)] * 4


def test_moment_vector_access_and_normalization():
    """Test indexing, missing entries and normalization."""
    m = MomentVector.from_terms(1, 2, {(0,): 2, (1,): 3}, normalized=False)
    assert m[(1,)] == 3
    with pytest.raises(MissingDataError):
        m[(2,)]
    with pytest.raises(MissingDataError):
        m[(5,)]
    with pytest.raises(MissingDataError):
        m.require_complete()
    assert m.truncate(1).normalize()[(1,)] == Fraction(3, 2)
    with pytest.raises(NormalizationError):
        MomentVector.from_terms(1, 1, {(0,): 0, (1,): 1}).normalize()
    with pytest.raises(DimensionError):
        MomentVector.from_terms(2, 1, {(3, 0): 1})


def test_mgf_requires_unit_constant_term():
    """Test that unnormalized generating functions are rejected."""
    with pytest.raises(NormalizationError):
        mgf_to_moments(TruncSeries.constant(2, 2, 3))
