"""Tests for polytopes, triangulations and random instances."""

import math
from fractions import Fraction

import numpy as np
import pytest

from polymoments.errors import DegeneracyError, DimensionError, GeometryError
from polymoments.geometry import (
    AffineMap,
    Polytope,
    apply_affine,
    check_convex_cyclic,
    cross_polytope,
    polytope_volume,
    quad_centroid_numerators,
    quad_diagonal_point,
    random_convex_polygon,
    random_simplex,
    sample_uniform,
    shoelace_area,
    simplex_triangulation,
    simplex_volume,
    star_triangulation,
    unit_cube,
)


def test_polygon_constructor_builds_cyclic_edges(unit_square):
    """Test the facet list of a polygon."""
    assert unit_square.n == 4
    assert unit_square.d == 2
    assert unit_square.facets == ((0, 1), (1, 2), (2, 3), (3, 0))
    assert unit_square.centroid == (Fraction(1, 2), Fraction(1, 2))


def test_mislabeled_polygon_raises_error():
    """Test that a self-crossing labeling is rejected."""
    with pytest.raises(GeometryError):
        Polytope.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_non_convex_polygon_raises_error():
    """Test that a reflex vertex is rejected."""
    with pytest.raises(GeometryError):
        Polytope.polygon([(0, 0), (4, 0), (1, 1), (0, 4)])


def test_collinear_vertices_raise_degeneracy_error():
    """Test that vertices must span the plane."""
    with pytest.raises(DegeneracyError):
        Polytope.simplex([(0, 0), (1, 1), (2, 2)])


def test_facet_indices_are_checked():
    """Test that facets must refer to existing vertices."""
    with pytest.raises(GeometryError):
        Polytope.from_rows([(0, 0), (1, 0), (0, 1)], [(1, 2), (2, 3), (3, 4)], one_based=True)
    with pytest.raises(GeometryError):
        Polytope.from_rows([(0, 0), (1, 0)], [(0, 1)])


def test_mixed_dimension_vertices_raise_error():
    """Test that all vertices need the same length."""
    with pytest.raises(DimensionError):
        Polytope.simplex([(0, 0), (1, 0), (0, 1, 2)])


def test_simplex_volume_of_standard_simplices():
    """Test |det| / d! volumes."""
    assert simplex_volume([(0, 0), (1, 0), (0, 1)]) == Fraction(1, 2)
    assert simplex_volume([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]) == Fraction(1, 6)
    assert simplex_volume([(0, 0), (1, 1), (2, 2)]) == 0


def test_star_triangulation_volumes_add_up(quadrilateral):
    """Test that cone volumes sum to the shoelace area."""
    t = star_triangulation(quadrilateral)
    assert len(t.simplices) == 4
    assert t.apex_index == 4
    assert polytope_volume(quadrilateral, t) == shoelace_area(quadrilateral.vertices)
    assert polytope_volume(quadrilateral, t) == Fraction(7, 2)


def test_star_triangulation_accepts_interior_apex(quadrilateral):
    """Test that any interior apex gives the same volume."""
    t = star_triangulation(quadrilateral, [1, Fraction(1, 2)])
    assert t.total_volume == Fraction(7, 2)


def test_apex_outside_raises_error(unit_square):
    """Test that the apex must be interior."""
    with pytest.raises(GeometryError):
        star_triangulation(unit_square, [2, 2])
    with pytest.raises(GeometryError):
        star_triangulation(unit_square, [1, 0])


def test_simplex_triangulation_requires_simplex(standard_triangle, unit_square):
    """Test the one-simplex triangulation."""
    assert simplex_triangulation(standard_triangle).total_volume == Fraction(1, 2)
    with pytest.raises(GeometryError):
        simplex_triangulation(unit_square)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_standard_polytope_volumes(d):
    """Test the cube and the cross-polytope."""
    cube = unit_cube(d)
    assert star_triangulation(cube).total_volume == 1
    octahedron = cross_polytope(d)
    assert star_triangulation(octahedron).total_volume == Fraction(2**d, math.factorial(d))


def test_affine_image_scales_volume(quadrilateral):
    """Test vol(g(P)) = |det A| vol(P)."""
    g = AffineMap.from_rows([[2, 1], [-1, 3]], [5, -2])
    image = apply_affine(quadrilateral, g)
    assert star_triangulation(image).total_volume == 7 * Fraction(7, 2)
    assert g.det == 7


def test_singular_affine_map_raises_error():
    """Test that affine maps must be invertible."""
    with pytest.raises(GeometryError):
        AffineMap.from_rows([[1, 2], [2, 4]])


def test_quad_centroid_numerators_on_unit_square(unit_square):
    """Test the closed-form centroid against the square's center."""
    M10, M01 = quad_centroid_numerators(unit_square.vertices)
    area = shoelace_area(unit_square.vertices)
    assert (M10 / (6 * area), M01 / (6 * area)) == (Fraction(1, 2), Fraction(1, 2))


def test_quad_diagonal_point(quadrilateral):
    """Test the intersection of the diagonals."""
    assert quad_diagonal_point(quadrilateral) == (Fraction(6, 7), Fraction(4, 7))


def test_check_convex_cyclic_orientation():
    """Test orientation detection and rejection of crossing labels."""
    assert check_convex_cyclic([(0, 0), (1, 0), (1, 1), (0, 1)]) == 1
    assert check_convex_cyclic([(0, 1), (1, 1), (1, 0), (0, 0)]) == -1
    with pytest.raises(GeometryError):
        check_convex_cyclic([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_random_instances_are_seeded_and_valid():
    """Test that generators are deterministic and produce valid polytopes."""
    first = random_convex_polygon(np.random.default_rng(3), 5)
    second = random_convex_polygon(np.random.default_rng(3), 5)
    assert first == second
    assert check_convex_cyclic(first.vertices) == 1
    simplex = random_simplex(np.random.default_rng(4), 3, bound=2, denominator_bound=1)
    assert simplex_volume(simplex.vertices) > 0
    assert all(abs(x) <= 2 for row in simplex.vertices for x in row)


def test_random_polygon_needs_three_vertices(rng):
    """Test the vertex count check."""
    with pytest.raises(DimensionError):
        random_convex_polygon(rng, 2)


def test_uniform_samples_stay_inside(hexagon):
    """Test shape, determinism and containment of uniform samples."""
    t = star_triangulation(hexagon)
    samples = sample_uniform(hexagon, t, 500, seed=11)
    assert samples.shape == (500, 2)
    assert np.array_equal(samples, sample_uniform(hexagon, t, 500, seed=11))
    assert all(hexagon.contains(point) for point in samples)
