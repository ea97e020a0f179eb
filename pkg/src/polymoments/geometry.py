"""Simplicial polytopes, star triangulations, volumes and random instances.

Polytopes are given by vertices and an explicit list of simplicial facets; no
convex hull is ever computed. Facet orientation is checked against the vertex
centroid, which must lie strictly inside every facet half-space.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from polymoments.algebra import exact_det, exact_rank, to_rat
from polymoments.errors import DegeneracyError, DimensionError, GeometryError

logger = logging.getLogger("polymoments")

Point = tuple[Fraction, ...]


def _as_point(values: Sequence[Any]) -> Point:
    return tuple(to_rat(v) for v in values)


def _sub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Point:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def _dot(a: Sequence[Any], b: Sequence[Any]) -> Any:
    return sum((x * y for x, y in zip(a, b, strict=True)), Fraction(0))


def vertex_centroid(points: Sequence[Sequence[Fraction]]) -> Point:
    """Average of a list of points."""
    count = len(points)
    return tuple(sum(column, Fraction(0)) / count for column in zip(*points, strict=True))


def facet_orientation(
    facet_points: Sequence[Sequence[Fraction]], z: Sequence[Fraction]
) -> Fraction:
    """Signed volume form det[y2 - y1, ..., yd - y1, z - y1].

    Zero exactly when z lies on the affine hull of the facet points.
    """
    base = facet_points[0]
    rows = [_sub(y, base) for y in facet_points[1:]]
    rows.append(_sub(z, base))
    return exact_det(rows)


def simplex_volume(vertex_rows: Sequence[Sequence[Any]]) -> Fraction:
    """Volume |det(x2 - x1, ..., x_{d+1} - x1)| / d! of a simplex.

    Degenerate simplices have volume 0.

    Raises:
        DimensionError: If there are not d+1 rows of length d.
    """
    rows = [_as_point(row) for row in vertex_rows]
    if not rows:
        raise DimensionError("a simplex needs at least one vertex")
    d = len(rows[0])
    if len(rows) != d + 1 or any(len(row) != d for row in rows):
        raise DimensionError(f"a simplex in R^{d} needs {d + 1} vertices, got {len(rows)}")
    det = exact_det([_sub(row, rows[0]) for row in rows[1:]])
    return abs(det) / math.factorial(d)


@dataclass(frozen=True)
class AffineMap:
    """The map x -> A x + b with invertible A."""

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        d = len(self.A)
        if any(len(row) != d for row in self.A) or len(self.b) != d:
            raise DimensionError(f"affine map needs a {d}x{d} matrix and a length-{d} shift")
        if exact_det(self.A) == 0:
            raise GeometryError("affine map matrix is singular")

    @classmethod
    def from_rows(cls, A: Sequence[Sequence[Any]], b: Sequence[Any] | None = None) -> "AffineMap":
        rows = tuple(_as_point(row) for row in A)
        shift = _as_point(b) if b is not None else (Fraction(0),) * len(rows)
        return cls(rows, shift)

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls.from_rows([[int(i == j) for j in range(d)] for i in range(d)])

    @property
    def dim(self) -> int:
        return len(self.b)

    @property
    def det(self) -> Fraction:
        return exact_det(self.A)

    def apply(self, point: Sequence[Any]) -> Point:
        x = _as_point(point)
        return tuple(_dot(row, x) + shift for row, shift in zip(self.A, self.b, strict=True))


@dataclass(frozen=True)
class Polytope:
    """A full-dimensional simplicial polytope.

    Attributes:
        vertices: n points in Q^d
        facets: 0-based vertex index tuples, each with d distinct entries
    """

    vertices: tuple[Point, ...]
    facets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        self._validate()

    @classmethod
    def from_rows(
        cls,
        vertices: Sequence[Sequence[Any]],
        facets: Sequence[Sequence[int]],
        one_based: bool = False,
    ) -> "Polytope":
        """Build a polytope from raw rows; converts 1-based facet indices when asked."""
        shift = 1 if one_based else 0
        return cls(
            tuple(_as_point(v) for v in vertices),
            tuple(tuple(int(i) - shift for i in facet) for facet in facets),
        )

    @classmethod
    def simplex(cls, vertices: Sequence[Sequence[Any]]) -> "Polytope":
        """A simplex: every d-subset of its d+1 vertices is a facet."""
        n = len(vertices)
        return cls.from_rows(vertices, list(itertools.combinations(range(n), n - 1)))

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[Any]]) -> "Polytope":
        """A convex polygon with cyclically labeled vertices."""
        n = len(vertices)
        return cls.from_rows(vertices, [(k, (k + 1) % n) for k in range(n)])

    @classmethod
    def segment(cls, a: Any, b: Any) -> "Polytope":
        """The segment [a, b] in R^1."""
        return cls.from_rows([[a], [b]], [(0,), (1,)])

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def d(self) -> int:
        return len(self.vertices[0])

    @property
    def centroid(self) -> Point:
        return vertex_centroid(self.vertices)

    def _validate(self) -> None:
        if not self.vertices:
            raise GeometryError("polytope has no vertices")
        d, n = self.d, self.n
        if any(len(v) != d for v in self.vertices):
            raise DimensionError("vertices have inconsistent dimensions")
        if n < d + 1:
            raise GeometryError(f"a polytope in R^{d} needs at least {d + 1} vertices, got {n}")
        if not self.facets:
            raise GeometryError("facet list is empty")
        for facet in self.facets:
            if len(facet) != d or len(set(facet)) != d:
                raise GeometryError(f"facet {facet} must have {d} distinct vertex indices")
            if any(k < 0 or k >= n for k in facet):
                raise GeometryError(f"facet {facet} refers to a vertex outside 0..{n - 1}")
        base = self.vertices[0]
        if exact_rank([_sub(v, base) for v in self.vertices[1:]]) != d:
            raise DegeneracyError("vertices do not span the ambient space")
        centroid = self.centroid
        for facet in self.facets:
            points = [self.vertices[k] for k in facet]
            side = facet_orientation(points, centroid)
            if side == 0:
                raise GeometryError(f"facet {facet} passes through the vertex centroid")
            for k, vertex in enumerate(self.vertices):
                if k not in facet and facet_orientation(points, vertex) * side < 0:
                    raise GeometryError(
                        f"vertex {k} lies outside the half-space of facet {facet}; "
                        "input is not convex or is mislabeled"
                    )

    def halfspaces(self) -> list[tuple[Point, Fraction]]:
        """Inequalities (a, c) with a . x <= c for every facet, exact."""
        centroid = self.centroid
        result = []
        for facet in self.facets:
            points = [self.vertices[k] for k in facet]
            base = points[0]
            # The orientation form is affine in z; its gradient is the facet normal.
            normal = []
            for axis in range(self.d):
                shifted = tuple(x + (1 if i == axis else 0) for i, x in enumerate(base))
                normal.append(facet_orientation(points, shifted))
            if facet_orientation(points, centroid) > 0:
                normal = [-a for a in normal]
            result.append((tuple(normal), _dot(normal, base)))
        return result

    def strictly_contains(self, point: Sequence[Any]) -> bool:
        """True when the point lies in the interior."""
        x = _as_point(point)
        return all(_dot(a, x) < c for a, c in self.halfspaces())

    def contains(self, point: Sequence[float], tol: float = 1e-9) -> bool:
        """Floating membership test used for sampled points."""
        return all(
            float(_dot([float(v) for v in a], point)) <= float(c) + tol
            for a, c in self.halfspaces()
        )

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "vertices": [[[v.numerator, v.denominator] for v in row] for row in self.vertices],
            "facets": [[k + 1 for k in facet] for facet in self.facets],
        }


@dataclass(frozen=True)
class Triangulation:
    """Simplices over a point list that extends the polytope vertices.

    ``apex_index`` is the position of an auxiliary cone point appended after the
    original vertices, or None when every point is a vertex.
    """

    points: tuple[Point, ...]
    simplices: tuple[tuple[int, ...], ...]
    volumes: tuple[Fraction, ...]
    apex_index: int | None = None

    @property
    def total_volume(self) -> Fraction:
        return sum(self.volumes, Fraction(0))

    def simplex_rows(self, k: int) -> list[Point]:
        return [self.points[i] for i in self.simplices[k]]


def star_triangulation(p: Polytope, apex: Sequence[Any] | None = None) -> Triangulation:
    """Cone from an interior apex over every facet.

    The apex defaults to the vertex centroid and is appended as point n.

    Raises:
        GeometryError: If the apex is not in the interior.
        DegeneracyError: If a cone has zero volume.
    """
    point = p.centroid if apex is None else _as_point(apex)
    if len(point) != p.d:
        raise DimensionError(f"apex has {len(point)} coordinates, polytope lives in R^{p.d}")
    if not p.strictly_contains(point):
        raise GeometryError(f"apex {[str(x) for x in point]} is not in the interior")
    points = p.vertices + (point,)
    apex_index = p.n
    simplices = []
    volumes = []
    for facet in p.facets:
        simplex = tuple(facet) + (apex_index,)
        volume = simplex_volume([points[k] for k in simplex])
        if volume == 0:
            raise DegeneracyError(f"cone over facet {facet} has zero volume")
        simplices.append(simplex)
        volumes.append(volume)
    logger.debug(f"Star triangulation with {len(simplices)} simplices")
    return Triangulation(points, tuple(simplices), tuple(volumes), apex_index)


def simplex_triangulation(p: Polytope) -> Triangulation:
    """The one-simplex triangulation of a simplex."""
    if p.n != p.d + 1:
        raise GeometryError(f"polytope with {p.n} vertices in R^{p.d} is not a simplex")
    simplex = tuple(range(p.n))
    return Triangulation(p.vertices, (simplex,), (simplex_volume(p.vertices),))


def polytope_volume(p: Polytope, t: Triangulation) -> Fraction:
    """Volume of p as the sum of the simplex volumes of t."""
    if t.points[: p.n] != p.vertices:
        raise GeometryError("triangulation does not belong to this polytope")
    return t.total_volume


def shoelace_area(vertices: Sequence[Sequence[Any]]) -> Fraction:
    """Area of a polygon with cyclically ordered vertices."""
    pts = [_as_point(v) for v in vertices]
    twice = sum(
        (a[0] * b[1] - a[1] * b[0] for a, b in zip(pts, pts[1:] + pts[:1], strict=True)),
        Fraction(0),
    )
    return abs(twice) / 2


def quad_centroid_numerators(vertices: Sequence[Sequence[Any]]) -> tuple[Fraction, Fraction]:
    """Closed-form first-moment numerators (M10, M01) of a quadrilateral.

    The centroid is (M10, M01) / (6 vol) for counterclockwise labelings.
    """
    (x11, x12), (x21, x22), (x31, x32), (x41, x42) = [_as_point(v) for v in vertices]
    M10 = (
        (x41 - x21) * (x41 + x11 + x21) * x12
        + (x11 - x31) * (x11 + x21 + x31) * x22
        + (x21 - x41) * (x21 + x31 + x41) * x32
        + (x31 - x11) * (x31 + x41 + x11) * x42
    )
    M01 = (
        (x22 - x42) * (x42 + x12 + x22) * x11
        + (x32 - x12) * (x12 + x22 + x32) * x21
        + (x42 - x22) * (x22 + x32 + x42) * x31
        + (x12 - x32) * (x32 + x42 + x12) * x41
    )
    return M10, M01


def _cross(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return a[0] * b[1] - a[1] * b[0]


def _turns(pts: Sequence[Point]) -> list[Fraction]:
    n = len(pts)
    return [
        _cross(_sub(pts[(k + 1) % n], pts[k]), _sub(pts[(k + 2) % n], pts[(k + 1) % n]))
        for k in range(n)
    ]


def _strictly_convex(pts: Sequence[Point]) -> bool:
    return all(turn > 0 for turn in _turns(pts))


def check_convex_cyclic(vertices: Sequence[Sequence[Any]]) -> int:
    """Orientation (+1 or -1) of a weakly convex cyclic polygon labeling.

    Raises:
        GeometryError: If consecutive turns change sign or all vanish.
    """
    turns = _turns([_as_point(v) for v in vertices])
    if all(turn >= 0 for turn in turns) and any(turns):
        return 1
    if all(turn <= 0 for turn in turns) and any(turns):
        return -1
    raise GeometryError("vertices are not in convex cyclic order")


def quad_diagonal_point(q: Polytope | Sequence[Sequence[Any]]) -> Point:
    """Intersection of the diagonals x1x3 and x2x4 of a quadrilateral.

    Raises:
        GeometryError: If the input is not a convex cyclic quadrilateral.
        DegeneracyError: If the diagonals are parallel.
    """
    vertices = q.vertices if isinstance(q, Polytope) else [_as_point(v) for v in q]
    if len(vertices) != 4 or any(len(v) != 2 for v in vertices):
        raise DimensionError("diagonal point needs four vertices in the plane")
    check_convex_cyclic(vertices)
    x1, x2, x3, x4 = vertices
    d1, d2 = _sub(x3, x1), _sub(x4, x2)
    denom = _cross(d1, d2)
    if denom == 0:
        raise DegeneracyError("quadrilateral diagonals are parallel")
    s = _cross(_sub(x2, x1), d2) / denom
    return tuple(a + s * b for a, b in zip(x1, d1, strict=True))


def apply_affine(p: Polytope, g: AffineMap) -> Polytope:
    """Image of a polytope under an invertible affine map."""
    if g.dim != p.d:
        raise DimensionError(f"map acts on R^{g.dim}, polytope lives in R^{p.d}")
    return Polytope(tuple(g.apply(v) for v in p.vertices), p.facets)


def cross_polytope(d: int) -> Polytope:
    """Convex hull of +-e_i; vertex 2i is +e_i and vertex 2i+1 is -e_i."""
    vertices = []
    for axis in range(d):
        for sign in (1, -1):
            vertices.append([sign if k == axis else 0 for k in range(d)])
    facets = [
        tuple(2 * axis + choice for axis, choice in enumerate(choices))
        for choices in itertools.product((0, 1), repeat=d)
    ]
    return Polytope.from_rows(vertices, facets)


def unit_cube(d: int) -> Polytope:
    """The cube [0, 1]^d with each square facet split into Kuhn simplices.

    Vertex k has coordinates given by the binary digits of k.
    """
    vertices = [[(k >> axis) & 1 for axis in range(d)] for k in range(2**d)]
    facets = []
    for axis in range(d):
        for value in (0, 1):
            others = [a for a in range(d) if a != axis]
            for order in itertools.permutations(others):
                corner = value << axis
                facet = [corner]
                for a in order:
                    corner |= 1 << a
                    facet.append(corner)
                facets.append(tuple(facet))
    return Polytope.from_rows(vertices, facets)


# ---------------------------------------------------------------------------
# Random rational instances
# ---------------------------------------------------------------------------


def random_rational(
    rng: np.random.Generator, bound: int = 10, denominator_bound: int = 7
) -> Fraction:
    """Rational in [-bound, bound] with denominator at most ``denominator_bound``."""
    denominator = int(rng.integers(1, denominator_bound + 1))
    numerator = int(rng.integers(-bound * denominator, bound * denominator + 1))
    return Fraction(numerator, denominator)


def random_point(
    rng: np.random.Generator, d: int, bound: int = 10, denominator_bound: int = 7
) -> Point:
    return tuple(random_rational(rng, bound, denominator_bound) for _ in range(d))


def random_simplex(
    rng: np.random.Generator, d: int, bound: int = 10, denominator_bound: int = 7
) -> Polytope:
    """Random full-dimensional rational simplex."""
    while True:
        rows = [random_point(rng, d, bound, denominator_bound) for _ in range(d + 1)]
        if simplex_volume(rows) != 0:
            return Polytope.simplex(rows)


def random_convex_polygon(
    rng: np.random.Generator, n: int, bound: int = 10, denominator_bound: int = 7
) -> Polytope:
    """Random rational convex n-gon in counterclockwise order.

    Vertices sit on jittered rational points of a circle, parametrized by
    ((1 - s^2)/(1 + s^2), 2s/(1 + s^2)), then scaled and translated.
    """
    if n < 3:
        raise DimensionError(f"a polygon needs at least 3 vertices, got {n}")
    for attempt in range(1000):
        params = {random_rational(rng, 3, denominator_bound) for _ in range(n)}
        if len(params) < n:
            continue
        points = []
        for s in sorted(params):
            radius = 1 + Fraction(int(rng.integers(0, 4)), 4 * denominator_bound)
            points.append(
                (radius * (1 - s * s) / (1 + s * s), radius * 2 * s / (1 + s * s))
            )
        if not _strictly_convex(points):
            continue
        scale = Fraction(
            int(rng.integers(1, bound + 1)), int(rng.integers(1, denominator_bound + 1))
        )
        shift = random_point(rng, 2, bound, denominator_bound)
        vertices = [tuple(scale * x + c for x, c in zip(v, shift, strict=True)) for v in points]
        logger.debug(f"Random convex {n}-gon accepted after {attempt + 1} attempts")
        return Polytope.polygon(vertices)
    raise DegeneracyError(f"could not draw a strictly convex {n}-gon")


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_uniform(p: Polytope, t: Triangulation, count: int, seed: int) -> np.ndarray:
    """Draw points uniformly from the polytope, deterministically in the seed.

    A simplex is chosen with probability proportional to its volume and a point
    inside it is drawn with Dirichlet(1, ..., 1) barycentric weights obtained from
    normalized exponential spacings.

    Returns:
        Array of shape (count, d)
    """
    if count < 1:
        raise DimensionError(f"sample count must be positive, got {count}")
    polytope_volume(p, t)
    rng = np.random.default_rng(seed)
    total = t.total_volume
    probabilities = np.array([float(v / total) for v in t.volumes])
    probabilities /= probabilities.sum()
    corners = np.array(
        [[[float(x) for x in t.points[k]] for k in simplex] for simplex in t.simplices]
    )
    choice = rng.choice(len(t.simplices), size=count, p=probabilities)
    weights = rng.exponential(size=(count, p.d + 1))
    weights /= weights.sum(axis=1, keepdims=True)
    return np.einsum("nk,nkd->nd", weights, corners[choice])
