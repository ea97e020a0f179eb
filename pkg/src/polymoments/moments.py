"""Forward problem: moments and generating functions of uniform polytope measures.

Moment vectors are stored probability-normalized (m_0 = 1) unless built from a
non-normalized measure such as a linear density. The normalized moment
generating function of a simplex with vertices x_1, ..., x_{d+1} is

    prod_k 1 / (1 - x_k . t) = sum_I (|I| + d)! / (I! d!) m_I t^I

and a simplicial polytope mixes these over any triangulation by volume.
"""

import itertools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, ClassVar

import numpy as np
from sympy.polys.rings import PolyElement

from polymoments.algebra import (
    MultiIndex,
    TruncSeries,
    compose_poly,
    evaluate_poly,
    exact_nullspace,
    index_factorial,
    index_rank,
    multi_indices,
    multi_indices_of_total,
    multinomial,
    poly_from_terms,
    poly_terms,
    polynomial_ring,
    series_mul,
    to_qq,
    to_rat,
)
from polymoments.errors import (
    DegeneracyError,
    DimensionError,
    GeometryError,
    MissingDataError,
    NormalizationError,
    PoleError,
)
from polymoments.geometry import (
    AffineMap,
    Polytope,
    Triangulation,
    polytope_volume,
    quad_diagonal_point,
    sample_uniform,
    star_triangulation,
)

logger = logging.getLogger("polymoments")

__all__ = ["AffineMap", "GradedValues", "MomentVector"]


def _coerce(value: Any) -> Any:
    if value is None or isinstance(value, (float, PolyElement)):
        return value
    return to_rat(value)


@dataclass(frozen=True)
class GradedValues:
    """Values indexed by multi-indices of total degree <= r, in rank order.

    Entries may be None when the value is unknown; reading such an entry raises
    MissingDataError.
    """

    d: int
    r: int
    values: tuple[Any, ...]

    _start: ClassVar[int] = 0
    _label: ClassVar[str] = "value"

    def __post_init__(self) -> None:
        expected = len(multi_indices(self.d, self.r)) - self._start
        if len(self.values) != expected:
            raise DimensionError(
                f"{self._label} vector with d={self.d}, r={self.r} needs {expected} entries, "
                f"got {len(self.values)}"
            )

    @classmethod
    def from_terms(
        cls, d: int, r: int, terms: Mapping[MultiIndex, Any], **extra: Any
    ) -> "GradedValues":
        """Build a vector from a sparse mapping; absent indices stay unknown."""
        rank = index_rank(d, r)
        values: list[Any] = [None] * (len(rank) - cls._start)
        for index, value in terms.items():
            index = tuple(index)
            if len(index) != d:
                raise DimensionError(f"index {index} does not have {d} entries")
            if index not in rank:
                raise DimensionError(f"index {index} exceeds order {r}")
            position = rank[index] - cls._start
            if position < 0:
                continue
            values[position] = _coerce(value)
        return cls(d, r, tuple(values), **extra)

    def indices(self) -> tuple[MultiIndex, ...]:
        return multi_indices(self.d, self.r)[self._start :]

    def get(self, index: Sequence[int], default: Any = None) -> Any:
        position = index_rank(self.d, self.r).get(tuple(index))
        if position is None or position < self._start:
            return default
        value = self.values[position - self._start]
        return default if value is None else value

    def __getitem__(self, index: Sequence[int]) -> Any:
        index = tuple(index)
        position = index_rank(self.d, self.r).get(index)
        if position is None:
            raise MissingDataError(f"{self._label} {index} is beyond order {self.r}")
        if position < self._start:
            return Fraction(0)
        value = self.values[position - self._start]
        if value is None:
            raise MissingDataError(f"{self._label} {index} is not available")
        return value

    def items(self) -> Iterable[tuple[MultiIndex, Any]]:
        for index, value in zip(self.indices(), self.values, strict=True):
            if value is not None:
                yield index, value

    def terms(self) -> dict[MultiIndex, Any]:
        return dict(self.items())

    @property
    def is_complete(self) -> bool:
        return all(value is not None for value in self.values)

    def require_complete(self, order: int | None = None) -> None:
        """Raise MissingDataError unless every value through ``order`` is known."""
        order = self.r if order is None else order
        if order > self.r:
            raise MissingDataError(f"need {self._label}s through order {order}, have {self.r}")
        for index in multi_indices(self.d, order)[self._start :]:
            self[index]


@dataclass(frozen=True)
class MomentVector(GradedValues):
    """Moments m_I for |I| <= r; ``normalized`` records whether m_0 = 1."""

    normalized: bool = True

    _label: ClassVar[str] = "moment"

    @property
    def m0(self) -> Any:
        return self[(0,) * self.d]

    def truncate(self, r: int) -> "MomentVector":
        if r > self.r:
            raise DimensionError(f"cannot raise order {self.r} to {r}")
        size = len(multi_indices(self.d, r))
        return MomentVector(self.d, r, self.values[:size], self.normalized)

    def normalize(self) -> "MomentVector":
        """Divide by m_0."""
        m0 = self.m0
        if not m0:
            raise NormalizationError("cannot normalize a moment vector with m_0 = 0")
        return MomentVector(
            self.d,
            self.r,
            tuple(None if v is None else v / m0 for v in self.values),
            True,
        )

    def scaled(self, factor: Any) -> "MomentVector":
        """Multiply every moment by a constant (a projective rescaling)."""
        factor = to_rat(factor)
        return MomentVector(
            self.d,
            self.r,
            tuple(None if v is None else v * factor for v in self.values),
            self.normalized and factor == 1,
        )

    def to_mgf(self, scheme_degree: int | None = None) -> TruncSeries:
        """Normalized generating function with weights (|I| + p)! / (I! p!)."""
        p = self.d if scheme_degree is None else scheme_degree
        self.require_complete()
        terms = {
            index: self[index] * mgf_weight(index, p) for index in multi_indices(self.d, self.r)
        }
        return TruncSeries.from_terms(self.d, self.r, terms)


def mgf_weight(index: Sequence[int], p: int) -> Fraction:
    """Generating-function weight (|I| + p)! / (I! p!)."""
    return Fraction(math.factorial(sum(index) + p), index_factorial(index) * math.factorial(p))


def _geometric_series(point: Sequence[Fraction], r: int) -> TruncSeries:
    # 1 / (1 - x . t) has coefficient multinomial(I) x^I at t^I.
    d = len(point)
    terms = {}
    for index in multi_indices(d, r):
        value = Fraction(multinomial(index))
        for x, e in zip(point, index, strict=True):
            value *= x**e
        terms[index] = value
    return TruncSeries.from_terms(d, r, terms)


def product_of_inverse_forms(points: Sequence[Sequence[Any]], r: int) -> TruncSeries:
    """prod_k 1 / (1 - x_k . t) truncated at order r."""
    if not points:
        raise DimensionError("need at least one point")
    rows = [tuple(to_rat(v) for v in row) for row in points]
    d = len(rows[0])
    result = TruncSeries.constant(d, r)
    for row in rows:
        if len(row) != d:
            raise DimensionError("points have inconsistent dimensions")
        result = series_mul(result, _geometric_series(row, r))
    return result


def simplex_mgf(vertex_rows: Sequence[Sequence[Any]], r: int) -> TruncSeries:
    """Normalized moment generating function of a simplex.

    Raises:
        DimensionError: If there are not d+1 vertices.
    """
    d = len(vertex_rows[0]) if vertex_rows else 0
    if len(vertex_rows) != d + 1:
        raise DimensionError(f"a simplex in R^{d} needs {d + 1} vertices, got {len(vertex_rows)}")
    return product_of_inverse_forms(vertex_rows, r)


def mgf_to_moments(s: TruncSeries, scheme_degree: int | None = None) -> MomentVector:
    """Read moments off a normalized generating function.

    m_I = coefficient(s, I) * I! * p! / (|I| + p)!, where p is d for polytopes
    and n - 1 for canonical splines.

    Raises:
        NormalizationError: If the constant term is not 1.
    """
    if s.constant_term != 1:
        raise NormalizationError("generating function must have constant term 1")
    p = s.nvars if scheme_degree is None else scheme_degree
    values = tuple(
        coeff / mgf_weight(index, p) if not isinstance(coeff, PolyElement) else coeff
        for index, coeff in zip(multi_indices(s.nvars, s.order), s.coeffs, strict=True)
    )
    return MomentVector(s.nvars, s.order, values, True)


def simplex_moments(vertex_rows: Sequence[Sequence[Any]], r: int) -> MomentVector:
    """Moments of the uniform distribution on a simplex."""
    return mgf_to_moments(simplex_mgf(vertex_rows, r))


def simplex_moment_direct(index: Sequence[int], vertex_rows: Sequence[Sequence[Any]]) -> Fraction:
    """Closed-form simplex moment as a sum over integer matrices with column sums I.

    Each column of the (d+1) x d matrix u distributes one exponent i_l over the
    vertices; every choice contributes prod_k multinomial(u_k) x_k^{u_k}.
    """
    rows = [tuple(to_rat(v) for v in row) for row in vertex_rows]
    d = len(index)
    if len(rows) != d + 1 or any(len(row) != d for row in rows):
        raise DimensionError(f"a simplex in R^{d} needs {d + 1} vertices of length {d}")
    columns = [multi_indices_of_total(d + 1, i) for i in index]
    total = Fraction(0)
    for choice in itertools.product(*columns):
        term = Fraction(1)
        for k, row in enumerate(rows):
            u_k = [column[k] for column in choice]
            term *= multinomial(u_k)
            for x, e in zip(row, u_k, strict=True):
                if e:
                    term *= x**e
        total += term
    return total / mgf_weight(index, d)


def segment_moments(a: Any, b: Any, r: int) -> list[Fraction]:
    """Moments m_0..m_r of the uniform distribution on [a, b].

    m_i = (b^{i+1} - a^{i+1}) / ((i + 1)(b - a)); a point mass when a = b.
    """
    a, b = to_rat(a), to_rat(b)
    if a == b:
        return [a**i for i in range(r + 1)]
    return [(b ** (i + 1) - a ** (i + 1)) / ((i + 1) * (b - a)) for i in range(r + 1)]


def _weighted_simplices(p: Polytope, t: Triangulation) -> list[tuple[Fraction, list]]:
    volume = polytope_volume(p, t)
    if volume == 0:
        raise DegeneracyError("triangulation has zero total volume")
    return [(v / volume, t.simplex_rows(k)) for k, v in enumerate(t.volumes)]


def polytope_mgf(p: Polytope, t: Triangulation, r: int) -> TruncSeries:
    """Normalized generating function: volume-weighted mixture of simplex MGFs."""
    result = None
    for weight, rows in _weighted_simplices(p, t):
        term = simplex_mgf(rows, r).scale(weight)
        result = term if result is None else result + term
    return result


def polytope_moments(p: Polytope, t: Triangulation, r: int, workers: int = 1) -> MomentVector:
    """Moments of the uniform distribution on p through order r.

    The per-simplex moment vectors are independent; with ``workers > 1`` they
    are computed on a thread pool and summed in triangulation order.

    Raises:
        DegeneracyError: If the triangulation has zero volume.
    """
    weighted = _weighted_simplices(p, t)
    rows = [simplex for _, simplex in weighted]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda simplex: simplex_moments(simplex, r), rows))
    else:
        parts = [simplex_moments(simplex, r) for simplex in rows]
    values = [Fraction(0)] * len(multi_indices(p.d, r))
    for (weight, _), part in zip(weighted, parts, strict=True):
        for position, value in enumerate(part.values):
            values[position] += weight * value
    logger.debug(f"Moments of {p.n}-vertex polytope through order {r} from {len(rows)} simplices")
    return MomentVector(p.d, r, tuple(values), True)


def _linear_form(R: Any, point: Sequence[Fraction]) -> PolyElement:
    form = R.one
    for x, t in zip(point, R.gens, strict=True):
        form -= t * to_qq(x)
    return form


def t_ring(d: int) -> Any:
    """Ring of the generating-function variables t1..td."""
    return polynomial_ring(tuple(f"t{k + 1}" for k in range(d)))


def adjoint_poly(p: Polytope, t: Triangulation) -> PolyElement:
    """Adjoint polynomial: numerator of the MGF over prod_k (1 - x_k . t).

    N(t) = sum_s (vol s / vol P) prod_{k not in s} (1 - x_k . t) runs over all
    points of the triangulation; an auxiliary apex c contributes one extra
    factor (1 - c . t), which is divided out exactly.

    Raises:
        DegeneracyError: If the division leaves a remainder or the degree bound fails.
    """
    R = t_ring(p.d)
    forms = [_linear_form(R, point) for point in t.points]
    numerator = R.zero
    for weight, simplex in zip(
        (w for w, _ in _weighted_simplices(p, t)), t.simplices, strict=True
    ):
        term = R(to_qq(weight))
        for k, form in enumerate(forms):
            if k not in simplex:
                term *= form
        numerator += term
    if t.apex_index is not None:
        quotient, remainder = numerator.div(forms[t.apex_index])
        if remainder:
            raise DegeneracyError("apex factor does not divide the adjoint numerator")
        numerator = quotient
    bound = p.n - p.d - 1
    degree = max((sum(monom) for monom in numerator.keys()), default=0)
    if degree > bound:
        raise DegeneracyError(f"adjoint has degree {degree}, expected at most {bound}")
    return numerator


def nonfaces(p: Polytope) -> list[tuple[int, ...]]:
    """Minimal vertex subsets of size <= d that lie in no facet."""
    facet_sets = [frozenset(facet) for facet in p.facets]
    found: list[tuple[int, ...]] = []
    for size in range(1, p.d + 1):
        for subset in itertools.combinations(range(p.n), size):
            members = frozenset(subset)
            if any(members <= facet for facet in facet_sets):
                continue
            if any(set(smaller) <= members for smaller in found):
                continue
            found.append(subset)
    return found


@dataclass(frozen=True)
class NonfaceResult:
    """Restriction of the adjoint to the subspace of one non-face."""

    nonface: tuple[int, ...]
    status: str
    dimension: int | None = None


def nonface_subspace(
    p: Polytope, nonface: Sequence[int]
) -> tuple[tuple[Fraction, ...], list[tuple[Fraction, ...]]] | None:
    """Point and direction basis of {t : x_k . t = 1 for k in the non-face}.

    Returns None when the system has no solution.
    """
    rows = [list(p.vertices[k]) for k in nonface]
    augmented = exact_nullspace([row + [Fraction(-1)] for row in rows])
    anchor = next((v for v in augmented if v[-1] != 0), None)
    if anchor is None:
        return None
    point = tuple(x / anchor[-1] for x in anchor[:-1])
    return point, exact_nullspace(rows)


def nonface_vanishing_check(p: Polytope, ad: PolyElement) -> list[NonfaceResult]:
    """Restrict the adjoint to every non-face subspace and test for zero."""
    results = []
    for nonface in nonfaces(p):
        subspace = nonface_subspace(p, nonface)
        if subspace is None:
            results.append(NonfaceResult(nonface, "vacuous"))
            continue
        point, directions = subspace
        if not directions:
            value = evaluate_poly(ad, point)
            status = "vanishes" if value == 0 else "nonzero"
        else:
            S = polynomial_ring(tuple(f"s{j + 1}" for j in range(len(directions))))
            images = []
            for axis, base in enumerate(point):
                image = S(to_qq(base))
                for direction, s in zip(directions, S.gens, strict=True):
                    image += s * to_qq(direction[axis])
                images.append(image)
            restriction = compose_poly(ad, images, S)
            status = "vanishes" if not restriction else "nonzero"
        logger.debug(f"Non-face {nonface}: {status}")
        results.append(NonfaceResult(nonface, status, len(directions)))
    return results


def wachspress_coords(p: Polytope, t_point: Sequence[Any]) -> list[Fraction]:
    """Barycentric coordinates on the dual polytope, one per facet.

    The coordinate of facet rho is beta_rho prod_{k not in rho} (1 - x_k . t)
    divided by the adjoint, where beta_rho is the volume share of the cone from
    the origin over rho.

    Raises:
        GeometryError: If the origin is not interior to p.
        PoleError: If the adjoint vanishes at the point.
    """
    point = tuple(to_rat(v) for v in t_point)
    if len(point) != p.d:
        raise DimensionError(f"point has {len(point)} coordinates, expected {p.d}")
    origin = (Fraction(0),) * p.d
    if not p.strictly_contains(origin):
        raise GeometryError("the origin must lie in the interior of the polytope")
    t = star_triangulation(p, origin)
    volume = t.total_volume
    forms = [1 - sum((x * s for x, s in zip(v, point, strict=True)), Fraction(0))
             for v in p.vertices]
    numerators = []
    for facet, cone_volume in zip(p.facets, t.volumes, strict=True):
        value = cone_volume / volume
        for k, form in enumerate(forms):
            if k not in facet:
                value *= form
        numerators.append(value)
    adjoint = sum(numerators, Fraction(0))
    if adjoint == 0:
        raise PoleError("adjoint vanishes at the requested point")
    return [value / adjoint for value in numerators]


def quad_mgf(q: Polytope, r: int) -> TruncSeries:
    """Generating function of a quadrilateral from its diagonal point.

    (1 - delta . t) prod_k 1/(1 - x_k . t), with delta the diagonal intersection.
    """
    if q.n != 4 or q.d != 2:
        raise DimensionError("quad_mgf needs a quadrilateral in the plane")
    delta = quad_diagonal_point(q)
    numerator = TruncSeries.linear(1, [-x for x in delta], r)
    return series_mul(numerator, product_of_inverse_forms(q.vertices, r))


def canonical_spline_moments(points: Sequence[Sequence[Any]], r: int) -> MomentVector:
    """Moments of the projection of the uniform (n-1)-simplex onto the points.

    Raises:
        DimensionError: If there are fewer than d+1 points.
    """
    d = len(points[0]) if points else 0
    if len(points) < d + 1:
        raise DimensionError(f"need at least {d + 1} points in R^{d}, got {len(points)}")
    return mgf_to_moments(product_of_inverse_forms(points, r), len(points) - 1)


def project_moments(m: MomentVector, direction: Sequence[Any]) -> list[Any]:
    """Moments of the linear functional v . x, for orders 0..r.

    The i-th value is sum_{|I| = i} (i! / I!) v^I m_I.
    """
    v = tuple(to_rat(x) for x in direction)
    if len(v) != m.d:
        raise DimensionError(f"direction has {len(v)} entries, moments have d={m.d}")
    result = []
    for i in range(m.r + 1):
        total: Any = Fraction(0)
        for index in multi_indices_of_total(m.d, i):
            weight = Fraction(multinomial(index))
            for x, e in zip(v, index, strict=True):
                weight *= x**e
            if weight:
                total = total + m[index] * weight
        result.append(total)
    return result


def transform_moments(m: MomentVector, g: AffineMap) -> MomentVector:
    """Moments of the pushforward under x -> A x + b.

    m'_I = sum_J nu_IJ m_J where nu_IJ is the coefficient of x^J in (A x + b)^I.
    """
    if g.dim != m.d:
        raise DimensionError(f"map acts on R^{g.dim}, moments have d={m.d}")
    X = polynomial_ring(tuple(f"x{k + 1}" for k in range(m.d)))
    images = []
    for row, shift in zip(g.A, g.b, strict=True):
        image = X(to_qq(shift))
        for a, x in zip(row, X.gens, strict=True):
            image += x * to_qq(a)
        images.append(image)
    powers = [[X.one] for _ in images]
    for axis, image in enumerate(images):
        for _ in range(m.r):
            powers[axis].append(powers[axis][-1] * image)
    values = []
    for index in multi_indices(m.d, m.r):
        expansion = X.one
        for axis, e in enumerate(index):
            expansion *= powers[axis][e]
        total: Any = Fraction(0)
        for monom, coeff in poly_terms(expansion).items():
            total = total + coeff * m[monom]
        values.append(total)
    return MomentVector(m.d, m.r, tuple(values), m.normalized)


def linear_density_moments(
    m: MomentVector, slopes: Sequence[Any], offset: Any
) -> MomentVector:
    """Moments of the density (slopes . x + offset) against the measure m.

    M_I = sum_l slopes[l] m_{I + e_l} + offset m_I, through order r - 1. The
    result is not normalized.
    """
    alphas = [to_rat(a) for a in slopes]
    gamma = to_rat(offset)
    if len(alphas) != m.d:
        raise DimensionError(f"need {m.d} slopes, got {len(alphas)}")
    if m.r < 1:
        raise MissingDataError("linear density moments need input of order at least 1")
    terms = {}
    for index in multi_indices(m.d, m.r - 1):
        value = gamma * m[index]
        for axis, alpha in enumerate(alphas):
            shifted = tuple(e + (1 if pos == axis else 0) for pos, e in enumerate(index))
            value += alpha * m[shifted]
        terms[index] = value
    return MomentVector.from_terms(m.d, m.r - 1, terms, normalized=False)


def _monomial_columns(samples: np.ndarray, r: int) -> tuple[tuple[MultiIndex, ...], np.ndarray]:
    d = samples.shape[1]
    indices = multi_indices(d, r)
    columns = np.ones((samples.shape[0], len(indices)))
    for position, index in enumerate(indices):
        for axis, e in enumerate(index):
            if e:
                columns[:, position] *= samples[:, axis] ** e
    return indices, columns


def monte_carlo_moments(
    p: Polytope, t: Triangulation, r: int, count: int, seed: int
) -> MomentVector:
    """Empirical moments from uniform samples (floating point)."""
    samples = sample_uniform(p, t, count, seed)
    _, columns = _monomial_columns(samples, r)
    values = [float(v) for v in columns.mean(axis=0)]
    values[0] = 1.0
    return MomentVector(p.d, r, tuple(values), True)


def monte_carlo_standard_errors(
    p: Polytope, t: Triangulation, r: int, count: int, seed: int
) -> dict[MultiIndex, float]:
    """Standard error of every Monte-Carlo moment estimate (same samples as the seed)."""
    if count < 2:
        raise DimensionError("standard errors need at least two samples")
    samples = sample_uniform(p, t, count, seed)
    indices, columns = _monomial_columns(samples, r)
    errors = columns.std(axis=0, ddof=1) / math.sqrt(count)
    return {index: float(err) for index, err in zip(indices, errors, strict=True)}


def evaluate_adjoint(ad: PolyElement, point: Sequence[Any]) -> Fraction:
    """Exact value of an adjoint polynomial at a rational point."""
    return evaluate_poly(ad, [to_rat(v) for v in point])


def adjoint_from_terms(d: int, terms: Mapping[MultiIndex, Any]) -> PolyElement:
    """Adjoint-shaped polynomial in t1..td from explicit terms."""
    return poly_from_terms(t_ring(d), terms)
