"""Recovery of one-dimensional polytopal splines from their moments.

A measure of type (d, n) on the line has normalized generating function

    sum_i binom(d + i, d) m_i t^i = A(t) / prod_j (1 - u_j t),   deg A <= n - d - 1.

The denominator beta(t) = prod_j (1 - u_j t) spans the left kernel of a Hankel
matrix of normalized moments; the nodes u_j are the roots of the reversed
polynomial t^n beta(1/t), and the numerator follows from beta by convolution.
"""

import itertools
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np
from sympy import Poly, Rational, Symbol
from sympy.polys.rings import PolyElement

from polymoments.algebra import (
    TruncSeries,
    evaluate_poly,
    exact_det,
    exact_left_kernel,
    exact_solve,
    polynomial_ring,
    series_inv,
    series_mul,
    to_qq,
    to_rat,
)
from polymoments.errors import (
    DimensionError,
    InconsistencyError,
    InsufficientDataError,
    NonInvertibleError,
    RecoveryError,
    UnsupportedDegeneracyError,
)

logger = logging.getLogger("polymoments")

_X = Symbol("x")


@dataclass(frozen=True)
class HankelMatrix:
    """Constant-antidiagonal matrix with entry (j, l) = c_{j+l}.

    c_0 = ... = c_{d-1} = 0 and c_{i+d} = binom(d + i, d) m_i.
    """

    d: int
    n: int
    c: tuple[Any, ...]
    rows: tuple[tuple[Any, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    def minor(self, columns: Sequence[int]) -> Any:
        return exact_det([[row[col] for col in columns] for row in self.rows])


def normalized_sequence(m1d: Sequence[Any], d: int) -> list[Any]:
    """The sequence c_0..c_{r+d} of a Hankel construction."""
    return [Fraction(0)] * d + [math.comb(d + i, d) * m for i, m in enumerate(m1d)]


def build_hankel(m1d: Sequence[Any], d: int, n: int) -> HankelMatrix:
    """Hankel matrix of size (n+1) x (r+d-n+1) from the moments m_0..m_r.

    Entries stay symbolic when the moments are polynomials.

    Raises:
        InsufficientDataError: If r < 2n - d.
    """
    if d < 1 or n < d:
        raise DimensionError(f"need 1 <= d <= n, got d={d}, n={n}")
    values = [m if isinstance(m, PolyElement) else to_rat(m) for m in m1d]
    r = len(values) - 1
    if r < 2 * n - d:
        raise InsufficientDataError(
            f"type (d={d}, n={n}) needs moments through order {2 * n - d}, got {r}"
        )
    c = normalized_sequence(values, d)
    ncols = r + d - n + 1
    rows = tuple(tuple(c[j + col] for col in range(ncols)) for j in range(n + 1))
    return HankelMatrix(d, n, tuple(c), rows)


@dataclass(frozen=True)
class IrrationalNode:
    """A real algebraic node given by an irreducible polynomial and an isolating interval.

    ``poly`` lists the coefficients from the highest degree down.
    """

    poly: tuple[Fraction, ...]
    interval: tuple[Fraction, Fraction]

    @property
    def approx(self) -> float:
        lo, hi = self.interval
        return float((lo + hi) / 2)


Node = Fraction | IrrationalNode


@dataclass(frozen=True)
class SplineModel:
    """Nodes, numerator A and denominator beta of a type (d, n) generating function.

    ``numerator`` and ``denominator`` list coefficients from degree 0 upwards;
    both have constant term 1.
    """

    d: int
    nodes: tuple[Node, ...]
    numerator: tuple[Fraction, ...]
    denominator: tuple[Fraction, ...]

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def is_rational(self) -> bool:
        return all(isinstance(u, Fraction) for u in self.nodes)


def _series(coeffs: Sequence[Fraction], r: int) -> TruncSeries:
    return TruncSeries.from_terms(1, r, {(i,): c for i, c in enumerate(coeffs) if i <= r})


def spline_model_moments(model: SplineModel, r: int) -> list[Fraction]:
    """Moments m_0..m_r generated by a spline model."""
    series = series_mul(_series(model.numerator, r), series_inv(_series(model.denominator, r)))
    return [c / math.comb(model.d + i, model.d) for i, c in enumerate(series.coeffs)]


def model_from_nodes(d: int, nodes: Sequence[Any], numerator: Sequence[Any] = (1,)) -> SplineModel:
    """Spline model with rational nodes and a given numerator."""
    us = tuple(to_rat(u) for u in nodes)
    beta = [Fraction(1)]
    for u in us:
        beta = [a - u * b for a, b in zip(beta + [Fraction(0)], [Fraction(0)] + beta, strict=True)]
    coeffs = tuple(to_rat(a) for a in numerator)
    if len(coeffs) > len(us) - d or not coeffs or coeffs[0] != 1:
        raise DimensionError("numerator must have constant term 1 and degree <= n - d - 1")
    return SplineModel(d, us, coeffs, tuple(beta))


def _rational_roots_and_rest(coeffs: Sequence[Fraction], tol: float) -> list[Node]:
    poly = Poly([Rational(c.numerator, c.denominator) for c in coeffs], _X, domain="QQ")
    _, factors = poly.factor_list()
    nodes: list[Node] = []
    eps = Rational(str(tol))
    for factor, multiplicity in factors:
        degree = factor.degree()
        if degree == 1:
            a, b = (to_rat(c) for c in factor.all_coeffs())
            nodes.extend([-b / a] * multiplicity)
            continue
        intervals = factor.intervals()
        if len(intervals) < degree:
            raise RecoveryError("denominator has non-real roots, not a spline moment vector")
        coeff_tuple = tuple(to_rat(c) for c in factor.all_coeffs())
        for (lo, hi), _ in intervals:
            lo, hi = factor.refine_root(lo, hi, eps=eps)
            node = IrrationalNode(coeff_tuple, (to_rat(lo), to_rat(hi)))
            nodes.extend([node] * multiplicity)
    return nodes


def _node_key(node: Node) -> float:
    return float(node) if isinstance(node, Fraction) else node.approx


def recover_spline(m1d: Sequence[Any], d: int, n: int, tol: float = 1e-12) -> SplineModel:
    """Recover nodes and numerator of a type (d, n) model from moments m_0..m_r.

    The left kernel of the Hankel matrix is spanned by (b_n, ..., b_0); the nodes
    are the roots of b_0 t^n + b_1 t^{n-1} + ... + b_n, so a node at 0 shows up as
    b_n = 0. The numerator is A_l = (1/b_0) sum_{i<=l} b_i c_{l+d-i}.

    Raises:
        RecoveryError: If the kernel is not one-dimensional, beta(0) = 0, roots
            are not real, or the model does not reproduce the input.
    """
    values = [to_rat(m) for m in m1d]
    if not values or values[0] == 0:
        raise RecoveryError("moment m_0 must be nonzero")
    values = [m / values[0] for m in values]
    H = build_hankel(values, d, n)
    kernel = exact_left_kernel(H.rows)
    if len(kernel) != 1:
        raise RecoveryError(
            f"Hankel matrix has kernel dimension {len(kernel)}, expected 1 for type (d={d}, n={n})"
        )
    b = list(reversed(kernel[0]))
    if b[0] == 0:
        raise RecoveryError("kernel vector has b_0 = 0")
    b = [x / b[0] for x in b]
    numerator = tuple(
        sum((b[i] * H.c[ell + d - i] for i in range(ell + 1)), Fraction(0))
        for ell in range(n - d)
    )
    while len(numerator) > 1 and numerator[-1] == 0:
        numerator = numerator[:-1]
    degree = max((i for i, x in enumerate(b) if x), default=0)
    nodes = [Fraction(0)] * (n - degree)
    if degree:
        nodes += _rational_roots_and_rest(b[: degree + 1], tol)
    nodes.sort(key=_node_key)
    model = SplineModel(d, tuple(nodes), numerator, tuple(b))
    if spline_model_moments(model, len(values) - 1) != values:
        raise RecoveryError("recovered model does not reproduce the input moments")
    logger.debug(f"Recovered type (d={d}, n={n}) model with nodes {[str(u) for u in nodes]}")
    return model


@dataclass(frozen=True)
class MinorReport:
    """Values of the maximal minors of a Hankel matrix, keyed by column set."""

    minors: tuple[tuple[tuple[int, ...], Any], ...]

    @property
    def all_vanish(self) -> bool:
        return all(value == 0 for _, value in self.minors)

    @property
    def nonzero(self) -> list[tuple[int, ...]]:
        return [cols for cols, value in self.minors if value != 0]


def hankel_minor_check(m1d: Sequence[Any], d: int, n: int, workers: int = 1) -> MinorReport:
    """Evaluate every (n+1) x (n+1) minor of the Hankel matrix.

    Column sets are enumerated lexicographically; with ``workers > 1`` they are
    evaluated on a thread pool and reported in the same order.
    """
    H = build_hankel(m1d, d, n)
    _, ncols = H.shape
    column_sets = list(itertools.combinations(range(ncols), n + 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(H.minor, column_sets))
    else:
        values = [H.minor(cols) for cols in column_sets]
    return MinorReport(tuple(zip(column_sets, values, strict=True)))


def leftmost_minor(m1d: Sequence[Any], d: int, n: int) -> Any:
    """Determinant of the first n+1 columns of the Hankel matrix."""
    return build_hankel(m1d, d, n).minor(range(n + 1))


# ---------------------------------------------------------------------------
# Floating-point path
# ---------------------------------------------------------------------------


def _float_hankel(m1d: Sequence[float], d: int, n: int) -> np.ndarray:
    r = len(m1d) - 1
    if r < 2 * n - d:
        raise InsufficientDataError(
            f"type (d={d}, n={n}) needs moments through order {2 * n - d}, got {r}"
        )
    c = np.concatenate([np.zeros(d), [math.comb(d + i, d) * float(m) for i, m in enumerate(m1d)]])
    ncols = r + d - n + 1
    return np.array([[c[j + col] for col in range(ncols)] for j in range(n + 1)])


def numeric_hankel_rank(m1d: Sequence[float], d: int, n: int, threshold: float = 1e-8) -> int:
    """Numerical rank: singular values above threshold times the largest one."""
    singular = np.linalg.svd(_float_hankel(m1d, d, n), compute_uv=False)
    if singular[0] == 0:
        return 0
    return int(np.sum(singular / singular[0] > threshold))


@dataclass(frozen=True)
class NumericSpline:
    """Floating-point recovery result."""

    nodes: np.ndarray
    numerator: np.ndarray
    rank: int


def recover_spline_numeric(
    m1d: Sequence[float], d: int, n: int, threshold: float = 1e-8
) -> NumericSpline:
    """Recover nodes from noisy moments with the smallest left singular vector.

    Raises:
        RecoveryError: If the numerical rank exceeds n.
    """
    H = _float_hankel(m1d, d, n)
    rank = numeric_hankel_rank(m1d, d, n, threshold)
    if rank > n:
        raise RecoveryError(f"numerical rank {rank} exceeds {n}; moments are too noisy")
    u, _, _ = np.linalg.svd(H)
    b = u[:, -1][::-1]
    if abs(b[0]) < threshold:
        raise RecoveryError("kernel vector has b_0 close to 0")
    b = b / b[0]
    c = np.concatenate([np.zeros(d), [math.comb(d + i, d) * float(m) for i, m in enumerate(m1d)]])
    c = c / c[d]
    numerator = np.array(
        [sum(b[i] * c[ell + d - i] for i in range(ell + 1)) for ell in range(n - d)]
    )
    nodes = np.sort(np.real(np.roots(b)))
    return NumericSpline(nodes, numerator, rank)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


def _x_ring() -> Any:
    return polynomial_ring(("x",))


@dataclass(frozen=True)
class PiecewisePolynomial:
    """Polynomial pieces on [knots[k], knots[k+1]], zero outside the knot range."""

    knots: tuple[Fraction, ...]
    pieces: tuple[PolyElement, ...]

    def piece_index(self, x: Fraction) -> int | None:
        if x < self.knots[0] or x > self.knots[-1]:
            return None
        for k in range(len(self.pieces)):
            if x < self.knots[k + 1]:
                return k
        return len(self.pieces) - 1

    def __call__(self, x: Any) -> Fraction:
        x = to_rat(x)
        k = self.piece_index(x)
        return Fraction(0) if k is None else evaluate_poly(self.pieces[k], [x])

    def evaluate_float(self, x: float) -> float:
        """Floating evaluation, vectorizable through numpy.vectorize."""
        k = self.piece_index(Fraction(x))
        return 0.0 if k is None else float(evaluate_poly(self.pieces[k], [x]))

    def moment(self, i: int) -> Fraction:
        """Exact integral of x^i times the density."""
        total = Fraction(0)
        for k, piece in enumerate(self.pieces):
            a, b = self.knots[k], self.knots[k + 1]
            for (e,), coeff in piece.items():
                power = i + e + 1
                total += Fraction(int(coeff.numerator), int(coeff.denominator)) * (
                    b**power - a**power
                ) / power
        return total

    def derivative_jumps(self, order: int) -> list[Fraction]:
        """Jump of the order-th derivative at every interior knot."""
        x = _x_ring().gens[0]
        jumps = []
        for k in range(1, len(self.pieces)):
            left, right = self.pieces[k - 1], self.pieces[k]
            for _ in range(order):
                left, right = left.diff(x), right.diff(x)
            point = [self.knots[k]]
            jumps.append(evaluate_poly(right, point) - evaluate_poly(left, point))
        return jumps

    @property
    def degree(self) -> int:
        return max((e for piece in self.pieces for (e,) in piece.keys()), default=0)


def bspline_basis(knots: Sequence[Fraction], degree: int) -> list[list[PolyElement]]:
    """Cox-de Boor recursion with exact polynomial pieces.

    Returns one list of pieces (one per knot interval) for each of the
    len(knots) - degree - 1 basis functions.
    """
    X = _x_ring()
    x = X.gens[0]
    intervals = len(knots) - 1
    basis = [[X.one if k == j else X.zero for k in range(intervals)] for j in range(intervals)]
    for p in range(1, degree + 1):
        nxt = []
        for j in range(len(basis) - 1):
            left = (x - to_qq(knots[j])) * to_qq(1 / (knots[j + p] - knots[j]))
            right = (to_qq(knots[j + p + 1]) - x) * to_qq(1 / (knots[j + p + 1] - knots[j + 1]))
            nxt.append([left * basis[j][k] + right * basis[j + 1][k] for k in range(intervals)])
        basis = nxt
    return basis


def spline_density(model: SplineModel, check_order: int | None = None) -> PiecewisePolynomial:
    """Density of a rational spline model in the B-spline basis of degree d-1.

    The n - d coefficients are fixed by matching m_0..m_{n-d-1}; every moment up
    to ``check_order`` (default 2n) is then verified by exact integration.

    Raises:
        UnsupportedDegeneracyError: If nodes are irrational or coincide.
        InconsistencyError: If the matching system is singular or a moment fails.
    """
    if not model.is_rational:
        raise UnsupportedDegeneracyError("density needs rational nodes")
    knots = tuple(sorted(model.nodes))
    if len(set(knots)) != len(knots):
        raise UnsupportedDegeneracyError("density needs distinct nodes")
    d, n = model.d, model.n
    basis = bspline_basis(knots, d - 1)
    if len(basis) != n - d:
        raise DimensionError(f"expected {n - d} basis functions, got {len(basis)}")
    order = 2 * n if check_order is None else check_order
    targets = spline_model_moments(model, max(order, n - d - 1))
    functions = [PiecewisePolynomial(knots, tuple(pieces)) for pieces in basis]
    system = [[f.moment(i) for f in functions] for i in range(n - d)]
    try:
        coeffs = exact_solve(system, targets[: n - d])
    except NonInvertibleError as exc:
        raise InconsistencyError("moment-matching system is singular") from exc
    X = _x_ring()
    pieces = []
    for k in range(n - 1):
        piece = X.zero
        for a, pieces_j in zip(coeffs, basis, strict=True):
            piece += pieces_j[k] * to_qq(a)
        pieces.append(piece)
    density = PiecewisePolynomial(knots, tuple(pieces))
    for i in range(order + 1):
        if density.moment(i) != targets[i]:
            raise InconsistencyError(f"density does not reproduce moment m_{i}")
    return density


def hankel_det(m1d: Sequence[Any], d: int, n: int) -> Any:
    """Determinant of a square Hankel matrix (r = 2n - d)."""
    H = build_hankel(m1d, d, n)
    rows, cols = H.shape
    if rows != cols:
        raise DimensionError(f"Hankel matrix is {rows}x{cols}, not square")
    return exact_det(H.rows)
