"""Exact scalars, sparse polynomials, truncated power series and linear algebra.

Rationals are ``fractions.Fraction`` values. Sparse multivariate polynomials are
sympy ``PolyElement`` objects over ``QQ``; this module adds the few helpers the
rest of the package needs on top of them (evaluation at rationals, substitution,
content removal). Truncated power series are dense and indexed by a ranked
enumeration of multi-indices. Determinants, kernels and ranks are exact.
"""

import functools
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.orderings import grevlex
from sympy.polys.rings import PolyElement, PolyRing, ring

from polymoments.errors import DimensionError, NonInvertibleError, NormalizationError

logger = logging.getLogger("polymoments")

MultiIndex = tuple[int, ...]


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def to_rat(value: Any) -> Fraction:
    """Convert an exact scalar to a Fraction.

    Accepts ints, Fractions, "p/q" strings, ``[p, q]`` pairs, sympy Rationals and
    sympy ``QQ`` domain elements. Floats are rejected because they are not exact.

    Raises:
        TypeError: If the value has no exact rational meaning.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rational numbers")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise TypeError(f"rational pair must have two entries, got {value!r}")
        num, den = value
        return Fraction(int(num), int(den))
    if isinstance(value, float):
        raise TypeError("floats are not accepted where exact rationals are required")
    if hasattr(value, "p") and hasattr(value, "q"):
        return Fraction(int(value.p), int(value.q))
    if hasattr(value, "numerator") and hasattr(value, "denominator"):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def to_qq(value: Any) -> Any:
    """Convert an exact scalar to an element of sympy's ``QQ``."""
    q = to_rat(value)
    return QQ(q.numerator, q.denominator)


def qq_to_rat(value: Any) -> Fraction:
    """Convert a ``QQ`` (or ``ZZ``) domain element back to a Fraction."""
    return Fraction(int(value.numerator), int(value.denominator))


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


def _compositions(total: int, parts: int) -> Iterable[MultiIndex]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


@functools.cache
def multi_indices_of_total(d: int, total: int) -> tuple[MultiIndex, ...]:
    """All multi-indices in d variables with the given total, descending lex."""
    if d < 1 or total < 0:
        raise DimensionError(f"invalid multi-index shape d={d}, total={total}")
    return tuple(_compositions(total, d))


@functools.cache
def multi_indices(d: int, r: int) -> tuple[MultiIndex, ...]:
    """Ranked enumeration of multi-indices of total degree <= r.

    The ranking is graded by total degree and descending lexicographic inside a
    degree, so for d=2 the order starts (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
    """
    if r < 0:
        raise DimensionError(f"truncation order must be nonnegative, got {r}")
    return tuple(index for total in range(r + 1) for index in multi_indices_of_total(d, total))


@functools.cache
def index_rank(d: int, r: int) -> dict[MultiIndex, int]:
    """Position of every multi-index in :func:`multi_indices`."""
    return {index: rank for rank, index in enumerate(multi_indices(d, r))}


def index_factorial(index: Sequence[int]) -> int:
    """Product of the factorials of the entries."""
    return math.prod(math.factorial(i) for i in index)


def multinomial(index: Sequence[int]) -> int:
    """Multinomial coefficient |I|! / (i1! ... id!)."""
    return math.factorial(sum(index)) // index_factorial(index)


def index_key(index: Sequence[int]) -> str:
    """Serialize a multi-index as "i1,i2,...". """
    return ",".join(str(i) for i in index)


def parse_index_key(key: str) -> MultiIndex:
    """Inverse of :func:`index_key`."""
    try:
        return tuple(int(part) for part in key.split(","))
    except ValueError as exc:
        raise DimensionError(f"malformed multi-index key: {key!r}") from exc


def index_name(prefix: str, index: Sequence[int]) -> str:
    """Variable name such as ``m012`` for a moment or ``k101`` for a cumulant."""
    if any(i > 9 for i in index):
        return prefix + "_" + "_".join(str(i) for i in index)
    return prefix + "".join(str(i) for i in index)


def parse_index_name(name: str, prefix: str) -> MultiIndex:
    """Inverse of :func:`index_name`."""
    if not name.startswith(prefix):
        raise DimensionError(f"variable {name!r} does not start with {prefix!r}")
    body = name[len(prefix) :]
    try:
        if "_" in body:
            return tuple(int(part) for part in body.strip("_").split("_"))
        return tuple(int(ch) for ch in body)
    except ValueError as exc:
        raise DimensionError(f"malformed variable name: {name!r}") from exc


def graded_names(prefix: str, d: int, r: int, lowest: int = 0) -> tuple[str, ...]:
    """Names of the indices with total between ``lowest`` and r, highest total first.

    For moments of plane cubics this is m30, m21, m12, m03, m20, ..., m01, m00.
    """
    return tuple(
        index_name(prefix, index)
        for total in range(r, lowest - 1, -1)
        for index in multi_indices_of_total(d, total)
    )


# ---------------------------------------------------------------------------
# Sparse polynomials
# ---------------------------------------------------------------------------


@functools.cache
def polynomial_ring(names: tuple[str, ...]) -> PolyRing:
    """Polynomial ring over QQ with graded reverse lexicographic order.

    The first name is the largest variable.
    """
    if not names:
        raise DimensionError("a polynomial ring needs at least one variable")
    return ring(list(names), QQ, grevlex)[0]


def poly_from_terms(R: PolyRing, terms: Mapping[MultiIndex, Any]) -> PolyElement:
    """Build a polynomial from a monomial -> coefficient mapping."""
    data = {}
    for monom, coeff in terms.items():
        if len(monom) != R.ngens:
            raise DimensionError(f"monomial {monom} does not match {R.ngens} variables")
        value = to_rat(coeff)
        if value:
            data[tuple(monom)] = QQ(value.numerator, value.denominator)
    return R.from_dict(data) if data else R.zero


def poly_terms(p: PolyElement) -> dict[MultiIndex, Fraction]:
    """Monomial -> Fraction view of a polynomial."""
    return {tuple(monom): qq_to_rat(coeff) for monom, coeff in p.items()}


def _power_table(values: Sequence[Any], p: PolyElement) -> list[list[Any]]:
    degrees = [0] * len(values)
    for monom in p.keys():
        for var, e in enumerate(monom):
            if e > degrees[var]:
                degrees[var] = e
    table = []
    for value, top in zip(values, degrees, strict=True):
        powers = [None] * (top + 1)
        if top:
            powers[1] = value
            for e in range(2, top + 1):
                powers[e] = powers[e - 1] * value
        table.append(powers)
    return table


def evaluate_poly(p: PolyElement, point: Sequence[Any]) -> Any:
    """Evaluate a polynomial at a point.

    Coefficients are converted to Fractions, so rational points give exact
    Fractions and float points give floats.

    Raises:
        DimensionError: If the point has the wrong number of coordinates.
    """
    if len(point) != p.ring.ngens:
        raise DimensionError(f"expected {p.ring.ngens} coordinates, got {len(point)}")
    powers = _power_table(point, p)
    total: Any = Fraction(0)
    for monom, coeff in p.items():
        term: Any = qq_to_rat(coeff)
        for var, e in enumerate(monom):
            if e:
                term = term * powers[var][e]
        total = total + term
    return total


def compose_poly(p: PolyElement, images: Sequence[PolyElement], target: PolyRing) -> PolyElement:
    """Substitute polynomials of ``target`` for the variables of ``p``."""
    if len(images) != p.ring.ngens:
        raise DimensionError(f"expected {p.ring.ngens} images, got {len(images)}")
    images = [target(0) + image for image in images]
    powers = _power_table(images, p)
    total = target.zero
    for monom, coeff in p.items():
        term = target(coeff)
        for var, e in enumerate(monom):
            if e:
                term = term * powers[var][e]
        total += term
    return total


def primitive_part(p: PolyElement) -> tuple[Fraction, PolyElement]:
    """Split a polynomial into a positive rational content and a primitive part.

    The primitive part has coprime integer coefficients.
    """
    if not p:
        return Fraction(0), p
    coeffs = [qq_to_rat(c) for c in p.values()]
    numerator = math.gcd(*(c.numerator for c in coeffs))
    denominator = math.lcm(*(c.denominator for c in coeffs))
    content = Fraction(numerator, denominator)
    return content, p * QQ(content.denominator, content.numerator)


def is_homogeneous(p: PolyElement, weights: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
    """Return the common multidegree of all terms under per-variable weights.

    ``weights[v]`` is the degree vector of variable ``v``. Returns None when the
    terms do not share a degree (or for the zero polynomial).
    """
    degree = None
    for monom in p.keys():
        term = tuple(
            sum(e * w[axis] for e, w in zip(monom, weights, strict=True))
            for axis in range(len(weights[0]))
        )
        if degree is None:
            degree = term
        elif term != degree:
            return None
    return degree


# ---------------------------------------------------------------------------
# Truncated power series
# ---------------------------------------------------------------------------


def _one_like(value: Any) -> Any:
    if isinstance(value, PolyElement):
        return value.ring.one
    return Fraction(1)


def _zero_like(value: Any) -> Any:
    if isinstance(value, PolyElement):
        return value.ring.zero
    return Fraction(0)


def _scale(value: Any, factor: Fraction) -> Any:
    if isinstance(value, PolyElement):
        return value * QQ(factor.numerator, factor.denominator)
    return value * factor


@functools.cache
def _product_table(d: int, r: int) -> tuple[tuple[int, int, int], ...]:
    indices = multi_indices(d, r)
    rank = index_rank(d, r)
    totals = [sum(index) for index in indices]
    table = []
    for i, a in enumerate(indices):
        for j, b in enumerate(indices):
            if totals[i] + totals[j] <= r:
                table.append((i, j, rank[tuple(x + y for x, y in zip(a, b, strict=True))]))
    return tuple(table)


@dataclass(frozen=True)
class TruncSeries:
    """Power series in ``nvars`` variables truncated above total degree ``order``.

    Coefficients are stored densely in the rank order of :func:`multi_indices`.
    They are Fractions, or polynomials over QQ when a series is built from
    indeterminate data.
    """

    nvars: int
    order: int
    coeffs: tuple[Any, ...]

    def __post_init__(self) -> None:
        expected = len(multi_indices(self.nvars, self.order))
        if len(self.coeffs) != expected:
            raise DimensionError(
                f"series with d={self.nvars}, r={self.order} needs {expected} coefficients, "
                f"got {len(self.coeffs)}"
            )

    @classmethod
    def from_terms(
        cls, nvars: int, order: int, terms: Mapping[MultiIndex, Any], zero: Any = None
    ) -> "TruncSeries":
        """Build a series from a sparse mapping; terms above ``order`` are dropped."""
        zero = Fraction(0) if zero is None else zero
        rank = index_rank(nvars, order)
        coeffs = [zero] * len(rank)
        for index, value in terms.items():
            if len(index) != nvars:
                raise DimensionError(f"index {index} does not have {nvars} entries")
            if sum(index) <= order:
                coeffs[rank[tuple(index)]] = value if isinstance(value, PolyElement) else to_rat(
                    value
                )
        return cls(nvars, order, tuple(coeffs))

    @classmethod
    def constant(cls, nvars: int, order: int, value: Any = 1) -> "TruncSeries":
        """Constant series."""
        value = value if isinstance(value, PolyElement) else to_rat(value)
        zero = _zero_like(value)
        size = len(multi_indices(nvars, order))
        return cls(nvars, order, (value,) + (zero,) * (size - 1))

    @classmethod
    def linear(cls, constant: Any, slopes: Sequence[Any], order: int) -> "TruncSeries":
        """The affine form ``constant + sum_l slopes[l] * t_l``."""
        nvars = len(slopes)
        terms: dict[MultiIndex, Any] = {(0,) * nvars: constant}
        for axis, slope in enumerate(slopes):
            index = tuple(1 if k == axis else 0 for k in range(nvars))
            terms[index] = slope
        return cls.from_terms(nvars, order, terms)

    def __getitem__(self, index: Sequence[int]) -> Any:
        return self.coeffs[index_rank(self.nvars, self.order)[tuple(index)]]

    @property
    def constant_term(self) -> Any:
        return self.coeffs[0]

    def terms(self) -> dict[MultiIndex, Any]:
        """Nonzero coefficients keyed by multi-index."""
        return {
            index: coeff
            for index, coeff in zip(multi_indices(self.nvars, self.order), self.coeffs, strict=True)
            if coeff
        }

    def truncate(self, order: int) -> "TruncSeries":
        """Drop every term above ``order`` (order must not increase)."""
        if order > self.order:
            raise DimensionError(f"cannot raise truncation order {self.order} to {order}")
        size = len(multi_indices(self.nvars, order))
        return TruncSeries(self.nvars, order, self.coeffs[:size])

    def _check_shape(self, other: "TruncSeries") -> None:
        if (self.nvars, self.order) != (other.nvars, other.order):
            raise DimensionError(
                f"series shapes differ: (d={self.nvars}, r={self.order}) vs "
                f"(d={other.nvars}, r={other.order})"
            )

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check_shape(other)
        return TruncSeries(
            self.nvars, self.order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        self._check_shape(other)
        return TruncSeries(
            self.nvars, self.order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs))
        )

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.nvars, self.order, tuple(-a for a in self.coeffs))

    def scale(self, factor: Any) -> "TruncSeries":
        """Multiply every coefficient by a rational factor."""
        factor = to_rat(factor)
        return TruncSeries(self.nvars, self.order, tuple(_scale(a, factor) for a in self.coeffs))

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        return series_mul(self, other)

    def __pow__(self, exponent: int) -> "TruncSeries":
        if exponent < 0:
            return series_inv(self) ** (-exponent)
        result = TruncSeries.constant(self.nvars, self.order, _one_like(self.constant_term))
        for _ in range(exponent):
            result = series_mul(result, self)
        return result


def series_mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Product of two series of the same shape, truncated at their order.

    Raises:
        DimensionError: If variable counts or orders differ.
    """
    a._check_shape(b)
    zero = _zero_like(a.constant_term) if isinstance(a.constant_term, PolyElement) else (
        _zero_like(b.constant_term)
    )
    out = [zero] * len(a.coeffs)
    ac, bc = a.coeffs, b.coeffs
    for i, j, k in _product_table(a.nvars, a.order):
        x = ac[i]
        if not x:
            continue
        y = bc[j]
        if not y:
            continue
        out[k] = out[k] + x * y
    return TruncSeries(a.nvars, a.order, tuple(out))


def series_inv(a: TruncSeries) -> TruncSeries:
    """Multiplicative inverse by the alternating sum 1 - L + L^2 - ... .

    The series is written as c(1 + L) with L without constant term; powers of L
    above the truncation order vanish, so the sum is exact.

    Raises:
        NonInvertibleError: If the constant term is zero (or symbolic and not 1).
    """
    c = a.constant_term
    if not c:
        raise NonInvertibleError("series with zero constant term is not invertible")
    if isinstance(c, PolyElement):
        if c != 1:
            raise NonInvertibleError("symbolic series must have constant term 1 to be inverted")
        inv_c = Fraction(1)
    else:
        inv_c = 1 / to_rat(c)
    unit = a.scale(inv_c)
    one = TruncSeries.constant(a.nvars, a.order, _one_like(unit.constant_term))
    tail = unit - one
    result = one
    power = one
    for k in range(1, a.order + 1):
        power = series_mul(power, tail)
        result = result - power if k % 2 else result + power
    return result.scale(inv_c)


def series_log(a: TruncSeries) -> TruncSeries:
    """Formal logarithm of a series with constant term 1.

    Raises:
        NormalizationError: If the constant term is not 1.
    """
    if a.constant_term != 1:
        raise NormalizationError("logarithm requires constant term 1")
    one = TruncSeries.constant(a.nvars, a.order, _one_like(a.constant_term))
    tail = a - one
    result = tail - tail
    power = one
    for k in range(1, a.order + 1):
        power = series_mul(power, tail)
        term = power.scale(Fraction(1, k))
        result = result + term if k % 2 else result - term
    return result


def series_exp(a: TruncSeries) -> TruncSeries:
    """Formal exponential of a series with zero constant term.

    Raises:
        NormalizationError: If the constant term is not 0.
    """
    if a.constant_term:
        raise NormalizationError("exponential requires constant term 0")
    one_value = a.constant_term.ring.one if isinstance(a.constant_term, PolyElement) else 1
    result = TruncSeries.constant(a.nvars, a.order, one_value)
    power = result
    for k in range(1, a.order + 1):
        power = series_mul(power, a).scale(Fraction(1, k))
        result = result + power
    return result


def series_from_poly(p: PolyElement, order: int) -> TruncSeries:
    """Truncated series of a polynomial whose variables are the series variables."""
    return TruncSeries.from_terms(p.ring.ngens, order, poly_terms(p))


def series_to_poly(s: TruncSeries, R: PolyRing) -> PolyElement:
    """Polynomial with the same (rational) coefficients as the series."""
    if R.ngens != s.nvars:
        raise DimensionError(f"ring has {R.ngens} variables, series has {s.nvars}")
    return poly_from_terms(R, s.terms())


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------


def _square_rows(matrix: Sequence[Sequence[Any]]) -> list[list[Any]]:
    rows = [list(row) for row in matrix]
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise DimensionError(f"determinant needs a square matrix, got {n} rows of lengths "
                             f"{sorted({len(row) for row in rows})}")
    return rows


def _bareiss_det(rows: list[list[Fraction]]) -> Fraction:
    # Scale rows to integers and run sympy's fraction-free elimination over ZZ.
    scale = 1
    integer_rows = []
    for row in rows:
        multiplier = math.lcm(*(x.denominator for x in row)) if row else 1
        scale *= multiplier
        integer_rows.append([ZZ(int(x * multiplier)) for x in row])
    n = len(rows)
    det = DomainMatrix(integer_rows, (n, n), ZZ).det()
    return Fraction(int(det), scale)


def _cofactor_det(rows: list[list[PolyElement]], R: PolyRing) -> PolyElement:
    n = len(rows)
    memo: dict[tuple[int, ...], PolyElement] = {}

    def minor(cols: tuple[int, ...]) -> PolyElement:
        if not cols:
            return R.one
        if cols in memo:
            return memo[cols]
        row = n - len(cols)
        total = R.zero
        for pos, col in enumerate(cols):
            entry = rows[row][col]
            if not entry:
                continue
            term = entry * minor(cols[:pos] + cols[pos + 1 :])
            total = total - term if pos % 2 else total + term
        memo[cols] = total
        return total

    return minor(tuple(range(n)))


def exact_det(matrix: Sequence[Sequence[Any]]) -> Any:
    """Exact determinant of a square matrix of rationals or polynomials.

    Rational matrices use fraction-free Bareiss elimination; as soon as one
    entry is a polynomial, the determinant is expanded by cofactors with
    memoized minors.

    Raises:
        DimensionError: If the matrix is not square or mixes polynomial rings.
    """
    rows = _square_rows(matrix)
    if not rows:
        return Fraction(1)
    rings = {entry.ring for row in rows for entry in row if isinstance(entry, PolyElement)}
    if not rings:
        return _bareiss_det([[to_rat(entry) for entry in row] for row in rows])
    if len(rings) > 1:
        raise DimensionError("matrix entries belong to different polynomial rings")
    R = rings.pop()
    lifted = [
        [entry if isinstance(entry, PolyElement) else R(to_qq(entry)) for entry in row]
        for row in rows
    ]
    return _cofactor_det(lifted, R)


def _domain_matrix(rows: Sequence[Sequence[Any]], ncols: int) -> DomainMatrix:
    data = [[to_qq(entry) for entry in row] for row in rows]
    return DomainMatrix(data, (len(data), ncols), QQ)


def _rows_from_domain_matrix(dm: DomainMatrix) -> list[tuple[Fraction, ...]]:
    nrows, _ = dm.shape
    if nrows == 0:
        return []
    return [tuple(to_rat(entry) for entry in row) for row in dm.to_Matrix().tolist()]


def _ncols(rows: Sequence[Sequence[Any]]) -> int:
    widths = {len(row) for row in rows}
    if len(widths) > 1:
        raise DimensionError(f"ragged matrix with row lengths {sorted(widths)}")
    return widths.pop() if widths else 0


def exact_left_kernel(matrix: Sequence[Sequence[Any]]) -> list[tuple[Fraction, ...]]:
    """Basis of the row vectors v with v . matrix = 0, by exact elimination.

    A full-row-rank input yields an empty list.
    """
    rows = [list(row) for row in matrix]
    nrows, ncols = len(rows), _ncols(rows)
    if nrows == 0:
        return []
    if ncols == 0:
        return [tuple(Fraction(int(i == j)) for j in range(nrows)) for i in range(nrows)]
    transposed = _domain_matrix(rows, ncols).transpose()
    basis = _rows_from_domain_matrix(transposed.nullspace())
    logger.debug(f"Left kernel of {nrows}x{ncols} matrix has dimension {len(basis)}")
    return basis


def exact_nullspace(matrix: Sequence[Sequence[Any]]) -> list[tuple[Fraction, ...]]:
    """Basis of the column vectors v with matrix . v = 0."""
    rows = [list(row) for row in matrix]
    ncols = _ncols(rows)
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    return _rows_from_domain_matrix(_domain_matrix(rows, ncols).nullspace())


def sparse_nullspace(
    rows: Sequence[Mapping[int, Any]], ncols: int
) -> list[tuple[Fraction, ...]]:
    """Nullspace of a sparse matrix given as one {column: value} mapping per row."""
    data = {
        i: {j: to_qq(value) for j, value in row.items() if value}
        for i, row in enumerate(rows)
        if any(row.values())
    }
    if not data:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    dense_index = {i: k for k, i in enumerate(sorted(data))}
    dm = DomainMatrix({dense_index[i]: row for i, row in data.items()}, (len(data), ncols), QQ)
    return _rows_from_domain_matrix(dm.nullspace().to_dense())


def exact_rank(matrix: Sequence[Sequence[Any]]) -> int:
    """Rank over QQ."""
    rows = [list(row) for row in matrix]
    ncols = _ncols(rows)
    if not rows or ncols == 0:
        return 0
    return int(_domain_matrix(rows, ncols).rank())


def exact_solve(matrix: Sequence[Sequence[Any]], rhs: Sequence[Any]) -> tuple[Fraction, ...]:
    """Unique solution of a square nonsingular system.

    Raises:
        NonInvertibleError: If the matrix is singular.
    """
    rows = _square_rows(matrix)
    if len(rhs) != len(rows):
        raise DimensionError(f"right-hand side has {len(rhs)} entries for {len(rows)} rows")
    if exact_det(rows) == 0:
        raise NonInvertibleError("linear system is singular")
    n = len(rows)
    solution = _domain_matrix(rows, n).lu_solve(_domain_matrix([[b] for b in rhs], 1))
    return tuple(row[0] for row in _rows_from_domain_matrix(solution))
