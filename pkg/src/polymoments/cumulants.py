"""Moment and cumulant coordinates.

Cumulants are the coefficients of the logarithm of the normalized moment
generating function, scaled by I! / (|I| - 1)!. For a simplex they are the power
sums k_I = sum_k x_k^I of the vertex coordinates.
"""

import functools
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, ClassVar

from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement

from polymoments.algebra import (
    MultiIndex,
    TruncSeries,
    evaluate_poly,
    graded_names,
    index_factorial,
    index_name,
    multi_indices,
    multi_indices_of_total,
    multinomial,
    parse_index_name,
    polynomial_ring,
    qq_to_rat,
    series_exp,
    series_inv,
    series_log,
    to_rat,
)
from polymoments.errors import (
    DimensionError,
    NormalizationError,
    RecoveryError,
)
from polymoments.moments import (
    GradedValues,
    MomentVector,
    mgf_to_moments,
    mgf_weight,
    simplex_moments,
)

logger = logging.getLogger("polymoments")


@dataclass(frozen=True)
class CumulantVector(GradedValues):
    """Cumulants k_I for 1 <= |I| <= r; k_0 = 0 is implied and never stored."""

    _start: ClassVar[int] = 1
    _label: ClassVar[str] = "cumulant"

    def scaled_by_order(self, sign: int) -> "CumulantVector":
        factors = [math.factorial(sum(index) - 1) for index in self.indices()]
        values = tuple(
            None if v is None else (v * f if sign > 0 else v / f)
            for v, f in zip(self.values, factors, strict=True)
        )
        return CumulantVector(self.d, self.r, values)


def _log_weight(index: Sequence[int]) -> Fraction:
    return Fraction(index_factorial(index), math.factorial(sum(index) - 1))


def moments_to_cumulants(m: MomentVector) -> CumulantVector:
    """Cumulants of a probability-normalized moment vector.

    Raises:
        NormalizationError: If m_0 is not 1.
        MissingDataError: If a moment is unknown.
    """
    if m.m0 != 1:
        raise NormalizationError(f"moments must satisfy m_0 = 1, got {m.m0}")
    log_series = series_log(m.to_mgf())
    terms = {
        index: coeff * _log_weight(index)
        for index, coeff in zip(
            multi_indices(m.d, m.r)[1:], log_series.coeffs[1:], strict=True
        )
    }
    return CumulantVector.from_terms(m.d, m.r, terms)


def cumulants_to_moments(k: CumulantVector) -> MomentVector:
    """Inverse of :func:`moments_to_cumulants` through exp of the cumulant series."""
    k.require_complete()
    terms = {index: k[index] / _log_weight(index) for index in k.indices()}
    log_series = TruncSeries.from_terms(k.d, k.r, terms)
    return mgf_to_moments(series_exp(log_series))


def powersum_cumulants(vertex_rows: Sequence[Sequence[Any]], r: int) -> CumulantVector:
    """Cumulants of a simplex as power sums k_I = sum_k x_k^I of its vertices."""
    rows = [tuple(to_rat(v) for v in row) for row in vertex_rows]
    d = len(rows[0])
    if len(rows) != d + 1 or any(len(row) != d for row in rows):
        raise DimensionError(f"a simplex in R^{d} needs {d + 1} vertices of length {d}")
    terms = {index: power_sum(rows, index) for index in multi_indices(d, r)[1:]}
    return CumulantVector.from_terms(d, r, terms)


def power_sum(points: Sequence[Sequence[Fraction]], index: Sequence[int]) -> Fraction:
    """sum_k prod_l x_{kl}^{i_l}."""
    total = Fraction(0)
    for point in points:
        term = Fraction(1)
        for x, e in zip(point, index, strict=True):
            if e:
                term *= x**e
        total += term
    return total


def to_factorial_normalization(k: CumulantVector) -> CumulantVector:
    """Rescale to (|I| - 1)! k_I, the convention of exponential generating functions."""
    return k.scaled_by_order(1)


def from_factorial_normalization(k: CumulantVector) -> CumulantVector:
    """Inverse of :func:`to_factorial_normalization`."""
    return k.scaled_by_order(-1)


@functools.cache
def moment_chart_ring(d: int, r: int) -> Any:
    """Ring of the moments of orders 1..r (the chart m_0 = 1)."""
    return polynomial_ring(graded_names("m", d, r, lowest=1))


@functools.cache
def cumulant_polynomials(d: int, r: int) -> dict[MultiIndex, PolyElement]:
    """Generic cumulants as polynomials in the moments on the chart m_0 = 1.

    For d = 2 this reproduces k01 = 3 m01, k02 = 12 m02 - 9 m01^2 and so on.
    """
    R = moment_chart_ring(d, r)
    names = {str(g): g for g in R.gens}
    terms = {(0,) * d: R.one}
    for index in multi_indices(d, r)[1:]:
        weight = mgf_weight(index, d)
        terms[index] = names[index_name("m", index)] * QQ(weight.numerator, weight.denominator)
    moment_series = TruncSeries.from_terms(d, r, terms, zero=R.zero)
    log_series = series_log(moment_series)
    result = {}
    for index, coeff in zip(multi_indices(d, r)[1:], log_series.coeffs[1:], strict=True):
        weight = _log_weight(index)
        result[index] = coeff * QQ(weight.numerator, weight.denominator)
    logger.debug(f"Expanded generic cumulants for d={d}, r={r}")
    return result


@functools.cache
def newton_polynomial(d: int, index: MultiIndex) -> PolyElement:
    """k_I as a polynomial in the cumulants of order <= d+1, for |I| >= d+2.

    The d+1 linear forms X_k = x_k . t have power sums
    p_j = sum_{|J|=j} multinomial(J) k_J t^J. Their elementary symmetric
    functions vanish above degree d+1, so p_l for larger l follows from Newton's
    identities; k_I is the t^I coefficient of p_{|I|} divided by multinomial(I).

    Raises:
        DimensionError: If |I| < d+2 or the index length differs from d.
    """
    index = tuple(index)
    ell = sum(index)
    if len(index) != d:
        raise DimensionError(f"index {index} does not have {d} entries")
    if ell < d + 2:
        raise DimensionError(f"Newton reduction needs |I| >= {d + 2}, got {ell}")
    k_names = graded_names("k", d, d + 1, lowest=1)
    t_names = tuple(f"t{k + 1}" for k in range(d))
    R = polynomial_ring(k_names + t_names)
    gens = dict(zip(k_names + t_names, R.gens, strict=True))
    t = [gens[name] for name in t_names]

    power_sums = [R.zero]
    for j in range(1, d + 2):
        p_j = R.zero
        for J in multi_indices_of_total(d, j):
            monomial = gens[index_name("k", J)] * multinomial(J)
            for axis, e in enumerate(J):
                if e:
                    monomial *= t[axis] ** e
            p_j += monomial
        power_sums.append(p_j)

    elementary = [R.one]
    for j in range(1, d + 2):
        total = R.zero
        for i in range(1, j + 1):
            term = elementary[j - i] * power_sums[i]
            total = total + term if i % 2 else total - term
        elementary.append(total * QQ(1, j))

    for j in range(d + 2, ell + 1):
        total = R.zero
        for i in range(1, d + 2):
            term = elementary[i] * power_sums[j - i]
            total = total + term if i % 2 else total - term
        power_sums.append(total)

    K = polynomial_ring(k_names)
    offset = len(k_names)
    target = tuple(index)
    coefficient = {}
    for monom, coeff in power_sums[ell].items():
        if tuple(monom[offset:]) == target:
            coefficient[tuple(monom[:offset])] = coeff * QQ(1, multinomial(index))
    return K.from_dict(coefficient) if coefficient else K.zero


def newton_reduce(k_low: CumulantVector, index: Sequence[int]) -> Fraction:
    """Value of k_I computed from the cumulants of order <= d+1 alone.

    Raises:
        MissingDataError: If k_low is incomplete through order d+1.
    """
    d = k_low.d
    k_low.require_complete(d + 1)
    poly = newton_polynomial(d, tuple(index))
    point = [k_low[parse_index_name(str(g), "k")] for g in poly.ring.gens]
    return evaluate_poly(poly, point)


PLUCKER_LABELS = ("p01", "p02", "p03", "p04", "p12", "p13", "p14", "p23", "p24", "p34")

PLUCKER_RELATIONS = (
    (("p01", "p23"), ("p02", "p13"), ("p03", "p12")),
    (("p01", "p24"), ("p02", "p14"), ("p04", "p12")),
    (("p01", "p34"), ("p03", "p14"), ("p04", "p13")),
    (("p02", "p34"), ("p03", "p24"), ("p04", "p23")),
    (("p12", "p34"), ("p13", "p24"), ("p14", "p23")),
)


def plucker_from_cumulants(k: CumulantVector) -> dict[str, Fraction]:
    """Ten Pluecker coordinates of a plane cubic cumulant vector.

    Raises:
        DimensionError: If the cumulants are not planar.
        MissingDataError: If cumulants through order 3 are missing.
    """
    if k.d != 2:
        raise DimensionError(f"Pluecker coordinates need d=2, got d={k.d}")
    k.require_complete(3)
    k10, k01 = k[(1, 0)], k[(0, 1)]
    k20, k11, k02 = k[(2, 0)], k[(1, 1)], k[(0, 2)]
    k30, k21, k12, k03 = k[(3, 0)], k[(2, 1)], k[(1, 2)], k[(0, 3)]
    return {
        "p01": 3 * k20 - k10**2,
        "p02": 6 * k11 - 2 * k10 * k01,
        "p03": 9 * k21 + 12 * k11 * k10 - 5 * k10**2 * k01,
        "p04": 18 * k30 - 24 * k20 * k10 + 6 * k10**3,
        "p12": 3 * k02 - k01**2,
        "p13": 9 * k12 - 6 * k11 * k01 + 6 * k02 * k10 - k10 * k01**2,
        "p14": 18 * k21 - 12 * k11 * k10 + 12 * k20 * k01 - 2 * k10**2 * k01,
        "p23": 9 * k03 - 12 * k02 * k01 + 3 * k01**3,
        "p24": 18 * k12 + 24 * k11 * k01 - 10 * k10 * k01**2,
        "p34": 72 * k21 * k01
        + 72 * k12 * k10
        + 9 * k20 * k02
        - 9 * k20 * k01**2
        - 9 * k11**2
        + 18 * k11 * k10 * k01
        - 9 * k02 * k10**2
        - 16 * k10**2 * k01**2,
    }


def plucker_relation_values(p: dict[str, Fraction]) -> list[Fraction]:
    """The five three-term Grassmann-Pluecker quadrics at the given coordinates."""
    return [
        p[a] * p[b] - p[c] * p[e] + p[f] * p[g]
        for (a, b), (c, e), (f, g) in PLUCKER_RELATIONS
    ]


def recover_simplex(m: MomentVector) -> list[tuple[Fraction, ...]]:
    """Vertices of a simplex from its moments of order <= d+1.

    The reciprocal of the generating function is prod_k (1 - x_k . t), a
    polynomial of degree d+1; its factorization over QQ gives the vertices.

    Raises:
        MissingDataError: If moments through order d+1 are missing.
        RecoveryError: If the reciprocal does not split into linear factors over QQ.
    """
    d = m.d
    m.require_complete(d + 1)
    reciprocal = series_inv(m.truncate(d + 1).to_mgf())
    T = polynomial_ring(tuple(f"t{k + 1}" for k in range(d)))
    poly = T.from_dict(
        {
            index: QQ(c.numerator, c.denominator)
            for index, c in reciprocal.terms().items()
        }
    )
    _, factors = poly.factor_list()
    vertices: list[tuple[Fraction, ...]] = []
    for factor, multiplicity in factors:
        degree = max(sum(monom) for monom in factor.keys())
        constant = factor.coeff(1)
        if degree != 1 or not constant:
            raise RecoveryError("moments do not come from a rational simplex")
        point = tuple(-qq_to_rat(factor.coeff(g)) / qq_to_rat(constant) for g in T.gens)
        vertices.extend([point] * multiplicity)
    vertices += [(Fraction(0),) * d] * (d + 1 - len(vertices))
    if len(vertices) != d + 1:
        raise RecoveryError(f"expected {d + 1} vertices, found {len(vertices)}")
    if m.r > d + 1 and m.is_complete and simplex_moments(vertices, m.r) != m:
        raise RecoveryError("higher moments disagree with the recovered simplex")
    return sorted(vertices)
