"""Affine invariants of moments through order three.

Moments of a measure on the line through order 3 are the coefficients of a
binary cubic, and moments of a measure in the plane are the coefficients of the
ternary cubic

    f = sum 3!/(i! j! k!) m_ij u1^i u2^j u3^k,   i + j + k = 3.

Classical covariants of f specialize under psi: (u1, u2, u3) -> (0, 0, 1) to
polynomials in the moments that are relatively invariant under affine changes
of coordinates. The six generators m00, s, t, h, g, j are expanded once, reduced
to content one, given a fixed sign, and evaluated exactly afterwards.
"""

import functools
import itertools
import logging
import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from sympy.polys.rings import PolyElement, PolyRing

from polymoments.algebra import (
    MultiIndex,
    compose_poly,
    evaluate_poly,
    exact_det,
    exact_nullspace,
    graded_names,
    multinomial,
    parse_index_name,
    poly_from_terms,
    polynomial_ring,
    primitive_part,
    sparse_nullspace,
    to_qq,
)
from polymoments.datafile import read_polynomial_file, write_polynomial_file
from polymoments.errors import ConfigurationError, DataIntegrityError, DimensionError
from polymoments.geometry import Polytope, star_triangulation
from polymoments.moments import MomentVector, polytope_moments

logger = logging.getLogger("polymoments")

DATA_DIR = Path(__file__).parent / "data" / "relations"

MOMENT_NAMES = graded_names("m", 2, 3)
U_NAMES = ("u1", "u2", "u3")
INVARIANT_NAMES = ("m00", "s", "t", "h", "g", "j")

# (degree, order) of the covariant behind each affine invariant.
COVARIANT_SHAPES = {
    "m00": (1, 3),
    "s": (4, 0),
    "t": (6, 0),
    "h": (3, 3),
    "g": (8, 6),
    "j": (12, 9),
}

ANCHORS = {
    "s": {"m00": 1, "m02": 1, "m12": 1, "m30": 1},
    "t": {"m00": 2, "m03": 2, "m30": 2},
    "h": {"m00": 1, "m02": 1, "m20": 1},
    "g": {"m00": 3, "m02": 3, "m30": 2},
}

REFERENCE_QUADRILATERALS = (
    ((0, 0), (2, 0), (3, 2), (0, 1)),
    ((1, -1), (3, 2), (2, 4), (-1, 2)),
)

_CUBIC_EXPONENTS: tuple[tuple[int, int, int], ...] = tuple(
    (i, j, 3 - i - j) for i, j in (parse_index_name(name, "m") for name in MOMENT_NAMES)
)

_LOCK = threading.Lock()
_INVARIANTS: dict[str, PolyElement] = {}

TernaryCubic = PolyElement


# ---------------------------------------------------------------------------
# Binary cubics
# ---------------------------------------------------------------------------


def binary_cubic_invariants(m1d: Sequence[Any]) -> tuple[Any, Any, Any, Any]:
    """The four generators a, b, c, d of the affine invariants of m0..m3.

    Works for rational values and for polynomials alike.
    """
    if len(m1d) < 4:
        raise DimensionError(f"need moments m0..m3, got {len(m1d)} values")
    m0, m1, m2, m3 = m1d[:4]
    a = m0
    b = m0 * m2 - m1**2
    c = m0**2 * m3 - 3 * m0 * m1 * m2 + 2 * m1**3
    d = (
        m0**2 * m3**2
        - 6 * m0 * m1 * m2 * m3
        + 4 * m0 * m2**3
        + 4 * m1**3 * m3
        - 3 * m1**2 * m2**2
    )
    return a, b, c, d


def binary_cubic_syzygy(a: Any, b: Any, c: Any, d: Any) -> Any:
    """a^2 d - 4 b^3 - c^2, which vanishes identically on the generators."""
    return a**2 * d - 4 * b**3 - c**2


# ---------------------------------------------------------------------------
# Ternary cubics
# ---------------------------------------------------------------------------


def moment_ring() -> PolyRing:
    return polynomial_ring(MOMENT_NAMES)


def covariant_ring() -> PolyRing:
    """Moments m30 > ... > m00 followed by u1, u2, u3."""
    return polynomial_ring(MOMENT_NAMES + U_NAMES)


def _u_monomial(R: PolyRing, exponent: Sequence[int]) -> PolyElement:
    u = R.gens[-3:]
    return u[0] ** exponent[0] * u[1] ** exponent[1] * u[2] ** exponent[2]


def generic_ternary_cubic() -> TernaryCubic:
    """f with the ten moments as indeterminate coefficients."""
    R = covariant_ring()
    f = R.zero
    for position, exponent in enumerate(_CUBIC_EXPONENTS):
        f += multinomial(exponent) * R.gens[position] * _u_monomial(R, exponent)
    return f


def moments_to_ternary_cubic(m: MomentVector) -> TernaryCubic:
    """The ternary cubic whose coefficients are the moments of order <= 3.

    Raises:
        DimensionError: If the moments are not in the plane.
        MissingDataError: If a moment of order <= 3 is unknown.
    """
    if m.d != 2:
        raise DimensionError(f"ternary cubics need planar moments, got d={m.d}")
    m.require_complete(3)
    R = covariant_ring()
    f = R.zero
    for exponent in _CUBIC_EXPONENTS:
        f += _u_monomial(R, exponent) * (multinomial(exponent) * to_qq(m[exponent[:2]]))
    return f


def _moment_coordinates(f: TernaryCubic) -> list[PolyElement]:
    """Read m_ij back from the coefficients of f, as polynomials of f's ring."""
    R = f.ring
    coefficients: dict[tuple[int, ...], dict[tuple[int, ...], Any]] = {}
    for monom, coeff in f.items():
        coefficients.setdefault(tuple(monom[-3:]), {})[tuple(monom[:-3]) + (0, 0, 0)] = coeff
    images = []
    for exponent in _CUBIC_EXPONENTS:
        data = coefficients.get(exponent, {})
        image = R.from_dict(data) if data else R.zero
        images.append(image * R.domain(1, multinomial(exponent)))
    return images


def _u_degree(monom: Sequence[int]) -> int:
    return monom[-3] + monom[-2]


def _truncate(p: PolyElement, k: int) -> PolyElement:
    """Drop the terms of degree > k in (u1, u2)."""
    data = {monom: coeff for monom, coeff in p.items() if _u_degree(monom) <= k}
    return p.ring.from_dict(data) if data else p.ring.zero


def _jet_det(rows: Sequence[Sequence[PolyElement]], k: int) -> PolyElement:
    # Cofactor expansion modulo (u1, u2)^(k+1).
    n = len(rows)
    R = rows[0][0].ring
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
            term = _truncate(entry * minor(cols[:pos] + cols[pos + 1 :]), k)
            total = total - term if pos % 2 else total + term
        memo[cols] = total
        return total

    return minor(tuple(range(n)))


def _gradient(p: PolyElement) -> list[PolyElement]:
    return [p.diff(u) for u in p.ring.gens[-3:]]


@dataclass(frozen=True)
class Covariants:
    """Fundamental covariants of a ternary cubic.

    S, T and H are exact. G and J are jets at u = (0, 0, 1): G keeps the terms
    of (u1, u2)-degree <= jet + 1 and J those of degree <= jet.
    """

    S: PolyElement
    T: PolyElement
    H: PolyElement
    G: PolyElement
    J: PolyElement
    jet: int


def covariants(f: TernaryCubic, jet: int = 0) -> Covariants:
    """S, T, H, G and J of a ternary cubic in :func:`covariant_ring`.

    H is the Hessian determinant, G the bordered determinant of the second
    derivatives of f and the gradient of H, J the Jacobian of f, H and G.
    Every result is divided by its integer content.

    Args:
        f: The cubic, with coefficients in the moment variables or constant.
        jet: G keeps the terms of (u1, u2)-degree <= jet + 1 and J those of
            degree <= jet. The default 0 is all that :func:`psi` needs;
            ``jet=9`` gives G and J in full.
    """
    R = f.ring
    if R != covariant_ring():
        raise DimensionError("ternary cubics must live in the covariant ring")
    images = _moment_coordinates(f)
    S = compose_poly(aronhold_invariant(4), images, R)
    T = compose_poly(aronhold_invariant(6), images, R)
    u = R.gens[-3:]
    second = [[f.diff(u[a]).diff(u[b]) for b in range(3)] for a in range(3)]
    H = exact_det(second)
    logger.debug(f"Hessian has {len(H)} terms")
    h = [_truncate(H.diff(var), jet + 1) for var in u]
    bordered = [[*second[a], h[a]] for a in range(3)] + [[*h, R.zero]]
    G = _jet_det(bordered, jet + 1)
    jacobian = [[_truncate(entry, jet) for entry in _gradient(p)] for p in (f, H, G)]
    J = _jet_det(jacobian, jet)
    S, T, H, G, J = (primitive_part(p)[1] for p in (S, T, H, G, J))
    return Covariants(S, T, H, G, J, jet)


def psi(p: PolyElement) -> PolyElement:
    """Substitute (u1, u2, u3) = (0, 0, 1) and return a polynomial in the moments."""
    Rm = moment_ring()
    data = {}
    for monom, coeff in p.items():
        if _u_degree(monom) == 0:
            key = tuple(monom[:-3])
            data[key] = data.get(key, Rm.domain.zero) + coeff
    data = {key: value for key, value in data.items() if value}
    return Rm.from_dict(data) if data else Rm.zero


# ---------------------------------------------------------------------------
# Aronhold invariants
# ---------------------------------------------------------------------------


def _torus_weight(monom: Sequence[int]) -> tuple[int, int, int]:
    return tuple(
        sum(e * exponent[axis] for e, exponent in zip(monom, _CUBIC_EXPONENTS, strict=True))
        for axis in range(3)
    )


def _balanced_monomials(degree: int) -> list[MultiIndex]:
    target = (degree, degree, degree)
    monomials = []
    for combo in itertools.combinations_with_replacement(range(len(MOMENT_NAMES)), degree):
        monom = [0] * len(MOMENT_NAMES)
        for var in combo:
            monom[var] += 1
        if _torus_weight(monom) == target:
            monomials.append(tuple(monom))
    return monomials


def _derivation(a: int, b: int, p: PolyElement) -> PolyElement:
    """The action of u_a d/du_b on the coefficients of f, extended to polynomials."""
    R = p.ring
    position = {exponent: i for i, exponent in enumerate(_CUBIC_EXPONENTS)}
    total = R.zero
    for i, exponent in enumerate(_CUBIC_EXPONENTS):
        if not exponent[b]:
            continue
        target = list(exponent)
        target[b] -= 1
        target[a] += 1
        j = position[tuple(target)]
        factor = R.domain(exponent[b] * multinomial(exponent), multinomial(target))
        derivative = p.diff(R.gens[j])
        if derivative:
            total += derivative * R.gens[i] * factor
    return total


@functools.cache
def aronhold_invariant(degree: int) -> PolyElement:
    """The SL3-invariant of the given degree (4 or 6) in the ten moments.

    It spans the common kernel of the six off-diagonal derivations on the
    torus-balanced monomials, and is returned with content one and a positive
    coefficient on its anchor monomial.

    Raises:
        ConfigurationError: If the kernel is not one-dimensional.
    """
    Rm = moment_ring()
    basis = _balanced_monomials(degree)
    rows: dict[tuple[int, int, tuple[int, ...]], dict[int, Any]] = {}
    for column, monom in enumerate(basis):
        p = Rm.from_dict({monom: Rm.domain.one})
        for a, b in itertools.permutations(range(3), 2):
            for image_monom, coeff in _derivation(a, b, p).items():
                rows.setdefault((a, b, tuple(image_monom)), {})[column] = coeff
    kernel = sparse_nullspace(list(rows.values()), len(basis))
    logger.debug(
        f"Degree {degree} invariants: {len(basis)} monomials, {len(rows)} equations, "
        f"kernel dimension {len(kernel)}"
    )
    if len(kernel) != 1:
        raise ConfigurationError(
            f"expected a unique invariant of degree {degree}, found {len(kernel)}"
        )
    poly = poly_from_terms(Rm, dict(zip(basis, kernel[0], strict=True)))
    return _normalize(poly, "s" if degree == 4 else "t")


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------


def _anchor_monomial(name: str) -> MultiIndex:
    powers = ANCHORS[name]
    return tuple(powers.get(var, 0) for var in MOMENT_NAMES)


def _normalize(p: PolyElement, name: str) -> PolyElement:
    """Content one, and a positive anchor coefficient (the leading term for j)."""
    _, primitive = primitive_part(p)
    if not primitive:
        raise ConfigurationError(f"invariant {name} vanishes identically")
    if name in ANCHORS:
        anchor = _anchor_monomial(name)
        coeff = primitive.coeff(primitive.ring.from_dict({anchor: primitive.ring.domain.one}))
        if not coeff:
            raise ConfigurationError(f"anchor monomial of {name} does not occur")
        if abs(coeff) != 1:
            logger.warning(f"Anchor coefficient of {name} is {coeff}, not +-1")
    else:
        coeff = primitive.LC
    return primitive if coeff > 0 else -primitive


def affine_weight(p: int, o: int, r: int = 3, d: int = 2) -> int:
    """Relative-invariance weight q = (r p - o) / (d + 1) of a covariant.

    Raises:
        DimensionError: If the weight is not an integer.
    """
    q, remainder = divmod(r * p - o, d + 1)
    if remainder:
        raise DimensionError(f"covariant of degree {p} and order {o} has no integral weight")
    return q


def z3_degree(name: str) -> tuple[int, int, int]:
    p, o = COVARIANT_SHAPES[name]
    q = affine_weight(p, o)
    return (p, q, q)


def _hypersurface_file(identifier: str) -> Path:
    return DATA_DIR / f"{identifier}.rel"


@functools.cache
def hypersurface_polynomial(identifier: str) -> PolyElement:
    """A checksummed polynomial in m00, s, t, h, g, j from the packaged data.

    Raises:
        DataIntegrityError: If the file is missing or fails its checksum.
    """
    data = read_polynomial_file(_hypersurface_file(identifier))
    unknown = data.variables - set(INVARIANT_NAMES)
    if unknown:
        raise DataIntegrityError(f"{identifier}: unknown invariants {sorted(unknown)}")
    return data.to_poly(INVARIANT_NAMES)


def _resolve_signs(polys: dict[str, PolyElement]) -> dict[str, int]:
    """Signs for s, t, h, g under which quad18 vanishes on the reference quadrilaterals."""
    quad18 = hypersurface_polynomial("quad18")
    points = []
    for vertices in REFERENCE_QUADRILATERALS:
        q = Polytope.polygon(vertices)
        m = polytope_moments(q, star_triangulation(q), 3)
        point = _moment_point(m)
        points.append({name: evaluate_poly(polys[name], point) for name in INVARIANT_NAMES})
    flipped = ("s", "t", "h", "g")
    for signs in itertools.product((1, -1), repeat=len(flipped)):
        choice = dict(zip(flipped, signs, strict=True))
        if all(
            evaluate_poly(
                quad18, [value[name] * choice.get(name, 1) for name in INVARIANT_NAMES]
            )
            == 0
            for value in points
        ):
            if any(sign < 0 for sign in signs):
                logger.warning(f"Anchor signs disagree with quad18; flipping {choice}")
            return choice
    raise ConfigurationError("no sign assignment of s, t, h, g makes quad18 vanish")


def _build_invariants() -> dict[str, PolyElement]:
    logger.info("Expanding ternary cubic covariants")
    Rm = moment_ring()
    cov = covariants(generic_ternary_cubic())
    polys = {
        "m00": Rm.gens[MOMENT_NAMES.index("m00")],
        "s": psi(cov.S),
        "t": psi(cov.T),
        "h": _normalize(psi(cov.H), "h"),
        "g": _normalize(psi(cov.G), "g"),
        "j": _normalize(psi(cov.J), "j"),
    }
    signs = _resolve_signs(polys)
    for name, sign in signs.items():
        if sign < 0:
            polys[name] = -polys[name]
    logger.info(
        "Affine invariants ready: "
        + ", ".join(f"{name} ({len(polys[name])} terms)" for name in INVARIANT_NAMES)
    )
    return polys


def _cache_path(cache_dir: Path, name: str) -> Path:
    return cache_dir / f"invariant-{name}.poly"


def _load_cached(cache_dir: Path) -> dict[str, PolyElement] | None:
    polys = {}
    for name in INVARIANT_NAMES:
        path = _cache_path(cache_dir, name)
        if not path.exists():
            return None
        try:
            polys[name] = read_polynomial_file(path).to_poly(MOMENT_NAMES)
        except DataIntegrityError as exc:
            logger.warning(f"Ignoring cached invariant {name}: {exc}")
            return None
        if z3_degree(name) != _moment_degree(polys[name]):
            logger.warning(f"Ignoring cached invariant {name}: wrong degree")
            return None
    logger.debug(f"Loaded affine invariants from {cache_dir}")
    return polys


def _store_cached(cache_dir: Path, polys: Mapping[str, PolyElement]) -> None:
    for name, poly in polys.items():
        headers = {"id": f"invariant-{name}", "degree": ",".join(map(str, z3_degree(name)))}
        write_polynomial_file(_cache_path(cache_dir, name), headers, poly)


def invariant_polynomials(cache_dir: Path | None = None) -> dict[str, PolyElement]:
    """The normalized generators m00, s, t, h, g, j as polynomials in the moments.

    The expansion runs once per process; with ``cache_dir`` the result is also
    persisted as checksummed data files and reused by later processes.
    """
    with _LOCK:
        if not _INVARIANTS:
            polys = _load_cached(cache_dir) if cache_dir is not None else None
            if polys is None:
                polys = _build_invariants()
                if cache_dir is not None:
                    _store_cached(cache_dir, polys)
            _INVARIANTS.update(polys)
        return dict(_INVARIANTS)


def _moment_degree(p: PolyElement) -> tuple[int, int, int] | None:
    degree = None
    for monom in p.keys():
        term = (
            sum(monom),
            sum(e * x[0] for e, x in zip(monom, _CUBIC_EXPONENTS, strict=True)),
            sum(e * x[1] for e, x in zip(monom, _CUBIC_EXPONENTS, strict=True)),
        )
        if degree is None:
            degree = term
        elif degree != term:
            return None
    return degree


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantValue:
    """An affine invariant evaluated at a moment vector."""

    name: str
    value: Fraction
    z3_degree: tuple[int, ...]
    weight: int


def _moment_point(m: MomentVector) -> list[Any]:
    if m.d != 2:
        raise DimensionError(f"affine invariants need planar moments, got d={m.d}")
    m.require_complete(3)
    return [m[parse_index_name(name, "m")] for name in MOMENT_NAMES]


def affine_invariants(m: MomentVector, cache_dir: Path | None = None) -> list[InvariantValue]:
    """m00, s, t, h, g, j at a planar moment vector of order >= 3."""
    polys = invariant_polynomials(cache_dir)
    point = _moment_point(m)
    values = []
    for name in INVARIANT_NAMES:
        p, o = COVARIANT_SHAPES[name]
        values.append(
            InvariantValue(
                name, evaluate_poly(polys[name], point), z3_degree(name), affine_weight(p, o)
            )
        )
    return values


def _invariant_point(m: MomentVector, cache_dir: Path | None = None) -> list[Any]:
    return [item.value for item in affine_invariants(m, cache_dir)]


def quad_hypersurface18(m: MomentVector, cache_dir: Path | None = None) -> Fraction:
    """The degree-18 polynomial vanishing on moments of quadrilaterals."""
    return evaluate_poly(hypersurface_polynomial("quad18"), _invariant_point(m, cache_dir))


def linear_density_hypersurface52(m: MomentVector, cache_dir: Path | None = None) -> Fraction:
    """The degree-52 polynomial vanishing on moments of linear densities on triangles."""
    return evaluate_poly(hypersurface_polynomial("lindens52"), _invariant_point(m, cache_dir))


# ---------------------------------------------------------------------------
# Relations among invariants
# ---------------------------------------------------------------------------


def monomials_of_degree(
    degree: Sequence[int], generators: Sequence[str] = INVARIANT_NAMES
) -> list[MultiIndex]:
    """Exponent vectors over the generators with the given Z^3-degree."""
    degrees = [z3_degree(name) for name in generators]
    target = tuple(degree)
    found: list[MultiIndex] = []

    def extend(position: int, prefix: list[int], remaining: tuple[int, ...]) -> None:
        if position == len(degrees):
            if not any(remaining):
                found.append(tuple(prefix))
            return
        step = degrees[position]
        e = 0
        while all(remaining[axis] - e * step[axis] >= 0 for axis in range(3)):
            extend(
                position + 1,
                [*prefix, e],
                tuple(remaining[axis] - e * step[axis] for axis in range(3)),
            )
            e += 1

    extend(0, [], target)
    return found


def interpolate_invariant_relation(
    samples: Sequence[MomentVector],
    degree: Sequence[int],
    generators: Sequence[str] = INVARIANT_NAMES,
    cache_dir: Path | None = None,
) -> list[PolyElement]:
    """Relations of a given Z^3-degree among invariants, from exact evaluations.

    Each sample contributes one row of the evaluation matrix of all monomials of
    that degree; the kernel is returned as primitive integer polynomials in the
    generators. With too few samples the kernel overestimates the relations.
    """
    monomials = monomials_of_degree(degree, generators)
    if not monomials:
        return []
    positions = [INVARIANT_NAMES.index(name) for name in generators]
    rows = []
    for m in samples:
        point = _invariant_point(m, cache_dir)
        values = [point[k] for k in positions]
        rows.append([_monomial_value(values, monom) for monom in monomials])
    kernel = exact_nullspace(rows)
    logger.info(
        f"Degree {tuple(degree)}: {len(monomials)} monomials, {len(samples)} samples, "
        f"{len(kernel)} relations"
    )
    R = polynomial_ring(tuple(generators))
    relations = []
    for vector in kernel:
        _, primitive = primitive_part(poly_from_terms(R, dict(zip(monomials, vector, strict=True))))
        relations.append(primitive if primitive.LC > 0 else -primitive)
    return relations


def _monomial_value(values: Sequence[Any], monom: Sequence[int]) -> Any:
    total: Any = Fraction(1)
    for value, e in zip(values, monom, strict=True):
        if e:
            total *= value**e
    return total
