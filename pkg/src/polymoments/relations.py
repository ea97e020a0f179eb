"""Catalog of printed moment-variety relations and their randomized verification.

Every relation is a checksummed polynomial data file (see
:mod:`polymoments.datafile`). An entry names the coordinates it is written in
(its ambient) and the family of measures whose data it must vanish on; the
fuzzing harness draws random rational members of that family and evaluates the
relation exactly.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from sympy.polys.rings import PolyElement

from polymoments.algebra import (
    evaluate_poly,
    graded_names,
    is_homogeneous,
    multi_indices,
    parse_index_name,
)
from polymoments.cumulants import (
    PLUCKER_LABELS,
    CumulantVector,
    cumulants_to_moments,
    moments_to_cumulants,
    plucker_from_cumulants,
    powersum_cumulants,
    to_factorial_normalization,
)
from polymoments.datafile import read_polynomial_file
from polymoments.errors import DataIntegrityError, DimensionError, MissingDataError
from polymoments.geometry import (
    random_convex_polygon,
    random_point,
    random_rational,
    random_simplex,
    star_triangulation,
)
from polymoments.invariants import INVARIANT_NAMES, affine_invariants, z3_degree
from polymoments.moments import (
    MomentVector,
    canonical_spline_moments,
    linear_density_moments,
    polytope_moments,
    segment_moments,
    simplex_moments,
)

logger = logging.getLogger("polymoments")

CATALOG_DIR = Path(__file__).parent / "data" / "relations"

AMBIENTS = ("moments", "cumulants", "plucker", "mixed", "invariants")
FAMILIES = (
    "point",
    "segment",
    "triangle",
    "tetrahedron",
    "quadrilateral",
    "canonical-spline",
    "linear-density-triangle",
)
NORMALIZATIONS = ("plain", "powersum", "factorial", "content-one")

REQUIRED_HEADERS = ("id", "ambient", "d", "r", "degree", "family", "normalization", "citation")


@dataclass(frozen=True)
class RelationEntry:
    """A printed relation with its provenance and the family it vanishes on."""

    id: str
    ambient: str
    d: int
    r: int
    degree: tuple[int, ...] | None
    family: str
    normalization: str
    citation: str
    polynomial: PolyElement = field(repr=False)
    checksum: str = field(repr=False, default="")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(str(symbol) for symbol in self.polynomial.ring.symbols)


def ambient_variables(ambient: str, d: int, r: int) -> tuple[str, ...]:
    """Ordered coordinate names of an ambient space."""
    if ambient == "moments":
        return graded_names("m", d, r)
    if ambient == "cumulants":
        return graded_names("k", d, r, lowest=1)
    if ambient == "mixed":
        return graded_names("k", d, r, lowest=1) + graded_names("m", d, r)
    if ambient == "plucker":
        return PLUCKER_LABELS
    if ambient == "invariants":
        return INVARIANT_NAMES
    raise DimensionError(f"unknown ambient {ambient!r}")


def variable_weights(ambient: str, names: Sequence[str]) -> list[tuple[int, ...]] | None:
    """Grading of each coordinate, or None for ambients without one."""
    if ambient == "moments":
        return [(1, *parse_index_name(name, "m")) for name in names]
    if ambient == "cumulants":
        return [parse_index_name(name, "k") for name in names]
    if ambient == "invariants":
        return [z3_degree(name) for name in names]
    return None


def _parse_degree(text: str, source: str) -> tuple[int, ...] | None:
    if text == "-":
        return None
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise DataIntegrityError(f"{source}: bad degree {text!r}") from exc


def load_relation(path: Path) -> RelationEntry:
    """Load one relation file and check its checksum, headers and grading.

    Raises:
        DataIntegrityError: If any check fails.
    """
    data = read_polynomial_file(path)
    missing = [key for key in REQUIRED_HEADERS if key not in data.headers]
    if missing:
        raise DataIntegrityError(f"{path}: missing headers {missing}")
    h = data.headers
    if h["ambient"] not in AMBIENTS:
        raise DataIntegrityError(f"{path}: unknown ambient {h['ambient']!r}")
    if h["family"] not in FAMILIES:
        raise DataIntegrityError(f"{path}: unknown family {h['family']!r}")
    if h["normalization"] not in NORMALIZATIONS:
        raise DataIntegrityError(f"{path}: unknown normalization {h['normalization']!r}")
    try:
        d, r = int(h["d"]), int(h["r"])
    except ValueError as exc:
        raise DataIntegrityError(f"{path}: d and r must be integers") from exc
    names = ambient_variables(h["ambient"], d, r)
    unknown = data.variables - set(names)
    if unknown:
        raise DataIntegrityError(f"{path}: variables {sorted(unknown)} not in {h['ambient']}")
    poly = data.to_poly(names)
    if not poly:
        raise DataIntegrityError(f"{path}: polynomial is zero")
    degree = _parse_degree(h["degree"], str(path))
    weights = variable_weights(h["ambient"], names)
    if degree is not None and weights is not None:
        actual = is_homogeneous(poly, weights)
        if actual != degree:
            raise DataIntegrityError(f"{path}: expected degree {degree}, terms give {actual}")
    return RelationEntry(
        id=h["id"],
        ambient=h["ambient"],
        d=d,
        r=r,
        degree=degree,
        family=h["family"],
        normalization=h["normalization"],
        citation=h["citation"],
        polynomial=poly,
        checksum=h["checksum"],
    )


def load_catalog(directory: Path | None = None) -> list[RelationEntry]:
    """Every ``*.rel`` file of a directory, sorted by id."""
    directory = CATALOG_DIR if directory is None else Path(directory)
    entries = [load_relation(path) for path in sorted(directory.glob("*.rel"))]
    entries.sort(key=lambda entry: entry.id)
    ids = [entry.id for entry in entries]
    if len(set(ids)) != len(ids):
        raise DataIntegrityError(f"{directory}: duplicate relation ids")
    logger.info(f"Loaded {len(entries)} relations from {directory}")
    return entries


def builtin_catalog() -> list[RelationEntry]:
    return load_catalog(CATALOG_DIR)


def find_relation(entries: Sequence[RelationEntry], identifier: str) -> RelationEntry:
    for entry in entries:
        if entry.id == identifier:
            return entry
    raise MissingDataError(f"no relation named {identifier!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelationPoint:
    """Data a relation is evaluated on.

    ``cumulants`` is computed from ``moments`` when absent; families built from
    simplices supply it independently as power sums of the vertices.
    """

    moments: MomentVector | None = None
    cumulants: CumulantVector | None = None

    def require_moments(self) -> MomentVector:
        if self.moments is None:
            if self.cumulants is None:
                raise MissingDataError("relation point has neither moments nor cumulants")
            return cumulants_to_moments(self.cumulants)
        return self.moments

    def require_cumulants(self) -> CumulantVector:
        if self.cumulants is None:
            return moments_to_cumulants(self.require_moments().normalize())
        return self.cumulants


def _as_point(data: Any) -> RelationPoint:
    if isinstance(data, RelationPoint):
        return data
    if isinstance(data, MomentVector):
        return RelationPoint(moments=data)
    if isinstance(data, CumulantVector):
        return RelationPoint(cumulants=data)
    raise DimensionError(f"cannot evaluate a relation on {type(data).__name__}")


def _cumulant_values(entry: RelationEntry, point: RelationPoint) -> CumulantVector:
    k = point.require_cumulants()
    return to_factorial_normalization(k) if entry.normalization == "factorial" else k


def _check_shape(entry: RelationEntry, d: int, r: int) -> None:
    if d != entry.d:
        raise DimensionError(f"{entry.id} needs d={entry.d}, data has d={d}")
    if r < entry.r:
        raise MissingDataError(f"{entry.id} needs order {entry.r}, data has order {r}")


def relation_coordinates(
    entry: RelationEntry, data: Any, cache_dir: Path | None = None
) -> list[Any]:
    """Values of the entry's variables at the data, in ring order."""
    point = _as_point(data)
    values: dict[str, Any] = {}
    if entry.ambient in ("moments", "mixed"):
        m = point.require_moments()
        _check_shape(entry, m.d, m.r)
        if entry.ambient == "mixed":
            m = m.normalize()
        values.update({name: m[parse_index_name(name, "m")] for name in entry.variables
                       if name.startswith("m")})
    if entry.ambient in ("cumulants", "mixed", "plucker"):
        k = _cumulant_values(entry, point)
        _check_shape(entry, k.d, k.r)
        if entry.ambient == "plucker":
            values.update(plucker_from_cumulants(k))
        else:
            values.update({name: k[parse_index_name(name, "k")] for name in entry.variables
                           if name.startswith("k")})
    if entry.ambient == "invariants":
        m = point.require_moments()
        _check_shape(entry, m.d, m.r)
        values.update({item.name: item.value for item in affine_invariants(m, cache_dir)})
    return [values[name] for name in entry.variables]


def check_relation(entry: RelationEntry, data: Any, cache_dir: Path | None = None) -> Fraction:
    """Exact value of the relation at the data; zero certifies membership.

    Raises:
        MissingDataError: If the data does not reach the entry's order.
    """
    value = evaluate_poly(entry.polynomial, relation_coordinates(entry, data, cache_dir))
    logger.debug(f"{entry.id} evaluates to {value}")
    return value


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SamplingBox:
    """Bounds for random rational coordinates."""

    bound: int = 10
    denominator_bound: int = 7


def family_instance(
    family: str, d: int, r: int, rng: np.random.Generator, box: SamplingBox = SamplingBox()
) -> RelationPoint:
    """Data of a random rational member of a family, through order r."""
    bound, den = box.bound, box.denominator_bound
    if family in ("point", "segment"):
        if d != 1:
            raise DimensionError(f"{family} data lives in d=1, not d={d}")
        a = random_rational(rng, bound, den)
        b = a
        while family == "segment" and b == a:
            b = random_rational(rng, bound, den)
        terms = {(i,): value for i, value in enumerate(segment_moments(a, b, r))}
        return RelationPoint(moments=MomentVector.from_terms(1, r, terms))
    if family in ("triangle", "tetrahedron"):
        expected = 2 if family == "triangle" else 3
        if d != expected:
            raise DimensionError(f"{family} data lives in d={expected}, not d={d}")
        vertices = random_simplex(rng, d, bound, den).vertices
        return RelationPoint(simplex_moments(vertices, r), powersum_cumulants(vertices, r))
    if family == "quadrilateral":
        q = random_convex_polygon(rng, 4, bound, den)
        return RelationPoint(moments=polytope_moments(q, star_triangulation(q), r))
    if family == "canonical-spline":
        points = [random_point(rng, d, bound, den) for _ in range(d + 2)]
        return RelationPoint(moments=canonical_spline_moments(points, r))
    if family == "linear-density-triangle":
        vertices = random_simplex(rng, 2, bound, den).vertices
        slopes = [random_rational(rng, bound, den) for _ in range(2)]
        offset = random_rational(rng, bound, den)
        m = linear_density_moments(simplex_moments(vertices, r + 1), slopes, offset)
        return RelationPoint(moments=m)
    raise DimensionError(f"unknown family {family!r}")


def random_moment_vector(
    d: int, r: int, rng: np.random.Generator, box: SamplingBox = SamplingBox()
) -> MomentVector:
    """Normalized vector with independent random rational moments of order >= 1."""
    terms = {index: random_rational(rng, box.bound, box.denominator_bound)
             for index in multi_indices(d, r)[1:]}
    terms[(0,) * d] = Fraction(1)
    return MomentVector.from_terms(d, r, terms)


def negative_control(
    entry: RelationEntry,
    rng: np.random.Generator,
    box: SamplingBox = SamplingBox(),
    cache_dir: Path | None = None,
) -> Fraction:
    """Value of the relation at an off-family random point (generically nonzero).

    Mixed entries pair the moments of one random point with the cumulants of
    another, since a single point satisfies the moment-cumulant identities.
    """
    m = random_moment_vector(entry.d, entry.r, rng, box)
    cumulants = None
    if entry.ambient == "mixed":
        other = random_moment_vector(entry.d, entry.r, rng, box)
        cumulants = moments_to_cumulants(other)
    return check_relation(entry, RelationPoint(m, cumulants), cache_dir)


@dataclass(frozen=True)
class FuzzReport:
    """Outcome of fuzzing one relation."""

    relation: str
    family: str
    trials: int
    failures: tuple[tuple[int, Fraction], ...]
    negative_control: Fraction

    @property
    def passed(self) -> bool:
        return not self.failures and self.negative_control != 0


def fuzz_relation(
    entry: RelationEntry,
    trials: int,
    seed: int,
    family: str | None = None,
    box: SamplingBox = SamplingBox(),
    cache_dir: Path | None = None,
) -> FuzzReport:
    """Evaluate a relation on ``trials`` random members of its family.

    Trial i draws from ``numpy.random.default_rng((seed, i))``, so reports do
    not depend on the order in which trials run.
    """
    family = entry.family if family is None else family
    failures = []
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        instance = family_instance(family, entry.d, entry.r, rng, box)
        value = check_relation(entry, instance, cache_dir)
        if value != 0:
            logger.debug(f"{entry.id} trial {trial}: nonzero value {value}")
            failures.append((trial, value))
    control = negative_control(entry, np.random.default_rng((seed, trials)), box, cache_dir)
    report = FuzzReport(entry.id, family, trials, tuple(failures), control)
    logger.info(
        f"{entry.id}: {trials - len(failures)}/{trials} zeros, "
        f"negative control {'nonzero' if control else 'ZERO'}"
    )
    return report


@dataclass(frozen=True)
class CatalogReport:
    """Aggregate of the fuzz reports of a catalog."""

    seed: int
    trials: int
    reports: tuple[FuzzReport, ...]

    @property
    def failed(self) -> list[str]:
        return [report.relation for report in self.reports if not report.passed]

    @property
    def passed(self) -> bool:
        return not self.failed


def fuzz_catalog(
    entries: Sequence[RelationEntry],
    trials: int,
    seed: int,
    workers: int = 1,
    box: SamplingBox = SamplingBox(),
    cache_dir: Path | None = None,
) -> CatalogReport:
    """Fuzz every entry; reports come back in catalog order for any worker count."""

    def run(entry: RelationEntry) -> FuzzReport:
        return fuzz_relation(entry, trials, seed, box=box, cache_dir=cache_dir)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(run, entries))
    else:
        reports = [run(entry) for entry in entries]
    return CatalogReport(seed, trials, tuple(reports))


def translation_ratios(
    cumulant_entry: RelationEntry,
    moment_entry: RelationEntry,
    samples: int,
    seed: int,
    box: SamplingBox = SamplingBox(),
) -> list[Fraction | None]:
    """Ratios moment-relation / cumulant-relation at random off-family points.

    Used to record how a cumulant relation and its translation into moments
    compare away from their common zero set. None marks a zero denominator.
    """
    ratios: list[Fraction | None] = []
    for trial in range(samples):
        rng = np.random.default_rng((seed, trial))
        m = random_moment_vector(moment_entry.d, moment_entry.r, rng, box)
        denominator = check_relation(cumulant_entry, m)
        ratios.append(check_relation(moment_entry, m) / denominator if denominator else None)
    logger.info(f"{moment_entry.id} / {cumulant_entry.id} ratios: {[str(x) for x in ratios]}")
    return ratios
