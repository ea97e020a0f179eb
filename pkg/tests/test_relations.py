"""Tests for the relation catalog and the fuzzing harness."""

import shutil
from fractions import Fraction

import numpy as np
import pytest

from polymoments.algebra import multi_indices
from polymoments.datafile import read_polynomial_file, render_polynomial_file
from polymoments.errors import DataIntegrityError, DimensionError, MissingDataError
from polymoments.moments import MomentVector, segment_moments
from polymoments.relations import (
    CATALOG_DIR,
    FAMILIES,
    RelationPoint,
    SamplingBox,
    builtin_catalog,
    check_relation,
    family_instance,
    find_relation,
    fuzz_catalog,
    fuzz_relation,
    load_catalog,
    load_relation,
    random_moment_vector,
    translation_ratios,
)

SLOW_AMBIENTS = ("invariants",)


@pytest.fixture(scope="module")
def catalog():
    return builtin_catalog()


def line_moments(values):
    return MomentVector.from_terms(1, len(values) - 1, {(i,): v for i, v in enumerate(values)})


def cheap(entries):
    return [entry for entry in entries if entry.ambient not in SLOW_AMBIENTS]


def test_catalog_is_complete_and_sorted(catalog):
    """Test the packaged relations and their metadata."""
    ids = [entry.id for entry in catalog]
    assert len(ids) >= 16
    assert ids == sorted(ids)
    assert len(set(ids)) == len(ids)
    assert {"seg-cubic", "quad18", "lindens52", "tetra-cumulant-322"} <= set(ids)
    assert all(entry.family in FAMILIES for entry in catalog)
    assert all(entry.citation for entry in catalog)


def test_catalog_entries_carry_their_grading(catalog):
    """Test the degrees recorded for a few entries."""
    assert find_relation(catalog, "seg-cubic").degree == (3, 3)
    assert find_relation(catalog, "quad18").degree == (18, 12, 12)
    assert find_relation(catalog, "tetra-moment-5322").degree == (5, 3, 2, 2)
    assert find_relation(catalog, "plucker-1").degree is None
    with pytest.raises(MissingDataError):
        find_relation(catalog, "no-such-relation")


def test_cheap_relations_vanish_on_their_families(catalog):
    """Test every non-invariant relation on 50 random family members."""
    for entry in cheap(catalog):
        report = fuzz_relation(entry, trials=50, seed=2024)
        assert report.failures == (), entry.id
        assert report.negative_control != 0, entry.id
        assert report.passed


@pytest.mark.slow
def test_invariant_relations_vanish_on_their_families(catalog):
    """Test the hypersurfaces in the invariants on a few random members."""
    for entry in catalog:
        if entry.ambient in SLOW_AMBIENTS:
            report = fuzz_relation(entry, trials=5, seed=2024)
            assert report.passed, entry.id


def test_twisted_cubic_vanishes_on_point_masses(catalog):
    """Test that the segment [a, a] gives powers of a."""
    for a in (Fraction(-3, 2), Fraction(0), Fraction(5)):
        m = line_moments(segment_moments(a, a, 3))
        for number in (1, 2, 3):
            assert check_relation(find_relation(catalog, f"twisted-cubic-{number}"), m) == 0


def test_segment_cubic_on_segments_and_off_them(catalog):
    """Test 2 m1^3 - 3 m0 m1 m2 + m0^2 m3 on [2, 3] and on generic data."""
    entry = find_relation(catalog, "seg-cubic")
    m = line_moments(segment_moments(2, 3, 3))
    assert check_relation(entry, m) == 0
    generic = MomentVector.from_terms(1, 3, {(0,): 1, (1,): 1, (2,): 3, (3,): 2})
    assert check_relation(entry, generic) == 2 - 9 + 2


def test_graded_relations_scale_homogeneously(catalog):
    """Test value(lambda . x) = lambda^w value(x) and projective rescaling."""
    rng = np.random.default_rng(3)
    factor = Fraction(2, 3)
    for entry in catalog:
        if entry.ambient != "moments" or entry.degree is None:
            continue
        m = random_moment_vector(entry.d, entry.r, rng)
        dilated = MomentVector.from_terms(
            entry.d,
            entry.r,
            {index: factor ** sum(index) * m[index] for index in multi_indices(entry.d, entry.r)},
        )
        value = check_relation(entry, m)
        assert check_relation(entry, dilated) == factor ** sum(entry.degree[1:]) * value
        assert check_relation(entry, m.scaled(5)) == 5 ** entry.degree[0] * value


def test_relation_needs_matching_data(catalog):
    """Test dimension and order checks at evaluation time."""
    entry = find_relation(catalog, "seg-cubic")
    with pytest.raises(MissingDataError):
        check_relation(entry, MomentVector.from_terms(1, 2, {(0,): 1, (1,): 0, (2,): 1}))
    with pytest.raises(DimensionError):
        check_relation(entry, random_moment_vector(2, 3, np.random.default_rng(0)))
    with pytest.raises(MissingDataError):
        RelationPoint().require_moments()


def test_family_instances(rng):
    """Test the shape of random members of each family."""
    point = family_instance("point", 1, 4, rng)
    a = point.moments[(1,)]
    assert [point.moments[(i,)] for i in range(5)] == [a**i for i in range(5)]
    triangle = family_instance("triangle", 2, 3, rng, SamplingBox(bound=3, denominator_bound=2))
    assert triangle.cumulants is not None
    assert abs(triangle.moments[(1, 0)]) <= 3
    with pytest.raises(DimensionError):
        family_instance("tetrahedron", 2, 3, rng)
    with pytest.raises(DimensionError):
        family_instance("hexagon", 2, 3, rng)


def test_fuzz_reports_are_reproducible(catalog):
    """Test that the same seed gives the same report and worker count does not matter."""
    entries = cheap(catalog)[:6]
    serial = fuzz_catalog(entries, trials=5, seed=9)
    parallel = fuzz_catalog(entries, trials=5, seed=9, workers=3)
    assert serial == parallel
    assert [report.relation for report in serial.reports] == [entry.id for entry in entries]
    assert serial.passed
    assert serial.failed == []


def test_fuzzing_against_the_wrong_family_fails(catalog):
    """Test that a triangle relation does not vanish on quadrilaterals."""
    entry = find_relation(catalog, "triangle-quartic-423")
    report = fuzz_relation(entry, trials=3, seed=1, family="quadrilateral")
    assert len(report.failures) == 3
    assert not report.passed


def test_translation_ratios_run(catalog):
    """Test the comparison of the two tetrahedron relations off the variety."""
    ratios = translation_ratios(
        find_relation(catalog, "tetra-cumulant-322"),
        find_relation(catalog, "tetra-moment-5322"),
        samples=3,
        seed=5,
    )
    assert len(ratios) == 3
    assert all(ratio is None or isinstance(ratio, Fraction) for ratio in ratios)


@pytest.fixture
def catalog_copy(tmp_path):
    target = tmp_path / "relations"
    shutil.copytree(CATALOG_DIR, target)
    return target


def test_corrupted_catalog_file_raises_error(catalog_copy):
    """Test that an edited body fails the checksum."""
    path = catalog_copy / "seg-cubic.rel"
    path.write_text(path.read_text().replace("m0^2 m3 1", "m0^2 m3 2"))
    with pytest.raises(DataIntegrityError, match="checksum"):
        load_catalog(catalog_copy)


def test_wrong_degree_header_raises_error(catalog_copy):
    """Test that the stated grading must match the terms."""
    path = catalog_copy / "seg-cubic.rel"
    data = read_polynomial_file(path)
    headers = {**data.headers, "degree": "3,4"}
    path.write_text(render_polynomial_file(headers, data.to_poly(("m3", "m2", "m1", "m0"))))
    with pytest.raises(DataIntegrityError, match="expected degree"):
        load_relation(path)


@pytest.mark.parametrize(
    ("header", "value", "message"),
    [
        ("ambient", "spectra", "unknown ambient"),
        ("family", "hexagon", "unknown family"),
        ("normalization", "weird", "unknown normalization"),
        ("d", "two", "must be integers"),
    ],
)
def test_bad_headers_raise_error(catalog_copy, header, value, message):
    """Test header validation."""
    path = catalog_copy / "seg-cubic.rel"
    data = read_polynomial_file(path)
    headers = {**data.headers, header: value}
    path.write_text(render_polynomial_file(headers, data.to_poly(("m3", "m2", "m1", "m0"))))
    with pytest.raises(DataIntegrityError, match=message):
        load_relation(path)


def test_duplicate_ids_raise_error(catalog_copy):
    """Test that two files may not share an id."""
    shutil.copy(catalog_copy / "seg-cubic.rel", catalog_copy / "seg-cubic-copy.rel")
    with pytest.raises(DataIntegrityError, match="duplicate"):
        load_catalog(catalog_copy)
