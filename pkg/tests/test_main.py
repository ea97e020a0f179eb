"""Tests for the command-line interface."""

import json
import shutil

import pytest

from polymoments.main import build_parser, run_cli
from polymoments.relations import CATALOG_DIR

SQUARE = {"d": 2, "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}
TRIANGLE = {"d": 2, "vertices": [[0, 0], [1, 0], [0, 1]]}
QUADRILATERAL = {"d": 2, "vertices": [[-1, -1], [1, -1], [2, 1], [-1, 0]]}
SEGMENT = {"d": 1, "vertices": [[2], [3]]}


def run(capsys, config, *argv):
    status = run_cli(list(argv), config)
    return status, capsys.readouterr().out


def run_json(capsys, config, *argv):
    status, out = run(capsys, config, *argv)
    return status, json.loads(out)


@pytest.fixture
def small_catalog(tmp_path):
    """A relations directory holding three inexpensive entries."""
    target = tmp_path / "relations"
    target.mkdir()
    for name in ("seg-cubic", "twisted-cubic-1", "plucker-1"):
        shutil.copy(CATALOG_DIR / f"{name}.rel", target)
    return target


def test_moments_of_unit_square(capsys, mock_config, write_json):
    """Test exact rational pairs on stdout."""
    status, result = run_json(
        capsys, mock_config, "moments", "--polytope", str(write_json("p.json", SQUARE)),
        "--order", "2",
    )
    assert status == 0
    assert result["d"] == 2
    assert result["values"]["0,0"] == [1, 1]
    assert result["values"]["1,0"] == [1, 2]
    assert result["values"]["1,1"] == [1, 4]


def test_moments_with_decimal_output(capsys, mock_config, write_json):
    """Test decimal strings with the configured precision."""
    config = mock_config.model_copy(update={"decimal_places": 5})
    status, result = run_json(
        capsys, config, "moments", "--polytope", str(write_json("p.json", SQUARE)),
        "--order", "2", "--decimal",
    )
    assert status == 0
    assert result["values"]["1,0"] == "0.50000"


def test_moments_as_csv(capsys, mock_config, write_json):
    """Test the two-column CSV rendering."""
    status, out = run(
        capsys, mock_config, "moments", "--polytope", str(write_json("p.json", SQUARE)),
        "--order", "1", "--format", "csv",
    )
    assert status == 0
    lines = out.splitlines()
    assert lines[0] == "key,value"
    assert '"values.1,0",1/2' in lines
    assert "normalized,true" in lines


def test_moments_parallel_matches_serial(capsys, mock_config, write_json):
    """Test that --parallel gives byte-identical output."""
    path = str(write_json("p.json", QUADRILATERAL))
    config = mock_config.model_copy(update={"max_workers": 3})
    _, serial = run(capsys, config, "moments", "--polytope", path, "--order", "3")
    _, parallel = run(capsys, config, "moments", "--polytope", path, "--order", "3", "--parallel")
    assert serial == parallel


def test_recover1d_from_segment_polytope(capsys, mock_config, write_json):
    """Test node and numerator recovery for [2, 3]."""
    status, result = run_json(
        capsys, mock_config, "recover1d", "--polytope", str(write_json("s.json", SEGMENT)),
        "--direction", "1",
    )
    assert status == 0
    assert result["nodes"] == [[2, 1], [3, 1]]
    assert result["numerator"] == [[1, 1]]


def test_recover1d_from_moments(capsys, mock_config, write_json):
    """Test recovery from a moment document, exact and numeric."""
    document = {"d": 1, "r": 3, "values": {"0": 1, "1": "5/2", "2": "19/3", "3": "65/4"}}
    path = str(write_json("m.json", document))
    status, result = run_json(
        capsys, mock_config, "recover1d", "--moments", path, "--d", "1", "--n", "2"
    )
    assert status == 0
    assert result["denominator"] == [[1, 1], [-5, 1], [6, 1]]
    status, result = run_json(
        capsys, mock_config, "recover1d", "--moments", path, "--d", "1", "--n", "2", "--numeric"
    )
    assert status == 0
    assert result["nodes"] == pytest.approx([2.0, 3.0])


def test_recover1d_off_the_variety_is_degenerate(capsys, mock_config, write_json):
    """Test exit status 3 when no exact model exists."""
    document = {"d": 1, "r": 3, "values": {"0": 1, "1": 0, "2": 1, "3": 5}}
    status, result = run_json(
        capsys, mock_config, "recover1d", "--moments", str(write_json("m.json", document)),
        "--d", "1", "--n", "2",
    )
    assert status == 3
    assert result["error"]["type"] == "degeneracy_error"


def test_cumulants_with_newton_and_plucker(capsys, mock_config, write_json):
    """Test cumulants of the standard triangle and the optional outputs."""
    status, result = run_json(
        capsys, mock_config, "cumulants", "--polytope", str(write_json("t.json", TRIANGLE)),
        "--order", "3", "--newton", "2,2", "--newton", "4,0", "--plucker",
    )
    assert status == 0
    assert result["cumulants"]["values"]["1,0"] == [1, 1]
    assert result["cumulants"]["values"]["1,1"] == [0, 1]
    assert result["newton"] == {"2,2": [0, 1], "4,0": [1, 1]}
    assert len(result["plucker"]) == 10


def test_adjoint_with_nonfaces(capsys, mock_config, write_json):
    """Test the diagonals of a quadrilateral as 1-based non-faces."""
    status, result = run_json(
        capsys, mock_config, "adjoint", "--polytope", str(write_json("q.json", QUADRILATERAL)),
        "--nonfaces",
    )
    assert status == 0
    assert result["adjoint"]["variables"] == ["t1", "t2"]
    assert [item["nonface"] for item in result["nonfaces"]] == [[1, 3], [2, 4]]
    assert {item["status"] for item in result["nonfaces"]} == {"vanishes"}


def test_transform_moments(capsys, mock_config, write_json):
    """Test pushing square moments through x -> 2x + 1."""
    moments = {"d": 2, "r": 1, "values": {"0,0": 1, "1,0": "1/2", "0,1": "1/2"}}
    affine = {"A": [[2, 0], [0, 2]], "b": [1, 1]}
    status, result = run_json(
        capsys, mock_config, "transform", "--moments", str(write_json("m.json", moments)),
        "--map", str(write_json("g.json", affine)),
    )
    assert status == 0
    assert result["values"]["1,0"] == [2, 1]


def test_sample_is_seeded(capsys, mock_config, write_json):
    """Test that Monte-Carlo output depends only on the seed."""
    path = str(write_json("p.json", SQUARE))
    argv = ("sample", "--polytope", path, "--order", "2", "--samples", "500", "--seed", "3")
    status, first = run_json(capsys, mock_config, *argv)
    _, second = run_json(capsys, mock_config, *argv)
    assert status == 0
    assert first == second
    assert first["samples"] == 500
    assert first["values"]["1,0"] == pytest.approx(0.5, abs=0.1)


def test_verify_relation_on_supplied_moments(capsys, mock_config, write_json):
    """Test exit 0 on a segment and exit 1 off the variety."""
    on = {"d": 1, "r": 3, "values": {"0": 1, "1": "5/2", "2": "19/3", "3": "65/4"}}
    status, result = run_json(
        capsys, mock_config, "verify", "--relation", "seg-cubic",
        "--moments", str(write_json("on.json", on)),
    )
    assert status == 0
    assert result["vanishes"] is True
    off = {"d": 1, "r": 3, "values": {"0": 1, "1": 1, "2": 3, "3": 2}}
    status, result = run_json(
        capsys, mock_config, "verify", "--relation", "seg-cubic",
        "--moments", str(write_json("off.json", off)),
    )
    assert status == 1
    assert result["value"] == [-5, 1]


def test_verify_fuzzes_a_single_relation(capsys, mock_config):
    """Test that verify without data runs the randomized check."""
    status, result = run_json(capsys, mock_config, "verify", "--relation", "plucker-2")
    assert status == 0
    assert result["trials"] == 5
    assert result["passed"] is True


def test_verify_all_is_deterministic(capsys, mock_config, small_catalog):
    """Test identical reports for identical seeds."""
    config = mock_config.model_copy(update={"relations_dir": small_catalog, "max_workers": 2})
    argv = ("verify", "--all", "--trials", "3", "--seed", "11")
    status, first = run(capsys, config, *argv)
    _, second = run(capsys, config, *argv, "--parallel")
    assert status == 0
    assert first == second
    report = json.loads(first)
    assert [item["relation"] for item in report["reports"]] == [
        "plucker-1", "seg-cubic", "twisted-cubic-1",
    ]


@pytest.mark.slow
def test_verify_quad18_on_a_quadrilateral(capsys, mock_config, write_json):
    """Test the degree-18 relation through the command line."""
    status, result = run_json(
        capsys, mock_config, "verify", "--relation", "quad18",
        "--polytope", str(write_json("q.json", QUADRILATERAL)),
    )
    assert status == 0
    assert result["vanishes"] is True


@pytest.mark.slow
def test_invariants_of_a_polygon(capsys, mock_config, write_json):
    """Test the six invariant values and their metadata."""
    status, result = run_json(
        capsys, mock_config, "invariants", "--polytope", str(write_json("q.json", QUADRILATERAL))
    )
    assert status == 0
    assert [item["name"] for item in result["invariants"]] == ["m00", "s", "t", "h", "g", "j"]
    assert result["invariants"][0]["value"] == [1, 1]


def test_corrupted_catalog_exits_with_data_error(capsys, mock_config, small_catalog):
    """Test exit status 3 for a checksum failure."""
    path = small_catalog / "seg-cubic.rel"
    path.write_text(path.read_text().replace("m0^2 m3 1", "m0^2 m3 3"))
    config = mock_config.model_copy(update={"relations_dir": small_catalog})
    status, result = run_json(capsys, config, "verify", "--all")
    assert status == 3
    assert result["type"] == "error"
    assert result["error"]["type"] == "data_integrity_error"


@pytest.mark.parametrize(
    "argv",
    [
        ["moments"],
        ["frobnicate"],
        ["moments", "--polytope", "p.json", "--order", "x"],
        ["moments", "--polytope", "p.json", "--order", "0"],
        ["recover1d", "--polytope", "p.json"],
        ["verify", "--relation", "seg-cubic", "--all"],
    ],
)
def test_usage_errors_exit_64(capsys, mock_config, write_json, argv):
    """Test malformed command lines."""
    argv = [str(write_json("p.json", SQUARE)) if arg == "p.json" else arg for arg in argv]
    status, result = run_json(capsys, mock_config, *argv)
    assert status == 64
    assert result["error"]["type"] == "usage_error"


def test_invalid_documents_exit_2(capsys, mock_config, write_json, tmp_path):
    """Test float coordinates, unknown fields and missing files."""
    floats = {"d": 2, "vertices": [[0.5, 0], [1, 0], [0, 1]]}
    status, result = run_json(
        capsys, mock_config, "moments", "--polytope", str(write_json("f.json", floats)),
        "--order", "1",
    )
    assert status == 2
    assert result["error"]["type"] == "validation_error"
    status, _ = run(
        capsys, mock_config, "moments", "--polytope", str(tmp_path / "missing.json"),
        "--order", "1",
    )
    assert status == 2


def test_degenerate_polytope_exits_3(capsys, mock_config, write_json):
    """Test collinear vertices."""
    flat = {"d": 2, "vertices": [[0, 0], [1, 1], [2, 2]]}
    status, result = run_json(
        capsys, mock_config, "moments", "--polytope", str(write_json("flat.json", flat)),
        "--order", "1",
    )
    assert status == 3
    assert result["error"]["type"] == "degeneracy_error"


def test_invalid_environment_exits_2(capsys, monkeypatch, write_json):
    """Test that configuration errors are reported before any work."""
    monkeypatch.setenv("POLYMOM_SEED", "-1")
    status, result = run_json(
        capsys, None, "moments", "--polytope", str(write_json("p.json", SQUARE)), "--order", "1"
    )
    assert status == 2
    assert result["error"]["type"] == "configuration_error"


def test_version_flag(capsys):
    """Test that --version prints the package version."""
    with pytest.raises(SystemExit) as excinfo:
        build_parser().parse_args(["--version"])
    assert excinfo.value.code == 0
    assert capsys.readouterr().out.startswith("polymoments ")
