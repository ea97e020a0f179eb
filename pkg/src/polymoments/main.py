"""Command-line entry point for polymoments.

Every subcommand reads JSON documents (see :mod:`polymoments.models`), writes
its result to stdout and logs to stderr. Exit status: 0 success, 1 a verified
relation does not vanish, 2 invalid input, 3 degenerate or corrupted data,
64 malformed command line.
"""

import argparse
import csv
import io
import json
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ValidationError

from polymoments import __version__
from polymoments.algebra import index_key, parse_index_key, to_rat
from polymoments.config import MomentsConfig, get_config
from polymoments.cumulants import (
    moments_to_cumulants,
    newton_reduce,
    plucker_from_cumulants,
)
from polymoments.errors import MomentError, UsageError, create_error_response
from polymoments.geometry import Polytope, star_triangulation
from polymoments.invariants import affine_invariants
from polymoments.models import (
    AdjointSchema,
    AffineMapSchema,
    CatalogReportSchema,
    CumulantVectorSchema,
    FuzzReportSchema,
    InvariantValueSchema,
    MomentVectorSchema,
    MonteCarloSchema,
    NonfaceSchema,
    NumericSplineSchema,
    PolynomialSchema,
    PolytopeSchema,
    RationalPair,
    RelationReportSchema,
    SplineModelSchema,
)
from polymoments.moments import (
    MomentVector,
    adjoint_poly,
    monte_carlo_moments,
    monte_carlo_standard_errors,
    nonface_vanishing_check,
    polytope_moments,
    project_moments,
    transform_moments,
)
from polymoments.recovery import recover_spline, recover_spline_numeric
from polymoments.relations import (
    RelationPoint,
    SamplingBox,
    check_relation,
    find_relation,
    fuzz_catalog,
    fuzz_relation,
    load_catalog,
)

logger = logging.getLogger("polymoments")


class CumulantsOutput(BaseModel):
    cumulants: CumulantVectorSchema
    newton: dict[str, RationalPair] | None = None
    plucker: dict[str, RationalPair] | None = None


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting with status 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def configure_logging(config: MomentsConfig) -> None:
    """Route the polymoments logger to stderr at the configured level."""
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )
    if config.logging_mode == "off":
        logging.getLogger("polymoments").setLevel(logging.CRITICAL)
    elif config.logging_mode == "debug":
        logging.getLogger("polymoments").setLevel(logging.DEBUG)
    else:
        logging.getLogger("polymoments").setLevel(logging.INFO)


def _vector_arg(text: str) -> list[Fraction]:
    return [to_rat(part) for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument(
        "--decimal", action="store_true", help="print rationals as decimal strings"
    )
    common.add_argument("--seed", type=int, default=None, help="seed for random instances")
    common.add_argument(
        "--parallel", action="store_true", help="use the deterministic parallel paths"
    )

    parser = _Parser(prog="polymoments", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    moments = sub.add_parser("moments", parents=[common], help="exact moments of a polytope")
    moments.add_argument("--polytope", type=Path, required=True)
    moments.add_argument("--order", type=int, required=True)
    moments.add_argument("--apex", type=_vector_arg, help="interior apex, comma separated")

    adjoint = sub.add_parser("adjoint", parents=[common], help="adjoint polynomial")
    adjoint.add_argument("--polytope", type=Path, required=True)
    adjoint.add_argument("--apex", type=_vector_arg)
    adjoint.add_argument("--nonfaces", action="store_true", help="check non-face vanishing")

    cumulants = sub.add_parser("cumulants", parents=[common], help="cumulants of moments")
    source = cumulants.add_mutually_exclusive_group(required=True)
    source.add_argument("--moments", type=Path)
    source.add_argument("--polytope", type=Path)
    cumulants.add_argument("--order", type=int)
    cumulants.add_argument(
        "--newton", action="append", default=[], help="multi-index to reduce, e.g. 2,2"
    )
    cumulants.add_argument("--plucker", action="store_true")

    recover = sub.add_parser("recover1d", parents=[common], help="recover a 1-D spline")
    source = recover.add_mutually_exclusive_group(required=True)
    source.add_argument("--moments", type=Path)
    source.add_argument("--polytope", type=Path)
    recover.add_argument("--direction", type=_vector_arg)
    recover.add_argument("--d", type=int)
    recover.add_argument("--n", type=int)
    recover.add_argument("--order", type=int)
    recover.add_argument("--numeric", action="store_true", help="floating SVD path")

    invariants = sub.add_parser("invariants", parents=[common], help="affine invariants")
    source = invariants.add_mutually_exclusive_group(required=True)
    source.add_argument("--moments", type=Path)
    source.add_argument("--polytope", type=Path)

    verify = sub.add_parser("verify", parents=[common], help="check catalog relations")
    target = verify.add_mutually_exclusive_group(required=True)
    target.add_argument("--relation")
    target.add_argument("--all", action="store_true")
    data = verify.add_mutually_exclusive_group()
    data.add_argument("--moments", type=Path)
    data.add_argument("--cumulants", type=Path)
    data.add_argument("--polytope", type=Path)
    verify.add_argument("--trials", type=int)

    transform = sub.add_parser("transform", parents=[common], help="push moments forward")
    transform.add_argument("--moments", type=Path, required=True)
    transform.add_argument("--map", type=Path, required=True)

    sample = sub.add_parser("sample", parents=[common], help="Monte-Carlo moments")
    sample.add_argument("--polytope", type=Path, required=True)
    sample.add_argument("--order", type=int, required=True)
    sample.add_argument("--samples", type=int)
    return parser


def _read_schema(path: Path, schema: type[BaseModel]) -> Any:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise MomentError(f"cannot read {path}: {exc}") from exc
    return schema.model_validate_json(text)


def _polytope(path: Path) -> Polytope:
    return _read_schema(path, PolytopeSchema).to_polytope()


def _check_order(order: int | None) -> None:
    if order is not None and order < 1:
        raise UsageError(f"--order must be at least 1, got {order}")


def _workers(args: argparse.Namespace, config: MomentsConfig) -> int:
    return config.max_workers if args.parallel else 1


def _moments_of(
    path: Path, order: int, args: argparse.Namespace, config: MomentsConfig
) -> MomentVector:
    p = _polytope(path)
    t = star_triangulation(p, args.apex) if getattr(args, "apex", None) else star_triangulation(p)
    return polytope_moments(p, t, order, _workers(args, config))


def cmd_moments(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    _check_order(args.order)
    return MomentVectorSchema.from_vector(_moments_of(args.polytope, args.order, args, config)), 0


def cmd_adjoint(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    p = _polytope(args.polytope)
    t = star_triangulation(p, args.apex) if args.apex else star_triangulation(p)
    ad = adjoint_poly(p, t)
    nonfaces = None
    if args.nonfaces:
        nonfaces = [
            NonfaceSchema(
                nonface=[k + 1 for k in item.nonface], status=item.status, dimension=item.dimension
            )
            for item in nonface_vanishing_check(p, ad)
        ]
    return AdjointSchema(adjoint=PolynomialSchema.from_poly(ad), nonfaces=nonfaces), 0


def cmd_cumulants(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    _check_order(args.order)
    if args.moments is not None:
        m = _read_schema(args.moments, MomentVectorSchema).to_vector()
        if args.order is not None:
            m = m.truncate(args.order)
    else:
        if args.order is None:
            raise UsageError("--polytope needs --order")
        m = _moments_of(args.polytope, args.order, args, config)
    k = moments_to_cumulants(m.normalize())
    newton = None
    if args.newton:
        newton = {}
        for key in args.newton:
            index = parse_index_key(key)
            newton[index_key(index)] = newton_reduce(k, index)
    plucker = plucker_from_cumulants(k) if args.plucker else None
    output = CumulantsOutput(
        cumulants=CumulantVectorSchema.from_vector(k), newton=newton, plucker=plucker
    )
    return output, 0


def cmd_recover1d(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    _check_order(args.order)
    if args.moments is not None:
        if args.d is None or args.n is None:
            raise UsageError("--moments needs --d and --n")
        d, n = args.d, args.n
        sequence = _read_schema(args.moments, MomentVectorSchema).sequence()
        if args.order is not None:
            sequence = sequence[: args.order + 1]
    else:
        if args.direction is None:
            raise UsageError("--polytope needs --direction")
        p = _polytope(args.polytope)
        d = p.d if args.d is None else args.d
        n = p.n if args.n is None else args.n
        order = 2 * n - d + 1 if args.order is None else args.order
        sequence = project_moments(_moments_of(args.polytope, order, args, config), args.direction)
    if args.numeric:
        result = recover_spline_numeric(
            [float(x) for x in sequence], d, n, config.rank_threshold
        )
        return NumericSplineSchema(
            d=d,
            n=n,
            rank=result.rank,
            nodes=[float(x) for x in result.nodes],
            numerator=[float(x) for x in result.numerator],
        ), 0
    model = recover_spline(sequence, d, n, config.root_tolerance)
    return SplineModelSchema.from_model(model), 0


def _invariant_moments(args: argparse.Namespace, config: MomentsConfig) -> MomentVector:
    if args.moments is not None:
        return _read_schema(args.moments, MomentVectorSchema).to_vector()
    return _moments_of(args.polytope, 3, args, config)


class InvariantsOutput(BaseModel):
    invariants: list[InvariantValueSchema]


def cmd_invariants(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    values = affine_invariants(_invariant_moments(args, config), config.cache_dir)
    return InvariantsOutput(invariants=[InvariantValueSchema.from_value(v) for v in values]), 0


def cmd_verify(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    entries = load_catalog(config.relations_dir)
    seed = config.seed if args.seed is None else args.seed
    trials = config.fuzz_trials if args.trials is None else args.trials
    if trials < 1:
        raise UsageError(f"--trials must be at least 1, got {trials}")
    box = SamplingBox(config.coordinate_bound, config.denominator_bound)
    if args.all:
        report = fuzz_catalog(entries, trials, seed, _workers(args, config), box, config.cache_dir)
        logger.info(f"Catalog verification: {len(report.failed)} of {len(entries)} failed")
        return CatalogReportSchema.from_report(report), 0 if report.passed else 1
    entry = find_relation(entries, args.relation)
    if args.moments is not None:
        point = RelationPoint(moments=_read_schema(args.moments, MomentVectorSchema).to_vector())
    elif args.cumulants is not None:
        point = RelationPoint(
            cumulants=_read_schema(args.cumulants, CumulantVectorSchema).to_vector()
        )
    elif args.polytope is not None:
        point = RelationPoint(moments=_moments_of(args.polytope, entry.r, args, config))
    else:
        fuzz = fuzz_relation(entry, trials, seed, box=box, cache_dir=config.cache_dir)
        return FuzzReportSchema.from_report(fuzz), 0 if fuzz.passed else 1
    value = check_relation(entry, point, config.cache_dir)
    report = RelationReportSchema(
        relation=entry.id, citation=entry.citation, value=value, vanishes=value == 0
    )
    return report, 0 if value == 0 else 1


def cmd_transform(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    m = _read_schema(args.moments, MomentVectorSchema).to_vector()
    g = _read_schema(args.map, AffineMapSchema).to_map()
    return MomentVectorSchema.from_vector(transform_moments(m, g)), 0


def cmd_sample(args: argparse.Namespace, config: MomentsConfig) -> tuple[BaseModel, int]:
    _check_order(args.order)
    p = _polytope(args.polytope)
    t = star_triangulation(p)
    count = config.mc_samples if args.samples is None else args.samples
    seed = config.seed if args.seed is None else args.seed
    m = monte_carlo_moments(p, t, args.order, count, seed)
    errors = monte_carlo_standard_errors(p, t, args.order, count, seed)
    return MonteCarloSchema(
        d=p.d,
        r=args.order,
        samples=count,
        seed=seed,
        values={index_key(index): float(value) for index, value in m.items()},
        standard_errors={index_key(index): err for index, err in errors.items()},
    ), 0


COMMANDS = {
    "moments": cmd_moments,
    "adjoint": cmd_adjoint,
    "cumulants": cmd_cumulants,
    "recover1d": cmd_recover1d,
    "invariants": cmd_invariants,
    "verify": cmd_verify,
    "transform": cmd_transform,
    "sample": cmd_sample,
}


def _flatten(prefix: str, value: Any, rows: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for key, item in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), item, rows)
    elif isinstance(value, list) and not (
        len(value) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in value)
    ):
        for position, item in enumerate(value):
            _flatten(f"{prefix}[{position}]", item, rows)
    elif isinstance(value, list):
        numerator, denominator = value
        rows.append((prefix, str(numerator) if denominator == 1 else f"{numerator}/{denominator}"))
    else:
        rows.append((prefix, "" if value is None else json.dumps(value).strip('"')))


def render(result: BaseModel, output_format: str, decimal_places: int | None) -> str:
    """Serialize a result as indented JSON or as two-column ``key,value`` CSV."""
    context = {"decimal": decimal_places} if decimal_places else None
    if output_format == "json":
        return result.model_dump_json(indent=2, context=context) + "\n"
    rows: list[tuple[str, str]] = []
    _flatten("", result.model_dump(mode="json", context=context), rows)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("key", "value"))
    writer.writerows(rows)
    return buffer.getvalue()


def _error(exc: Exception, error_type: str) -> str:
    return json.dumps(create_error_response(error_type, str(exc)), indent=2) + "\n"


def run_cli(argv: Sequence[str] | None = None, config: MomentsConfig | None = None) -> int:
    """Run one command, writing its output to stdout; returns the exit status."""
    try:
        config = get_config() if config is None else config
    except ValidationError as exc:
        sys.stdout.write(_error(exc, "configuration_error"))
        return 2
    configure_logging(config)
    try:
        args = build_parser().parse_args(argv)
        logger.debug(f"Running {args.command} with seed {args.seed}")
        result, status = COMMANDS[args.command](args, config)
        places = config.decimal_places if args.decimal else None
        sys.stdout.write(render(result, args.format, places))
        return status
    except MomentError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        sys.stdout.write(_error(exc, exc.error_type))
        return exc.exit_code
    except ValidationError as exc:
        logger.error(f"Invalid input: {exc}")
        sys.stdout.write(_error(exc, "validation_error"))
        return 2
    except np.linalg.LinAlgError as exc:
        logger.error(f"Floating-point failure: {exc}")
        sys.stdout.write(_error(exc, "degeneracy_error"))
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
