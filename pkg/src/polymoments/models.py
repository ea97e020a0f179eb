"""JSON schemas for the documents the command line reads and writes.

Rationals travel as ``[numerator, denominator]`` integer pairs. Plain integers
and ``"p/q"`` strings are accepted on input; floats never are. When a
serialization context carries ``{"decimal": places}`` rationals are written as
decimal strings with that many significant digits instead.
"""

from fractions import Fraction
from typing import Annotated, Any, Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    SerializationInfo,
    field_validator,
    model_validator,
)
from sympy import Rational as SympyRational

from polymoments.algebra import index_key, parse_index_key, poly_terms
from polymoments.cumulants import CumulantVector
from polymoments.errors import DimensionError, GeometryError
from polymoments.geometry import AffineMap, Polytope
from polymoments.invariants import InvariantValue
from polymoments.moments import MomentVector
from polymoments.recovery import IrrationalNode, SplineModel
from polymoments.relations import CatalogReport, FuzzReport


def parse_rational(value: Any) -> Fraction:
    """Read a rational from a pair, an integer or a ``p/q`` string."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, float)):
        raise ValueError(f"rationals must be exact, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad rational string {value!r}") from exc
    if isinstance(value, (list, tuple)) and len(value) == 2:
        numerator, denominator = value
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in value):
            raise ValueError(f"rational pair must hold integers, got {value!r}")
        if denominator <= 0:
            raise ValueError(f"denominator must be positive, got {denominator}")
        return Fraction(numerator, denominator)
    raise ValueError(f"expected [numerator, denominator], got {value!r}")


def format_decimal(value: Fraction, places: int) -> str:
    return str(SympyRational(value.numerator, value.denominator).evalf(places))


def _serialize_rational(value: Fraction, info: SerializationInfo) -> Any:
    places = (info.context or {}).get("decimal")
    if places:
        return format_decimal(value, places)
    return [value.numerator, value.denominator]


RationalPair = Annotated[
    Fraction,
    PlainValidator(parse_rational),
    PlainSerializer(_serialize_rational, when_used="always"),
]


class ErrorDetail(BaseModel):
    """Error detail in error responses."""

    type: str
    message: str


class ErrorResponse(BaseModel):
    """Standardized error response format."""

    type: Literal["error"] = "error"
    error: ErrorDetail


class PolytopeSchema(BaseModel):
    """A polytope as vertex rows and 1-based facet index lists.

    ``facets`` may be omitted for segments, polygons listed in cyclic order and
    simplices.
    """

    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    vertices: list[list[RationalPair]]
    facets: list[list[int]] | None = None

    @model_validator(mode="after")
    def check_shapes(self) -> "PolytopeSchema":
        if any(len(row) != self.d for row in self.vertices):
            raise ValueError(f"every vertex needs {self.d} coordinates")
        if self.facets is not None and any(k < 1 for facet in self.facets for k in facet):
            raise ValueError("facet indices are 1-based")
        return self

    def to_polytope(self) -> Polytope:
        if self.facets is not None:
            return Polytope.from_rows(self.vertices, self.facets, one_based=True)
        if len(self.vertices) == self.d + 1:
            return Polytope.simplex(self.vertices)
        if self.d == 2:
            return Polytope.polygon(self.vertices)
        raise GeometryError("facets are required for polytopes other than simplices and polygons")

    @classmethod
    def from_polytope(cls, p: Polytope) -> "PolytopeSchema":
        return cls(
            d=p.d,
            vertices=[list(row) for row in p.vertices],
            facets=[[k + 1 for k in facet] for facet in p.facets],
        )


def _check_keys(values: dict[str, Fraction], d: int, r: int, lowest: int) -> None:
    for key in values:
        index = parse_index_key(key)
        if len(index) != d:
            raise ValueError(f"index {key!r} does not have {d} entries")
        if not lowest <= sum(index) <= r:
            raise ValueError(f"index {key!r} is outside orders {lowest}..{r}")


class MomentVectorSchema(BaseModel):
    """Moments keyed by ``"i1,i2,..."`` strings in rank order."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    r: int = Field(ge=0)
    normalized: bool = True
    values: dict[str, RationalPair]

    @model_validator(mode="after")
    def check_indices(self) -> "MomentVectorSchema":
        _check_keys(self.values, self.d, self.r, 0)
        return self

    def to_vector(self) -> MomentVector:
        terms = {parse_index_key(key): value for key, value in self.values.items()}
        return MomentVector.from_terms(self.d, self.r, terms, normalized=self.normalized)

    @classmethod
    def from_vector(cls, m: MomentVector) -> "MomentVectorSchema":
        return cls(
            d=m.d,
            r=m.r,
            normalized=m.normalized,
            values={index_key(index): value for index, value in m.items()},
        )

    def sequence(self) -> list[Fraction]:
        """m_0..m_r of a one-dimensional vector."""
        if self.d != 1:
            raise DimensionError(f"a moment sequence needs d=1, got d={self.d}")
        m = self.to_vector()
        m.require_complete()
        return [m[(i,)] for i in range(self.r + 1)]


class CumulantVectorSchema(BaseModel):
    """Cumulants of orders 1..r keyed like moments."""

    model_config = ConfigDict(extra="forbid")

    d: int = Field(ge=1)
    r: int = Field(ge=1)
    values: dict[str, RationalPair]

    @model_validator(mode="after")
    def check_indices(self) -> "CumulantVectorSchema":
        _check_keys(self.values, self.d, self.r, 1)
        return self

    def to_vector(self) -> CumulantVector:
        terms = {parse_index_key(key): value for key, value in self.values.items()}
        return CumulantVector.from_terms(self.d, self.r, terms)

    @classmethod
    def from_vector(cls, k: CumulantVector) -> "CumulantVectorSchema":
        return cls(d=k.d, r=k.r, values={index_key(index): v for index, v in k.items()})


class AffineMapSchema(BaseModel):
    """The map x -> A x + b."""

    model_config = ConfigDict(extra="forbid")

    A: list[list[RationalPair]]
    b: list[RationalPair] | None = None

    def to_map(self) -> AffineMap:
        return AffineMap.from_rows(self.A, self.b)


class IrrationalNodeSchema(BaseModel):
    poly: list[RationalPair]
    interval: tuple[RationalPair, RationalPair]
    approx: float

    @classmethod
    def from_node(cls, node: IrrationalNode) -> "IrrationalNodeSchema":
        return cls(poly=list(node.poly), interval=node.interval, approx=node.approx)


class SplineModelSchema(BaseModel):
    """Nodes with the numerator and denominator of a type (d, n) spline model."""

    d: int = Field(ge=1)
    n: int = Field(ge=1)
    nodes: list[IrrationalNodeSchema | RationalPair]
    numerator: list[RationalPair]
    denominator: list[RationalPair]

    @classmethod
    def from_model(cls, model: SplineModel) -> "SplineModelSchema":
        nodes: list[Any] = [
            IrrationalNodeSchema.from_node(u) if isinstance(u, IrrationalNode) else u
            for u in model.nodes
        ]
        return cls(
            d=model.d,
            n=model.n,
            nodes=nodes,
            numerator=list(model.numerator),
            denominator=list(model.denominator),
        )


class NumericSplineSchema(BaseModel):
    d: int
    n: int
    rank: int
    nodes: list[float]
    numerator: list[float]


class PolynomialSchema(BaseModel):
    """Sparse polynomial keyed by exponent strings over named variables."""

    variables: list[str]
    terms: dict[str, RationalPair]

    @classmethod
    def from_poly(cls, p: Any) -> "PolynomialSchema":
        return cls(
            variables=[str(symbol) for symbol in p.ring.symbols],
            terms={index_key(monom): c for monom, c in sorted(poly_terms(p).items(), reverse=True)},
        )


class NonfaceSchema(BaseModel):
    nonface: list[int]
    status: Literal["vanishes", "nonzero", "vacuous"]
    dimension: int | None = None

    @field_validator("nonface")
    @classmethod
    def one_based(cls, v: list[int]) -> list[int]:
        if any(k < 1 for k in v):
            raise ValueError("non-face vertex indices are 1-based")
        return v


class AdjointSchema(BaseModel):
    adjoint: PolynomialSchema
    nonfaces: list[NonfaceSchema] | None = None


class InvariantValueSchema(BaseModel):
    name: str
    value: RationalPair
    z3_degree: tuple[int, int, int]
    weight: int

    @classmethod
    def from_value(cls, item: InvariantValue) -> "InvariantValueSchema":
        return cls(name=item.name, value=item.value, z3_degree=item.z3_degree, weight=item.weight)


class RelationReportSchema(BaseModel):
    """Value of one catalog relation at supplied data."""

    relation: str
    citation: str
    value: RationalPair
    vanishes: bool


class FuzzFailureSchema(BaseModel):
    trial: int
    value: RationalPair


class FuzzReportSchema(BaseModel):
    relation: str
    family: str
    trials: int
    failures: list[FuzzFailureSchema]
    negative_control_nonzero: bool
    passed: bool

    @classmethod
    def from_report(cls, report: FuzzReport) -> "FuzzReportSchema":
        return cls(
            relation=report.relation,
            family=report.family,
            trials=report.trials,
            failures=[FuzzFailureSchema(trial=t, value=v) for t, v in report.failures],
            negative_control_nonzero=report.negative_control != 0,
            passed=report.passed,
        )


class CatalogReportSchema(BaseModel):
    seed: int
    trials: int
    passed: bool
    failed: list[str]
    reports: list[FuzzReportSchema]

    @classmethod
    def from_report(cls, report: CatalogReport) -> "CatalogReportSchema":
        return cls(
            seed=report.seed,
            trials=report.trials,
            passed=report.passed,
            failed=report.failed,
            reports=[FuzzReportSchema.from_report(item) for item in report.reports],
        )


class MonteCarloSchema(BaseModel):
    """Empirical moments with their standard errors (floating point)."""

    d: int
    r: int
    samples: int
    seed: int
    values: dict[str, float]
    standard_errors: dict[str, float]
