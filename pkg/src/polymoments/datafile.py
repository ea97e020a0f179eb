"""Plain-text polynomial data files.

A file is a block of ``# key: value`` header lines, a ``---`` separator and one
term per line::

    # id: segment-cubic
    # checksum: 6f1c...
    ---
    m1^3 2
    m0 m1 m2 -3
    m0^2 m3 1

Each term lists ``name`` or ``name^power`` tokens followed by an integer or
``p/q`` coefficient. The checksum is the sha256 of the bytes after the
separator line.
"""

import hashlib
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from sympy.polys.rings import PolyElement, PolyRing

from polymoments.algebra import poly_from_terms, polynomial_ring, qq_to_rat
from polymoments.errors import DataIntegrityError

logger = logging.getLogger("polymoments")

SEPARATOR = "---"

Term = tuple[tuple[tuple[str, int], ...], Fraction]


@dataclass(frozen=True)
class PolynomialFile:
    """Parsed contents of a polynomial data file."""

    headers: dict[str, str]
    terms: tuple[Term, ...]
    source: str = field(default="<memory>", compare=False)

    @property
    def variables(self) -> set[str]:
        return {name for factors, _ in self.terms for name, _ in factors}

    def to_poly(self, names: Sequence[str]) -> PolyElement:
        """The polynomial in the ring with the given variable order."""
        return terms_to_poly(self.terms, polynomial_ring(tuple(names)), self.source)


def checksum(body: str) -> str:
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def _parse_coefficient(text: str, where: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise DataIntegrityError(f"{where}: bad coefficient {text!r}") from exc


def _parse_token(token: str, where: str) -> tuple[str, int]:
    name, _, power = token.partition("^")
    if not name or not name[0].isalpha():
        raise DataIntegrityError(f"{where}: bad variable token {token!r}")
    if not power:
        return name, 1
    if not power.isdigit() or int(power) < 1:
        raise DataIntegrityError(f"{where}: bad exponent in {token!r}")
    return name, int(power)


def parse_terms(body: str, source: str = "<memory>") -> tuple[Term, ...]:
    terms = []
    for lineno, line in enumerate(body.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        where = f"{source}: term {lineno}"
        *tokens, coefficient = line.split()
        factors: dict[str, int] = {}
        for token in tokens:
            name, power = _parse_token(token, where)
            factors[name] = factors.get(name, 0) + power
        terms.append((tuple(sorted(factors.items())), _parse_coefficient(coefficient, where)))
    return tuple(terms)


def parse_polynomial_file(
    text: str, source: str = "<memory>", verify: bool = True
) -> PolynomialFile:
    """Parse a data file and check its checksum.

    Raises:
        DataIntegrityError: On a missing separator, malformed header or term,
            or a checksum mismatch.
    """
    marker = f"\n{SEPARATOR}\n"
    if marker not in text:
        raise DataIntegrityError(f"{source}: missing '{SEPARATOR}' separator")
    head, body = text.split(marker, 1)
    headers: dict[str, str] = {}
    for line in head.splitlines():
        if not line.strip():
            continue
        if not line.startswith("#") or ":" not in line:
            raise DataIntegrityError(f"{source}: malformed header line {line!r}")
        key, _, value = line[1:].partition(":")
        headers[key.strip()] = value.strip()
    if verify:
        expected = headers.get("checksum")
        if expected is None:
            raise DataIntegrityError(f"{source}: no checksum header")
        actual = checksum(body)
        if actual != expected:
            raise DataIntegrityError(
                f"{source}: checksum mismatch (expected {expected}, got {actual})"
            )
    return PolynomialFile(headers, parse_terms(body, source), source)


def read_polynomial_file(path: Path, verify: bool = True) -> PolynomialFile:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataIntegrityError(f"cannot read {path}: {exc}") from exc
    return parse_polynomial_file(text, str(path), verify)


def terms_to_poly(terms: Sequence[Term], R: PolyRing, source: str = "<memory>") -> PolyElement:
    position = {str(symbol): i for i, symbol in enumerate(R.symbols)}
    data: dict[tuple[int, ...], Fraction] = {}
    for factors, coefficient in terms:
        monom = [0] * R.ngens
        for name, power in factors:
            if name not in position:
                raise DataIntegrityError(f"{source}: unknown variable {name!r}")
            monom[position[name]] += power
        key = tuple(monom)
        data[key] = data.get(key, Fraction(0)) + coefficient
    return poly_from_terms(R, data)


def poly_to_body(p: PolyElement) -> str:
    """Serialize a polynomial as term lines, largest monomial first."""
    names = [str(symbol) for symbol in p.ring.symbols]
    lines = []
    for monom, coefficient in p.terms():
        tokens = [
            name if e == 1 else f"{name}^{e}" for name, e in zip(names, monom, strict=True) if e
        ]
        lines.append(" ".join([*tokens, str(qq_to_rat(coefficient))]))
    return "\n".join(lines) + "\n"


def render_polynomial_file(headers: Mapping[str, str], p: PolyElement) -> str:
    body = poly_to_body(p)
    head = "".join(f"# {key}: {value}\n" for key, value in headers.items() if key != "checksum")
    return f"{head}# checksum: {checksum(body)}\n{SEPARATOR}\n{body}"


def write_polynomial_file(path: Path, headers: Mapping[str, str], p: PolyElement) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_polynomial_file(headers, p), encoding="utf-8")
    logger.debug(f"Wrote {len(p)} terms to {path}")
