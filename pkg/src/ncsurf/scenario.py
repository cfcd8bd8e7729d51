"""Scenario and report schema for the command-line and service front ends.

A scenario is a JSON document naming a base order, optional right modules,
bundles built from twisted summands, metric automorphisms, and a task list.
Integers of arbitrary size travel as decimal strings and rationals as
"p/q" strings so nothing is squeezed through binary floating point on the
way in or out.  Reports are rendered through :func:`canonical_json`, which
sorts keys and fixes the layout, so a fixed (scenario, seed) pair yields
byte-identical output.
"""

from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict
from pydantic import ValidationError as _PydanticValidationError


class ParseError(ValueError):
    """Raised when scenario text is not valid JSON or not a valid schema.

    Carries 1-based line/column when the underlying JSON decoder supplies
    them, else 0/0.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ValueError):
    """Raised when a scenario parses but references or shapes do not resolve."""

    def __init__(self, message: str, entity: str = ""):
        super().__init__(message)
        self.entity = entity


class CheckFailure(RuntimeError):
    """Raised on demand when a finished report contains a failing check."""

    def __init__(self, message: str, task_id: str = "", residual: Optional[float] = None):
        super().__init__(message)
        self.task_id = task_id
        self.residual = residual


# Matrix entries accept JSON integers, decimal strings, "p/q" strings, or
# floats (floats mark the whole matrix as a numerical one).
Entry = Union[int, float, str]

_INT_RE = re.compile(r"^[+-]?[0-9]+$")
_RAT_RE = re.compile(r"^([+-]?[0-9]+)/([0-9]+)$")


def parse_integer(value: Entry, entity: str = "integer") -> int:
    if isinstance(value, bool):
        raise ValidationError(f"{entity}: expected an integer, got a boolean", entity)
    if isinstance(value, int):
        return value
    if isinstance(value, str) and _INT_RE.match(value.strip()):
        return int(value.strip())
    raise ValidationError(f"{entity}: expected an integer or decimal string, got {value!r}", entity)


def parse_scalar(value: Entry, entity: str = "scalar") -> Union[int, Fraction, float]:
    """Parse one matrix entry.  Exact when possible, float only for floats."""
    if isinstance(value, bool):
        raise ValidationError(f"{entity}: expected a number, got a boolean", entity)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"{entity}: entries must be finite, got {value!r}", entity)
        return value
    if isinstance(value, str):
        text = value.strip()
        if _INT_RE.match(text):
            return int(text)
        m = _RAT_RE.match(text)
        if m:
            num, den = int(m.group(1)), int(m.group(2))
            if den == 0:
                raise ValidationError(f"{entity}: zero denominator in {value!r}", entity)
            q = Fraction(num, den)
            return int(q) if q.denominator == 1 else q
    raise ValidationError(f"{entity}: cannot parse entry {value!r}", entity)


def parse_matrix(rows, shape=None, entity: str = "matrix"):
    """Parse a rectangular matrix of entries into tuple-of-tuples form.

    shape, when given, is (rows, cols) and is enforced.  A mix of exact and
    float entries degrades the whole matrix to float.
    """
    if not isinstance(rows, (list, tuple)) or not rows:
        raise ValidationError(f"{entity}: expected a non-empty list of rows", entity)
    parsed = []
    width = None
    for row in rows:
        if not isinstance(row, (list, tuple)) or not row:
            raise ValidationError(f"{entity}: rows must be non-empty lists", entity)
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValidationError(f"{entity}: ragged rows ({len(row)} vs {width})", entity)
        parsed.append(tuple(parse_scalar(x, entity) for x in row))
    if shape is not None and (len(parsed), width) != tuple(shape):
        raise ValidationError(
            f"{entity}: expected shape {shape[0]}x{shape[1]}, got {len(parsed)}x{width}",
            entity,
        )
    if any(isinstance(x, float) for row in parsed for x in row):
        return tuple(tuple(float(x) for x in row) for row in parsed)
    return tuple(parsed)


def encode_integer(n: int) -> str:
    return str(int(n))


def encode_rational(q) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def encode_scalar(x):
    """Encode one numeric value for a report: exact as string, float as float."""
    if isinstance(x, bool):
        raise TypeError("booleans are not report numbers")
    if isinstance(x, int):
        return encode_integer(x)
    if isinstance(x, Fraction):
        return encode_rational(x)
    if isinstance(x, float):
        return x
    raise TypeError(f"cannot encode {type(x).__name__} as a report number")


def encode_matrix(rows):
    return [[encode_scalar(x) for x in row] for row in rows]


def canonical_json(payload) -> str:
    """Render a report payload with a fixed byte layout."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


class OrderSpec(BaseModel):
    """Base order: a builtin name, or structure constants with a unit."""

    model_config = ConfigDict(extra="forbid")

    builtin: Optional[str] = None
    constants: Optional[list[list[list[Entry]]]] = None
    unit: Optional[list[Entry]] = None
    name: str = "R"


class ModuleSpec(BaseModel):
    """A right lattice over the order.

    Rank-one orders may give relations only; otherwise explicit action
    matrices (one per order basis element) are required.
    """

    model_config = ConfigDict(extra="forbid")

    ambient_rank: int
    relations: list[list[Entry]] = []
    action: Optional[list[list[list[Entry]]]] = None


class SummandSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    module: str = "regular"
    twist: int = 0


class AutSpec(BaseModel):
    """A metric automorphism.

    kind "identity" needs nothing; "scalar" a nonzero rational; "blocks" a
    map from twist (as decimal string) to a square matrix; "left_mult" an
    order element acting by left multiplication on every regular summand.
    """

    model_config = ConfigDict(extra="forbid")

    kind: Literal["identity", "scalar", "blocks", "left_mult"] = "identity"
    value: Optional[Entry] = None
    blocks: Optional[dict[str, list[list[Entry]]]] = None
    element: Optional[list[Entry]] = None


class BundleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    summands: list[SummandSpec]
    gamma: AutSpec = AutSpec()


class LineSpec(BaseModel):
    """An arithmetic line bundle on a regular twist (R, twist)."""

    model_config = ConfigDict(extra="forbid")

    twist: int = 0
    beta: Optional[list[list[Entry]]] = None


class OmegaSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: Optional[list[list[Entry]]] = None


TaskName = Literal[
    "cohomology",
    "lambda",
    "intersect",
    "rr-check",
    "duality-check",
    "semisimple-check",
    "oracle-compare",
    "selftest",
]


class TaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    task: TaskName
    # cohomology / oracle-compare targets
    bundle: Optional[str] = None
    twists: Optional[list[int]] = None
    degrees: Optional[list[int]] = None
    # lambda / intersect / residual targets
    line: Optional[str] = None
    lines: Optional[list[str]] = None
    tolerance: Optional[float] = None
    assert_simple: bool = False


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    order: OrderSpec
    modules: dict[str, ModuleSpec] = {}
    bundles: dict[str, BundleSpec] = {}
    lines: dict[str, LineSpec] = {}
    omega: OmegaSpec = OmegaSpec()
    tasks: list[TaskSpec]
    tolerance: float = 1e-8
    seed: int = 0


def load_scenario_text(text: str) -> Scenario:
    """Parse scenario JSON text, mapping decoder and schema faults to ParseError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise ParseError("scenario must be a JSON object", 1, 1)
    try:
        return Scenario.model_validate(raw)
    except _PydanticValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "scenario"
        raise ParseError(f"schema error at {where}: {first.get('msg', 'invalid')}") from exc


def load_scenario_file(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario file: {exc}") from exc
    return load_scenario_text(text)


def ensure_passed(report: dict) -> None:
    """Raise CheckFailure for the first failing result of a finished report."""
    if report.get("pass", False):
        return
    for result in report.get("results", []) + report.get("suites", []):
        if result.get("pass") is False:
            task_id = result.get("id", result.get("task", result.get("name", "?")))
            residual = result.get("residual")
            if isinstance(residual, str):
                residual = None
            raise CheckFailure(
                f"check failed in task {task_id}",
                task_id=str(task_id),
                residual=residual,
            )
    raise CheckFailure("report did not pass", task_id="?")
