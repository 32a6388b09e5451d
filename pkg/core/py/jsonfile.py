import json
from fractions import Fraction

from pydantic import BaseModel, ConfigDict, ValidationError

from core.py.errors import ParseError


class StrictModel(BaseModel):
    """Schema base for every file format: unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid", frozen=True)


def load_document(raw, schema, source=None):
    """
    Decode UTF-8 bytes, parse JSON and validate against a pydantic schema.

    Args:
        raw (bytes | str): File contents.
        schema (type[StrictModel]): Top-level schema of the file.
        source (str): File name used in error messages.

    Returns:
        StrictModel: The validated document.

    Raises:
        ParseError: On undecodable bytes, JSON syntax errors (with line and
            column) or schema violations (with the JSON field path).
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not UTF-8: {e.reason}", source, column=e.start) from e
    else:
        text = raw

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, source, line=e.lineno, column=e.colno) from e

    try:
        return schema.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        path = ".".join(str(part) for part in first["loc"])
        raise ParseError(first["msg"], source, path=path or None) from e


def rational_to_json(value):
    """Render a Fraction as {"value": float, "exact": "n/d"}; None stays None."""
    if value is None:
        return None
    value = Fraction(value)
    return {"value": float(value), "exact": f"{value.numerator}/{value.denominator}"}


def dump_json(obj):
    """Serialize to deterministic UTF-8 JSON bytes (LF line endings, trailing newline)."""
    return (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
