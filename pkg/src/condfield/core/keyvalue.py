"""Plain-text ``key = value`` files.

One assignment per line; ``#`` starts a comment; blank lines are ignored.
Grouped items use dotted keys with an integer index, e.g. ``shell.0.tissue``.
"""

from pathlib import Path
from typing import Any

from condfield.exceptions.custom_errors import ConfigurationError, InputFileNotFoundError
from condfield.exceptions.types import ErrorContext


def parse_key_values(text: str, source: str = "<text>") -> dict[str, str]:
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"{source}:{number}: expected 'key = value', got '{line}'",
                ErrorContext(operation="parse_key_values", path=source),
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: empty key")
        if key in values:
            raise ConfigurationError(f"{source}:{number}: duplicate key '{key}'")
        values[key] = value
    return values


def read_key_values(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(str(path), ErrorContext(operation="read_key_values"))
    return parse_key_values(path.read_text(encoding="ascii"), str(path))


def format_value(value: Any) -> str:
    if isinstance(value, (tuple, list)):
        return " ".join(format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_key_values(items: list[tuple[str, Any]]) -> str:
    return "".join(f"{key} = {format_value(value)}\n" for key, value in items)


def floats(value: str, count: int | None = None, key: str = "") -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in value.replace(",", " ").split())
    except ValueError as error:
        raise ConfigurationError(f"'{key}': expected numbers, got '{value}'") from error
    if count is not None and len(out) != count:
        raise ConfigurationError(f"'{key}': expected {count} numbers, got {len(out)}")
    return out


def integers(value: str, count: int | None = None, key: str = "") -> tuple[int, ...]:
    try:
        out = tuple(int(v) for v in value.replace(",", " ").split())
    except ValueError as error:
        raise ConfigurationError(f"'{key}': expected integers, got '{value}'") from error
    if count is not None and len(out) != count:
        raise ConfigurationError(f"'{key}': expected {count} integers, got {len(out)}")
    return out


def grouped(values: dict[str, str], prefix: str) -> list[dict[str, str]]:
    """Collect ``prefix.<i>.<field>`` keys into a list ordered by ``i``."""
    groups: dict[int, dict[str, str]] = {}
    for key, value in values.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != prefix:
            continue
        try:
            index = int(parts[1])
        except ValueError as error:
            raise ConfigurationError(f"'{key}': group index must be an integer") from error
        groups.setdefault(index, {})[parts[2]] = value
    indices = sorted(groups)
    if indices != list(range(len(indices))):
        raise ConfigurationError(f"'{prefix}' groups must be numbered 0..n-1, got {indices}")
    return [groups[i] for i in indices]
