"""Test-case value domain: validation, serialization, and comparison.

A value is None, a bool, an int, a float, a str, a list of values, or a
dict with str keys and value values. This is exactly what survives a JSON
round trip, which is what the sandbox wire protocol relies on.
"""

from __future__ import annotations

import math
from typing import Any, Union

Value = Union[None, bool, int, float, str, list, dict]

MAX_VALUE_DEPTH = 64


class InvalidValueError(ValueError):
    """A value falls outside the supported domain."""


def validate_value(value: Any, path: str = "value", depth: int = 0) -> None:
    """Raise InvalidValueError unless ``value`` is in the value domain.

    Numbers must be finite: NaN/Inf are rejected inside test definitions.
    """
    if depth > MAX_VALUE_DEPTH:
        raise InvalidValueError(f"{path}: nesting exceeds depth {MAX_VALUE_DEPTH}")
    if value is None or isinstance(value, (bool, str)):
        return
    if isinstance(value, int):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidValueError(f"{path}: non-finite number {value!r}")
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            validate_value(item, f"{path}[{i}]", depth + 1)
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise InvalidValueError(f"{path}: mapping key {key!r} is not a string")
            validate_value(item, f"{path}[{key!r}]", depth + 1)
        return
    raise InvalidValueError(f"{path}: unsupported type {type(value).__name__}")


def is_number(value: Any) -> bool:
    """True for int/float, excluding bool (a distinct category here)."""
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def contains_float(value: Any) -> bool:
    """True if any leaf of ``value`` is a float."""
    if isinstance(value, float) and not isinstance(value, bool):
        return True
    if isinstance(value, list):
        return any(contains_float(v) for v in value)
    if isinstance(value, dict):
        return any(contains_float(v) for v in value.values())
    return False


def _same_category(a: Any, b: Any) -> bool:
    if is_number(a) and is_number(b):
        return True
    if isinstance(a, bool) and isinstance(b, bool):
        return True
    return type(a) is type(b)


def values_equal(actual: Any, expected: Any) -> bool:
    """Deep structural equality.

    The int/float distinction collapses for numbers that compare equal
    (2 == 2.0), but bool never matches a number and numbers never match
    strings.
    """
    if actual is None or expected is None:
        return actual is None and expected is None
    if not _same_category(actual, expected):
        return False
    if is_number(actual):
        return actual == expected
    if isinstance(actual, (bool, str)):
        return actual == expected
    if isinstance(actual, list):
        if len(actual) != len(expected):
            return False
        return all(values_equal(a, e) for a, e in zip(actual, expected))
    if isinstance(actual, dict):
        if set(actual) != set(expected):
            return False
        return all(values_equal(actual[k], expected[k]) for k in actual)
    return False


def values_close(actual: Any, expected: Any, rel: float) -> bool:
    """Elementwise tolerant equality: |a - e| <= rel * max(1, |e|) on numbers.

    Non-numeric leaves and container structure are compared exactly.
    """
    if is_number(actual) and is_number(expected):
        return abs(actual - expected) <= rel * max(1.0, abs(expected))
    if actual is None or expected is None:
        return actual is None and expected is None
    if not _same_category(actual, expected):
        return False
    if isinstance(actual, (bool, str)):
        return actual == expected
    if isinstance(actual, list):
        if len(actual) != len(expected):
            return False
        return all(values_close(a, e, rel) for a, e in zip(actual, expected))
    if isinstance(actual, dict):
        if set(actual) != set(expected):
            return False
        return all(values_close(actual[k], expected[k], rel) for k in actual)
    return False


def multisets_equal(actual: Any, expected: Any) -> bool:
    """Order-insensitive sequence equality under the exact rule."""
    if not isinstance(actual, list) or not isinstance(expected, list):
        return False
    if len(actual) != len(expected):
        return False
    remaining = list(expected)
    for item in actual:
        for i, candidate in enumerate(remaining):
            if values_equal(item, candidate):
                del remaining[i]
                break
        else:
            return False
    return True
