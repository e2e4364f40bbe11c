"""
Converters.

Type-driven conversion of raw values (strings coming from configuration
files or the command line) into the annotated type of a model field.
"""
from typing import Any, Union, get_args, get_origin

import numpy as np

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')
_NULLS = ('', 'none', 'null')


def to_boolean(value: Any) -> bool:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str):
        val = value.strip().lower()
        if val in _TRUE:
            return True
        if val in _FALSE:
            return False
    raise ValueError(f"Invalid boolean value: {value!r}")


def to_integer(value: Any) -> int:
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"Invalid integer value: {value!r}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if float(value).is_integer():
            return int(value)
        raise ValueError(f"Invalid integer value: {value!r}")
    if isinstance(value, str):
        return int(value.strip())
    raise ValueError(f"Invalid integer value: {value!r}")


def to_float(value: Any) -> float:
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"Invalid float value: {value!r}")
    if isinstance(value, str):
        return float(value.strip())
    return float(value)


def _split(value: Any) -> list:
    if isinstance(value, str):
        return [v.strip() for v in value.split(',') if v.strip()]
    if isinstance(value, np.ndarray):
        return value.tolist()
    return list(value)


def parse_basic(_type: Any, value: Any) -> Any:
    """parse_basic.

    Convert a value to the given annotated type.

    Supports ``int``, ``float``, ``bool``, ``str``, ``Optional[...]``,
    ``Union[...]`` and homogeneous tuples/lists (``tuple[int, ...]``).
    Unknown types return the value unchanged.
    """
    if value is None:
        return None
    origin = get_origin(_type)
    if origin is Union:
        args = [a for a in get_args(_type) if a is not type(None)]
        if isinstance(value, str) and value.strip().lower() in _NULLS:
            return None
        errors = []
        for arg in args:
            try:
                return parse_basic(arg, value)
            except (TypeError, ValueError) as ex:
                errors.append(str(ex))
        raise ValueError(
            f"Value {value!r} does not match any of {args}: {'; '.join(errors)}"
        )
    if origin in (tuple, list):
        args = [a for a in get_args(_type) if a is not Ellipsis]
        items = _split(value)
        if args:
            items = [parse_basic(args[0], v) for v in items]
        return tuple(items) if origin is tuple else items
    if _type is bool:
        return to_boolean(value)
    if _type is int:
        return to_integer(value)
    if _type is float:
        return to_float(value)
    if _type is str:
        if isinstance(value, str):
            return value.strip()
        if isinstance(value, (int, float, np.number)):
            return str(value)
        raise ValueError(f"Invalid string value: {value!r}")
    return value
