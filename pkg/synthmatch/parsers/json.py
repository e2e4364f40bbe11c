"""
JSON Encoders.

Encoder/decoder replacement for json.dumps/json.loads using orjson.
"""
from pathlib import PurePath
from typing import Any

import numpy as np
import orjson

DEFAULT_OPTIONS = orjson.OPT_SERIALIZE_NUMPY


class JSONContent:
    """
    Basic Encoder using orjson
    """
    def __init__(self, **kwargs):
        self.option = kwargs.pop('option', 0)

    def __call__(self, obj: Any, **kwargs) -> str:
        return self.encode(obj, **kwargs)

    def default(self, obj: Any) -> Any:
        if isinstance(obj, np.ndarray):
            # non-contiguous or unsupported dtypes
            return obj.tolist()
        if isinstance(obj, np.generic):
            return obj.item()
        if isinstance(obj, PurePath):
            return str(obj)
        if isinstance(obj, (set, frozenset)):
            return sorted(obj)
        if hasattr(obj, 'to_dict'):
            return obj.to_dict()
        raise TypeError(f'{obj!r} is not JSON serializable')

    def encode(self, obj: Any, **kwargs) -> str:
        option = kwargs.pop('option', self.option) | DEFAULT_OPTIONS
        try:
            return orjson.dumps(
                obj,
                option=option,
                default=self.default
            ).decode('utf-8')
        except orjson.JSONEncodeError as ex:
            raise ValueError(
                f"Invalid JSON content: {ex}"
            ) from ex

    dumps = encode

    def decode(self, obj: Any) -> Any:
        try:
            return orjson.loads(obj)
        except orjson.JSONDecodeError as ex:
            raise ValueError(
                f"Invalid JSON data: {ex}"
            ) from ex

    loads = decode


def json_encoder(obj: Any, **kwargs) -> str:
    return JSONContent().encode(obj, **kwargs)


def json_decoder(obj: Any) -> Any:
    return JSONContent().decode(obj)
