from typing import Any, Optional
from dataclasses import Field as DCField, replace
import numpy as np
from .abstract import ModelMeta, Meta
from .converters import parse_basic
from .exceptions import ConfigError


def _plain(value: Any) -> Any:
    """Recursively converts a value into JSON-friendly primitives."""
    if isinstance(value, ModelMixin):
        return value.to_dict()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


class ModelMixin:
    """Interface for shared methods on Model classes.
    """
    def columns(self):
        return self.__columns__

    @classmethod
    def get_columns(cls):
        return cls.__columns__

    @classmethod
    def get_column(cls, name: str) -> DCField:
        try:
            return cls.__columns__[name]
        except KeyError:
            raise AttributeError(
                f"{cls.__name__} has no column {name}"
            )

    def get_fields(self):
        return self.__fields__

    def __getitem__(self, item):
        return getattr(self, item)

    def __repr__(self) -> str:
        def _short(value):
            if isinstance(value, np.ndarray):
                return f"array(shape={value.shape})"
            return repr(value)
        f_repr = ", ".join(
            f"{name}={_short(getattr(self, name))}" for name in self.__fields__
        )
        return f"{self.__class__.__name__}({f_repr})"

    def to_dict(self) -> dict:
        return {name: _plain(getattr(self, name)) for name in self.__fields__}

    def json(self, **kwargs) -> str:
        encoder = self.__encoder__(**kwargs)
        return encoder(self.to_dict())

    to_json = json

    def replace(self, **changes) -> Any:
        """Returns a copy of the (immutable) model with some fields changed."""
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, obj: dict) -> Any:
        """from_dict.

        Build a Model from a dictionary; unknown keys are rejected on
        strict models.
        """
        if cls.Meta.strict is True:
            unknown = sorted(set(obj) - set(cls.__fields__))
            if unknown:
                raise ConfigError(
                    f"{cls.modelName}: unknown keys {', '.join(unknown)}",
                    payload={k: "unknown key" for k in unknown}
                )
        return cls(**obj)

    @classmethod
    def from_json(cls, obj: str, **kwargs) -> Any:
        decoder = cls.__encoder__(**kwargs)
        try:
            decoded = decoder.loads(obj)
        except ValueError as e:
            raise ConfigError(
                f"{cls.modelName}: Invalid string (JSON) data for decoding: {e}"
            ) from e
        return cls.from_dict(decoded)


class Model(ModelMixin, metaclass=ModelMeta):
    """Model.

    Basic immutable dataclass-based Model.
    """
    Meta = Meta

    def __post_init__(self) -> None:
        """
        Post init method.
        Useful for making Post-validations of Model.
        """


class BaseModel(ModelMixin, metaclass=ModelMeta):
    """
    BaseModel.
    Model with type conversion and field validation, used for options
    and configurations.
    """
    Meta = Meta

    def __post_init__(self) -> None:
        """
        Post init method.
        Converts every field to its annotated type and validates it against
        the Field metadata; cross-field rules go in ``_validate_``.
        """
        errors = {}
        for name, f in self.__columns__.items():
            value = getattr(self, name)
            try:
                value = parse_basic(self.__hints__[name], value)
            except (TypeError, ValueError) as ex:
                errors[name] = f"Wrong Type for {name}: {ex}"
                continue
            object.__setattr__(self, name, value)
            if (error := self._validation_(name, value, f)):
                errors[name] = error
        if not errors:
            errors.update(self._validate_() or {})
        if errors:
            detail = "; ".join(f"{k}: {v}" for k, v in errors.items())
            raise ConfigError(
                f"{self.modelName}: There are errors in Model: {detail}",
                payload=errors
            )

    def _validate_(self) -> Optional[dict]:
        """Cross-field validation hook, returns a dict of errors."""
        return None

    def _validation_(
        self,
        name: str,
        value: Any,
        f: DCField
    ) -> Optional[str]:
        meta = f.metadata
        if value is None:
            if meta.get('required', False):
                return f"Missing Required Field *{name}*"
            return None
        choices = meta.get('choices')
        if choices is not None:
            values = value if isinstance(value, tuple) else (value, )
            invalid = [v for v in values if v not in choices]
            if invalid:
                return f"invalid value {invalid[0]!r}, expected one of {choices}"
        minimum = meta.get('min', None)
        maximum = meta.get('max', None)
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if minimum is not None and value < minimum:
                return f"{value} is lower than minimum {minimum}"
            if maximum is not None and value > maximum:
                return f"{value} is greater than maximum {maximum}"
        return None
