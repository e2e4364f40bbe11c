"""Field.

Declarative field definition for synthmatch models.
"""
from dataclasses import MISSING, field
from typing import Any, Callable, Optional, Union


def Field(  # pylint: disable=C0103
    default: Any = MISSING,
    *,
    default_factory: Union[Callable, Any] = MISSING,
    required: bool = False,
    choices: Optional[tuple] = None,
    description: str = '',
    repr: bool = True,  # pylint: disable=W0622
    **kwargs
):
    """Field.

    Creates a dataclass field carrying validation metadata.

    Args:
        default: default value of the field.
        default_factory: callable producing the default value.
        required (bool): value cannot be None.
        choices (tuple): allowed values.
        description (str): human readable description.
        **kwargs: extra metadata (``min``, ``max``, ``label`` ...).
    """
    if default is not MISSING and default_factory is not MISSING:
        raise ValueError(
            "Cannot specify both default and default_factory on a Field"
        )
    meta = {
        "required": required,
        "choices": tuple(choices) if choices is not None else None,
        "description": description,
        **kwargs
    }
    return field(
        default=default,
        default_factory=default_factory,
        repr=repr,
        metadata=meta
    )


Column = Field
