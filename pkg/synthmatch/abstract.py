import logging
from collections import OrderedDict
from dataclasses import dataclass, fields
from typing import Any, Callable, Union, get_type_hints

from .parsers.json import JSONContent


class Meta:
    """
    Metadata information about Model.
    """
    name: str = ""
    description: str = ""
    strict: bool = True


def create_dataclass(
    new_cls: Union[object, Any]
) -> Callable:
    """
    create_dataclass.
       Create a frozen Dataclass from a simple Class.
    """
    dc = dataclass(
        repr=False,
        init=True,
        order=False,
        eq=False,
        frozen=True
    )(new_cls)
    # adding a properly internal json encoder:
    dc.__encoder__ = JSONContent
    dc.modelName = dc.__name__
    return dc


class ModelMeta(type):
    """ModelMeta.

    Turns an annotated class into an immutable dataclass, keeping
    the column registry (``__columns__``, ``__fields__``) and the
    resolved type hints used by validation.
    """

    def __new__(cls, name, bases, attrs, **kwargs):
        attr_meta = attrs.pop("Meta", None)
        new_cls = super().__new__(cls, name, bases, attrs, **kwargs)
        new_cls.Meta = attr_meta or getattr(new_cls, "Meta", Meta)
        # mix values from Meta to an existing Meta Class
        for key in Meta.__annotations__:
            if not hasattr(new_cls.Meta, key):
                setattr(new_cls.Meta, key, getattr(Meta, key))
        dc = create_dataclass(new_cls)
        cols = OrderedDict((f.name, f) for f in fields(dc))
        try:
            hints = get_type_hints(dc)
        except (NameError, TypeError) as e:
            logging.getLogger(__name__).debug(
                f'Unresolved type hints on {name}: {e}'
            )
            hints = {}
        dc.__columns__ = cols
        dc.__fields__ = list(cols.keys())
        dc.__hints__ = {key: hints.get(key, f.type) for key, f in cols.items()}
        return dc
