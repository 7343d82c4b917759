import logging
import os
from enum import Enum
from fractions import Fraction
from os import environ
from typing import Any, Callable, Dict, Optional, Type, Union

import numpy as np
import ujson
from pydantic import BaseModel

__all__ = [
    'dump_json',
    'env',
    'get_logger',
    'load_json',
    'parse_number',
    'to_plain',
]

_TRUE = ('1', 'true', 'yes', 'y', 'ok', 'on')
_FALSE = ('0', 'false', 'no', 'n', 'nok', 'off')


def _to_bool(val: str) -> bool:
    if val.lower() in _TRUE:
        return True
    if val.lower() in _FALSE:
        return False
    raise ValueError('expected a boolean')


_CONVERTERS: Dict[type, Callable[[str], Any]] = {
    str: str,
    bool: _to_bool,
    int: int,
    dict: ujson.loads,
}


def env(
    key: str,
    type_: Type[Union[str, bool, int, dict, float]] = str,
    default: Optional[Any] = None,
) -> Any:
    """Returns the value of the supplied env key name converting
    the env key's value to the specified type.

    If the env key does not exist the default value is returned.

    Boolean values for env keys are expected to be:
      - true: 1, true, yes, y, ok, on
      - false: 0, false, no, n, nok, off

    Float values additionally accept fractions such as ``2/3``.

    :param key: The name of the environment variable
    :param type_: What type should the the env key's value be converted to,
    defaults to str
    :param default: The default value of the env key, defaults to None
    :return: The value of the env key or the supplied default
    """
    if key not in environ:
        return default

    val = environ[key]
    convert = _CONVERTERS.get(type_, parse_number)
    try:
        return convert(val)
    except ValueError:
        raise ValueError(
            f'Invalid environment variable "{key}" (expected a {type_.__name__}): "{val}"'
        )


def parse_number(text: Union[str, float, int]) -> float:
    """Parses a real number, accepting exact fractions like ``2/3``

    :param text: The text to parse
    :return: The parsed value as a float
    """
    if isinstance(text, (int, float)):
        return float(text)
    text = text.strip()
    if '/' in text:
        return float(Fraction(text))
    return float(text)


def get_logger(name: str = '') -> logging.Logger:
    """Returns the toolkit logger (or one of its children), honouring
    the DEBUG environment variable

    :param name: Optional child logger name
    :return: The logger
    """
    base = logging.getLogger('crnrealize')
    if os.environ.get('DEBUG'):
        base.setLevel(logging.DEBUG)
    else:
        base.setLevel(logging.INFO)
    return base.getChild(name) if name else base


def to_plain(value: Any) -> Any:
    """Converts numpy arrays and scalars nested in value to plain
    python lists, ints and floats so they can be serialized
    """
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, BaseModel):
        return to_plain(value.dict())
    if isinstance(value, dict):
        return {key: to_plain(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(val) for val in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def dump_json(value: Any) -> str:
    """Serializes value deterministically (sorted keys, fixed indent)
    so identical inputs produce byte-identical artifacts
    """
    return ujson.dumps(
        to_plain(value), sort_keys=True, indent=2, escape_forward_slashes=False
    ) + '\n'


def load_json(text: str) -> Any:
    return ujson.loads(text)
