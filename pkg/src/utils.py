import cmath
import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Union

import numpy as np

from src.errors import ConfigParseError, NonFiniteError

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

console_handler = logging.StreamHandler()
console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
console_handler.setLevel(logging.WARNING)


def get_project_root() -> Path:
    return Path(__file__).parent.parent


def get_config_path() -> Path:
    return get_project_root() / 'configs'


def get_logger(name: str) -> logging.Logger:
    """
    module loggers all share the one console handler so verbosity is set in a single place
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)
    if console_handler not in logger.handlers:
        logger.addHandler(console_handler)
    logger.propagate = False
    return logger


def configure_logging(verbose: bool = False):
    console_handler.setLevel(logging.DEBUG if verbose else logging.WARNING)


def ensure_finite(value, what: str = "value"):
    if isinstance(value, np.ndarray):
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(f"non-finite {what} encountered")
    elif not cmath.isfinite(value):
        raise NonFiniteError(f"non-finite {what}: {value}")
    return value


def to_pair(z: complex) -> list:
    """complex numbers serialize as [re, im]"""
    z = complex(z)
    return [z.real, z.imag]


def maybe_pair(z):
    return None if z is None else to_pair(z)


def parse_real(text: str) -> float:
    text = text.strip()
    if text in ("inf", "+inf"):
        return math.inf
    try:
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigParseError(f"cannot parse real number {text!r}") from e


def parse_complex(text: Union[str, float, complex]) -> complex:
    """
    parses complex literals written as re+imi, e.g. "1", "-0.5", "0.2+1i", "2.5e-3-4i", "1i", "-i",
    or as a parenthesised pair "(re, im)"
    """
    if isinstance(text, (int, float, complex)):
        return complex(text)
    text = text.strip().replace(" ", "")
    if text.startswith("(") and text.endswith(")"):
        parts = text[1:-1].split(",")
        if len(parts) != 2:
            raise ConfigParseError(f"complex pair must have two entries: {text!r}")
        return complex(parse_real(parts[0]), parse_real(parts[1]))
    if "/" in text:
        return complex(parse_real(text))
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        pass
    # "i", "-i", "2-i" style literals without a coefficient
    try:
        return complex(text.replace("i", "1j") if text.endswith("i") and not text[-2:-1].isdigit() else text)
    except ValueError as e:
        raise ConfigParseError(f"cannot parse complex number {text!r}") from e


def format_complex(z: complex) -> str:
    z = complex(z)
    sign = "+" if z.imag >= 0 or math.isnan(z.imag) else "-"
    return f"{z.real:.17g}{sign}{abs(z.imag):.17g}i"


def log1p_complex(x):
    """
    principal Log(1 + x) accurate for small |x|, scalar or array (Kahan's correction of 1 + x)
    """
    if isinstance(x, np.ndarray):
        u = 1 + x
        shifted = u - 1
        safe = np.where(shifted == 0, 1, shifted)
        return np.where(shifted == 0, x, np.log(u) * x / safe)
    x = complex(x)
    u = 1 + x
    if u - 1 == 0:
        return x
    return cmath.log(u) * x / (u - 1)
