from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .errors import ConfigError

ComplexLike = Union[complex, float, int]

_NUM = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_ONLY = re.compile(rf"^(?P<re>[+-]?{_NUM})$")
_FULL = re.compile(rf"^(?P<re>[+-]?{_NUM})(?P<im>[+-](?:{_NUM})?)i$")
_IMAG_ONLY = re.compile(rf"^(?P<im>[+-]?(?:{_NUM})?)i$")


def _imag_coeff(text: str) -> float:
    if text in ("", "+"):
        return 1.0
    if text == "-":
        return -1.0
    return float(text)


def parse_complex(text: str) -> complex:
    """
    Parses the literal grammar used on the command line:

      a        real number
      a+bi     a-bi
      bi  -bi  i  -i

    Decimal literals with an optional exponent; no whitespace anywhere.
    """
    m = _REAL_ONLY.match(text)
    if m:
        return complex(float(m.group("re")), 0.0)
    m = _FULL.match(text)
    if m:
        return complex(float(m.group("re")), _imag_coeff(m.group("im")))
    m = _IMAG_ONLY.match(text)
    if m:
        return complex(0.0, _imag_coeff(m.group("im")))
    raise ConfigError(f"Invalid complex literal: {text!r}")


def parse_vector(text: str) -> np.ndarray:
    parts = text.split(",")
    if not parts or any(p == "" for p in parts):
        raise ConfigError(f"Invalid complex vector: {text!r}")
    return np.array([parse_complex(p) for p in parts], dtype=complex)


def as_vector(z: Union[np.ndarray, Sequence[ComplexLike], ComplexLike]) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex)).ravel()


def format_complex(c: complex) -> str:
    re_part = repr(float(c.real))
    im = float(c.imag)
    sign = "-" if im < 0 or (im == 0.0 and np.signbit(im)) else "+"
    return f"{re_part}{sign}{repr(abs(im))}i"


def complex_pair(c: complex) -> List[float]:
    return [float(c.real), float(c.imag)]


def vector_pairs(v: np.ndarray) -> List[List[float]]:
    return [complex_pair(complex(c)) for c in as_vector(v)]


def matrix_pairs(m: np.ndarray) -> List[List[List[float]]]:
    return [vector_pairs(row) for row in np.atleast_2d(m)]


@dataclass(frozen=True, eq=False)
class PolarizedPoint:
    """
    Independent holomorphic arguments (z, w̄) of K and G.
    The diagonal (z, z̄) is built with PolarizedPoint.diag.
    """

    z: np.ndarray
    wbar: np.ndarray

    def __post_init__(self) -> None:
        z = as_vector(self.z)
        wbar = as_vector(self.wbar)
        if z.shape != wbar.shape:
            raise ValueError(f"z and wbar lengths differ: {z.shape} vs {wbar.shape}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "wbar", wbar)

    @classmethod
    def diag(cls, z: Union[np.ndarray, Sequence[ComplexLike], ComplexLike]) -> "PolarizedPoint":
        zv = as_vector(z)
        return cls(zv, np.conj(zv))

    @classmethod
    def based(cls, z: Union[np.ndarray, Sequence[ComplexLike], ComplexLike], p: Union[np.ndarray, Sequence[ComplexLike], ComplexLike]) -> "PolarizedPoint":
        """(z, p̄): second argument frozen at the basepoint p."""
        return cls(as_vector(z), np.conj(as_vector(p)))

    @property
    def dim(self) -> int:
        return int(self.z.shape[0])

    @property
    def w(self) -> np.ndarray:
        return np.conj(self.wbar)

    def swapped(self) -> "PolarizedPoint":
        """(w, z̄), the argument of the Hermitian-symmetric partner."""
        return PolarizedPoint(np.conj(self.wbar), np.conj(self.z))
