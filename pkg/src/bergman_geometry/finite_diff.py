from __future__ import annotations

from typing import Callable, Union

import numpy as np

# Fourth-order central stencil for a first derivative
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0

Value = Union[complex, np.ndarray]


def step_for(x: np.ndarray, base: float) -> float:
    return base * max(1.0, float(np.max(np.abs(x))) if x.size else 1.0)


def derivative(f: Callable[[np.ndarray], Value], x0: np.ndarray, direction: np.ndarray, h: float) -> Value:
    """d/dt f(x0 + t·direction) at t = 0; for holomorphic f and a unit coordinate direction this is ∂f/∂xⱼ."""
    acc: Value = 0.0
    for o, w in zip(_OFFSETS, _WEIGHTS):
        acc = acc + w * np.asarray(f(x0 + o * h * direction))
    return acc / h


def mixed(f: Callable[[np.ndarray], Value], x0: np.ndarray, d1: np.ndarray, d2: np.ndarray, h: float) -> Value:
    """∂²/∂s∂t f(x0 + s·d1 + t·d2) by nesting the first-derivative stencil."""
    return derivative(lambda x: derivative(f, x, d2, h), x0, d1, h)


def central2(f: Callable[[np.ndarray], Value], x0: np.ndarray, direction: np.ndarray, h: float) -> Value:
    """Second-order central first derivative; used where the O(h²) error is the quantity of interest."""
    return (np.asarray(f(x0 + h * direction)) - np.asarray(f(x0 - h * direction))) / (2.0 * h)


def unit(n: int, j: int) -> np.ndarray:
    e = np.zeros(n, dtype=complex)
    e[j] = 1.0
    return e


def dbar(f: Callable[[np.ndarray], Value], x0: np.ndarray, j: int, h: float) -> Value:
    """∂f/∂z̄ⱼ = (∂/∂xⱼ + i∂/∂yⱼ)f / 2; zero for holomorphic f."""
    e = unit(x0.shape[0], j)
    dx = central2(f, x0, e, h)
    dy = central2(f, x0, 1j * e, h)
    return 0.5 * (np.asarray(dx) + 1j * np.asarray(dy))
