"""Chaotic maps used by the cipher: PWLCM, Chebyshev (degree 4) and Logistic-Sine.

Each map is a small mutable state object.  Single steps go through the
pure-Python ``*_next`` functions; long runs go through numba kernels that
evaluate the identical floating-point expressions, so both paths emit the
same bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from numba import njit


@dataclass
class PwlcmState:
    lam: float
    y: float

    def __post_init__(self):
        if not 0.0 < self.lam <= 0.5:
            raise ValueError(f"PWLCM lambda must lie in (0, 0.5], got {self.lam!r}")


@dataclass
class ChebyshevState:
    x: float
    k: int = 4

    def __post_init__(self):
        if self.k != 4:
            raise ValueError("only the degree-4 Chebyshev map is supported")
        if not -1.0 <= self.x <= 1.0:
            raise ValueError(f"Chebyshev seed must lie in [-1, 1], got {self.x!r}")


@dataclass
class LogisticSineState:
    r: float
    z: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 4.0:
            raise ValueError(f"Logistic-Sine r must lie in [0, 4], got {self.r!r}")
        if not 0.0 <= self.z < 1.0:
            raise ValueError(f"Logistic-Sine seed must lie in [0, 1), got {self.z!r}")


MapState = Union[PwlcmState, ChebyshevState, LogisticSineState]


# The scalar step functions below are written so numba can compile them
# unchanged.  Keep the expression order as is: the kernels and the
# pure-Python path must round identically.

def _pwlcm_step(y, lam):
    if y <= lam:
        v = y / lam
    elif y <= 0.5:
        v = (1.0 - y) / (1.0 - lam)
    else:
        u = 1.0 - y
        if u <= lam:
            v = u / lam
        else:
            v = (1.0 - u) / (1.0 - lam)
    v = v % 1.0
    if v == 0.0 or v == 1.0:
        v = lam / 2.0
    return v


def _chebyshev_step(x):
    x2 = x * x
    x4 = x2 * x2
    v = 8.0 * x4 - 8.0 * x2 + 1.0
    # rounding can push the minimum a hair below -1
    if v < -1.0:
        v = -1.0
    elif v > 1.0:
        v = 1.0
    return v


def _logistic_sine_step(z, r):
    return (r * z * (1.0 - z) + (4.0 - r) * math.sin(math.pi * z) / 4.0) % 1.0


_pwlcm_jit = njit(cache=True)(_pwlcm_step)
_chebyshev_jit = njit(cache=True)(_chebyshev_step)
_logistic_sine_jit = njit(cache=True)(_logistic_sine_step)


@njit(cache=True)
def _pwlcm_run(y, lam, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        y = _pwlcm_jit(y, lam)
        out[i] = y
    return out


@njit(cache=True)
def _chebyshev_run(x, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        x = _chebyshev_jit(x)
        out[i] = x
    return out


@njit(cache=True)
def _logistic_sine_run(z, r, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        z = _logistic_sine_jit(z, r)
        out[i] = z
    return out


def pwlcm_next(state: PwlcmState) -> float:
    state.y = _pwlcm_step(state.y, state.lam)
    return state.y


def chebyshev_next(state: ChebyshevState) -> float:
    state.x = _chebyshev_step(state.x)
    return state.x


def logistic_sine_next(state: LogisticSineState) -> float:
    state.z = _logistic_sine_step(state.z, state.r)
    return state.z


def generate_sequence(state: MapState, n: int) -> np.ndarray:
    """Return the next ``n`` iterates of ``state`` and advance it ``n`` steps."""
    if n < 0:
        raise ValueError("sequence length must be non-negative")
    if n == 0:
        return np.empty(0, dtype=np.float64)
    if isinstance(state, PwlcmState):
        seq = _pwlcm_run(float(state.y), float(state.lam), n)
        state.y = float(seq[-1])
    elif isinstance(state, ChebyshevState):
        seq = _chebyshev_run(float(state.x), n)
        state.x = float(seq[-1])
    elif isinstance(state, LogisticSineState):
        seq = _logistic_sine_run(float(state.z), float(state.r), n)
        state.z = float(seq[-1])
    else:
        raise TypeError(f"not a chaotic map state: {type(state).__name__}")
    return seq


def warmup() -> None:
    """Force JIT compilation so the first timed call is not a compile."""
    generate_sequence(PwlcmState(0.3, 0.1), 1)
    generate_sequence(ChebyshevState(0.1), 1)
    generate_sequence(LogisticSineState(3.9, 0.1), 1)
