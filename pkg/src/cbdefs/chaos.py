"""Deterministic chaotic sequence generation (logistic and tent maps).

Two recurrences over [0, 1] serve as structured pseudo-random sources:

    logistic:  v' = lw * v * (1 - v)                      (chaotic for 3.56 < lw <= 4)
    tent:      v' = tw * v        if v < 0.5
               v' = tw * (1 - v)  otherwise               (chaotic for 1 < tw < 2)

States are immutable; advancing returns a new state.  ``ChaosStream`` wraps a
state in a mutable cursor with the same draw interface as
``numpy.random.Generator.random``, so either source can feed the binary
operators.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LOGISTIC_DEFAULT = 4.0
TENT_DEFAULT = 1.5

# Offset applied to seeds that would land on a fixed/absorbing point.
_NUDGE = 1e-6


@dataclass(frozen=True)
class ChaosMap:
    """A map kind ("logistic" or "tent") plus its control parameter."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind == "logistic":
            if not 0.0 <= self.param <= 4.0:
                raise ValueError(f"logistic parameter must lie in [0, 4], got {self.param}")
        elif self.kind == "tent":
            if not 0.0 <= self.param <= 2.0:
                raise ValueError(f"tent parameter must lie in [0, 2], got {self.param}")
        else:
            raise ValueError(f"unknown chaos map kind: {self.kind!r}")


def logistic_map(param: float = LOGISTIC_DEFAULT) -> ChaosMap:
    return ChaosMap("logistic", param)


def tent_map(param: float = TENT_DEFAULT) -> ChaosMap:
    return ChaosMap("tent", param)


@dataclass(frozen=True)
class ChaosState:
    """Current position of an orbit; ``value`` stays in [0, 1]."""

    map: ChaosMap
    value: float


def _degenerate_seeds(m: ChaosMap) -> tuple[float, ...]:
    # Seeds whose orbit collapses: fixed points and their short preimages.
    if m.kind == "logistic":
        vals = [0.0, 0.25, 0.5, 0.75, 1.0]
        if m.param > 1.0:
            vals.append(1.0 - 1.0 / m.param)
        return tuple(vals)
    return (0.0, 1.0, m.param / (1.0 + m.param))


def seed_state(m: ChaosMap, rng_draw: float) -> ChaosState:
    """Seed an orbit from a uniform draw in (0, 1).

    Draws that hit a degenerate point (e.g. 0.5 under logistic(4), which maps
    to 1 then 0 forever; the fixed point tw/(1+tw) under the tent map) are
    nudged by +1e-6, wrapping within (0, 1).
    """
    if not 0.0 < rng_draw < 1.0:
        raise ValueError(f"chaos seed draw must lie in (0, 1), got {rng_draw}")
    value = rng_draw
    if value in _degenerate_seeds(m):
        value = (value + _NUDGE) % 1.0
        if value == 0.0:
            value = _NUDGE
    return ChaosState(m, value)


def step(state: ChaosState) -> ChaosState:
    """Advance one step; result clamped to [0, 1] against rounding overshoot."""
    m = state.map
    v = state.value
    if m.kind == "logistic":
        nxt = m.param * v * (1.0 - v)
    else:
        nxt = m.param * v if v < 0.5 else m.param * (1.0 - v)
    if nxt < 0.0:
        nxt = 0.0
    elif nxt > 1.0:
        nxt = 1.0
    return ChaosState(m, nxt)


def sequence(state: ChaosState, n: int) -> tuple[list[float], ChaosState]:
    """The next ``n`` orbit values and the state to resume from.

    Equivalent to ``n`` repeated ``step`` calls; the recurrence is inlined
    because population initialisation consumes ps*N draws in one call.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    m = state.map
    v = state.value
    out = [0.0] * n
    if m.kind == "logistic":
        p = m.param
        for i in range(n):
            v = p * v * (1.0 - v)
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            out[i] = v
    else:
        p = m.param
        for i in range(n):
            v = p * v if v < 0.5 else p * (1.0 - v)
            if v < 0.0:
                v = 0.0
            elif v > 1.0:
                v = 1.0
            out[i] = v
    return out, ChaosState(m, v)


class ChaosStream:
    """Mutable cursor over an orbit, draw-compatible with ``Generator.random``.

    Each ``random`` call advances the underlying state; the state is exposed
    so a stream can be checkpointed and resumed.
    """

    def __init__(self, state: ChaosState):
        self.state = state

    def random(self, size: int | None = None):
        if size is None:
            vals, self.state = sequence(self.state, 1)
            return vals[0]
        vals, self.state = sequence(self.state, size)
        return np.asarray(vals, dtype=np.float64)
