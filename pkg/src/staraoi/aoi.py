"""Discrete-time age-of-information state machine and episode metrics.

Each information stream tracks the triple (A, z, b): destination age,
system time of the buffered packet, and packet availability. A slot's
update consumes the realized schedule/delivery outcome plus the next
slot's arrival indicator.
"""

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class StreamState:
    """Per-stream AoI triple plus the stream's arrival probability."""

    a: int = 1
    z: int = 0
    b: bool = False
    arrival_rate: float = 0.6

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("age must be at least 1")
        if self.z < 0:
            raise ValueError("system time must be nonnegative")
        if not 0.0 <= self.arrival_rate <= 1.0:
            raise ValueError("arrival rate must lie in [0, 1]")
        if self.b and self.z > self.a:
            raise ValueError("buffered packet cannot be older than the age")


def sample_arrival(lam, rng):
    """Bernoulli(lam) status-packet arrival."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("arrival probability must lie in [0, 1]")
    return bool(rng.random() < lam)


def step(state, scheduled, delivered, arrival):
    """Advance one slot.

    With e = scheduled and b and delivered:
      A' = e*z + (1-e)*A + 1
      z' = 0 if arrival else z + 1
      b' = arrival or (b and not (scheduled and delivered) and not arrival)
    A failed transmission (scheduled but not delivered) ages normally.
    """
    if delivered and not (scheduled and state.b):
        raise ValueError("delivery requires a scheduled stream with a buffered packet")
    e = scheduled and state.b and delivered
    a_next = (state.z if e else state.a) + 1
    z_next = 0 if arrival else state.z + 1
    b_next = arrival or (state.b and not (scheduled and delivered) and not arrival)
    return replace(state, a=a_next, z=z_next, b=b_next)


def delivery_predicate(snr_value, scheduled, b, gamma_th):
    """True when a scheduled, buffered packet clears the SNR threshold."""
    if gamma_th <= 0:
        raise ValueError("gamma_th must be positive")
    return bool(scheduled and b and snr_value >= gamma_th)


def reduction_weight(state):
    """Age reduction (A - z)*b available from delivering the buffered packet."""
    return float((state.a - state.z) * int(state.b))


@dataclass
class AoITrace:
    """Per-slot, per-stream history of (A, z, b, scheduled, delivered)."""

    a: dict
    z: dict
    b: dict
    scheduled: dict
    delivered: dict

    @classmethod
    def empty(cls):
        return cls(*({"t": [], "r": []} for _ in range(5)))

    def append(self, side, state, scheduled, delivered):
        self.a[side].append(state.a)
        self.z[side].append(state.z)
        self.b[side].append(bool(state.b))
        self.scheduled[side].append(bool(scheduled))
        self.delivered[side].append(bool(delivered))

    def horizon(self):
        n = len(self.a["t"])
        for field in (self.a, self.z, self.b, self.scheduled, self.delivered):
            if any(len(v) != n for v in field.values()):
                raise ValueError("trace streams have unequal lengths")
        return n


def average_sum_aoi(trace):
    """(1 / 2N) * sum over slots and streams of A_k(n)."""
    n = trace.horizon()
    if n == 0:
        raise ValueError("trace is empty")
    total = float(np.sum(trace.a["t"]) + np.sum(trace.a["r"]))
    return total / (2.0 * n)
