"""Containers for time traces and per-order cumulant terms."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AmplitudeTrace:
    """Complex amplitude G(t) and echo L(t) = |G(t)|**2 on a time grid.

    ``method`` is one of ``exact``, ``cumulant-<n>``, ``resummed-sp``,
    ``resummed-full-<M>`` (optionally suffixed by a variant label).
    """

    method: str
    times: np.ndarray
    g_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.g_values = np.asarray(self.g_values, dtype=complex)
        if self.times.shape != self.g_values.shape:
            raise ValueError("times and g_values must have equal shapes")

    @property
    def l_values(self) -> np.ndarray:
        return np.abs(self.g_values) ** 2

    @classmethod
    def from_log(cls, method, times, log_g, meta=None):
        g = np.exp(np.asarray(log_g, dtype=complex))
        return cls(method, times, g, dict(meta or {}))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "t": self.times.tolist(),
            "re_g": self.g_values.real.tolist(),
            "im_g": self.g_values.imag.tolist(),
            "l": self.l_values.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AmplitudeTrace":
        g = np.asarray(d["re_g"], dtype=float) + 1j * np.asarray(d["im_g"], dtype=float)
        return cls(d["method"], np.asarray(d["t"], dtype=float), g)

    def __eq__(self, other):
        if not isinstance(other, AmplitudeTrace):
            return NotImplemented
        return (
            self.method == other.method
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.g_values, other.g_values)
        )


@dataclass
class CumulantTerm:
    """Order-n contribution ``-i*delta_e*t - f(t)`` to log G.

    Attributes
    ----------
    order : int
    times : ndarray
    log_g : ndarray of complex
        The full order-n contribution to log G at each time.
    delta_e : float or None
        Energy shift (coefficient of ``-i t`` at late times).  ``None`` when
        the term comes from a numerical fit that only identifies ``log_g``.
    coupling : float
        The delta_h used.
    """

    order: int
    times: np.ndarray
    log_g: np.ndarray
    delta_e: float | None
    coupling: float

    @property
    def f_of_t(self) -> np.ndarray | None:
        if self.delta_e is None:
            return None
        return -self.log_g - 1j * self.delta_e * np.asarray(self.times)
