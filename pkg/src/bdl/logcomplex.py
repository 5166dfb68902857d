"""Log-magnitude/phase representation of nonzero complex numbers.

Every interesting quantity in this package is of size e^{O(lambda)}, far
outside double-precision range.  A ``LogComplex`` stores ``log_mag`` (natural
log of the magnitude) and ``phase`` in (-pi, pi], so products and quotients
are exact-cost additions and sums go through log-sum-exp: the larger
log-magnitude is factored out before any exponential is taken, so no
intermediate can overflow.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_phase(phase: float) -> float:
    """Reduce an angle to the canonical interval (-pi, pi]."""
    r = math.remainder(phase, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class LogComplex:
    """A nonzero complex number ``exp(log_mag + i*phase)``."""

    log_mag: float
    phase: float

    def __post_init__(self):
        if not math.isfinite(self.log_mag):
            raise ValueError(f"log_mag must be finite, got {self.log_mag}")
        object.__setattr__(self, "phase", wrap_phase(self.phase))

    @staticmethod
    def from_complex(z: complex) -> "LogComplex":
        z = complex(z)
        if z == 0:
            raise ValueError("LogComplex cannot represent zero")
        return LogComplex(math.log(abs(z)), cmath.phase(z))

    def to_complex(self) -> complex:
        """Down-convert; overflows to inf beyond double range."""
        return cmath.rect(math.exp(self.log_mag), self.phase)

    def __mul__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mag + other.log_mag, self.phase + other.phase)

    def __truediv__(self, other: "LogComplex") -> "LogComplex":
        return LogComplex(self.log_mag - other.log_mag, self.phase - other.phase)

    def __add__(self, other: "LogComplex") -> "LogComplex":
        # Factor out the larger magnitude so the exponentials stay <= 1.
        if other.log_mag > self.log_mag:
            self, other = other, self
        rest = cmath.rect(math.exp(other.log_mag - self.log_mag), other.phase)
        s = cmath.rect(1.0, self.phase) + rest
        if s == 0:
            raise ValueError("exact cancellation in LogComplex addition")
        return LogComplex(self.log_mag + math.log(abs(s)), cmath.phase(s))

    def conjugate(self) -> "LogComplex":
        return LogComplex(self.log_mag, -self.phase)

    def scaled(self, factor: complex) -> "LogComplex":
        """Multiply by an ordinary (moderate-sized) complex factor."""
        return self * LogComplex.from_complex(factor)

    def as_log(self) -> complex:
        """The complex logarithm log_mag + i*phase (principal branch)."""
        return complex(self.log_mag, self.phase)


def logsumexp_complex(log_mags, phases, weights=None) -> LogComplex:
    """Sum terms ``w_k * exp(log_mag_k + i*phase_k)`` in log-sum-exp form.

    The maximal log-magnitude is factored out, so the sum of the remaining
    terms has magnitude <= sum |w_k|.  Summation order is the array order
    (fixed summation tree: results are bit-identical for identical input).
    """
    log_mags = np.asarray(log_mags, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if weights is None:
        weights = np.ones_like(log_mags)
    weights = np.asarray(weights, dtype=float)
    if log_mags.size == 0:
        raise ValueError("empty sum")
    m = float(np.max(log_mags))
    if not math.isfinite(m):
        raise ValueError("non-finite log magnitude in sum")
    terms = weights * np.exp(log_mags - m) * np.exp(1j * phases)
    s = complex(np.sum(terms))
    if s == 0:
        raise ValueError("exact cancellation in logsumexp_complex")
    return LogComplex(m + math.log(abs(s)), cmath.phase(s))
