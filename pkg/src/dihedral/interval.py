"""Guaranteed-enclosure interval arithmetic.

Scalar intervals round outward by nudging each computed endpoint one unit
in the last place; the correctly rounded result is within half an ulp of
the exact value, so the nudged interval contains it.

Array helpers work in midpoint-radius form and add a priori rounding-error
bounds for floating-point dot products (|fl(x.y) - x.y| <= gamma_n |x|.|y|,
valid for any summation order), which lets BLAS do the heavy lifting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivisionByIntervalContainingZero, NegativeSqrt

UNIT_ROUNDOFF = 2.0**-53
# absorbs underflow in products (at most one subnormal ulp per term)
TINY = 2.0**-1000


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo > hi:
            raise ValueError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def hull(cls, *xs: float) -> "Interval":
        return cls(min(xs), max(xs))

    @staticmethod
    def _coerce(x) -> "Interval":
        return x if isinstance(x, Interval) else Interval.point(float(x))

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def __contains__(self, x) -> bool:
        return self.contains(x)

    def __add__(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other) -> "Interval":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Interval":
        o = self._coerce(other)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(_down(min(ps)), _up(max(ps)))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = self._coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DivisionByIntervalContainingZero(f"division by {o}")
        qs = (self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi)
        return Interval(_down(min(qs)), _up(max(qs)))

    def __rtruediv__(self, other) -> "Interval":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "Interval":
        if n != 2:
            raise NotImplementedError("only squares are supported")
        return self.sqr()

    def sqr(self) -> "Interval":
        a = self.abs()
        return Interval(max(_down(a.lo * a.lo), 0.0), _up(a.hi * a.hi))

    def sqrt(self) -> "Interval":
        if self.hi < 0.0:
            raise NegativeSqrt(f"sqrt of {self}")
        lo = max(self.lo, 0.0)
        return Interval(max(_down(math.sqrt(lo)), 0.0), _up(math.sqrt(self.hi)))

    def abs(self) -> "Interval":
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval(0.0, max(-self.lo, self.hi))

    def sup(self) -> float:
        return self.hi

    def inf(self) -> float:
        return self.lo

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def max(self, other) -> "Interval":
        o = self._coerce(other)
        return Interval(max(self.lo, o.lo), max(self.hi, o.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def to_list(self) -> list[float]:
        return [self.lo, self.hi]


# midpoint-radius arrays


def gamma(n: int) -> float:
    """Upper bound for gamma_n = n u / (1 - n u)."""
    nu = n * UNIT_ROUNDOFF
    return _up(nu / (1.0 - nu) * (1.0 + 4 * UNIT_ROUNDOFF))


def inflate(x, n: int = 1):
    """Upper bound for an exact nonnegative sum/dot of n terms computed as ``x``."""
    g = gamma(n + 2)
    return np.nextafter(np.asarray(x) * (1.0 + 2.0 * g) + n * TINY, np.inf)


@dataclass
class MidRad:
    """Array of intervals [mid - rad, mid + rad] with rad >= 0."""

    mid: np.ndarray
    rad: np.ndarray

    def __post_init__(self) -> None:
        self.mid = np.asarray(self.mid, dtype=float)
        self.rad = np.broadcast_to(np.asarray(self.rad, dtype=float), self.mid.shape).copy()
        if np.any(self.rad < 0) or np.any(~np.isfinite(self.rad)):
            raise ValueError("radii must be finite and nonnegative")

    @classmethod
    def point(cls, x) -> "MidRad":
        x = np.asarray(x, dtype=float)
        return cls(x, np.zeros_like(x))

    @classmethod
    def from_bounds(cls, lo, hi) -> "MidRad":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        mid = 0.5 * (lo + hi)
        rad = np.maximum(hi - mid, mid - lo)
        return cls(mid, np.nextafter(rad * (1 + 2 * UNIT_ROUNDOFF), np.inf))

    @property
    def lo(self) -> np.ndarray:
        return np.nextafter(self.mid - self.rad, -np.inf)

    @property
    def hi(self) -> np.ndarray:
        return np.nextafter(self.mid + self.rad, np.inf)

    @property
    def shape(self):
        return self.mid.shape

    def mag(self) -> np.ndarray:
        """Upper bound of |x| elementwise."""
        return np.nextafter(np.abs(self.mid) + self.rad, np.inf)

    def mig(self) -> np.ndarray:
        """Lower bound of |x| elementwise (0 if the interval straddles 0)."""
        return np.maximum(np.nextafter(np.abs(self.mid) - self.rad, -np.inf), 0.0)

    def __getitem__(self, idx) -> "MidRad":
        return MidRad(self.mid[idx], self.rad[idx])

    def __add__(self, other) -> "MidRad":
        o = other if isinstance(other, MidRad) else MidRad.point(other)
        m = self.mid + o.mid
        r = (self.rad + o.rad + UNIT_ROUNDOFF * np.abs(m)) * (1 + 4 * UNIT_ROUNDOFF)
        return MidRad(m, np.nextafter(r, np.inf))

    __radd__ = __add__

    def __neg__(self) -> "MidRad":
        return MidRad(-self.mid, self.rad)

    def __sub__(self, other) -> "MidRad":
        o = other if isinstance(other, MidRad) else MidRad.point(other)
        return self + (-o)

    def __rsub__(self, other) -> "MidRad":
        return (-self) + other

    def __mul__(self, other) -> "MidRad":
        o = other if isinstance(other, MidRad) else MidRad.point(other)
        m = self.mid * o.mid
        r = np.abs(self.mid) * o.rad + self.rad * np.abs(o.mid) + self.rad * o.rad
        r = (r + UNIT_ROUNDOFF * np.abs(m)) * (1 + 4 * UNIT_ROUNDOFF) + TINY
        return MidRad(m, np.nextafter(r, np.inf))

    __rmul__ = __mul__

    def scale(self, c: Interval) -> "MidRad":
        """Multiply by a scalar interval."""
        return self * MidRad(np.full(self.shape, c.mid), np.full(self.shape, _up(0.5 * c.width + UNIT_ROUNDOFF * abs(c.mid))))

    def sum(self) -> Interval:
        n = self.mid.size
        s = float(np.sum(self.mid))
        err = float(inflate(np.sum(np.abs(self.mid)), n)) * gamma(n) + float(inflate(np.sum(self.rad), n))
        return Interval(_down(s - err), _up(s + err))

    def max_mag(self) -> float:
        return float(np.max(self.mag()))

    def to_lists(self) -> tuple[list[float], list[float]]:
        return self.lo.tolist(), self.hi.tolist()


def hull_max(x: MidRad) -> Interval:
    """Interval containing max over the entries of x."""
    return Interval(float(np.max(x.lo)), float(np.max(x.hi)))


def point_matvec(A: np.ndarray, x: MidRad) -> MidRad:
    """Enclosure of A x for a float matrix A (exact data) and interval vector x."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    absA = np.abs(A)
    m = A @ x.mid
    r = inflate(absA @ (gamma(n) * np.abs(x.mid) + x.rad), n)
    r = r + UNIT_ROUNDOFF * np.abs(m)
    return MidRad(m, np.nextafter(r, np.inf))


def point_matmul(A: np.ndarray, B: np.ndarray) -> MidRad:
    """Enclosure of the product of two float matrices."""
    n = A.shape[1]
    P = A @ B
    r = inflate(np.abs(A) @ np.abs(B), n) * gamma(n) + UNIT_ROUNDOFF * np.abs(P)
    return MidRad(P, np.nextafter(r, np.inf))


def abs_rowsum_upper(A: np.ndarray) -> np.ndarray:
    """Upper bounds of sum_j |A_ij| for a float matrix."""
    return inflate(np.sum(np.abs(A), axis=1), A.shape[1])


def correlate(x: MidRad, y: MidRad) -> MidRad:
    """Enclosures of c_k = sum_i x_i y_{i+k} for k = 0..len-1 (equal lengths)."""
    n = x.mid.size

    def corr(a, b):
        return np.correlate(b, a, "full")[n - 1:]

    m = corr(x.mid, y.mid)
    ax, ay = np.abs(x.mid), np.abs(y.mid)
    r = gamma(n) * corr(ax, ay) + corr(ax, y.rad) + corr(x.rad, ay) + corr(x.rad, y.rad)
    r = inflate(np.maximum(r, 0.0), n) + UNIT_ROUNDOFF * np.abs(m)
    return MidRad(m, np.nextafter(r, np.inf))


def convolve(x: MidRad, y: MidRad) -> MidRad:
    """Enclosures of the full discrete convolution sum_j x_j y_{k-j}."""
    n = max(x.mid.size, y.mid.size)
    m = np.convolve(x.mid, y.mid)
    ax, ay = np.abs(x.mid), np.abs(y.mid)
    r = (gamma(n) * np.convolve(ax, ay) + np.convolve(ax, y.rad) + np.convolve(x.rad, ay)
         + np.convolve(x.rad, y.rad))
    r = inflate(np.maximum(r, 0.0), n) + UNIT_ROUNDOFF * np.abs(m)
    return MidRad(m, np.nextafter(r, np.inf))
