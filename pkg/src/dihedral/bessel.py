"""Integer-order Bessel functions of the first kind.

Three regimes:
  x <= 2            ascending power series;
  2 < x <= 25       Miller's backward recurrence normalised by J_0 + 2 sum J_2k = 1;
  x > 25            Hankel asymptotics for J_0, J_1, forward recurrence while
                    the order stays below x, then backward recurrence matched to
                    the forward value for higher orders.
"""

from __future__ import annotations

import math

import numpy as np

SERIES_MAX = 2.0
MILLER_MAX = 25.0
_RESCALE = 1e200


def _series(nmax: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros((nmax + 1, x.size))
    half = x / 2.0
    q = -half * half
    with np.errstate(divide="ignore"):
        logh = np.log(half)
    for nu in range(nmax + 1):
        lead = np.exp(nu * logh - math.lgamma(nu + 1)) if nu > 0 else np.ones_like(x)
        term = lead.copy()
        total = lead.copy()
        for k in range(1, 40):
            term = term * q / (k * (k + nu))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total) + 1e-300):
                break
        out[nu] = total
    return out


def _miller(nmax: int, x: np.ndarray) -> np.ndarray:
    """All orders 0..nmax by backward recurrence, normalised by the sum rule."""
    top = max(nmax, int(np.max(x)))
    start = top + 20 + int(math.sqrt(40.0 * top))
    start += start % 2
    out = np.zeros((nmax + 1, x.size))
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-280)
    norm = np.zeros_like(x)
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j *= s
            jp1 *= s
            norm *= s
            out[k - 1:] *= s
    norm += j
    return out / norm


def _hankel01(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    res = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        P = np.ones_like(x)
        Q = np.zeros_like(x)
        term = np.ones_like(x)
        for k in range(1, 60):
            term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
            if k % 2 == 1:
                Q += (-1) ** ((k - 1) // 2) * term
            else:
                P += (-1) ** (k // 2) * term
            if np.all(np.abs(term) < 1e-17):
                break
        chi = x - (nu / 2.0 + 0.25) * math.pi
        res.append(np.sqrt(2.0 / (math.pi * x)) * (P * np.cos(chi) - Q * np.sin(chi)))
    return res[0], res[1]


def _large(nmax: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros((nmax + 1, x.size))
    j0, j1 = _hankel01(x)
    out[0] = j0
    if nmax >= 1:
        out[1] = j1
    n0 = np.floor(x).astype(int)  # forward recurrence is stable for k <= x
    jm, j = j0, j1
    for k in range(1, min(nmax, int(n0.max()))):
        jn = (2.0 * k / x) * j - jm
        ok = k + 1 <= n0
        out[k + 1] = np.where(ok, jn, 0.0)
        jm, j = j, jn
    need = n0 < nmax
    if np.any(need):
        xs = x[need]
        ns = n0[need]
        back = _backward_unnormalised(nmax, xs, ns)
        cols = np.nonzero(need)[0]
        for c, xc, nc, b in zip(cols, xs, ns, back.T):
            scale = out[nc, c] / b[nc]
            out[nc + 1:, c] = b[nc + 1:] * scale
    return out


def _backward_unnormalised(nmax: int, x: np.ndarray, n0: np.ndarray) -> np.ndarray:
    start = nmax + 20 + int(math.sqrt(40.0 * nmax))
    out = np.zeros((nmax + 1, x.size))
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-280)
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / x) * j - jp1
        jp1, j = j, jm1
        if k - 1 <= nmax:
            out[k - 1] = j
        big = np.abs(j) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j *= s
            jp1 *= s
            out[k - 1:] *= s
        if k - 1 <= n0.min():
            break
    return out


def bessel_j_all(nmax: int, x) -> np.ndarray:
    """J_nu(x) for nu = 0..nmax; shape (nmax+1,) + shape(x)."""
    if nmax < 0:
        raise ValueError("order must be nonnegative")
    xa = np.asarray(x, dtype=float)
    flat = xa.ravel()
    if np.any(flat < 0) or np.any(~np.isfinite(flat)):
        raise ValueError("bessel_j is defined here for finite x >= 0")
    out = np.zeros((nmax + 1, flat.size))
    zero = flat == 0.0
    out[0, zero] = 1.0
    for mask, fn in (((flat > 0) & (flat <= SERIES_MAX), _series),
                     ((flat > SERIES_MAX) & (flat <= MILLER_MAX), _miller),
                     (flat > MILLER_MAX, _large)):
        if np.any(mask):
            out[:, mask] = fn(nmax, flat[mask])
    return out.reshape((nmax + 1,) + xa.shape)


def bessel_j(nu: int, x):
    """J_nu(x) for integer nu >= 0 and x >= 0 (scalar or array)."""
    if int(nu) != nu or nu < 0:
        raise ValueError("order must be a nonnegative integer")
    nu = int(nu)
    res = bessel_j_all(nu, x)[nu]
    return float(res) if np.ndim(x) == 0 else res
