"""Real-root isolation by Sturm sequences with exact rational arithmetic."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = list[Fraction]  # coefficients, highest degree first


def _trim(p: Poly) -> Poly:
    i = 0
    while i < len(p) - 1 and p[i] == 0:
        i += 1
    return p[i:]


def _eval(p: Poly, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in p:
        acc = acc * x + c
    return acc


def _deriv(p: Poly) -> Poly:
    d = len(p) - 1
    return _trim([c * (d - i) for i, c in enumerate(p[:-1])]) or [Fraction(0)]


def _divmod(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    num = list(num)
    if len(num) < len(den):
        return [Fraction(0)], num
    quot = []
    lead = den[0]
    for i in range(len(num) - len(den) + 1):
        q = num[i] / lead
        quot.append(q)
        if q:
            for j, c in enumerate(den):
                num[i + j] -= q * c
    rem = _trim(num[len(num) - len(den) + 1:] or [Fraction(0)])
    return quot, rem


def _is_zero(p: Poly) -> bool:
    return all(c == 0 for c in p)


def _gcd(a: Poly, b: Poly) -> Poly:
    while not _is_zero(b):
        a, b = b, _divmod(a, b)[1]
    return [c / a[0] for c in a]


def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [p, _deriv(p)]
    while not _is_zero(seq[-1]) and len(seq[-1]) > 1:
        rem = _divmod(seq[-2], seq[-1])[1]
        if _is_zero(rem):
            break
        seq.append([-c for c in rem])
    return [s for s in seq if not _is_zero(s)]


def _sign_changes(seq: list[Poly], x: Fraction) -> int:
    signs = [v for v in (_eval(s, x) for s in seq) if v != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u < 0) != (v < 0))


def count_roots(seq: list[Poly], a: Fraction, b: Fraction) -> int:
    """Number of distinct real roots in the half-open interval (a, b]."""
    return _sign_changes(seq, a) - _sign_changes(seq, b)


def _cauchy_bound(p: Poly) -> Fraction:
    return 1 + max(abs(c / p[0]) for c in p[1:]) if len(p) > 1 else Fraction(1)


def isolate_real_roots(
    coeffs: Sequence[float],
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-13,
) -> list[float]:
    """All distinct real roots of a polynomial inside ``bracket``.

    ``coeffs`` are ordered from the highest degree down. Roots are isolated
    with a Sturm sequence of the square-free part and refined by bisection
    until the enclosing interval is narrower than ``tol``.
    """
    p = _trim([Fraction(c) for c in coeffs])
    if len(p) < 2:
        raise ValueError("polynomial must have degree >= 1")
    # square-free part keeps the sign change at every root
    g = _gcd(p, _deriv(p))
    sqf = _divmod(p, g)[0] if len(g) > 1 else p
    seq = sturm_sequence(sqf)

    bound = _cauchy_bound(sqf)
    lo = -bound if bracket is None else Fraction(bracket[0])
    hi = bound if bracket is None else Fraction(bracket[1])
    # include the left endpoint itself
    lo_open = lo - Fraction(1, 2**60) if _eval(sqf, lo) == 0 else lo

    roots: list[float] = []
    stack = [(lo_open, hi)]
    tol_f = Fraction(tol)
    while stack:
        a, b = stack.pop()
        n = count_roots(seq, a, b)
        if n == 0:
            continue
        if n == 1:
            roots.append(_refine(sqf, a, b, tol_f))
            continue
        mid = (a + b) / 2
        stack.append((a, mid))
        stack.append((mid, b))
    return sorted(roots)


def _refine(p: Poly, a: Fraction, b: Fraction, tol: Fraction) -> float:
    # single simple root in (a, b]
    fb = _eval(p, b)
    if fb == 0:
        return float(b)
    while b - a > tol:
        mid = (a + b) / 2
        fm = _eval(p, mid)
        if fm == 0:
            return float(mid)
        if (fm < 0) == (fb < 0):
            b, fb = mid, fm
        else:
            a = mid
    return float((a + b) / 2)
