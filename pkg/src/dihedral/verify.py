"""Radii-polynomial verification of the continuum matching solution.

The zero-finding problem is G(w) = w - Q_inf(w) = 0 on regulated functions of
[0, 1] with the sup norm. Splines on a uniform mesh of M segments carry the
finite part Pi_M (node values) and Pi_inf = I - Pi_M is the interpolation
error. The Newton-like operator

    T(w) = (Pi_M - A Pi_M G)(w) + Pi_inf (w - G(w))

is a contraction on the ball {|Pi_M (w - w_hat)| <= r, |Pi_inf (w - w_hat)| <= omega r}
whenever all radii polynomials

    p_k(r)   = Y_k + Z_lin_k r + Z_quad_k r^2 - r,     k = 0..M
    p_inf(r) = Y_inf + W1 r + W2 r^2 - omega r

are negative and the approximate inverse A is injective.

Two sets of constants are available. ``bounds="standard"`` uses the
customary coefficient formulas for this scheme. ``bounds="corrected"``
uses constants re-derived so that every inequality in the chain holds for
all members of the ball (see README); both share the same Y_k, defect
matrix and enclosure machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .continuum import Spline
from .interval import (
    UNIT_ROUNDOFF,
    Interval,
    MidRad,
    convolve,
    correlate,
    inflate,
    point_matmul,
    point_matvec,
)

BOUND_MODES = ("standard", "corrected")
INJECTIVITY_METHOD = "interval LU (partial pivoting) of R*A with R = mid M(phi)"


def _values(w) -> np.ndarray:
    return np.asarray(w.values if isinstance(w, Spline) else w, dtype=float)


def _h_over(M: int, c: int) -> Interval:
    return Interval.point(1.0) / Interval.point(float(c * M))


def _up(x):
    return np.nextafter(x, np.inf)


# g = -Q_inf(w_hat) at the nodes


def g_enclosure(w) -> MidRad:
    """Enclosure of g(t_k) = -2 int_0^{1-t_k} w(s)w(s+t_k)ds - int_0^{t_k} w(s)w(t_k-s)ds."""
    v = _values(w)
    M = v.size - 1
    A, B = MidRad.point(v[:-1]), MidRad.point(v[1:])
    corr = MidRad.point(np.zeros(M + 1))
    c = correlate(A, A) * 2.0 + correlate(A, B) + correlate(B, A) + correlate(B, B) * 2.0
    corr = MidRad(np.append(c.mid, 0.0), np.append(c.rad, 0.0))
    s = convolve(A, B) * 2.0 + convolve(A, A) + convolve(B, B) + convolve(B, A) * 2.0
    conv = MidRad(np.concatenate([[0.0], s.mid[:M]]), np.concatenate([[0.0], s.rad[:M]]))
    h6 = _h_over(M, 6)
    return (corr * (-2.0) - conv).scale(h6)


# Y bounds


def _slopes(v: np.ndarray) -> MidRad:
    M = v.size - 1
    return (MidRad.point(v[1:]) - MidRad.point(v[:-1])) * float(M)


def _hull(a: np.ndarray, b: np.ndarray) -> MidRad:
    return MidRad.from_bounds(np.minimum(a, b), np.maximum(a, b))


def _y_inf_standard(v: np.ndarray) -> Interval:
    # h(t) = 2w(1-t)w'(1) + 2w'(1-t)w(1) + w'(t)w(0) + w(t)w'(0) on each segment
    M = v.size - 1
    s = _slopes(v)
    k = np.arange(M)
    w_rev = _hull(v[M - k - 1], v[M - k])
    w_fwd = _hull(v[k], v[k + 1])
    sM = MidRad(np.full(M, s.mid[M - 1]), np.full(M, s.rad[M - 1]))
    s0 = MidRad(np.full(M, s.mid[0]), np.full(M, s.rad[0]))
    h = w_rev * sM * 2.0 + s[M - 1 - k] * (2.0 * v[M]) + s[k] * v[0] + w_fwd * s0
    return _eighth_dt2(M) * Interval(0.0, float(np.max(h.mag())))


def g_second_derivative(w) -> tuple[MidRad, MidRad]:
    """One-sided values of g'' at both ends of every segment.

    g is C^1 and a cubic on each closed segment, with
    g''(t) = 2w(1-t)w'(1) - 2w'(1-t)w(1) - w'(t)w(0) - w(t)w'(0)
             - 2 sum_{t<t_j<1} J_j w(t_j - t) - sum_{0<t_j<t} J_j w(t - t_j),
    J_j the jump of w' at the interior node t_j. Returns (g''(t_k+), g''(t_{k+1}-)).
    """
    v = _values(w)
    M = v.size - 1
    s = _slopes(v)
    J = s[1:] - s[:-1]  # J_1..J_{M-1}
    k = np.arange(M)
    sM, s0 = s[M - 1:M], s[0:1]

    def bc(x: MidRad) -> MidRad:
        return MidRad(np.full(M, x.mid[0]), np.full(M, x.rad[0]))

    def pad(x: MidRad, n: int, front: int = 0) -> MidRad:
        mid = np.concatenate([np.zeros(front), x.mid[: n - front]])
        rad = np.concatenate([np.zeros(front), x.rad[: n - front]])
        mid = np.concatenate([mid, np.zeros(n - mid.size)])
        rad = np.concatenate([rad, np.zeros(n - rad.size)])
        return MidRad(mid, rad)

    if M >= 2:
        h1_left = pad(correlate(MidRad.point(v[1:M]), J), M) * (-2.0)
        h1_right = pad(correlate(MidRad.point(v[0:M - 1]), J), M) * (-2.0)
        h2_left = pad(convolve(J, MidRad.point(v)), M, front=1) * (-1.0)
        h2_right = pad(convolve(J, MidRad.point(v[1:])), M, front=1) * (-1.0)
    else:
        h1_left = h1_right = h2_left = h2_right = MidRad.point(np.zeros(M))
    common = s[M - 1 - k] * (-2.0 * v[M]) - s[k] * v[0]
    left = MidRad.point(v[M - k]) * bc(sM) * 2.0 + common - MidRad.point(v[k]) * bc(s0)
    right = MidRad.point(v[M - k - 1]) * bc(sM) * 2.0 + common - MidRad.point(v[k + 1]) * bc(s0)
    return left + h1_left + h2_left, right + h1_right + h2_right


def _eighth_dt2(M: int) -> Interval:
    dt = _h_over(M, 1)
    return dt * dt / Interval.point(8.0)


def _y_inf_corrected(v: np.ndarray) -> Interval:
    M = v.size - 1
    left, right = g_second_derivative(v)
    top = max(float(np.max(left.mag())), float(np.max(right.mag())))
    return _eighth_dt2(M) * Interval(0.0, top)


def y_bounds(w, a_dagger: np.ndarray, bounds: str = "standard") -> tuple[MidRad, Interval]:
    """Y_k = sup |(A [w_hat + g])_k| and the interpolation-error bound Y_inf."""
    _check_mode(bounds)
    v = _values(w)
    a_dagger = np.asarray(a_dagger, dtype=float)
    if a_dagger.shape != (v.size, v.size):
        raise ValueError("a_dagger must be (M+1) x (M+1)")
    Gw = MidRad.point(v) + g_enclosure(v)
    AY = point_matvec(a_dagger, Gw)
    Y = MidRad.from_bounds(np.zeros(v.size), AY.mag())
    Y_inf = _y_inf_standard(v) if bounds == "standard" else _y_inf_corrected(v)
    return Y, Y_inf


# M(phi): interval enclosure of DG^M(w_hat)


def phi_matrix(w) -> MidRad:
    """Interval matrix of the derivative of t_k -> G(w)(t_k) with respect to node values.

    Entry (k, j) is 1[k=j] minus twice the sum of hat-weighted integrals
      int_{t_k}^1 w(u - t_k) e_j(u) du  +  int_{t_k}^1 e_j(u - t_k) w(u) du
      + int_0^{t_k} e_j(s) w(t_k - s) ds,
    each split over the rising and falling half of the hat e_j. On the
    uniform mesh every half is a single segment where both factors are
    linear, giving h (a + 2b)/6 (rising) or h (2a + b)/6 (falling).
    """
    v = _values(w)
    M = v.size - 1
    K, Jn = np.indices((M + 1, M + 1))
    W = np.concatenate([v, [0.0]])  # index M+1 -> 0 (masked anyway)

    def term(mask, ia, ib, rising):
        ia = np.where(mask, ia, M + 1)
        ib = np.where(mask, ib, M + 1)
        a, b = MidRad.point(W[ia]), MidRad.point(W[ib])
        return a + b * 2.0 if rising else a * 2.0 + b

    d = Jn - K
    e = Jn + K
    total = term((Jn - 1 >= K) & (Jn <= M), d - 1, d, True)          # w(u - t_k) on rising half
    total = total + term((Jn >= K) & (Jn + 1 <= M), d, d + 1, False)
    total = total + term((Jn >= 1) & (e <= M), e - 1, e, True)       # e_j(u - t_k) w(u)
    total = total + term(e + 1 <= M, e, e + 1, False)
    total = total + term((Jn >= 1) & (Jn <= K), K - Jn + 1, K - Jn, True)  # convolution
    total = total + term(Jn + 1 <= K, K - Jn, K - Jn - 1, False)
    return MidRad.point(np.eye(M + 1)) - total.scale(_h_over(M, 6)) * 2.0


# Z bounds


def _prefix_abs_upper(v: np.ndarray) -> np.ndarray:
    """Upper bounds of int_0^{t_n} |w| for n = 0..M."""
    M = v.size - 1
    a = np.abs(v)
    cs = np.concatenate([[0.0], np.cumsum(a[:-1] + a[1:])])
    return _up(inflate(cs, 2 * M) / (2.0 * M) * (1 + 2 * UNIT_ROUNDOFF))


@dataclass
class ZBounds:
    Z_lin: MidRad
    Z_quad: MidRad
    W1: Interval
    W2: Interval
    defect: np.ndarray
    V1: np.ndarray
    V2: np.ndarray


def _interval_vec_upper(x: np.ndarray) -> MidRad:
    return MidRad.from_bounds(np.zeros_like(x), x)


def z_bounds(w, a_dagger: np.ndarray, omega: float, bounds: str = "standard",
             phi: MidRad | None = None) -> ZBounds:
    """Coefficients of Z_k(r) = Z_lin_k r + Z_quad_k r^2 and Z_inf(r) = W1 r + W2 r^2."""
    _check_mode(bounds)
    if not omega > 0:
        raise ValueError("omega must be positive")
    v = _values(w)
    M = v.size - 1
    A = np.asarray(a_dagger, dtype=float)
    phi = phi_matrix(v) if phi is None else phi
    n = M + 1

    # sup |I - A M(phi)| 1 <= rowsum |I - A mid| + |A| (rad 1)
    P = point_matmul(A, phi.mid)
    E = MidRad.point(np.eye(n)) - P
    defect = inflate(np.sum(E.mag(), axis=1), n) + inflate(np.abs(A) @ inflate(np.sum(phi.rad, axis=1), n), n)
    absA = np.abs(A)

    P_abs = _prefix_abs_upper(v)
    k = np.arange(n)
    om = Interval.point(omega)
    one_om = (om + 1.0)
    if bounds == "standard":
        V1 = (P_abs[M - k] + P_abs[M] - P_abs[k] + 2.0 * P_abs[k]) * omega
        V2 = np.full(n, (one_om * one_om * 2.0).hi)
    else:
        V1 = (P_abs[M - k] + P_abs[M]) * (2.0 * omega)
        two_minus_t = 2.0 - k / M
        V2 = (one_om * one_om * 2.0).hi * two_minus_t
    V1 = _up(V1 * (1 + 8 * UNIT_ROUNDOFF))
    V2 = _up(V2 * (1 + 8 * UNIT_ROUNDOFF))
    Z_lin = _up(defect + inflate(absA @ V1, n))
    Z_quad = inflate(absA @ V2, n)

    dt = _h_over(M, 1)
    end = Interval.point(max(abs(v[M]), abs(v[M - 1])))
    start = Interval.point(max(abs(v[0]), abs(v[1])))
    W1 = one_om * dt * (end + start * 2.0) * 4.0
    if bounds == "standard":
        W2 = one_om * (dt * one_om * 2.0 + om) * 6.0
    else:
        d2 = np.abs(v[:-2] - 2.0 * v[1:-1] + v[2:]) if M >= 2 else np.zeros(1)
        kink = Interval.point(float(_up(np.max(d2) * (1 + 4 * UNIT_ROUNDOFF))))
        W1 = W1 + one_om * kink * 6.0 / 8.0
        W2 = one_om * (dt * one_om * 2.0 + Interval.point(0.5) + om * 2.0) * 6.0
    return ZBounds(_interval_vec_upper(Z_lin), _interval_vec_upper(Z_quad), W1, W2, defect, V1, V2)


# injectivity


def interval_lu_nonsingular(C: MidRad) -> tuple[bool, float]:
    """Gaussian elimination with partial pivoting on an interval matrix.

    Returns (ok, smallest pivot mignitude). ok means every pivot interval
    excludes zero, so every matrix in C is nonsingular.
    """
    mid = C.mid.copy()
    rad = C.rad.copy()
    n = mid.shape[0]
    u = UNIT_ROUNDOFF
    min_mig = np.inf
    for k in range(n):
        mig = np.abs(mid[k:, k]) - rad[k:, k]
        p = k + int(np.argmax(mig))
        if mig[p - k] <= 0 or not np.isfinite(mig[p - k]):
            return False, float(max(mig[p - k], 0.0))
        if p != k:
            mid[[k, p]] = mid[[p, k]]
            rad[[k, p]] = rad[[p, k]]
        pm, pr = mid[k, k], rad[k, k]
        min_mig = min(min_mig, abs(pm) - pr)
        if k == n - 1:
            break
        # multipliers l = C[i,k] / pivot via endpoint quotients
        clo, chi = mid[k + 1:, k] - rad[k + 1:, k], mid[k + 1:, k] + rad[k + 1:, k]
        clo, chi = np.nextafter(clo, -np.inf), np.nextafter(chi, np.inf)
        plo, phi_ = np.nextafter(pm - pr, -np.inf), np.nextafter(pm + pr, np.inf)
        q = np.stack([clo / plo, clo / phi_, chi / plo, chi / phi_])
        llo = np.nextafter(q.min(axis=0), -np.inf)
        lhi = np.nextafter(q.max(axis=0), np.inf)
        lm = 0.5 * (llo + lhi)
        lr = _up(np.maximum(lhi - lm, lm - llo) * (1 + 2 * u))
        um, ur = mid[k, k + 1:], rad[k, k + 1:]
        prod = np.outer(lm, um)
        prad = np.outer(np.abs(lm), ur) + np.outer(lr, np.abs(um)) + np.outer(lr, ur)
        newm = mid[k + 1:, k + 1:] - prod
        newr = (rad[k + 1:, k + 1:] + prad + u * np.abs(prod) + u * np.abs(newm)) * (1 + 4 * u) + 2.0**-1000
        mid[k + 1:, k + 1:] = newm
        rad[k + 1:, k + 1:] = _up(newr)
    return True, float(min_mig)


def certify_injective(a_dagger: np.ndarray, phi: MidRad) -> tuple[bool, float]:
    C = point_matmul(phi.mid, np.asarray(a_dagger, dtype=float))
    return interval_lu_nonsingular(C)


# radii polynomials


def _check_mode(bounds: str) -> None:
    if bounds not in BOUND_MODES:
        raise ValueError(f"bounds must be one of {BOUND_MODES}")


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None


@dataclass
class RadiiCertificate:
    omega: float
    r: float
    r_lo: float
    r_hi: float
    M: int
    Y: MidRad
    Y_inf: Interval
    Z_lin: MidRad
    Z_quad: MidRad
    W1: Interval
    W2: Interval
    p_max: float
    p_inf: float
    injective: bool
    min_pivot: float
    positive: bool
    verified: bool
    bounds: str
    injectivity_method: str = INJECTIVITY_METHOD
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega, "r": self.r, "r_lo": _finite_or_none(self.r_lo), "r_hi": _finite_or_none(self.r_hi), "M": self.M,
            "bounds": self.bounds, "verified": self.verified, "injective": self.injective,
            "positive": self.positive, "min_pivot_mignitude": self.min_pivot,
            "p_max_upper": self.p_max, "p_inf_upper": self.p_inf,
            "Y": [self.Y.lo.tolist(), self.Y.hi.tolist()],
            "Y_inf": self.Y_inf.to_list(),
            "Z_lin": [self.Z_lin.lo.tolist(), self.Z_lin.hi.tolist()],
            "Z_quad": [self.Z_quad.lo.tolist(), self.Z_quad.hi.tolist()],
            "W1": self.W1.to_list(), "W2": self.W2.to_list(),
            "injectivity_method": self.injectivity_method,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path=None) -> str:
        s = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(s)
        return s


@dataclass
class RadiiData:
    """Everything r-independent needed to evaluate the radii polynomials."""

    values: np.ndarray
    omega: float
    bounds: str
    Y: MidRad
    Y_inf: Interval
    Z: ZBounds
    injective: bool
    min_pivot: float

    def p_upper(self, r: float) -> tuple[float, float]:
        """Upper bounds of max_k p_k(r) and p_inf(r) (nonnegative coefficients, r > 0)."""
        u = UNIT_ROUNDOFF
        pos = self.Y.hi + self.Z.Z_lin.hi * r + self.Z.Z_quad.hi * (r * r)
        p = float(np.max(_up(pos * (1 + 8 * u)) - r * (1 - 4 * u)))
        ri = Interval.point(r)
        pinf = Interval.point(self.Y_inf.hi) + Interval.point(self.Z.W1.hi) * ri \
            + Interval.point(self.Z.W2.hi) * ri * ri - Interval.point(self.omega) * ri
        return p, pinf.hi

    def radii_negative(self, r: float) -> bool:
        p, pinf = self.p_upper(r)
        return p < 0 and pinf < 0

    def positive(self, r: float) -> bool:
        return float(np.min(self.values)) > (Interval.point(r) * (Interval.point(self.omega) + 1.0)).hi

    def bracket(self, rel_tol: float = 1e-6) -> tuple[float, float]:
        """Endpoints of the verified r-range by bisection in log r; (nan, nan) if empty."""
        grid = np.logspace(-12, 1, 261)
        ok = [r for r in grid if self.radii_negative(r)]
        if not ok:
            return float("nan"), float("nan")
        r0 = ok[len(ok) // 2]

        def bisect(a, b, inside_is_b):
            # invariant: one end inside the verified set, the other outside
            while b / a > 1 + rel_tol:
                c = float(np.sqrt(a * b))
                if self.radii_negative(c) == inside_is_b:
                    b = c
                else:
                    a = c
            return b if inside_is_b else a

        # walk down to a failing radius; a set reaching the underflow range
        # (Y = 0, as for the trivial solution) has lower endpoint 0
        a = r0
        while self.radii_negative(a) and a > 1e-280:
            a /= 1e3
        lo = 0.0 if self.radii_negative(a) else bisect(a, r0, True)
        b = r0
        while self.radii_negative(b):
            b *= 2.0
        hi = bisect(r0, b, False)
        return lo, hi


def prepare(w, a_dagger: np.ndarray, omega: float, bounds: str = "standard",
            check_injectivity: bool = True) -> RadiiData:
    _check_mode(bounds)
    v = _values(w)
    phi = phi_matrix(v)
    Y, Y_inf = y_bounds(v, a_dagger, bounds)
    Z = z_bounds(v, a_dagger, omega, bounds, phi=phi)
    if check_injectivity:
        inj, piv = certify_injective(a_dagger, phi)
    else:
        inj, piv = False, float("nan")
    return RadiiData(v, float(omega), bounds, Y, Y_inf, Z, inj, piv)


def radii_check(w, a_dagger: np.ndarray, omega: float, r: float, bounds: str = "standard",
                data: RadiiData | None = None) -> RadiiCertificate:
    """Evaluate every radii polynomial at r and certify the ball of radius r."""
    if not (omega > 0 and r > 0):
        raise ValueError("omega and r must be positive")
    if data is None:
        data = prepare(w, a_dagger, omega, bounds)
    p, pinf = data.p_upper(r)
    lo, hi = data.bracket()
    verified = bool(p < 0 and pinf < 0 and data.injective)
    diag = {}
    if p >= 0:
        diag["failed"] = "p_k"
    elif pinf >= 0:
        diag["failed"] = "p_inf"
    elif not data.injective:
        diag["failed"] = "injectivity"
    diag["max_defect"] = float(np.max(data.Z.defect))
    return RadiiCertificate(
        omega=float(omega), r=float(r), r_lo=lo, r_hi=hi, M=data.values.size - 1,
        Y=data.Y, Y_inf=data.Y_inf, Z_lin=data.Z.Z_lin, Z_quad=data.Z.Z_quad,
        W1=data.Z.W1, W2=data.Z.W2, p_max=p, p_inf=pinf, injective=data.injective,
        min_pivot=data.min_pivot, positive=data.positive(r), verified=verified,
        bounds=data.bounds, diagnostics=diag,
    )


def approximate_inverse(w) -> np.ndarray:
    """Floating-point inverse of the node Jacobian, used as fixed point data."""
    from .continuum import g_jacobian

    return np.linalg.inv(g_jacobian(_values(w)))


def certify_continuum(M: int = 1000, omega: float = 0.02, r: float = 1e-3,
                      bounds: str = "standard") -> tuple[Spline, RadiiCertificate]:
    from .continuum import solve_continuum

    w = solve_continuum(M)
    A = approximate_inverse(w)
    return w, radii_check(w, A, omega, r, bounds)
