"""Continuum matching equation alpha = Q_inf(alpha) on [0, 1] and its finite analogue F_N.

Q_inf(w)(t) = 2 int_0^{1-t} w(s) w(s+t) ds + int_0^t w(s) w(t-s) ds.

Unknowns are piecewise-linear splines on a uniform mesh; every integral of
a product of two splines is evaluated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularJacobian


@dataclass
class Spline:
    """Piecewise-linear function on the uniform mesh t_k = k/M of [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("a spline needs at least two node values")

    @property
    def M(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) * self.M

    def __call__(self, t):
        return np.interp(t, self.nodes, self.values)

    @classmethod
    def from_function(cls, f, M: int) -> "Spline":
        return cls(np.asarray(f(np.arange(M + 1) / M), dtype=float))

    def resample(self, M: int) -> "Spline":
        return Spline(self(np.arange(M + 1) / M))

    def to_csv(self, path) -> None:
        np.savetxt(path, np.column_stack([self.nodes, self.values]), delimiter=",",
                   header="t,value", comments="")


# exact integration


def _simpson(f, a: float, b: float) -> float:
    # exact for the piecewise-quadratic integrands produced by two linear pieces
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))


def _piecewise_integral(f, breaks: np.ndarray) -> float:
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            total += _simpson(f, a, b)
    return total


def q_inf_apply(w: Spline, t: float) -> float:
    """Q_inf(w)(t) by exact integration over the union of shifted meshes."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t = {t} lies outside [0, 1]")
    nodes = w.nodes
    # correlation part: breakpoints of s and of s + t inside [0, 1 - t]
    upper = 1.0 - t
    br = np.concatenate([nodes, nodes - t, [0.0, upper]])
    br = np.unique(br[(br >= 0.0) & (br <= upper)])
    corr = _piecewise_integral(lambda s: w(s) * w(s + t), br)
    # convolution part: breakpoints of s and of t - s inside [0, t]
    bc = np.concatenate([nodes, t - nodes, [0.0, t]])
    bc = np.unique(bc[(bc >= 0.0) & (bc <= t)])
    conv = _piecewise_integral(lambda s: w(s) * w(t - s), bc)
    return 2.0 * corr + conv


def node_integrals(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both integrals of Q_inf at every mesh node, exactly.

    Returns (corr, conv) with corr_k = int_0^{1-t_k} w(s) w(s+t_k) ds and
    conv_k = int_0^{t_k} w(s) w(t_k-s) ds. On a uniform mesh the shifts are
    whole segments, so each integral is a sum of segment terms
    h/6 (2 a c + a d + b c + 2 b d).
    """
    w = np.asarray(values, dtype=float)
    M = w.size - 1
    h = 1.0 / M
    lo, hi = w[:-1], w[1:]

    def corr(x, y):
        # sum_{i=0}^{M-1-k} x_i y_{i+k}, k = 0..M-1
        return np.correlate(y, x, "full")[M - 1:]

    c = np.zeros(M + 1)
    c[:M] = 2 * corr(lo, lo) + corr(lo, hi) + corr(hi, lo) + 2 * corr(hi, hi)
    full = np.convolve(w, w)  # full[k] = sum_j w_j w_{k-j}
    k = np.arange(M + 1)
    s_a = full[k] - w[0] * w  # sum_{i<k} w_i w_{k-i}
    s_b = np.concatenate([[0.0], full[: M]])  # sum_{i<k} w_i w_{k-1-i}
    nxt = np.append(w[1:], 0.0)
    s_c = np.append(full[1:], 0.0)[k] - 2 * w[0] * nxt  # sum_{i<k} w_{i+1} w_{k-i}
    s_c[0] = 0.0
    s_d = full[k] - w[0] * w  # sum_{i<k} w_{i+1} w_{k-1-i}
    v = 2 * s_a + s_b + s_c + 2 * s_d
    v[0] = 0.0
    return h / 6.0 * c, h / 6.0 * v


def g_nodes(values: np.ndarray) -> np.ndarray:
    corr, conv = node_integrals(values)
    return np.asarray(values, dtype=float) - 2.0 * corr - conv


def g_residual(w: Spline) -> np.ndarray:
    """Node values of G(w) = w - Q_inf(w)."""
    return g_nodes(w.values)


def _pair_indices(M: int, correlation: bool) -> tuple[np.ndarray, np.ndarray]:
    k, i = np.meshgrid(np.arange(M + 1), np.arange(M + 1), indexing="ij")
    mask = (i + k <= M - 1) if correlation else (i <= k - 1)
    return k[mask], i[mask]


def g_jacobian(values: np.ndarray) -> np.ndarray:
    """Jacobian of the node-collocated map w -> G(w)(t_k)."""
    w = np.asarray(values, dtype=float)
    M = w.size - 1
    h = 1.0 / M
    dA = np.zeros((M + 1, M + 1))
    k, i = _pair_indices(M, True)
    for c, p, q in ((2, 0, 0), (1, 0, 1), (1, 1, 0), (2, 1, 1)):
        # c * w_{i+p} w_{i+k+q}
        np.add.at(dA, (k, i + p), c * w[i + k + q])
        np.add.at(dA, (k, i + k + q), c * w[i + p])
    dB = np.zeros((M + 1, M + 1))
    k, i = _pair_indices(M, False)
    for c, p, q in ((2, 0, 0), (1, 0, 1), (1, 1, 0), (2, 1, 1)):
        # c * w_{i+p} w_{k-i-q}
        np.add.at(dB, (k, i + p), c * w[k - i - q])
        np.add.at(dB, (k, k - i - q), c * w[i + p])
    return np.eye(M + 1) - (h / 6.0) * (2.0 * dA + dB)


def _newton(F, J, x0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    x = np.array(x0, dtype=float)
    r = F(x)
    res = np.max(np.abs(r))
    for _ in range(max_iter):
        if res <= tol:
            return x
        Jx = J(x)
        try:
            step = np.linalg.solve(Jx, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("non-finite Newton step")
        t = 1.0
        for _ in range(21):
            trial = x + t * step
            r_trial = F(trial)
            res_trial = np.max(np.abs(r_trial))
            if res_trial < res:
                break
            t *= 0.5
        x, r, res = trial, r_trial, res_trial
    if res <= tol:
        return x
    raise NoConvergence(f"residual {res:.3e} after {max_iter} Newton steps")


# finite map F_N


def f_n_apply(a) -> np.ndarray:
    """F_N(a)_n = a_n - 2/(N+1) sum_{j=1}^{N-n} a_j a_{n+j} - 1/(N+1) sum_{j<=n} a_j a_{n-j}."""
    a = np.asarray(a, dtype=float)
    N = a.size - 1
    corr = np.correlate(a, a, "full")[N:] - a[0] * a
    conv = np.convolve(a, a)[: N + 1]
    return a - (2.0 * corr + conv) / (N + 1)


def f_n_jacobian(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    N = a.size - 1
    n, l = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    ap = np.append(a, 0.0)
    # d/da_l sum_{j=1}^{N-n} a_j a_{n+j}
    fwd = np.where((l >= 1) & (l <= N - n), ap[np.minimum(n + l, N + 1)], 0.0)
    back = np.where((l - n >= 1), ap[np.clip(l - n, 0, N + 1)], 0.0)
    conv = np.where(l <= n, 2.0 * ap[np.clip(n - l, 0, N + 1)], 0.0)
    return np.eye(N + 1) - (2.0 * (fwd + back) + conv) / (N + 1)


def default_guess(N: int) -> np.ndarray:
    """Positive decaying start 0.6 (1 - n/(N+1)) in the rescaled unknowns."""
    return 0.6 * (1.0 - np.arange(N + 1) / (N + 1))


def solve_f_n(N: int, a0=None, tol: float = 1e-12, max_iter: int = 60) -> np.ndarray:
    """Root of F_N in rescaled units; a / (N+1) then solves the 6 | m matching system."""
    x0 = default_guess(N) if a0 is None else np.asarray(a0, dtype=float)
    return _newton(f_n_apply, f_n_jacobian, x0, tol, max_iter)


def positive_matching_solution(N: int, alpha: Spline | None = None, tol: float = 1e-13) -> np.ndarray:
    """Strictly positive solution of the 6 | m matching system at truncation N.

    When ``alpha`` is given its samples at n/(N+1) seed the Newton solve.
    """
    seed = None if alpha is None else alpha(np.arange(N + 1) / (N + 1))
    return solve_f_n(N, seed, tol=tol) / (N + 1)


# continuum solve


def solve_continuum(M: int, init: Spline | None = None, tol: float = 1e-12,
                    max_iter: int = 40) -> Spline:
    """Newton solve of G(w)(t_k) = 0 on the mesh with M segments.

    Without ``init`` the start is the positive F_N root at N = M sampled
    onto the mesh. If Newton fails the problem is solved on a mesh of half
    the size and interpolated back.
    """
    if M < 2:
        raise ValueError("M must be at least 2")
    if init is None:
        a = solve_f_n(M)
        t = np.arange(M + 1) / (M + 1)
        x0 = np.interp(np.arange(M + 1) / M, t, a)
    else:
        x0 = init.resample(M).values if init.M != M else init.values
    try:
        return Spline(_newton(g_nodes, g_jacobian, x0, tol, max_iter))
    except (NoConvergence, SingularJacobian):
        if M < 8:
            raise
    coarse = solve_continuum(M // 2, None if init is None else init.resample(M // 2), tol, max_iter)
    return Spline(_newton(g_nodes, g_jacobian, coarse.resample(M).values, tol, max_iter))


def correspondence_error(alpha: Spline, a) -> float:
    """sup_n |a_n - alpha(n/(N+1)) / (N+1)|."""
    a = np.asarray(a, dtype=float)
    N = a.size - 1
    return float(np.max(np.abs(a - alpha(np.arange(N + 1) / (N + 1)) / (N + 1))))
