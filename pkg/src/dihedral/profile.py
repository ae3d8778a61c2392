"""Leading-order profiles of localised dihedral patterns and pattern synthesis.

For matching amplitudes a_n the radial amplitude of mode n is

    u_n(r) = P (-1)^{mn} a_n * { sqrt(k pi / 2) J_mn(k r)                  core
                               { r^{-1/2} cos(psi_n(r))                    transition
                               { r^{-1/2} exp(sqrt(c0)(r1 - sqrt(mu) r)) cos(psi_n(r))   far field

with P = sqrt(24 c0) k a_n sqrt(mu) / (gamma sqrt(k pi)) and
psi_n(r) = k r - mn pi/2 - pi/4. The planar field is u_0 + 2 sum_n u_n cos(mn theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j_all
from .lattice import LatticeConfig


@dataclass(frozen=True)
class ModelParams:
    k_c: float = 1.0
    c0: float = 0.25
    gamma: float = 1.6
    mu: float = 0.0

    def __post_init__(self) -> None:
        if not self.k_c > 0:
            raise ValueError("k_c must be positive")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if self.gamma == 0 or not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite and nonzero")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")

    @property
    def prefactor(self) -> float:
        """sqrt(24 c0) k sqrt(mu) / (gamma sqrt(k pi))."""
        return math.sqrt(24.0 * self.c0) * self.k_c * math.sqrt(self.mu) / (self.gamma * math.sqrt(self.k_c * math.pi))

    @property
    def core_scale(self) -> float:
        """Prefactor of the core Fourier series, k sqrt(12 c0 mu) / gamma."""
        return self.prefactor * math.sqrt(self.k_c * math.pi / 2.0)


def _sign(mn: int) -> float:
    return -1.0 if mn % 2 else 1.0


def radial_profile(params: ModelParams, cfg: LatticeConfig, a, n: int, r, r0: float | None = None,
                   r1: float = 1.0):
    """Leading-order amplitude u_n(r) on the three radial regions."""
    a = np.asarray(a, dtype=float)
    if not 0 <= n < a.size:
        raise ValueError("mode index out of range")
    r0 = 20.0 / params.k_c if r0 is None else r0
    if not r0 > 0 or not r1 > 0:
        raise ValueError("breakpoints must be positive")
    if params.mu > 0 and r0 > r1 / math.sqrt(params.mu):
        raise ValueError("need r0 <= r1 / sqrt(mu)")
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("r must be nonnegative")
    mn = cfg.m * n
    k = params.k_c
    amp = params.prefactor * _sign(mn) * a[n]
    core = math.sqrt(k * math.pi / 2.0) * bessel_j_all(mn, k * r_arr)[mn]
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = k * r_arr - mn * math.pi / 2.0 - math.pi / 4.0
        osc = np.cos(psi) / np.sqrt(r_arr)
        far = osc * np.exp(math.sqrt(params.c0) * (r1 - math.sqrt(params.mu) * r_arr))
    edge = math.inf if params.mu == 0 else r1 / math.sqrt(params.mu)
    out = np.where(r_arr <= r0, core, np.where(r_arr <= edge, osc, far)) * amp
    return float(out) if np.ndim(r) == 0 else out


@dataclass
class PatternGrid:
    r: np.ndarray
    theta: np.ndarray
    u: np.ndarray  # shape (len(r), len(theta))

    def cartesian(self) -> tuple[np.ndarray, np.ndarray]:
        R, TH = np.meshgrid(self.r, self.theta, indexing="ij")
        return R * np.cos(TH), R * np.sin(TH)

    def to_csv(self, path) -> None:
        R, TH = np.meshgrid(self.r, self.theta, indexing="ij")
        data = np.column_stack([R.ravel(), TH.ravel(), self.u.ravel()])
        np.savetxt(path, data, delimiter=",", header="r,theta,u", comments="")

    def to_png(self, path, extent: float | None = None, pixels: int = 400) -> None:
        """Heatmap on a square window, sampled from the polar grid by nearest neighbour."""
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        ext = float(self.r[-1]) if extent is None else extent
        xs = np.linspace(-ext, ext, pixels)
        X, Y = np.meshgrid(xs, xs)
        rr = np.hypot(X, Y)
        th = np.mod(np.arctan2(Y, X), 2 * np.pi)
        ir = np.clip(np.searchsorted(self.r, rr), 0, self.r.size - 1)
        it = np.clip(np.searchsorted(self.theta, th), 0, self.theta.size - 1)
        img = np.where(rr <= self.r[-1], self.u[ir, it], np.nan)
        fig, ax = plt.subplots(figsize=(5, 5))
        ax.imshow(img, origin="lower", extent=(-ext, ext, -ext, ext), cmap="RdBu_r")
        ax.set_axis_off()
        fig.savefig(path, dpi=100, bbox_inches="tight")
        plt.close(fig)


def synthesize(params: ModelParams, cfg: LatticeConfig, a, r_grid, theta_grid, core_only: bool = True,
               r0: float | None = None, r1: float = 1.0) -> PatternGrid:
    """Planar field u(r, theta) = u_0(r) + 2 sum_{n>=1} u_n(r) cos(m n theta).

    With ``core_only`` the Bessel core formula is used on the whole window,
    otherwise each mode follows the three-region radial profile.
    """
    a = np.asarray(a, dtype=float)
    r = np.asarray(r_grid, dtype=float)
    th = np.asarray(theta_grid, dtype=float)
    if r.size == 0 or th.size == 0:
        raise ValueError("grids must be nonempty")
    N = a.size - 1
    if core_only:
        J = bessel_j_all(cfg.m * N, params.k_c * r)
        modes = np.array([_sign(cfg.m * n) * a[n] * J[cfg.m * n] for n in range(N + 1)]) * params.core_scale
    else:
        modes = np.array([radial_profile(params, cfg, a, n, r, r0, r1) for n in range(N + 1)])
    weights = np.where(np.arange(N + 1) == 0, 1.0, 2.0)
    # reduce m n theta modulo 2 pi exactly in units of the grid to keep the symmetry bitwise
    cos = np.cos(np.outer(cfg.m * np.arange(N + 1), th))
    u = (modes * weights[:, None]).T @ cos
    return PatternGrid(r, th, u)


# Bessel triple products


def triple_product_exact(m: int, a: int, b: int) -> float:
    """cos(m pi (a - b)/3) / (pi sin(pi/3))."""
    return math.cos(m * math.pi * (a - b) / 3.0) / (math.pi * math.sin(math.pi / 3.0))


def _triple_integrand(m: int, a: int, b: int, s: np.ndarray) -> np.ndarray:
    orders = sorted({m * a, m * b, m * (a + b)})
    J = bessel_j_all(orders[-1], s)
    return s * J[m * a] * J[m * b] * J[m * (a + b)]


def triple_product_partial(m: int, a: int, b: int, r_max: float, panel: float = 1.0,
                           order: int = 24) -> np.ndarray:
    """Cumulative integral of s J_ma J_mb J_m(a+b) at panel ends up to r_max.

    Composite Gauss-Legendre on panels of width ``panel``; the integrand is
    entire, so each panel is integrated to near machine precision.
    """
    if a < 0 or b < 0 or r_max <= 0:
        raise ValueError("need a, b >= 0 and r_max > 0")
    npan = max(1, int(math.ceil(r_max / panel)))
    edges = np.linspace(0.0, r_max, npan + 1)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    f = _triple_integrand(m, a, b, s).reshape(npan, order)
    pieces = (f @ w) * half
    return edges, np.concatenate([[0.0], np.cumsum(pieces)])


def triple_product_check(m: int, a: int, b: int, r_max: float) -> tuple[float, float]:
    """(numeric integral over [0, r_max], exact value of the infinite integral)."""
    _, cum = triple_product_partial(m, a, b, r_max)
    return float(cum[-1]), triple_product_exact(m, a, b)


def truncation_envelope(m: int, a: int, b: int, r_max: float, window: float = 4 * math.pi) -> float:
    """max |partial integral - exact| over truncation points in [r_max, r_max + window].

    The remainder oscillates, so its envelope rather than a single sample
    exposes the r_max^{-1/2} decay.
    """
    edges, cum = triple_product_partial(m, a, b, r_max + window, panel=0.25)
    sel = edges >= r_max
    return float(np.max(np.abs(cum[sel] - triple_product_exact(m, a, b))))


def initial_guess(params: ModelParams, cfg: LatticeConfig, a, mesh, beta: float) -> np.ndarray:
    """Field rows v_n(r_j) = beta a_n J_mn(r_j) exp(-sqrt(mu) r_j / 2), n = 0..N."""
    a = np.asarray(a, dtype=float)
    r = np.asarray(mesh.r if hasattr(mesh, "r") else mesh, dtype=float)
    N = a.size - 1
    J = bessel_j_all(cfg.m * N, r)
    env = np.exp(-math.sqrt(params.mu) * r / 2.0)
    return np.array([beta * a[n] * J[cfg.m * n] * env for n in range(N + 1)])
