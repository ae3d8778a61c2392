"""Finite-difference Galerkin solver for the Swift-Hohenberg equation

    0 = -(1 + Delta)^2 u - mu u + gamma u^2 - u^3

with u(r, theta) = sum_{n=-N}^{N} u_|n|(r) cos(m n theta), on a uniform radial
mesh r_j = j r*/(T-1), j = 0..T-1.

Boundary rows of the radial Laplacian Delta_n = d_rr + r^{-1} d_r - (mn)^2 r^{-2}:
  r = 0, mn = 0: u is even in r and r^{-1} d_r -> d_rr, so Delta u(0) = 2 u''(0).
                 The row [(10/3)(u_1 - u_0) + (1/6)(u_2 - u_0)]/h^2 has truncation
                 error h^2 u''''/4, the r -> 0 limit of the interior error, so the
                 error field stays smooth and (1 + D_0)^2 remains O(h^2) accurate
                 at the origin (the two-point row 4(u_1 - u_0)/h^2 leaves an O(1)
                 error after squaring);
  r = 0, mn > 0: the derivative rows vanish and the row reduces to -(mn)^2 u_0,
                 which pins u_n(0) = 0 (and Delta_n u_n(0) = 0 when squared);
  r = r*:        Neumann reflection, row 2 (u_{T-2} - u_{T-1})/h^2.
Applying the same matrix twice imposes the conditions on Delta_n u_n as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bessel import bessel_j_all
from .errors import InitialPointNotConverged, NoConvergence, SingularJacobian, StepUnderflow
from .lattice import LatticeConfig


@dataclass(frozen=True)
class RadialMesh:
    r_star: float
    T: int

    def __post_init__(self) -> None:
        if self.T < 3:
            raise ValueError("need T >= 3")
        if not self.r_star > 0:
            raise ValueError("r_star must be positive")

    @property
    def h(self) -> float:
        return self.r_star / (self.T - 1)

    @property
    def r(self) -> np.ndarray:
        return np.arange(self.T) * self.h


@dataclass(frozen=True)
class SheParams:
    mu: float
    gamma: float = 1.6

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu) and math.isfinite(self.gamma)):
            raise ValueError("parameters must be finite")


def diff_matrices(mesh: RadialMesh, mn: int) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.dia_matrix]:
    """D1, D2 and R with the boundary rows described in the module docstring."""
    T, h = mesh.T, mesh.h
    off = np.ones(T - 1)
    D2 = sp.diags([off, -2.0 * np.ones(T), off], [-1, 0, 1], format="lil") / h**2
    D1 = sp.diags([-off, off], [-1, 1], format="lil") / (2.0 * h)
    D2, D1 = D2.tolil(), D1.tolil()
    D2[0, :] = 0.0
    D1[0, :] = 0.0
    if mn == 0:
        # half the origin Laplacian in each of D2 and R D1 (R_00 = 1)
        row = np.array([-7.0 / 4.0, 5.0 / 3.0, 1.0 / 12.0]) / h**2
        for D in (D2, D1):
            D[0, 0], D[0, 1], D[0, 2] = row
    D2[T - 1, :] = 0.0
    D1[T - 1, :] = 0.0
    D2[T - 1, T - 2], D2[T - 1, T - 1] = 2.0 / h**2, -2.0 / h**2
    rinv = np.ones(T)
    rinv[1:] = 1.0 / mesh.r[1:]
    return D1.tocsr(), D2.tocsr(), sp.diags(rinv)


def build_operators(mesh: RadialMesh, cfg: LatticeConfig, N: int | None = None) -> list[sp.csr_matrix]:
    """Matrices D_n = D2 + R D1 - (mn)^2 R^2 for n = 0..N."""
    N = cfg.N if N is None else N
    ops = []
    for n in range(N + 1):
        mn = cfg.m * n
        D1, D2, R = diff_matrices(mesh, mn)
        ops.append((D2 + R @ D1 - (mn**2) * (R @ R)).tocsr())
    return ops


def linear_blocks(mesh: RadialMesh, cfg: LatticeConfig, mu: float, ops=None) -> list[sp.csr_matrix]:
    """L_n = (I + D_n)^2 + mu I."""
    ops = build_operators(mesh, cfg) if ops is None else ops
    I = sp.identity(mesh.T, format="csr")
    return [((I + D) @ (I + D) + mu * I).tocsr() for D in ops]


def _extend(V: np.ndarray) -> np.ndarray:
    """Rows for modes -N..N: W[N + i] = v_|i|."""
    return np.concatenate([V[:0:-1], V], axis=0)


def _mode_convolution(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Z[k] = sum_i X[i] * Y[k - i] over the first axis (full length)."""
    nx, ny = X.shape[0], Y.shape[0]
    Z = np.zeros((nx + ny - 1,) + X.shape[1:])
    for i in range(nx):
        Z[i:i + ny] += X[i] * Y
    return Z


def nonlinear_terms(V: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(K2, K3, S2) with K2_n = sum_{i+j=n} v_|i| v_|j|, K3_n = sum_{i+j+l=n} v_|i| v_|j| v_|l|.

    All indices range over [-N, N]. S2[k + 2N] is the pair sum for total k in [-2N, 2N].
    """
    V = np.asarray(V, dtype=float)
    N = V.shape[0] - 1
    W = _extend(V)
    S2 = _mode_convolution(W, W)  # index k + 2N
    K2 = S2[2 * N:3 * N + 1]
    S3 = _mode_convolution(W, S2)  # index k + 3N
    K3 = S3[3 * N:4 * N + 1]
    return K2, K3, S2


def _check_shape(mesh: RadialMesh, cfg: LatticeConfig, V: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V.reshape(-1, mesh.T)
    if V.shape[1] != mesh.T:
        raise ValueError(f"field has {V.shape[1]} radial samples, mesh has {mesh.T}")
    if V.shape[0] != cfg.N + 1:
        raise ValueError(f"field has {V.shape[0]} modes, expected {cfg.N + 1}")
    return V


class GalerkinProblem:
    """Caches the linear operators for one (mesh, cfg)."""

    def __init__(self, mesh: RadialMesh, cfg: LatticeConfig):
        self.mesh, self.cfg = mesh, cfg
        self.ops = build_operators(mesh, cfg)
        I = sp.identity(mesh.T, format="csr")
        self.sq = [((I + D) @ (I + D)).tocsr() for D in self.ops]

    @property
    def size(self) -> int:
        return (self.cfg.N + 1) * self.mesh.T

    def residual(self, V: np.ndarray, params: SheParams) -> np.ndarray:
        V = _check_shape(self.mesh, self.cfg, V)
        K2, K3, _ = nonlinear_terms(V)
        lin = np.array([self.sq[n] @ V[n] for n in range(V.shape[0])]) + params.mu * V
        return -lin + params.gamma * K2 - K3

    def jacobian(self, V: np.ndarray, params: SheParams) -> sp.csr_matrix:
        V = _check_shape(self.mesh, self.cfg, V)
        N = V.shape[0] - 1
        T = self.mesh.T
        W = _extend(V)
        _, _, S2 = nonlinear_terms(V)
        blocks = [[None] * (N + 1) for _ in range(N + 1)]
        I = sp.identity(T, format="csr")
        for n in range(N + 1):
            for k in range(N + 1):
                d = np.zeros(T)
                for i in ({k, -k}):
                    j = n - i  # partner index for the quadratic term
                    if -N <= j <= N:
                        d += 2.0 * params.gamma * W[N + j]
                    d -= 3.0 * S2[2 * N + n - i]
                blk = sp.diags(d)
                if n == k:
                    blk = blk - self.sq[n] - params.mu * I
                blocks[n][k] = blk
        return sp.bmat(blocks, format="csc")


def she_residual(mesh: RadialMesh, cfg: LatticeConfig, params: SheParams, V) -> np.ndarray:
    return GalerkinProblem(mesh, cfg).residual(V, params)


def she_jacobian(mesh: RadialMesh, cfg: LatticeConfig, params: SheParams, V) -> sp.csc_matrix:
    return GalerkinProblem(mesh, cfg).jacobian(V, params)


def _solve(J, rhs) -> np.ndarray:
    try:
        with np.errstate(all="ignore"):
            x = spla.spsolve(J, rhs)
    except RuntimeError as exc:  # singular factor
        raise SingularJacobian(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("linear solve produced non-finite values")
    return x


def _bordered_solve(J, b, c, d, f, g) -> np.ndarray:
    """Solve [[J, b], [c^T, d]] [x; y] = [f; g] by block elimination on one LU of J.

    At a fold J is singular while the bordered matrix is not; in that case
    the bordered matrix is factored directly.
    """
    try:
        with np.errstate(all="ignore"):
            lu = spla.splu(sp.csc_matrix(J))
        z = lu.solve(np.column_stack([f, b]))
        zf, zb = z[:, 0], z[:, 1]
        den = d - c @ zb
        if np.all(np.isfinite(z)) and abs(den) > 1e-12 * (abs(d) + np.abs(c) @ np.abs(zb)):
            y = (g - c @ zf) / den
            return np.append(zf - y * zb, y)
    except RuntimeError:
        pass
    A = sp.bmat([[J, sp.csr_matrix(b[:, None])], [sp.csr_matrix(c[None, :]), sp.csr_matrix([[d]])]],
                format="csc")
    return _solve(A, np.append(f, g))


def newton_solve(mesh: RadialMesh, cfg: LatticeConfig, params: SheParams, V0, tol: float = 1e-8,
                 max_iter: int = 40, problem: GalerkinProblem | None = None) -> np.ndarray:
    """Damped Newton with step halving until max |G| <= tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    P = GalerkinProblem(mesh, cfg) if problem is None else problem
    V = _check_shape(mesh, cfg, V0).copy()
    G = P.residual(V, params)
    res = np.max(np.abs(G))
    for _ in range(max_iter):
        if res <= tol:
            return V
        dx = _solve(P.jacobian(V, params), -G.ravel()).reshape(V.shape)
        lam = 1.0
        while lam > 1e-4:
            Vn = V + lam * dx
            Gn = P.residual(Vn, params)
            rn = np.max(np.abs(Gn))
            if np.isfinite(rn) and rn < res:
                break
            lam *= 0.5
        else:
            raise NoConvergence(f"line search failed at residual {res:.3e}")
        V, G, res = Vn, Gn, rn
    if res <= tol:
        return V
    raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations")


# continuation


@dataclass
class BranchPoint:
    mu: float
    norm: float
    residual: float
    V: np.ndarray | None = None


@dataclass
class ContinuationBranch:
    points: list[BranchPoint] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    failures: int = 0

    @property
    def mu(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @property
    def norms(self) -> np.ndarray:
        return np.array([p.norm for p in self.points])

    def folds(self) -> list[int]:
        """Indices where mu changes direction along the branch."""
        d = np.diff(self.mu)
        s = np.sign(d[d != 0])
        idx = np.nonzero(d != 0)[0]
        return [int(idx[i + 1]) for i in range(len(s) - 1) if s[i] != s[i + 1]]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("step,mu,norm,residual\n")
            for i, p in enumerate(self.points):
                fh.write(f"{i},{float(p.mu)!r},{float(p.norm)!r},{float(p.residual)!r}\n")


def field_norm(V: np.ndarray, mesh: RadialMesh) -> float:
    """Discrete L2 norm sqrt(h sum v^2) over all modes."""
    return float(math.sqrt(mesh.h * np.sum(np.asarray(V) ** 2)))


def secant_continue(mesh: RadialMesh, cfg: LatticeConfig, params0: SheParams, V0, V1_hint=None,
                    n_steps: int = 100, step: float = 0.1, direction: float = 1.0, tol: float = 1e-8,
                    max_corrector: int = 8, keep_fields: bool = True, mu_bounds=(-math.inf, math.inf),
                    callback=None) -> ContinuationBranch:
    """Secant pseudo-arclength continuation in (V, mu).

    Arclength uses the weighted product <X, Y> = h V.V' + mu mu'. The first
    secant comes from V1_hint (a solution at a nearby mu, given as (mu1, V1))
    or from a natural-parameter step of size ``step`` in ``direction``.
    """
    P = GalerkinProblem(mesh, cfg)
    gamma = params0.gamma
    h = mesh.h
    V0 = _check_shape(mesh, cfg, V0)
    r0 = np.max(np.abs(P.residual(V0, params0)))
    if not r0 <= 10 * tol:
        raise InitialPointNotConverged(f"initial residual {r0:.3e}")
    if V1_hint is None:
        mu1 = params0.mu + direction * step
        V1 = newton_solve(mesh, cfg, SheParams(mu1, gamma), V0, tol, problem=P)
    else:
        mu1, V1 = V1_hint
        V1 = newton_solve(mesh, cfg, SheParams(mu1, gamma), V1, tol, problem=P)

    def pack(V, mu):
        return np.append(V.ravel(), mu)

    def wdot(x, y):
        return h * float(x[:-1] @ y[:-1]) + float(x[-1] * y[-1])

    branch = ContinuationBranch()

    def record(V, mu):
        G = P.residual(V, SheParams(mu, gamma))
        branch.points.append(BranchPoint(mu, field_norm(V, mesh), float(np.max(np.abs(G))),
                                         V.copy() if keep_fields else None))
        if callback is not None:
            callback(branch)

    record(V0, params0.mu)
    record(V1, mu1)
    X_prev, X = pack(V0, params0.mu), pack(V1, mu1)
    ds = math.sqrt(wdot(X - X_prev, X - X_prev))
    ds_min, ds_max = ds / 64.0, 4.0 * ds
    shape = V0.shape
    n = V0.size
    successes = 0
    for _ in range(n_steps):
        sec = X - X_prev
        tau = sec / math.sqrt(wdot(sec, sec))
        while True:
            Xp = X + ds * tau
            Y = Xp.copy()
            ok = False
            for _ in range(max_corrector):
                V, mu = Y[:-1].reshape(shape), Y[-1]
                prm = SheParams(mu, gamma)
                G = P.residual(V, prm).ravel()
                c = wdot(tau, Y - Xp)
                if np.max(np.abs(G)) <= tol and abs(c) <= tol:
                    ok = True
                    break
                J = P.jacobian(V, prm)
                try:
                    dY = _bordered_solve(J, -V.ravel(), h * tau[:-1], tau[-1], -G, -c)
                except SingularJacobian:
                    break
                Y = Y + dY
                if not np.all(np.isfinite(Y)):
                    break
            if ok:
                break
            branch.failures += 1
            successes = 0
            ds *= 0.5
            if ds < ds_min:
                raise StepUnderflow(f"step fell below {ds_min:.3e} at mu={X[-1]:.6g}")
        X_prev, X = X, Y
        branch.steps.append(ds)
        record(Y[:-1].reshape(shape), Y[-1])
        successes += 1
        if successes >= 3:
            ds = min(1.2 * ds, ds_max)
            successes = 0
        if not mu_bounds[0] <= Y[-1] <= mu_bounds[1]:
            break
    return branch


def natural_descent(mesh: RadialMesh, cfg: LatticeConfig, params0: SheParams, V0, mu_path,
                    tol: float = 1e-10, problem: GalerkinProblem | None = None) -> list[tuple[float, np.ndarray]]:
    """Natural-parameter continuation along mu_path starting from a solution at params0.mu.

    Each predictor rescales the field by sqrt(mu_new / mu_old), the leading
    small-amplitude scaling, before Newton correction.
    """
    P = GalerkinProblem(mesh, cfg) if problem is None else problem
    mu, gamma = params0.mu, params0.gamma
    V = newton_solve(mesh, cfg, params0, V0, tol, problem=P)
    out = [(mu, V)]
    for mu_next in mu_path:
        if not (mu > 0 and mu_next > 0):
            raise ValueError("natural descent needs positive mu values")
        V = newton_solve(mesh, cfg, SheParams(mu_next, gamma), V * math.sqrt(mu_next / mu), tol, problem=P)
        mu = float(mu_next)
        out.append((mu, V))
    return out


def amplitude_diagnostic(mesh: RadialMesh, cfg: LatticeConfig, params: SheParams, V) -> np.ndarray:
    """u*_n = gamma / sqrt(3 mu) * max|v_n| / max|J_mn(r_j)|."""
    if not params.mu > 0:
        raise ValueError("amplitude diagnostic needs mu > 0")
    V = _check_shape(mesh, cfg, V)
    J = bessel_j_all(cfg.m * cfg.N, mesh.r)
    scale = params.gamma / math.sqrt(3.0 * params.mu)
    return np.array([scale * np.max(np.abs(V[n])) / np.max(np.abs(J[cfg.m * n])) for n in range(V.shape[0])])


def planar_field(mesh: RadialMesh, cfg: LatticeConfig, V, extent: float, pixels: int = 201):
    """u(x, y) = v_0(r) + 2 sum_n v_n(r) cos(m n theta) on a square grid, by linear interpolation in r."""
    V = _check_shape(mesh, cfg, V)
    xs = np.linspace(-extent, extent, pixels)
    X, Y = np.meshgrid(xs, xs)
    R = np.hypot(X, Y)
    TH = np.arctan2(Y, X)
    u = np.zeros_like(R)
    for n in range(V.shape[0]):
        vn = np.interp(R.ravel(), mesh.r, V[n]).reshape(R.shape)
        u += (1.0 if n == 0 else 2.0) * vn * np.cos(cfg.m * n * TH)
    return xs, u


def count_peaks(u: np.ndarray, rel: float = 0.5) -> int:
    """Number of strict local maxima (8-neighbourhood) exceeding rel * max(u)."""
    c = u[1:-1, 1:-1]
    mask = c > rel * np.max(u)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx or dy:
                mask &= c > u[1 + dy:u.shape[0] - 1 + dy, 1 + dx:u.shape[1] - 1 + dx]
    return int(np.sum(mask))
