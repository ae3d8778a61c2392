"""The finite matching system a = Q(a) and its small-N solution families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NoConvergence, NotSixDivisible, SingularJacobian, UnsupportedCase
from .lattice import LatticeConfig, MClass, c_m, m_class
from .roots import isolate_real_roots


@dataclass
class MatchSolution:
    a: np.ndarray
    residual_norm: float
    nondegeneracy_det: float
    mclass: MClass
    label: str = ""
    representative: bool = True
    meta: dict = field(default_factory=dict)

    def to_record(self, cfg: LatticeConfig) -> dict:
        return {
            "m": cfg.m,
            "N": cfg.N,
            "a": [float(x) for x in self.a],
            "residual": float(self.residual_norm),
            "det": float(self.nondegeneracy_det),
            "class": self.mclass.value,
            "label": self.label,
            "representative": self.representative,
        }


@lru_cache(maxsize=64)
def _twice_coeff_tensor(m6: int, N: int) -> np.ndarray:
    """Integer tensor B with 2*Q_n(a) = a^T B[n] a, B[n] symmetric."""
    tc = np.array([2, 1, -1, -2, -1, 1])
    c = lambda k: tc[(m6 * k) % 6]
    B = np.zeros((N + 1, N + 1, N + 1), dtype=np.int64)
    for n in range(N + 1):
        for j in range(1, N - n + 1):
            # 2 cos(.) a_j a_{n+j}, split over the symmetric pair
            B[n, j, n + j] += c(n - j)
            B[n, n + j, j] += c(n - j)
        for j in range(n + 1):
            B[n, j, n - j] += c(n - 2 * j)
    B.setflags(write=False)
    return B


@lru_cache(maxsize=64)
def _half_tensor(m6: int, N: int) -> np.ndarray:
    B = 0.5 * _twice_coeff_tensor(m6, N)
    B.setflags(write=False)
    return B


def _coeff_tensor(cfg: LatticeConfig) -> np.ndarray:
    return _half_tensor(cfg.m % 6, cfg.N)


def _contract(cfg: LatticeConfig, a: np.ndarray) -> np.ndarray:
    B = _coeff_tensor(cfg)
    return (B.reshape(-1, B.shape[2]) @ a).reshape(B.shape[0], B.shape[1])


def _check_len(cfg: LatticeConfig, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (cfg.N + 1,):
        raise ValueError(f"expected a vector of length {cfg.N + 1}, got shape {a.shape}")
    return a


def q_apply(cfg: LatticeConfig, a) -> np.ndarray:
    """Evaluate the quadratic matching map Q_N^m."""
    a = _check_len(cfg, a)
    return _contract(cfg, a) @ a


def q_jacobian(cfg: LatticeConfig, a) -> np.ndarray:
    a = _check_len(cfg, a)
    return 2.0 * _contract(cfg, a)


def _det_info(J: np.ndarray) -> tuple[float, bool]:
    """Determinant of J and whether it is numerically singular.

    Singular means |det| < 1e-12 * max|J_ij|^(N+1); compared in log space
    so large N does not overflow.
    """
    sign, logdet = np.linalg.slogdet(J)
    scale = np.max(np.abs(J))
    if sign == 0 or scale == 0:
        return 0.0, True
    singular = logdet < math.log(1e-12) + J.shape[0] * math.log(scale)
    return float(sign * math.exp(logdet)) if logdet < 700 else float(sign * math.inf), singular


def residual_norm(cfg: LatticeConfig, a) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.max(np.abs(a - q_apply(cfg, a))))


def nondegeneracy_det(cfg: LatticeConfig, a) -> float:
    return _det_info(np.eye(cfg.N + 1) - q_jacobian(cfg, a))[0]


def newton_fixed_point(
    cfg: LatticeConfig, a0, tol: float = 1e-12, max_iter: int = 50
) -> MatchSolution:
    """Newton iteration on F(a) = a - Q(a) with step halving."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = _check_len(cfg, a0).copy()
    eye = np.eye(cfg.N + 1)
    F = a - q_apply(cfg, a)
    res = np.max(np.abs(F))
    for _ in range(max_iter + 1):
        J = eye - q_jacobian(cfg, a)
        det, singular = _det_info(J)
        if res <= tol:
            return MatchSolution(a, float(res), det, m_class(cfg))
        if singular:
            raise SingularJacobian(f"det(I - DQ) = {det:.3e} is numerically zero")
        step = np.linalg.solve(J, -F)
        t = 1.0
        for _ in range(21):
            trial = a + t * step
            F_trial = trial - q_apply(cfg, trial)
            res_trial = np.max(np.abs(F_trial))
            if res_trial < res:
                break
            t *= 0.5
        # accept the last trial even without decrease; plain Newton fallback
        a, F, res = trial, F_trial, res_trial
        if not np.isfinite(res) or res > 1e12:
            raise NoConvergence("Newton iteration diverged")
    raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations")


def polish(cfg: LatticeConfig, a, steps: int = 12) -> np.ndarray:
    """A few undamped Newton steps keeping the smallest residual seen."""
    a = _check_len(cfg, a).copy()
    best, best_res = a, residual_norm(cfg, a)
    eye = np.eye(cfg.N + 1)
    for _ in range(steps):
        try:
            a = a + np.linalg.solve(eye - q_jacobian(cfg, a), q_apply(cfg, a) - a)
        except np.linalg.LinAlgError:
            break
        r = residual_norm(cfg, a)
        if r < best_res:
            best, best_res = a.copy(), r
        if r == 0.0:
            break
    return best


# symmetries


def rotate_half_period(a) -> np.ndarray:
    """Entry n goes to (-1)^n a_n (rotation by half a period)."""
    a = np.asarray(a, dtype=float)
    signs = np.where(np.arange(a.size) % 2 == 0, 1.0, -1.0)
    return signs * a


def harmonic_embed(a, i: int, N_target: int) -> np.ndarray:
    """Place a_k at index k*i of a length N_target+1 vector."""
    a = np.asarray(a, dtype=float)
    if i < 1:
        raise ValueError("embedding index must be positive")
    if N_target // i != a.size - 1:
        raise ValueError(
            f"floor({N_target}/{i}) = {N_target // i} does not match input length {a.size}"
        )
    out = np.zeros(N_target + 1)
    out[::i] = a
    return out


def dark_counterpart(cfg: LatticeConfig, a) -> np.ndarray:
    """Bright/dark duality (a0, a1, ...) -> (1 - a0, -a1, ...); needs 6 | m."""
    if cfg.m % 6:
        raise NotSixDivisible(f"duality requires 6 | m, got m = {cfg.m}")
    b = -np.asarray(a, dtype=float)
    b[0] += 1.0
    return b


# closed-form families


def _is_lower_truncation(a: np.ndarray, tol: float = 1e-9) -> bool:
    """True when a comes from a smaller N (a_N = 0) or is a harmonic embedding."""
    N = a.size - 1
    if abs(a[N]) < tol:
        return True
    support = [k for k in range(1, N + 1) if abs(a[k]) >= tol]
    g = 0
    for k in support:
        g = math.gcd(g, k)
    return g > 1


def _n3_tables(mc: MClass):
    # (q1, q2, p) as coefficient lists, highest degree first
    if mc is MClass.SIX:
        q1 = np.array([10, -10, 3]) / 30
        q2 = np.array([110, -110, 21]) / 6
        p = [220, -440, 310, -90, 9]  # 220(x-1)^2 x^2 + 90(x-1)x + 9
    elif mc is MClass.ODD_THREE:
        q1 = np.array([-440, -170, 38, 17]) / 50
        q2 = np.array([1760, 430, -142, -23]) / 30
        p = [220, 40, -34, -2, 1]
    elif mc is MClass.EVEN_NOT_THREE:
        q1 = np.array([-5, -559, 3851, -185, -204]) / 369
        q2 = np.array([463, 53387, -137638, 25249, 17931]) / 12546
        p = [1, 116, -217, -113, 24, 9]
    else:
        q1 = np.array([5.0, 2.0])
        q2 = np.array([1.0, 2.0])
        p = [1, 3, 1]
    return q1, q2, p


def _raw_closed_forms(cfg: LatticeConfig) -> list[tuple[str, np.ndarray]]:
    C = float(c_m(cfg))
    s = -1.0 if cfg.m % 2 else 1.0
    mc = m_class(cfg)
    out: list[tuple[str, np.ndarray]] = []
    if cfg.N == 1:
        ratio = (C - 1) / C**3
        if ratio >= 0:
            out.append(("N1", np.array([1 / C, math.sqrt(ratio)])))
    elif cfg.N == 2:
        # p_m(l) = (4 + 3 s C^3) l^2 + (2C + (1 - s) C^3 - 4) l - (C - 1)
        p = [4 + 3 * s * C**3, 2 * C + (1 - s) * C**3 - 4, -(C - 1)]
        for j, lam in enumerate(isolate_real_roots(p), 1):
            q = ((1 - s) + 2 * s * lam) * lam
            if q >= 0:
                out.append((f"N2_{j}", np.array([(1 - 2 * lam) / C, math.sqrt(q), lam])))
    elif cfg.N == 3:
        if cfg.m % 3 == 0:
            root = math.sqrt((2 - s) / 10)
            out.append(("N3_0", np.array([s / 2, root, 0.0, -s / 2 * root])))
        q1, q2, p = _n3_tables(mc)
        for j, lam in enumerate(isolate_real_roots(p), 1):
            v1, v2 = np.polyval(q1, lam), np.polyval(q2, lam)
            if v1 < 0:
                continue
            r1 = math.sqrt(v1)
            out.append((f"N3_{j}", np.array([lam, r1, (1 - s * 2 * lam) * v2, C * v2 * r1])))
    elif cfg.N == 4:
        if mc is not MClass.SIX:
            raise UnsupportedCase("N = 4 closed forms are only available for 6 | m")
        quartic = [3, 2, -10, -4, 7]
        sextic = [6, 4, -10, 0, -12, -12, 19]
        for j, lam in enumerate(isolate_real_roots([6, 5, -20, -12, 12, 3]), 1):
            big, small = np.polyval(sextic, lam), np.polyval(quartic, lam)
            rs = math.sqrt(big)
            ratio = math.sqrt(small / big)
            a = np.array([
                0.5 - 0.5 / rs,
                0.5 * ratio,
                (1 - lam**2) / (2 * rs),
                0.5 * lam * ratio,
                (lam**2 + lam - 1) / (2 * rs),
            ])
            out.append((f"N4_{j}", a))
    else:
        raise UnsupportedCase(f"no closed-form family for N = {cfg.N}")
    return out


def closed_form_solutions(cfg: LatticeConfig) -> list[MatchSolution]:
    """Nontrivial solutions unique to truncation N, one per rotation class.

    Roots of the class polynomial are isolated exactly and back-substituted;
    each vector is then polished by a few Newton steps, which matters for the
    large-amplitude members of the N = 3 families.
    """
    sols = []
    for label, a in _raw_closed_forms(cfg):
        if _is_lower_truncation(a):
            continue
        a = polish(cfg, a)
        sols.append(
            MatchSolution(
                a=a,
                residual_norm=residual_norm(cfg, a),
                nondegeneracy_det=nondegeneracy_det(cfg, a),
                mclass=m_class(cfg),
                label=label,
            )
        )
    return sols


def lambda_roots_n4() -> list[float]:
    """Roots of the N = 4 parameter polynomial, ascending."""
    return isolate_real_roots([6, 5, -20, -12, 12, 3], (-10.0, 10.0), 1e-14)


# multi-start search


def positive_seed(N: int) -> np.ndarray:
    """Decaying positive guess (0.6 (1 - n/(N+1)) scaled by 1/(N+1))."""
    n = np.arange(N + 1)
    return 0.6 * (1 - n / (N + 1)) / (N + 1)


def enumerate_solutions(
    cfg: LatticeConfig, n_starts: int, seed: int = 0, tol: float = 1e-12
) -> list[MatchSolution]:
    """Multi-start Newton search with deduplication and symmetry closure.

    The first start is the zero vector; for 6 | m the second is a positive
    decaying profile so the positive branch is always represented. The rest
    are uniform in [-1, 1]^(N+1).
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    rng = np.random.default_rng(seed)
    dim = cfg.N + 1
    starts = [np.zeros(dim)]
    if cfg.m % 6 == 0 and n_starts > 1:
        starts.append(positive_seed(cfg.N))
    while len(starts) < n_starts:
        starts.append(rng.uniform(-1.0, 1.0, dim))

    found: list[MatchSolution] = []
    stacked = np.empty((0, dim))

    def add(a: np.ndarray, label: str, rep: bool) -> None:
        nonlocal stacked
        if stacked.shape[0] and np.min(np.max(np.abs(stacked - a), axis=1)) < 100 * tol:
            return
        stacked = np.vstack([stacked, a])
        found.append(
            MatchSolution(a, residual_norm(cfg, a), nondegeneracy_det(cfg, a), m_class(cfg), label, rep)
        )

    for a0 in starts:
        try:
            sol = newton_fixed_point(cfg, a0, tol=tol, max_iter=40)
        except (SingularJacobian, NoConvergence):
            continue
        add(sol.a, "newton", True)

    # symmetry closure; images are tagged as non-representatives
    for s in list(found):
        images = [rotate_half_period(s.a)]
        if cfg.m % 6 == 0:
            d = dark_counterpart(cfg, s.a)
            images += [d, rotate_half_period(d)]
        for img in images:
            if residual_norm(cfg, img) <= 10 * tol:
                add(img, "symmetry", False)
    return found
