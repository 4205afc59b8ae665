"""The power-log function Phi(x, t) = t^p(x) (log(e + t))^q(x) and its checks.

Besides evaluation and inversion in ``t`` this module samples the structural
conditions a generalized weak Phi-function may satisfy: (A0), (A1), (A2),
(aInc)_1 and (Dec)_s.  The checkers only ever falsify; a pass means no
violation was found on the sampled grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .box import as_points
from .exponent_fields import DecayData, ExponentField

E = np.e
LOG_E1 = float(np.log(E + 1.0))


class NonMonotoneError(ArithmeticError):
    """Phi(x, .) was found decreasing between two sampled arguments."""

    def __init__(self, t_low, t_high, message=None):
        self.pair = (float(t_low), float(t_high))
        super().__init__(message or "Phi(x, .) not increasing between "
                         f"t={self.pair[0]!r} and t={self.pair[1]!r}")


def phi_values(t, p, q):
    """Vectorized ``t**p * log(e + t)**q`` (broadcasting)."""
    t = np.asarray(t, dtype=float)
    return np.power(t, p) * np.power(np.log(E + t), q)


def sobolev_conjugate(p_val, n: int):
    """``n p / (n - p)``, i.e. ``1/p* = 1/p - 1/n``."""
    p_arr = np.asarray(p_val, dtype=float)
    if np.any(p_arr < 1):
        raise ValueError("Sobolev conjugate needs p >= 1")
    if np.any(p_arr >= n):
        raise ValueError(f"Sobolev conjugate undefined for p >= n = {n}")
    out = n * p_arr / (n - p_arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PhiFunction:
    p: ExponentField
    q: ExponentField
    n: int = 2

    def __post_init__(self):
        if self.p.dim != self.q.dim:
            raise ValueError("p and q live in different dimensions")
        if self.n < 1:
            raise ValueError("dimension n must be positive")

    @property
    def dim(self) -> int:
        return self.p.dim

    def exponents(self, x):
        pts = as_points(x, self.dim)
        return self.p(pts), self.q(pts)

    def __call__(self, x, t):
        return eval_phi(self, x, t)

    def conjugate(self) -> "PhiFunction":
        """Psi as a member of the same family: exponent p*, log power q p*/p."""
        n = self.n
        if self.p.sup_val >= n:
            raise ValueError(f"p+ = {self.p.sup_val} must be below n = {n}")
        p, q = self.p, self.q

        def pstar(x):
            return sobolev_conjugate(p.func(x), n)

        def qstar(x):
            pv = p.func(x)
            return q.func(x) * n / (n - pv)

        corners = [qq * n / (n - pp) for pp in (p.inf_val, p.sup_val)
                   for qq in (q.inf_val, q.sup_val)]
        lip = n * n / (n - p.sup_val) ** 2
        pfield = ExponentField(pstar, p.box, sobolev_conjugate(p.inf_val, n),
                               sobolev_conjugate(p.sup_val, n), p.modulus_kind,
                               p.modulus_constant * lip, "p", f"{p.name}*")
        qfield = ExponentField(qstar, q.box, min(corners), max(corners), q.modulus_kind,
                               q.modulus_constant, "q", f"{q.name}*")
        return PhiFunction(pfield, qfield, n)

    @property
    def satisfies_growth(self) -> bool:
        """``p- + q- >= 1``, the standing assumption of the necessity results."""
        return self.p.inf_val + self.q.inf_val >= 1.0


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("Phi is defined for t >= 0 only")
    return t


def eval_phi(phi: PhiFunction, x, t):
    """``t^p(x) (log(e + t))^q(x)``; ``x`` one point or ``m`` points broadcast against ``t``."""
    t = _check_t(t)
    pv, qv = phi.exponents(x)
    if pv.size == 1:
        out = phi_values(t, pv[0], qv[0])
    else:
        out = phi_values(t, pv, qv)
    return float(out) if np.ndim(out) == 0 else out


def eval_psi(phi: PhiFunction, x, t):
    t = _check_t(t)
    pv, qv = phi.exponents(x)
    if np.any(pv >= phi.n):
        raise ValueError(f"Psi needs p(x) < n = {phi.n}")
    ps = sobolev_conjugate(pv, phi.n)
    ps = np.atleast_1d(ps)
    qs = qv * ps / pv
    out = phi_values(t, ps[0], qs[0]) if ps.size == 1 else phi_values(t, ps, qs)
    return float(out) if np.ndim(out) == 0 else out


def invert_values(pv, qv, s, rtol: float = 1e-12, max_iter: int = 200):
    """Solve ``phi_values(t, pv, qv) = s`` for ``t`` by bracketing bisection.

    All arguments broadcast.  The initial bracket ``[0, max(1, s^(1/p) 2^|q|)]``
    is doubled until it contains the solution.
    """
    pv, qv, s = np.broadcast_arrays(np.asarray(pv, float), np.asarray(qv, float),
                                    np.asarray(s, float))
    shape = s.shape
    pv, qv, s = pv.ravel(), qv.ravel(), s.ravel()
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise ValueError("cannot invert Phi at a negative level")
    lo = np.zeros_like(s)
    hi = np.maximum(1.0, np.power(s, 1.0 / pv) * np.power(2.0, np.abs(qv)))
    f_hi = phi_values(hi, pv, qv)
    for _ in range(2000):
        short = f_hi < s
        if not np.any(short):
            break
        lo[short] = hi[short]
        hi[short] *= 2.0
        f_prev = f_hi[short]
        f_hi[short] = phi_values(hi[short], pv[short], qv[short])
        drop = f_hi[short] < f_prev
        if np.any(drop):
            k = np.nonzero(short)[0][np.argmax(drop)]
            raise NonMonotoneError(lo[k], hi[k])
    f_lo = phi_values(lo, pv, qv)
    active = (s > 0) & (hi - lo > rtol * hi)
    for _ in range(max_iter):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        f_mid = phi_values(mid, pv[idx], qv[idx])
        bad = (f_mid < f_lo[idx]) | (f_mid > f_hi[idx])
        if np.any(bad):
            k = idx[np.argmax(bad)]
            j = int(np.argmax(bad))
            pair = (lo[k], mid[j]) if f_mid[j] < f_lo[k] else (mid[j], hi[k])
            raise NonMonotoneError(*pair)
        up = f_mid < s[idx]
        lo[idx[up]], f_lo[idx[up]] = mid[up], f_mid[up]
        hi[idx[~up]], f_hi[idx[~up]] = mid[~up], f_mid[~up]
        active[idx] = hi[idx] - lo[idx] > rtol * hi[idx]
    t = np.where(s > 0, 0.5 * (lo + hi), 0.0)
    return t.reshape(shape)


def invert_phi(phi: PhiFunction, x, s):
    """``Phi^{-1}(x, s)``; scalar in, scalar out."""
    pv, qv = phi.exponents(x)
    s_arr = np.asarray(s, dtype=float)
    if pv.size == 1:
        out = invert_values(pv[0], qv[0], s_arr)
    else:
        out = invert_values(pv, qv, s_arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# structural conditions


@dataclass
class ConditionReport:
    condition: str
    beta_or_bound: float
    passes: bool
    witnesses: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"condition": self.condition, "beta_or_bound": self.beta_or_bound,
                "passes": self.passes, "witnesses": self.witnesses, "details": self.details}


def default_points(phi: PhiFunction, per_axis: int = 32) -> np.ndarray:
    return phi.p.box.grid(per_axis)


def _points(phi, sample_points):
    pts = default_points(phi) if sample_points is None else as_points(sample_points, phi.dim)
    if len(pts) == 0:
        raise ValueError("empty sample set")
    return pts


def q_case(q_values) -> str:
    """Sign pattern of q: ``q_nonneg``, ``q_negative`` or ``q_mixed``."""
    q_values = np.asarray(q_values, dtype=float)
    if np.min(q_values) >= 0:
        return "q_nonneg"
    if np.max(q_values) < 0:
        return "q_negative"
    return "q_mixed"


def sandwich_constants(phi: PhiFunction, sample_points=None, t_grid=None):
    """Empirical ``(c_lower, c_upper)`` with
    ``c_lower <= Phi^{-1}(x, t) (log(e+t))^{q/p} / t^{1/p} <= c_upper``."""
    pts = _points(phi, sample_points)
    t = np.logspace(-6, 6, 64) if t_grid is None else np.asarray(t_grid, dtype=float)
    pv, qv = phi.exponents(pts)
    inv = invert_values(pv[:, None], qv[:, None], t[None, :])
    scaled = inv * np.power(np.log(E + t[None, :]), qv[:, None] / pv[:, None]) \
        / np.power(t[None, :], 1.0 / pv[:, None])
    return float(scaled.min()), float(scaled.max())


def check_A0(phi: PhiFunction, sample_points=None) -> ConditionReport:
    """Largest beta with ``beta <= Phi^{-1}(x, 1) <= 1/beta`` on the samples."""
    pts = _points(phi, sample_points)
    pv, qv = phi.exponents(pts)
    inv = invert_values(pv, qv, 1.0)
    both = np.minimum(inv, 1.0 / inv)
    k = int(np.argmin(both))
    beta = float(both[k])
    return ConditionReport("A0", beta, bool(beta > 0),
                           [{"x": pts[k].tolist(), "inverse_at_1": float(inv[k])}])


def ball_measure(radius: float, n: int) -> float:
    if n == 1:
        return 2.0 * radius
    if n == 2:
        return float(np.pi * radius ** 2)
    from scipy.special import gamma
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1) * radius ** n)


def _ball_points(phi, center, radius, per_axis):
    box = phi.p.box
    c = np.asarray(center, dtype=float).reshape(-1)
    axes = [np.linspace(ci - radius, ci + radius, per_axis) for ci in c]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = (np.linalg.norm(pts - c, axis=1) <= radius) & box.contains(pts)
    pts = pts[keep]
    cc = box.project(c)
    return np.concatenate([cc, pts]) if len(pts) else cc


def check_A1(phi: PhiFunction, balls, points_per_axis: int = 9,
             t_count: int = 16) -> ConditionReport:
    """Smallest ``Phi^{-1}(y, t) / Phi^{-1}(x, t)`` over balls, points and ``t in [1, 1/|B|]``.

    ``balls`` is a sequence of ``(center, radius)``; measures use the ambient
    dimension of the sample box.
    """
    balls = list(balls)
    if not balls:
        raise ValueError("no balls given")
    dim = phi.dim
    best, witness = np.inf, None
    per_ball = []
    for center, radius in balls:
        vol = ball_measure(float(radius), dim)
        if vol > 1:
            raise ValueError(f"ball of measure {vol:.6g} > 1")
        pts = _ball_points(phi, center, float(radius), points_per_axis)
        t = np.logspace(0.0, np.log10(1.0 / vol), t_count)
        pv, qv = phi.exponents(pts)
        inv = invert_values(pv[:, None], qv[:, None], t[None, :])
        ratios = inv.min(axis=0) / inv.max(axis=0)
        j = int(np.argmin(ratios))
        per_ball.append(float(ratios[j]))
        if ratios[j] < best:
            best = float(ratios[j])
            witness = {"center": np.atleast_1d(center).astype(float).tolist(),
                       "radius": float(radius), "t": float(t[j]),
                       "x": pts[int(np.argmax(inv[:, j]))].tolist(),
                       "y": pts[int(np.argmin(inv[:, j]))].tolist()}
    c_lo, c_hi = sandwich_constants(phi)
    c = phi.p.modulus_constant / phi.p.inf_val ** 2
    c0 = phi.q.modulus_constant
    n = phi.n
    log_n = np.log(n) if n > 1 else 0.0
    inv_beta = (c_hi / c_lo) * np.exp(c * n) * np.exp(c0 + c0 * log_n / np.log(LOG_E1))
    details = {"per_ball_min_ratio": per_ball,
               "proof_bound_beta": float(1.0 / inv_beta),
               "sandwich": [c_lo, c_hi]}
    return ConditionReport("A1", best, bool(best > 0), [witness], details)


def a2_beta_and_h(phi: PhiFunction, decay: DecayData, safety: float = 0.5):
    """Case-dependent ``beta`` and the function ``h`` used for the (A2) chains."""
    qp, qm = phi.q.sup_val, phi.q.inf_val
    c1 = decay.nekvinda_c1
    case = q_case([qm, qp])
    if case == "q_nonneg":
        beta = min(1.0, safety * c1 / LOG_E1 ** qp)
        base = beta * LOG_E1 ** qp
    elif case == "q_negative":
        beta = min(1.0, safety * c1 * LOG_E1 ** qm)
        base = c1
    else:
        beta = min(1.0, safety * c1 * LOG_E1 ** qm / LOG_E1 ** qp)
        base = c1
    inv_inf = 0.0 if np.isinf(decay.p_infinity) else 1.0 / decay.p_infinity

    def h(pv):
        gap = np.abs(1.0 / np.asarray(pv, dtype=float) - inv_inf)
        with np.errstate(divide="ignore"):
            expo = np.where(gap > 0, 1.0 / gap, np.inf)
        return np.where(gap > 0, np.power(base, expo), 0.0)

    return case, beta, h


def check_A2(phi: PhiFunction, decay: DecayData | None, s: float = 1.0, sample_points=None,
             t_grid=None, tol: float = 1e-10) -> ConditionReport:
    """Verify ``Phi(x, beta t) <= t^p_inf + h(x)`` and ``(beta t)^p_inf <= Phi(x, t) + h(x)``
    for ``t <= s`` with the case-dependent beta and h."""
    if decay is None:
        raise ValueError("(A2) check requires decay data")
    pts = _points(phi, sample_points)
    t = np.logspace(-8, np.log10(s), 64) if t_grid is None else np.asarray(t_grid, float)
    if np.any(t <= 0) or np.any(t > s):
        raise ValueError("t grid must lie in (0, s]")
    case, beta, h = a2_beta_and_h(phi, decay)
    pv, qv = phi.exponents(pts)
    hv = h(pv)[:, None]
    P, Q = pv[:, None], qv[:, None]
    tt = t[None, :]
    p_inf = decay.p_infinity
    lhs1 = phi_values(beta * tt, P, Q)
    rhs1 = np.power(tt, p_inf) + hv
    lhs2 = np.power(beta * tt, p_inf)
    rhs2 = phi_values(tt, P, Q) + hv
    v1 = lhs1 - rhs1
    v2 = lhs2 - rhs2
    worst = max(float(v1.max()), float(v2.max()))
    if v1.max() >= v2.max():
        i, j = np.unravel_index(int(np.argmax(v1)), v1.shape)
        chain = "Phi(x,beta t) <= phi_inf(t) + h(x)"
    else:
        i, j = np.unravel_index(int(np.argmax(v2)), v2.shape)
        chain = "phi_inf(beta t) <= Phi(x,t) + h(x)"
    witness = {"x": pts[i].tolist(), "t": float(t[j]), "chain": chain, "excess": worst}
    details = {"case": case, "worst_excess": worst, "s": float(s),
               "h_max": float(hv.max()), "p_infinity": float(p_inf)}
    return ConditionReport("A2", beta, bool(worst <= tol), [witness], details)


def _t_grid(t_grid):
    t = np.logspace(-6, 6, 64) if t_grid is None else np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("t grid needs at least two values")
    if np.any(t <= 0):
        raise ValueError("t grid must not contain 0 or negative values")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t grid must be strictly increasing")
    return t


def check_dec(phi: PhiFunction, t_grid=None, sample_points=None, exponent: float | None = None,
              tol: float = 1e-10) -> ConditionReport:
    """Check that ``Phi(x, t) / t^exponent`` is nonincreasing along ``t_grid``.

    The default exponent is ``p+ + max(q+, 0)``; with ``q+ >= 0`` this is
    ``p+ + q+``.
    """
    t = _t_grid(t_grid)
    pts = _points(phi, sample_points)
    if exponent is None:
        exponent = phi.p.sup_val + max(phi.q.sup_val, 0.0)
    pv, qv = phi.exponents(pts)
    r = phi_values(t[None, :], pv[:, None], qv[:, None]) / np.power(t[None, :], exponent)
    rel = (r[:, 1:] - r[:, :-1]) / r[:, :-1]
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    worst = float(rel[i, j])
    witness = {"x": pts[i].tolist(), "s": float(t[j]), "t": float(t[j + 1]),
               "relative_increase": worst}
    return ConditionReport("Dec", worst, bool(worst <= tol), [witness],
                           {"exponent": float(exponent)})


def check_ainc1(phi: PhiFunction, t_grid=None, sample_points=None,
                threshold: float = 1 + 1e-10) -> ConditionReport:
    """Worst ``[Phi(x,s)/s] / [Phi(x,t)/t]`` over grid pairs ``s < t``."""
    t = _t_grid(t_grid)
    pts = _points(phi, sample_points)
    pv, qv = phi.exponents(pts)
    g = phi_values(t[None, :], pv[:, None], qv[:, None]) / t[None, :]
    run_max = np.maximum.accumulate(g, axis=1)
    ratio = run_max[:, :-1] / g[:, 1:]
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    a_star = max(1.0, float(ratio[i, j]))
    s_idx = int(np.argmax(g[i, : j + 1]))
    witness = {"x": pts[i].tolist(), "s": float(t[s_idx]), "t": float(t[j + 1]),
               "ratio": float(ratio[i, j])}
    return ConditionReport("aInc1", a_star, bool(a_star <= threshold), [witness],
                           {"threshold": float(threshold)})
