"""Numerical companions to the necessity argument for Sobolev embeddings.

The necessity argument tests the embedding with radial cut-off functions
``u = 1`` on ``B_R~(x)`` and ``u = 0`` off ``B_R(x)``, where ``R~`` halves the
measure of ``A_R = B_R(x) ∩ Ω``.  It bounds the gap ``R - R~`` by a power of
``|A_R|`` with a logarithmic correction and sums the gaps along the halving
sequence.  This module exposes each step for inspection: the cut-offs, the
exponents that appear, the implied constants and the final density bound.
It also scans ``||u||_Psi / ||u||_{W^{1,Phi}}`` over fixed test families.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .box import Box, as_points
from .domain_geometry import (BALL_RULE, Domain, ball_intersection_measure, ball_nodes,
                              r_tilde)
from .modular_norms import GridFunction, luxemburg_norm, sobolev_norm
from .phi_core import PhiFunction, q_case
from .quadrature import QuadratureRule

CASES = ("q_nonneg", "q_negative", "q_mixed")


# ---------------------------------------------------------------------------
# cut-off functions


@dataclass(frozen=True)
class CutoffFunction:
    """Radial ramp: 1 on ``B_inner``, 0 off ``B_outer``, linear in between."""

    center: tuple
    outer: float
    inner: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in np.ravel(self.center)))
        if not 0 < self.inner < self.outer:
            raise ValueError(f"cut-off needs 0 < inner < outer, got {self.inner}, {self.outer}")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def gradient_bound(self) -> float:
        return 1.0 / (self.outer - self.inner)

    @property
    def support_box(self) -> Box:
        c = np.array(self.center)
        return Box(tuple(c - self.outer), tuple(c + self.outer))

    def _radius(self, x):
        pts = as_points(x, self.dim)
        return pts, np.linalg.norm(pts - np.array(self.center), axis=1)

    def __call__(self, x) -> np.ndarray:
        _, r = self._radius(x)
        return np.clip((self.outer - r) / (self.outer - self.inner), 0.0, 1.0)

    def gradient(self, x) -> np.ndarray:
        pts, r = self._radius(x)
        ramp = (r > self.inner) & (r < self.outer)
        out = np.zeros_like(pts)
        safe = np.where(r > 0, r, 1.0)
        out[ramp] = -(pts[ramp] - np.array(self.center)) / safe[ramp, None] * self.gradient_bound
        return out

    def to_dict(self) -> dict:
        return {"center": list(self.center), "R": self.outer, "R_tilde": self.inner}


def make_cutoff(x, R: float, R_tilde: float) -> CutoffFunction:
    return CutoffFunction(tuple(np.ravel(np.asarray(x, dtype=float))), float(R), float(R_tilde))


# ---------------------------------------------------------------------------
# exponents


@dataclass
class EmbeddingExponents:
    p_minus: float
    p_plus: float
    q_minus: float
    q_plus: float
    n: int
    eta_R: float
    beta_R: float
    Q: float
    T: float
    S: float
    case: str

    @classmethod
    def from_bounds(cls, p_minus, p_plus, q_minus, q_plus, n: int,
                    strict: bool = True) -> "EmbeddingExponents":
        """Exponents from the bounds of ``p`` and ``q`` on a set.

        ``Q``, ``T`` and ``S`` involve ``n - p^+``; with ``strict=False`` and
        ``p^+ >= n`` they are NaN instead of an error, which is harmless in
        the nonnegative case where only ``q^+`` enters.
        """
        case = q_case([q_minus, q_plus])
        if p_plus >= n and (strict or case != "q_nonneg"):
            raise ValueError(f"p_A^+ = {p_plus} must be below n = {n}")
        eta = 1.0 / n + 1.0 / p_plus - 1.0 / p_minus
        if p_plus < n:
            Q = -q_minus * (n - p_minus) / (p_minus * (n - p_plus))
            T = q_plus + Q
            S = max(q_plus, Q, T)
        else:
            Q = T = S = float("nan")
        return cls(float(p_minus), float(p_plus), float(q_minus), float(q_plus), int(n),
                   eta, 1.0 - n * eta, Q, T, S, case)

    @property
    def case_exponent(self) -> float:
        """Power of ``log(e + 1/|A|)`` in the gap bound: ``q^+``, ``Q`` or ``S``."""
        return {"q_nonneg": self.q_plus, "q_negative": self.Q, "q_mixed": self.S}[self.case]

    def to_dict(self) -> dict:
        return {"p_minus": self.p_minus, "p_plus": self.p_plus, "q_minus": self.q_minus,
                "q_plus": self.q_plus, "n": self.n, "eta_R": self.eta_R, "beta_R": self.beta_R,
                "Q": self.Q, "T": self.T, "S": self.S, "case": self.case,
                "case_exponent": self.case_exponent}


def _region_points(region, dim):
    if isinstance(region, Domain):
        from .quadrature import integration_nodes
        pts, _ = integration_nodes(region.indicator, region.bbox, BALL_RULE)
        return pts
    return as_points(region, dim)


def embedding_exponents(phi: PhiFunction, region, n: int | None = None) -> EmbeddingExponents:
    """Exponents over a set given as sample points or a :class:`Domain`.

    Warns when ``eta_R <= 0``, which can only happen for sets larger than
    the radius threshold of :func:`radius_threshold`.
    """
    n = phi.n if n is None else n
    pts = _region_points(region, phi.dim)
    if len(pts) == 0:
        raise ValueError("empty set")
    pv, qv = phi.exponents(pts)
    ex = EmbeddingExponents.from_bounds(pv.min(), pv.max(), qv.min(), qv.max(), n)
    if ex.eta_R <= 0:
        warnings.warn(f"eta_R = {ex.eta_R:.6g} <= 0 on this set", RuntimeWarning, stacklevel=2)
    return ex


def radius_threshold(n: int, c_log: float) -> float:
    """``r_0 = (1/2) min(1/4, (1/2) exp(-n C_log))``."""
    return 0.5 * min(0.25, 0.5 * np.exp(-n * c_log))


def eta_lower_bound(n: int, c_log: float) -> float:
    """``1/n - C_log / log(1 / (2 r_0))``, positive by the choice of ``r_0``."""
    return 1.0 / n - c_log / np.log(1.0 / (2.0 * radius_threshold(n, c_log)))


def oscillation_radius_bound(R: float, p_minus_A: float, p_plus_A: float, c_log: float,
                             p_minus: float, p_plus: float):
    """Both sides of ``R^(p_A^+ - p_A^-) >= e^(-C_log) / 2^(p^+ - p^-)``."""
    return R ** (p_plus_A - p_minus_A), np.exp(-c_log) / 2.0 ** (p_plus - p_minus)


def geometric_tail_bound(q_plus: float, eta: float, with_peak: bool = False) -> float:
    """Integral ``Gamma(q+1) / (eta ln 2)^(q+1)`` of ``x^q 2^(-x eta)`` over ``(0, inf)``.

    The summand rises before it decays, so ``sum_i i^q 2^(-i eta)`` can exceed
    the integral by up to the peak value ``(q / (e eta ln 2))^q``; pass
    ``with_peak=True`` for the guaranteed bound.
    """
    from scipy.special import gamma
    rate = eta * np.log(2.0)
    value = float(gamma(q_plus + 1.0) / rate ** (q_plus + 1.0))
    if with_peak and q_plus > 0:
        value += float((q_plus / (np.e * rate)) ** q_plus)
    return value


# ---------------------------------------------------------------------------
# main lemma and density conclusion


@dataclass
class MainLemmaResult:
    x: list
    R: float
    R_tilde: float
    measure: float
    lhs: float
    rhs_without_constant: float
    implied_C: float
    case: str
    exponents: EmbeddingExponents

    def to_dict(self) -> dict:
        return {"x": self.x, "R": self.R, "R_tilde": self.R_tilde, "measure": self.measure,
                "lhs": self.lhs, "rhs_without_constant": self.rhs_without_constant,
                "implied_C": self.implied_C, "case": self.case,
                "exponents": self.exponents.to_dict()}


def _ball_exponents(dom, phi, x, R, quad, n):
    pts, _ = ball_nodes(dom, x, R, quad)
    if len(pts) == 0:
        raise ValueError(f"|A_R| = 0 at x={np.ravel(x).tolist()}, R={R}")
    pv, qv = phi.exponents(pts)
    return EmbeddingExponents.from_bounds(pv.min(), pv.max(), qv.min(), qv.max(), n,
                                          strict=False)


def main_lemma_check(dom: Domain, phi: PhiFunction, x, R: float,
                     quad: QuadratureRule | None = None, n: int | None = None) -> MainLemmaResult:
    """Gap ``R - R~`` against ``|A_R|^eta_R (log(e + 1/|A_R|))^kappa``.

    ``kappa`` is ``q^+``, ``Q`` or ``S`` by the sign pattern of ``q`` on
    ``A_R``; the ratio is the constant the inequality needs at this ``(x, R)``.
    """
    n = phi.n if n is None else n
    x = as_points(x, dom.dim)[0]
    measure = ball_intersection_measure(dom, x, R, quad)
    if measure <= 0:
        raise ValueError(f"|A_R| = 0 at x={x.tolist()}, R={R}")
    if measure > 1:
        raise ValueError(f"|A_R| = {measure} exceeds 1")
    ex = _ball_exponents(dom, phi, x, R, quad, n)
    if ex.case != "q_nonneg" and ex.p_minus + ex.q_minus < 1:
        raise ValueError(f"case {ex.case} needs p_A^- + q_A^- >= 1, "
                         f"got {ex.p_minus + ex.q_minus}")
    rt = r_tilde(dom, x, R, quad, full=measure)
    lhs = R - rt
    rhs = measure ** ex.eta_R * np.log(np.e + 1.0 / measure) ** ex.case_exponent
    return MainLemmaResult(x.tolist(), float(R), rt, measure, lhs, float(rhs),
                           float(lhs / rhs), ex.case, ex)


@dataclass
class DensityScanResult:
    c_density: float
    exponent: float
    case: str
    r0: float
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"c_density": self.c_density, "exponent": self.exponent, "case": self.case,
                "r0": self.r0, "rows": self.rows}


def density_from_scan(dom: Domain, phi: PhiFunction, x, R_set, quad: QuadratureRule | None = None,
                      n: int | None = None, c_log: float | None = None) -> DensityScanResult:
    """Minimal ``c`` with ``|A_R| (log(e + 1/|A_R|))^(kappa/eta_R) >= c R^n`` over the scan.

    ``x`` may hold several probe points.  Radii above the threshold ``r_0``
    computed from the log-Hölder constant of ``p`` are rejected.
    """
    n = phi.n if n is None else n
    c_log = phi.p.modulus_constant if c_log is None else c_log
    r0 = radius_threshold(n, c_log)
    radii = np.asarray(sorted(R_set, reverse=True), dtype=float)
    if radii.size == 0:
        raise ValueError("empty radius set")
    if np.any(radii > r0 * (1 + 1e-12)):
        raise ValueError(f"radii must not exceed r_0 = {r0!r}")
    rows = []
    for pt in as_points(x, dom.dim):
        for R in radii:
            m = ball_intersection_measure(dom, pt, R, quad)
            if m <= 0:
                raise ValueError(f"|A_R| = 0 at x={pt.tolist()}, R={R}")
            ex = _ball_exponents(dom, phi, pt, R, quad, n)
            expo = ex.case_exponent / ex.eta_R
            value = m * np.log(np.e + 1.0 / m) ** expo / R ** n
            rows.append({"x": pt.tolist(), "R": float(R), "measure": m, "case": ex.case,
                         "exponent": float(expo), "c": float(value)})
    worst = min(rows, key=lambda r: r["c"])
    return DensityScanResult(worst["c"], worst["exponent"], worst["case"], float(r0), rows)


# ---------------------------------------------------------------------------
# embedding ratio scans

SCAN_RULE = QuadratureRule("boundary_refined_midpoint", resolution=64, depth=12, rtol=1e-3)
FAMILIES = ("standard-v1", "cusp-tip-v1")


@dataclass
class FamilyMember:
    ident: str
    description: str
    func: object
    gradient: object
    support: Box | None = None


def _constant_one(dim):
    return (lambda x: np.ones(len(as_points(x, dim))),
            lambda x: np.zeros_like(as_points(x, dim)))


def _ramp(box: Box, axis: int):
    lo, width = box.lo[axis], box.widths[axis]

    def f(x):
        return (as_points(x, box.dim)[:, axis] - lo) / width

    def g(x):
        out = np.zeros_like(as_points(x, box.dim))
        out[:, axis] = 1.0 / width
        return out

    return f, g


def _bump(center, radius):
    c = np.asarray(center, dtype=float)

    def f(x):
        r2 = np.sum((as_points(x, len(c)) - c) ** 2, axis=1) / radius ** 2
        return np.where(r2 < 1, (1 - r2) ** 2, 0.0)

    def g(x):
        pts = as_points(x, len(c))
        r2 = np.sum((pts - c) ** 2, axis=1) / radius ** 2
        coef = np.where(r2 < 1, -4 * (1 - r2) / radius ** 2, 0.0)
        return coef[:, None] * (pts - c)

    return f, g


def _cutoff_test(ident, desc, cut: CutoffFunction):
    return FamilyMember(ident, desc, cut, cut.gradient, cut.support_box)


def named_family(dom: Domain, name: str = "standard-v1") -> list:
    """Fixed, versioned test functions for a domain.

    ``standard-v1``: the constant 1, coordinate ramps, a centred cut-off
    ``(0.4 w, 0.2 w)`` and bump of radius ``0.4 w`` (``w`` the smallest box
    width), and cut-offs ``(0.25 w, 0.125 w)`` at each mandatory probe.
    ``cusp-tip-v1``: cut-offs at the first mandatory probe (the tip) with
    ``R = 2^-2 .. 2^-5`` and ``R~ = R/2``.
    """
    box = dom.bbox
    dim = dom.dim
    w = float(np.min(box.widths))
    mid = tuple((box.lo_arr + box.hi_arr) / 2)
    if name == "standard-v1":
        f, g = _constant_one(dim)
        tests = [FamilyMember("one", "constant 1", f, g)]
        for k in range(dim):
            f, g = _ramp(box, k)
            tests.append(FamilyMember(f"ramp{k}", f"coordinate ramp along axis {k}", f, g))
        tests.append(_cutoff_test("cutoff-center", "cut-off at box center (0.4w, 0.2w)",
                                  make_cutoff(mid, 0.4 * w, 0.2 * w)))
        f, g = _bump(mid, 0.4 * w)
        c = np.asarray(mid)
        tests.append(FamilyMember("bump-center", "quartic bump radius 0.4w", f, g,
                                  Box(tuple(c - 0.4 * w), tuple(c + 0.4 * w))))
        for i, pr in enumerate(np.asarray(dom.probes).reshape(-1, dim)):
            tests.append(_cutoff_test(f"cutoff-probe{i}", f"cut-off at probe {pr.tolist()}",
                                      make_cutoff(pr, 0.25 * w, 0.125 * w)))
        return tests
    if name == "cusp-tip-v1":
        if len(dom.probes) == 0:
            raise ValueError("cusp-tip family needs a mandatory probe (the tip)")
        tip = np.asarray(dom.probes[0], dtype=float)
        return [_cutoff_test(f"tip-R2^-{k}", f"tip cut-off R=2^-{k}, R~=R/2",
                             make_cutoff(tip, 2.0 ** -k, 2.0 ** -(k + 1)))
                for k in range(2, 6)]
    raise ValueError(f"unknown test family {name!r}; known: {', '.join(FAMILIES)}")


@dataclass
class EmbeddingScanReport:
    family: str
    domain: dict
    rows: list
    sup_ratio: float
    rule: dict

    CSV_COLUMNS = ("id", "norm_psi", "norm_w1phi", "ratio")

    def to_dict(self) -> dict:
        return {"family": self.family, "domain": self.domain, "rows": self.rows,
                "sup_ratio": self.sup_ratio, "quadrature": self.rule}

    def csv_rows(self) -> list:
        return [[r[c] for c in self.CSV_COLUMNS] for r in self.rows]


def _sample(dom: Domain, test: FamilyMember, rule: QuadratureRule) -> GridFunction:
    region = dom if test.support is None else dom.restrict(test.support)
    if region is None:
        raise ValueError(f"test {test.ident!r} has no support inside the domain")
    return GridFunction.from_callable(region, test.func, rule, gradient=test.gradient)


def embedding_ratio_scan(dom: Domain, phi: PhiFunction, family: str = "standard-v1",
                         quad: QuadratureRule | None = None, threads: int = 1) -> EmbeddingScanReport:
    """``||u||_Psi / ||u||_{W^{1,Phi}}`` over a named test family."""
    if dom.dim != phi.dim:
        raise ValueError("domain and exponents differ in dimension")
    if phi.p.sup_val >= phi.n:
        raise ValueError(f"embedding scans need p+ < n (p+ = {phi.p.sup_val}, n = {phi.n})")
    quad = quad or SCAN_RULE
    psi = phi.conjugate()
    tests = named_family(dom, family)
    if not tests:
        raise ValueError("empty test family")

    def run(test):
        try:
            u = _sample(dom, test, quad)
            a = luxemburg_norm(u, psi)
            b = sobolev_norm(u, phi)
        except Exception as exc:
            raise type(exc)(f"test {test.ident!r}: {exc}") from exc
        return {"id": test.ident, "description": test.description, "norm_psi": a,
                "norm_w1phi": b, "ratio": a / b}

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(run, tests))
    else:
        rows = [run(t) for t in tests]
    return EmbeddingScanReport(family, dom.to_dict(), rows, max(r["ratio"] for r in rows),
                               quad.to_dict())


@dataclass
class NormChain:
    psi_inner: float
    psi_u: float
    grad_phi_u: float
    phi_outer_over_gap: float

    @property
    def holds(self) -> bool:
        return self.psi_inner <= self.psi_u * (1 + 1e-3) and \
            self.grad_phi_u <= self.phi_outer_over_gap * (1 + 1e-3)

    def to_dict(self) -> dict:
        return {"psi_inner": self.psi_inner, "psi_u": self.psi_u, "grad_phi_u": self.grad_phi_u,
                "phi_outer_over_gap": self.phi_outer_over_gap, "holds": self.holds}


def norm_chain(dom: Domain, phi: PhiFunction, cut: CutoffFunction,
               quad: QuadratureRule | None = None) -> NormChain:
    """Both sides of ``||1_{B_R~}||_Psi <= ||u||_Psi`` and ``||grad u||_Phi <= ||1_{B_R}||_Phi / (R - R~)``."""
    quad = quad or SCAN_RULE
    psi = phi.conjugate()
    c = np.array(cut.center)
    region = dom.restrict(cut.support_box)
    if region is None:
        raise ValueError("cut-off support misses the domain")

    def ball_of(r):
        return Domain("ball-cap", lambda p: (np.sum((p - c) ** 2, axis=1) < r * r)
                      & dom.indicator(p), region.bbox)

    u = GridFunction.from_callable(region, cut, quad, gradient=cut.gradient)
    inner = GridFunction.characteristic(ball_of(cut.inner), quad)
    outer = GridFunction.characteristic(ball_of(cut.outer), quad)
    grad_mag = np.linalg.norm(u.gradient, axis=1)
    g = GridFunction(u.points, u.weights, grad_mag)
    return NormChain(luxemburg_norm(inner, psi), luxemburg_norm(u, psi),
                     luxemburg_norm(g, phi),
                     luxemburg_norm(outer, phi) * cut.gradient_bound)
