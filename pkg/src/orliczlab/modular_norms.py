"""Modulars, Luxemburg and Sobolev norms on sampled functions.

A :class:`GridFunction` holds quadrature nodes and weights for a region,
the sampled values of a function there and optionally its gradient.  Norms
are found by bisection on the scaling parameter, using that
``lam -> rho(f / lam)`` is nonincreasing whenever ``Phi(x, .)`` is
nondecreasing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain_geometry import Domain
from .phi_core import LOG_E1, E, NonMonotoneError, PhiFunction, phi_values, q_case
from .quadrature import QuadratureRule, integration_nodes

DEFAULT_RULE = QuadratureRule("boundary_refined_midpoint", resolution=128, depth=6)
NORM_RTOL = 1e-8


@dataclass
class GridFunction:
    """Samples of a scalar function on quadrature nodes.

    ``weights`` sum to the measure of the region; ``gradient`` has shape
    ``(m, dim)`` when present.  Functions built from callables remember them
    so they can be resampled with another :class:`QuadratureRule`.
    """

    points: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    gradient: np.ndarray | None = None
    domain: Domain | None = None
    rule: QuadratureRule | None = None
    cell_measure: float = 0.0
    func: Callable | None = field(default=None, repr=False)
    grad_func: Callable | str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if not (len(self.points) == len(self.weights) == len(self.values)):
            raise ValueError("points, weights and values differ in length")
        if np.any(np.isnan(self.values)) or np.any(~np.isfinite(self.values)):
            raise ValueError("GridFunction values must be finite (NaN sample found)")
        if self.gradient is not None:
            self.gradient = np.asarray(self.gradient, dtype=float).reshape(self.points.shape)
            if not np.all(np.isfinite(self.gradient)):
                raise ValueError("GridFunction gradient must be finite")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    @classmethod
    def from_callable(cls, domain: Domain, func: Callable, rule: QuadratureRule | None = None,
                      gradient: Callable | str | None = None, fd_step: float | None = None):
        """Sample ``func`` on the nodes of ``domain``.

        ``gradient`` is a callable returning ``(m, dim)`` derivatives, the
        string ``"fd"`` for central differences, or ``None``.
        """
        rule = rule or DEFAULT_RULE
        pts, w = integration_nodes(domain.indicator, domain.bbox, rule)
        vals = np.asarray(func(pts), dtype=float).reshape(-1)
        cell = float(np.prod(domain.bbox.widths / rule.resolution))
        if gradient is None:
            grad = None
        elif isinstance(gradient, str):
            if gradient != "fd":
                raise ValueError(f"unknown gradient mode {gradient!r}")
            step = fd_step or float(np.min(domain.bbox.widths)) / rule.resolution
            grad = finite_difference_gradient(func, pts, step)
        else:
            grad = np.asarray(gradient(pts), dtype=float).reshape(pts.shape)
        return cls(pts, w, vals, grad, domain, rule, cell, func, gradient)

    @classmethod
    def characteristic(cls, region: Domain, rule: QuadratureRule | None = None, scale: float = 1.0):
        """``scale * 1_A`` sampled on the nodes of ``A`` (zero gradient)."""
        return cls.from_callable(region, lambda x: np.full(len(x), float(scale)), rule,
                                 gradient=lambda x: np.zeros_like(x))

    @classmethod
    def from_csv(cls, path, domain: Domain | None = None):
        """Read ``x[,y],value[,gx[,gy]]`` rows sampled at the centers of a regular grid.

        The dimension is taken from the ``domain`` when given (1 otherwise
        when a row has fewer than four columns); rows outside the domain are
        dropped and every kept row carries the grid cell measure.
        """
        rows = []
        with open(path, newline="") as fh:
            for line in csv.reader(fh):
                if not line or line[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(v) for v in line])
                except ValueError:
                    continue  # header
        if not rows:
            raise ValueError(f"no samples in {path}")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ValueError(f"ragged rows in {path}")
        data = np.array(rows)
        ncol = data.shape[1]
        dim = domain.dim if domain is not None else (2 if ncol >= 3 and ncol != 4 else 1)
        if ncol not in (dim + 1, 2 * dim + 1):
            raise ValueError(f"{path}: expected {dim + 1} or {2 * dim + 1} columns, got {ncol}")
        pts = data[:, :dim]
        vals = data[:, dim]
        grad = data[:, dim + 1:] if ncol == 2 * dim + 1 else None
        cell = 1.0
        for k in range(dim):
            coords = np.unique(pts[:, k])
            if len(coords) < 2:
                raise ValueError(f"{path}: need at least two distinct coordinates per axis")
            steps = np.diff(coords)
            if not np.allclose(steps, steps[0], rtol=1e-6):
                raise ValueError(f"{path}: samples are not on a regular grid")
            cell *= float(steps[0])
        keep = np.ones(len(pts), dtype=bool) if domain is None else domain.contains(pts)
        return cls(pts[keep], np.full(int(keep.sum()), cell), vals[keep],
                   None if grad is None else grad[keep], domain, None, cell)

    def on(self, rule: QuadratureRule) -> "GridFunction":
        """Resample on another rule (only for functions built from callables)."""
        if self.func is None or self.domain is None:
            raise ValueError("only callable-backed GridFunctions can be resampled")
        return GridFunction.from_callable(self.domain, self.func, rule, self.grad_func)

    def scaled(self, factor: float) -> "GridFunction":
        grad = None if self.gradient is None else self.gradient * factor
        func = None if self.func is None else (lambda x, f=self.func: factor * f(x))
        return GridFunction(self.points, self.weights, self.values * factor, grad, self.domain,
                            self.rule, self.cell_measure, func, None)


def finite_difference_gradient(func: Callable, points, step: float) -> np.ndarray:
    """Central differences of ``func`` at ``points`` with spacing ``step``."""
    pts = np.asarray(points, dtype=float)
    grad = np.empty_like(pts)
    for k in range(pts.shape[1]):
        shift = np.zeros(pts.shape[1])
        shift[k] = step
        grad[:, k] = (np.asarray(func(pts + shift)) - np.asarray(func(pts - shift))) / (2 * step)
    return grad


def _resolve(f: GridFunction, quad: QuadratureRule | None) -> GridFunction:
    if quad is None or quad == f.rule:
        return f
    return f.on(quad)


class _Modular:
    """``lam -> sum_k rho(g_k / lam)`` with exponents cached at the nodes."""

    def __init__(self, phi: PhiFunction, points, weights, components):
        if len(points) and not phi.p.box.contains(points, atol=1e-12).all():
            raise ValueError("function samples lie outside the exponent box")
        self.p, self.q = phi.exponents(points) if len(points) else (np.empty(0), np.empty(0))
        self.w = np.asarray(weights, dtype=float)
        self.components = [np.abs(np.asarray(c, dtype=float)) for c in components]

    def __call__(self, lam: float) -> float:
        total = 0.0
        for c in self.components:
            total += float(np.dot(self.w, phi_values(c / lam, self.p, self.q)))
        return total

    @property
    def is_zero(self) -> bool:
        return all(not np.any(c > 0) for c in self.components)


def modular(f: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None) -> float:
    """``sum_k w_k Phi(x_k, |f(x_k)|)``, the quadrature form of the modular."""
    f = _resolve(f, quad)
    return _Modular(phi, f.points, f.weights, [f.values])(1.0)


@dataclass
class NormResult:
    norm: float
    modular_at_norm: float
    iterations: int
    resolution: int | None = None
    scheme: str | None = None

    def to_dict(self) -> dict:
        return {"norm": self.norm, "modular_at_norm": self.modular_at_norm,
                "iterations": self.iterations, "resolution": self.resolution,
                "scheme": self.scheme}


def _bisect_norm(rho: _Modular, rtol: float = NORM_RTOL, max_iter: int = 400):
    """Smallest ``lam`` (to ``rtol`` in modular) with ``rho(lam) <= 1``."""
    if rho.is_zero:
        return 0.0, 0.0, 0
    lo = 1e-8
    r_lo = rho(lo)
    while r_lo <= 1.0:
        lo *= 1e-4
        if lo < 1e-300:
            raise ArithmeticError("norm below representable range")
        r_lo = rho(lo)
    hi = 1.0
    r_hi = rho(hi)
    while r_hi > 1.0:
        lo, r_lo = hi, r_hi
        hi *= 2.0
        r_hi = rho(hi)
        if r_hi > r_lo:
            raise NonMonotoneError(lo, hi, f"modular increases in lambda between {lo!r} "
                                   f"and {hi!r}; Phi(x, .) is not increasing")
        if hi > 1e300:
            raise ArithmeticError("norm above representable range")
    it = 0
    while r_hi < 1.0 - rtol and it < max_iter:
        mid = np.sqrt(lo * hi) if hi / lo > 4.0 else 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        r_mid = rho(mid)
        if r_mid > r_lo or r_mid < r_hi:
            raise NonMonotoneError(lo, hi, f"modular not monotone in lambda on [{lo!r}, {hi!r}]")
        if r_mid > 1.0:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
        it += 1
    return float(hi), float(r_hi), it


def _result(f, lam, r, it):
    rule = f.rule
    return NormResult(lam, r, it, None if rule is None else rule.resolution,
                      None if rule is None else rule.scheme)


def luxemburg(f: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None) -> NormResult:
    """Luxemburg norm with diagnostics; see :func:`luxemburg_norm`."""
    f = _resolve(f, quad)
    lam, r, it = _bisect_norm(_Modular(phi, f.points, f.weights, [f.values]))
    return _result(f, lam, r, it)


def luxemburg_norm(f: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None) -> float:
    """``inf{lam > 0 : rho(f / lam) <= 1}``.

    The returned ``lam`` satisfies ``rho(f / lam) in [1 - 1e-8, 1]``.  The
    bracket starts at ``[1e-8, 1]``; the upper end doubles until the modular
    drops to 1.  A modular that grows with ``lam`` raises
    :class:`~orliczlab.phi_core.NonMonotoneError`.

    Examples
    --------
    >>> from orliczlab import domain_geometry as dg, exponent_fields as ef
    >>> from orliczlab.phi_core import PhiFunction
    >>> box = ef.Box.unit(2)
    >>> phi = PhiFunction(ef.constant(2.0, box), ef.constant(0.0, box, role="q"))
    >>> f = GridFunction.from_callable(dg.square(), lambda x: np.ones(len(x)))
    >>> round(luxemburg_norm(f, phi), 8)
    1.0
    """
    return luxemburg(f, phi, quad).norm


def sobolev(u: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None) -> NormResult:
    u = _resolve(u, quad)
    if u.gradient is None:
        raise ValueError("Sobolev norm needs a gradient (none sampled)")
    comps = [u.values] + [u.gradient[:, k] for k in range(u.gradient.shape[1])]
    lam, r, it = _bisect_norm(_Modular(phi, u.points, u.weights, comps))
    return _result(u, lam, r, it)


def sobolev_norm(u: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None) -> float:
    """Norm of the semimodular ``rho(u / lam) + sum_i rho(d_i u / lam)``."""
    return sobolev(u, phi, quad).norm


def lp_norm(f: GridFunction, p: float) -> float:
    """Classical ``(sum w |f|^p)^(1/p)``."""
    return float(np.dot(f.weights, np.abs(f.values) ** p) ** (1.0 / p))


@dataclass
class UnitBallCheck:
    rho_at_norm: float
    passes: bool
    norm: float

    def to_dict(self) -> dict:
        return {"rho_at_norm": self.rho_at_norm, "passes": self.passes, "norm": self.norm}


def unit_ball_check(f: GridFunction, phi: PhiFunction, quad: QuadratureRule | None = None,
                    tol: float = 1e-6) -> UnitBallCheck:
    """``rho(f / ||f||)`` should be 1 up to ``tol``."""
    f = _resolve(f, quad)
    res = luxemburg(f, phi)
    if res.norm == 0:
        raise ValueError("unit ball check needs a nonzero function")
    r = res.modular_at_norm
    return UnitBallCheck(r, bool(1 - tol <= r <= 1 + tol), res.norm)


# ---------------------------------------------------------------------------
# characteristic functions


@dataclass
class NormBoundsReport:
    lower: float
    upper: float
    computed_norm: float
    lemma_case: str
    preconditions_met: bool
    measure: float
    p_minus: float
    p_plus: float
    q_minus: float
    q_plus: float
    lower_ok: bool
    upper_ok: bool
    rel_slack: float = 1e-3
    b1: float | None = None
    b2: float | None = None
    note: str = ""

    @property
    def passes(self) -> bool | None:
        """``None`` when the preconditions fail, since no claim is made then."""
        if not self.preconditions_met:
            return None
        return self.lower_ok and self.upper_ok

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "lower", "upper", "computed_norm", "lemma_case", "preconditions_met", "measure",
            "p_minus", "p_plus", "q_minus", "q_plus", "lower_ok", "upper_ok", "rel_slack",
            "b1", "b2", "note")}
        out["passes"] = self.passes
        return out


def char_bounds_formulas(measure, p_minus, p_plus, q_minus, q_plus, case):
    """Closed-form lower/upper bounds on ``||1_A||`` and the factors ``(b1, b2)``.

    ``b1 = 2^(1/p+)`` and ``b2 = 2`` multiply the mixed-sign bounds; they are
    ``None`` in the other cases.
    """
    a = float(measure)
    big = np.log(E + 1.0 / a)
    if case == "q_nonneg":
        lower = min(a ** (1 / p_plus), a ** (1 / p_minus))
        upper = max(a ** (1 / p_plus) * big ** q_plus, a ** (1 / p_minus) * LOG_E1 ** q_plus)
        return float(lower), float(upper), None, None
    lower_core = float(a ** (1 / p_minus) * big ** (q_minus / p_minus))
    if case == "q_negative":
        return lower_core, float(max(a ** (1 / p_plus), a ** (1 / p_minus))), None, None
    if case == "q_mixed":
        b1, b2 = 2.0 ** (1 / p_plus), 2.0
        upper = b2 * max(a ** (1 / p_plus) * big ** q_plus, a ** (1 / p_minus) * LOG_E1 ** q_plus)
        return b1 * lower_core, float(upper), b1, b2
    raise ValueError(f"unknown case {case!r}")


def char_fn_norm_bounds(region: Domain, phi: PhiFunction, quad: QuadratureRule | None = None,
                        rel_slack: float = 1e-3) -> NormBoundsReport:
    """Compare ``||1_A||`` with the closed-form bounds for the sign pattern of ``q`` on ``A``.

    ``p_A^-``, ``p_A^+``, ``q_A^-``, ``q_A^+`` are taken over the quadrature
    nodes in ``A``.  For the negative and mixed cases the bounds are only
    claimed for ``|A| < 1/2`` and ``p_A^- + q_A^- >= 1``; otherwise the report
    has ``preconditions_met=False`` and ``passes`` is ``None``.
    """
    f = GridFunction.characteristic(region, quad)
    if f.measure <= 0:
        raise ValueError("|A| = 0: the set has no quadrature nodes")
    pv, qv = phi.exponents(f.points)
    pm, pp, qm, qp = float(pv.min()), float(pv.max()), float(qv.min()), float(qv.max())
    case = q_case(qv)
    a = f.measure
    notes = []
    pre = True
    if case != "q_nonneg":
        if not a < 0.5:
            pre = False
            notes.append(f"|A| = {a!r} is not below 1/2")
        if pm + qm < 1:
            pre = False
            notes.append(f"p_A^- + q_A^- = {pm + qm!r} < 1")
    lower, upper, b1, b2 = char_bounds_formulas(a, pm, pp, qm, qp, case)
    norm = luxemburg_norm(f, phi)
    return NormBoundsReport(lower, upper, norm, case, pre, a, pm, pp, qm, qp,
                            bool(lower * (1 - rel_slack) <= norm),
                            bool(norm <= upper * (1 + rel_slack)), rel_slack, b1, b2,
                            "; ".join(notes))
