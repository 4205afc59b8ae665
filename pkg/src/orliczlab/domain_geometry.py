"""Planar and interval domains, ball intersections and measure density scans.

A :class:`Domain` is an indicator predicate with a bounding box, a boundary
described by parametric curves, and a list of mandatory probe points
(corners, cusp tips) where density defects concentrate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .box import Box, as_points
from .quadrature import QuadratureRule, integration_nodes, refine_batch

# quadrature for ball-domain intersections: cells per ball diameter
BALL_RULE = QuadratureRule("boundary_refined_midpoint", resolution=16, depth=24, rtol=3e-3)
# coarser default for density scans, which evaluate thousands of balls
DENSITY_RULE = QuadratureRule("boundary_refined_midpoint", resolution=16, depth=24, rtol=3e-2)
DEFAULT_RADII = tuple(2.0 ** -k for k in range(2, 13))


Curve = tuple  # (callable s -> (m, 2) points on s in [0, 1],)


@dataclass(frozen=True)
class Domain:
    kind: str
    indicator: Callable[[np.ndarray], np.ndarray]
    bbox: Box
    curves: tuple = ()
    probes: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.bbox.dim

    def contains(self, x) -> np.ndarray:
        return np.asarray(self.indicator(as_points(x, self.dim)), dtype=bool)

    @property
    def perimeter(self) -> float:
        if self.dim == 1:
            return float(len(self.probes))
        return float(sum(_polyline_length(c) for c in self.curves))

    def boundary_sampler(self, count: int) -> np.ndarray:
        """``count`` boundary points spread by arc length (interval: the endpoints)."""
        if self.dim == 1:
            return np.asarray(self.probes, dtype=float).reshape(-1, 1)
        return _sample_curves(self.curves, count)

    def measure(self, rule: QuadratureRule | None = None) -> float:
        rule = rule or QuadratureRule(resolution=256)
        _, w = integration_nodes(self.indicator, self.bbox, rule)
        return float(np.sum(w))

    def restrict(self, box: Box) -> "Domain":
        """Same indicator on a smaller bounding box (``None`` if they miss)."""
        sub = self.bbox.intersect(box)
        if sub is None:
            return None
        return Domain(self.kind, self.indicator, sub, (), np.empty((0, self.dim)), self.params)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.params}


def _polyline(curve, samples: int = 4097):
    s = np.linspace(0.0, 1.0, samples)
    return np.asarray(curve(s), dtype=float)


def _polyline_length(curve) -> float:
    pts = _polyline(curve)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def _sample_curves(curves, count: int) -> np.ndarray:
    if count <= 0:
        return np.empty((0, 2))
    lengths = np.array([_polyline_length(c) for c in curves])
    total = lengths.sum()
    # midpoints of equal arc-length cells along the concatenated boundary
    targets = (np.arange(count) + 0.5) / count * total
    offsets = np.concatenate([[0.0], np.cumsum(lengths)])
    out = []
    for i, c in enumerate(curves):
        sel = targets[(targets >= offsets[i]) & (targets < offsets[i + 1])] - offsets[i]
        if len(sel) == 0:
            continue
        pts = _polyline(c)
        arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        s = np.interp(sel, arc, np.linspace(0.0, 1.0, len(pts)))
        out.append(np.asarray(c(s), dtype=float))
    return np.concatenate(out) if out else np.empty((0, 2))


def _segment(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return lambda s: a[None, :] + np.asarray(s, float)[:, None] * (b - a)[None, :]


# ---------------------------------------------------------------------------
# built-in domains


def interval(a: float = 0.0, b: float = 1.0) -> Domain:
    return Domain("interval", lambda x: (x[:, 0] > a) & (x[:, 0] < b), Box((a,), (b,)),
                  probes=np.array([[a], [b]]), params={"a": a, "b": b})


def rectangle(lo=(0.0, 0.0), hi=(1.0, 1.0), kind: str = "rectangle") -> Domain:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    curves = tuple(_segment(corners[i], corners[(i + 1) % 4]) for i in range(4))

    def ind(x):
        return np.all((x > lo) & (x < hi), axis=1)

    return Domain(kind, ind, Box(tuple(lo), tuple(hi)), curves, corners,
                  {"lo": lo.tolist(), "hi": hi.tolist()})


def square(side: float = 1.0, origin=(0.0, 0.0)) -> Domain:
    o = np.asarray(origin, float)
    d = rectangle(o, o + side, kind="square")
    return Domain("square", d.indicator, d.bbox, d.curves, d.probes,
                  {"side": side, "origin": o.tolist()})


def disc(center=(0.0, 0.0), radius: float = 1.0) -> Domain:
    c = np.asarray(center, float)

    def circle(s):
        a = 2 * np.pi * np.asarray(s, float)
        return c[None, :] + radius * np.stack([np.cos(a), np.sin(a)], axis=1)

    return Domain("disc", lambda x: np.linalg.norm(x - c, axis=1) < radius,
                  Box(tuple(c - radius), tuple(c + radius)), (circle,), np.empty((0, 2)),
                  {"center": c.tolist(), "radius": radius})


def half_plane(extent: float = 1.0) -> Domain:
    """``{y > 0}`` truncated to ``[-extent, extent] x [0, extent]``.

    Balls centred on the flat edge with radius below ``extent`` see a true
    half-plane.
    """
    d = rectangle((-extent, 0.0), (extent, extent), kind="half_plane")
    return Domain("half_plane", d.indicator, d.bbox, d.curves[:1], np.array([[0.0, 0.0]]),
                  {"extent": extent})


def polygon(vertices) -> Domain:
    """Simple polygon given as a counterclockwise ring (closing vertex optional)."""
    v = np.asarray(vertices, dtype=float)
    if len(v) > 1 and np.allclose(v[0], v[-1]):
        v = v[:-1]
    if len(v) < 3:
        raise ValueError("polygon needs at least three vertices")
    area2 = np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    if area2 <= 0:
        raise ValueError("polygon ring must be counterclockwise")
    nxt = np.roll(v, -1, axis=0)

    def ind(x):
        px, py = x[:, 0][:, None], x[:, 1][:, None]
        x0, y0, x1, y1 = v[:, 0][None], v[:, 1][None], nxt[:, 0][None], nxt[:, 1][None]
        straddle = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        crossings = np.sum(straddle & (px < xcross), axis=1)
        return crossings % 2 == 1

    curves = tuple(_segment(v[i], nxt[i]) for i in range(len(v)))
    return Domain("polygon", ind, Box(tuple(v.min(axis=0)), tuple(v.max(axis=0))), curves, v,
                  {"vertices": v.tolist()})


def polygon_from_csv(path) -> Domain:
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or line[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(line[0]), float(line[1])])
            except (ValueError, IndexError):
                continue
    return polygon(rows)


def power_cusp(kappa: float = 2.0) -> Domain:
    """``{0 < x < 1, |y| < x^kappa}`` with its tip at the origin."""
    kappa = float(kappa)

    def upper(s):
        s = np.asarray(s, float)
        return np.stack([s, s ** kappa], axis=1)

    def lower(s):
        s = 1.0 - np.asarray(s, float)
        return np.stack([s, -(s ** kappa)], axis=1)

    def ind(x):
        return (x[:, 0] > 0) & (x[:, 0] < 1) & (np.abs(x[:, 1]) < np.abs(x[:, 0]) ** kappa)

    probes = np.array([[0.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
    return Domain("power_cusp", ind, Box((0.0, -1.0), (1.0, 1.0)),
                  (upper, _segment((1, 1), (1, -1)), lower), probes, {"kappa": kappa})


def log_cusp(length: float = 0.5) -> Domain:
    """``{0 < x < length, |y| < x / log(1/x)}``; needs ``length < 1``."""
    if not 0 < length < 1:
        raise ValueError("log cusp length must lie in (0, 1)")

    def width(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = x / np.log(1.0 / x)
        return np.where(x > 0, w, 0.0)

    def upper(s):
        x = length * np.asarray(s, float)
        return np.stack([x, width(x)], axis=1)

    def lower(s):
        x = length * (1.0 - np.asarray(s, float))
        return np.stack([x, -width(x)], axis=1)

    top = float(width(np.array([length]))[0])

    def ind(x):
        inside = (x[:, 0] > 0) & (x[:, 0] < length)
        return inside & (np.abs(x[:, 1]) < width(np.clip(x[:, 0], 1e-300, length)))

    probes = np.array([[0.0, 0.0], [length, top], [length, -top]])
    return Domain("log_cusp", ind, Box((0.0, -top), (length, top)),
                  (upper, _segment((length, top), (length, -top)), lower), probes,
                  {"length": length})


def rooms_corridors(n_rooms: int = 4) -> Domain:
    """Square rooms of side ``2^-k`` joined by corridors of width ``4^-k``.

    Rooms shrink geometrically towards the origin, so the corridor mouths
    are where balls catch little area.
    """
    rooms, corridors = [], []
    x = 1.0
    for k in range(1, n_rooms + 1):
        side = 2.0 ** -k
        left = x - side
        rooms.append((left, -side / 2, x, side / 2))
        if k < n_rooms:
            w = side ** 2
            clen = side / 2
            corridors.append((left - clen, -w / 2, left, w / 2))
            x = left - clen
    parts = np.array(rooms + corridors)

    def ind(p):
        px, py = p[:, 0][:, None], p[:, 1][:, None]
        return np.any((px > parts[:, 0]) & (px < parts[:, 2]) & (py > parts[:, 1])
                      & (py < parts[:, 3]), axis=1)

    curves = []
    probes = []
    for r in parts:
        c = np.array([[r[0], r[1]], [r[2], r[1]], [r[2], r[3]], [r[0], r[3]]])
        curves += [_segment(c[i], c[(i + 1) % 4]) for i in range(4)]
        probes.append(c)
    lo, hi = parts[:, :2].min(axis=0), parts[:, 2:].max(axis=0)
    return Domain("rooms_corridors", ind, Box(tuple(lo), tuple(hi)), tuple(curves),
                  np.concatenate(probes), {"n_rooms": n_rooms})


_DOMAINS = {
    "interval": lambda a: interval(a.get("a", 0.0), a.get("b", 1.0)),
    "square": lambda a: square(a.get("side", 1.0), a.get("origin", (0.0, 0.0))),
    "rectangle": lambda a: rectangle(a["lo"], a["hi"]),
    "disc": lambda a: disc(a.get("center", (0.0, 0.0)), a.get("radius", 1.0)),
    "half_plane": lambda a: half_plane(a.get("extent", 1.0)),
    "polygon": lambda a: polygon_from_csv(a["file"]) if "file" in a else polygon(a["vertices"]),
    "power_cusp": lambda a: power_cusp(a.get("kappa", 2.0)),
    "log_cusp": lambda a: log_cusp(a.get("length", 0.5)),
    "rooms_corridors": lambda a: rooms_corridors(a.get("n_rooms", 4)),
}

DOMAIN_KINDS = tuple(_DOMAINS)


def from_spec(spec: dict) -> Domain:
    kind = spec.get("kind")
    if kind not in _DOMAINS:
        raise ValueError(f"unknown domain kind {kind!r}; known: {', '.join(_DOMAINS)}")
    try:
        return _DOMAINS[kind](spec)
    except KeyError as exc:
        raise ValueError(f"domain {kind!r} missing parameter {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# ball intersections


def _ball_rule(quad: QuadratureRule | None) -> QuadratureRule:
    return quad or BALL_RULE


def ball_measures(dom: Domain, centers, radii, quad: QuadratureRule | None = None,
                  max_points: int = 2 ** 21) -> np.ndarray:
    """``|B_R(x) ∩ Ω|`` for many (center, radius) pairs at once.

    The grid schemes lay a ``resolution``-per-axis cell grid over each ball's
    bounding cube, so the discretization scales with the ball and
    self-similar configurations get identical relative errors.  Results are
    capped at the ball volume.
    """
    quad = _ball_rule(quad)
    dim = dom.dim
    centers = as_points(centers, dim)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),)).copy()
    if np.any(~(radii > 0)):
        raise ValueError("radius must be positive")
    caps = radii * 2.0 if dim == 1 else np.pi * radii ** 2
    if quad.scheme == "monte_carlo":
        out = np.empty(len(centers))
        for i, (c, R) in enumerate(zip(centers, radii)):
            box = Box(tuple(c - R), tuple(c + R)).intersect(dom.bbox)
            if box is None:
                out[i] = 0.0
                continue
            _, w = integration_nodes(_ball_indicator(dom, c, R), box, quad)
            out[i] = w.sum()
        return np.minimum(out, caps)
    res = int(quad.resolution)
    depth = 0 if quad.scheme == "midpoint" else int(quad.depth)
    ref = Box((-1.0,) * dim, (1.0,) * dim).cell_centers(res)[0]
    per_chunk = max(1, max_points // (len(ref) * 3 ** dim))
    out = np.empty(len(centers))
    for start in range(0, len(centers), per_chunk):
        c = centers[start:start + per_chunk]
        r = radii[start:start + per_chunk]
        k = len(c)
        cells = (c[:, None, :] + r[:, None, None] * ref[None, :, :]).reshape(-1, dim)
        owners = np.repeat(np.arange(k), len(ref))
        h = np.repeat((2.0 * r / res)[:, None], dim, axis=1)
        r2 = r * r

        def ind(p, o, c=c, r2=r2):
            return (np.sum((p - c[o]) ** 2, axis=1) < r2[o]) & dom.indicator(p)

        vols, _ = refine_batch(ind, cells, owners, h, depth, quad.rtol, keep_nodes=False)
        out[start:start + k] = vols
    return np.minimum(out, caps)


def _ball_indicator(dom, c, R):
    def ind(p):
        return (np.sum((p - c) ** 2, axis=1) < R * R) & dom.indicator(p)
    return ind


def ball_nodes(dom: Domain, x, R: float, quad: QuadratureRule | None = None):
    """Quadrature nodes and weights of ``B_R(x) ∩ Ω`` on the ball-scaled grid."""
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    quad = _ball_rule(quad)
    c = as_points(x, dom.dim)[0]
    box = Box(tuple(c - R), tuple(c + R))
    return integration_nodes(_ball_indicator(dom, c, R), box, quad)


def ball_intersection_measure(dom: Domain, x, R: float, quad: QuadratureRule | None = None) -> float:
    """``|B_R(x) ∩ Ω|`` by quadrature."""
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    return float(ball_measures(dom, as_points(x, dom.dim)[:1], [R], quad)[0])


def ball_intersection_measure_mc(dom: Domain, x, R: float, samples: int = 10 ** 6,
                                 seed: int = 0, chunk: int = 10 ** 6):
    """Monte Carlo estimate of ``|B_R(x) ∩ Ω|`` and its standard error."""
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    c = as_points(x, dom.dim)[0]
    rng = np.random.default_rng(seed)
    cube = (2 * R) ** dom.dim
    hits = 0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        pts = c + (rng.random((m, dom.dim)) * 2 - 1) * R
        hits += int(np.count_nonzero(_ball_indicator(dom, c, R)(pts)))
        done += m
    frac = hits / samples
    return cube * frac, cube * np.sqrt(frac * (1 - frac) / samples)


def r_tilde(dom: Domain, x, R: float, quad: QuadratureRule | None = None,
            rtol: float = 1e-6, full: float | None = None, fan: int = 1) -> float:
    """Smallest radius whose intersection measure is half that at ``R``.

    Bisection on the nondecreasing map ``r -> |A_r|`` (``fan > 1`` evaluates
    that many interior radii per round in one batch and keeps the subinterval
    where the measure first reaches ``|A_R|/2``).  The left edge of the final
    bracket (width at most ``rtol * R``) is returned.
    """
    c = as_points(x, dom.dim)[:1]
    full = ball_intersection_measure(dom, c, R, quad) if full is None else full
    if full <= 0:
        raise ValueError(f"|B_R(x) ∩ Ω| = 0 at x={c[0].tolist()}, R={R}")
    target = 0.5 * full
    lo, hi = 0.0, float(R)
    while hi - lo > rtol * R:
        rs = lo + (hi - lo) * np.arange(1, fan + 1) / (fan + 1)
        ms = ball_measures(dom, np.repeat(c, fan, axis=0), rs, quad)
        reached = np.nonzero(ms >= target)[0]
        if len(reached) == 0:
            lo = float(rs[-1])
        else:
            j = int(reached[0])
            hi = float(rs[j])
            if j > 0:
                lo = float(rs[j - 1])
    return lo


@dataclass
class HalvingSequence:
    x: list
    R0: float
    radii: list
    measures: list

    def halving_errors(self) -> list:
        m0 = self.measures[0]
        return [abs(m * 2 ** i / m0 - 1) for i, m in enumerate(self.measures)]

    def to_dict(self) -> dict:
        return {"x": self.x, "R0": self.R0, "radii": self.radii, "measures": self.measures,
                "halving_errors": self.halving_errors(),
                "max_halving_error": max(self.halving_errors())}


def halving_sequence(dom: Domain, x, R0: float, depth: int,
                     quad: QuadratureRule | None = None) -> HalvingSequence:
    """``R_0 = R0`` and ``R_{i+1} = r_tilde(R_i)`` for ``depth`` steps."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    radii = [float(R0)]
    measures = [ball_intersection_measure(dom, x, R0, quad)]
    if measures[0] <= 0:
        raise ValueError("|A_R0| = 0")
    for _ in range(depth):
        r = r_tilde(dom, x, radii[-1], quad, full=measures[-1])
        radii.append(r)
        measures.append(ball_intersection_measure(dom, x, r, quad))
    return HalvingSequence(as_points(x, dom.dim)[0].tolist(), float(R0), radii, measures)


# ---------------------------------------------------------------------------
# measure density


@dataclass
class DensityReport:
    s: float
    alpha: float
    c_fit: float
    worst_pair: tuple
    satisfied: bool
    samples: list
    slope: float = 0.0
    c_by_radius: list = field(default_factory=list)
    scan: list = field(default_factory=list)
    trend: str = "log_radius"

    def to_dict(self) -> dict:
        return {"s": self.s, "alpha": self.alpha, "c_fit": self.c_fit,
                "worst_pair": {"x": list(self.worst_pair[0]), "R": self.worst_pair[1]},
                "satisfied": self.satisfied,
                "verdict": "no violation found" if self.satisfied else "violation found",
                "slope": self.slope, "trend": self.trend, "c_by_radius": self.c_by_radius, "scan": self.scan,
                "samples": self.samples}


def density_probes(dom: Domain, boundary_count: int | None = None, interior=None) -> np.ndarray:
    """Mandatory probes, then boundary samples, then optional interior probes."""
    if boundary_count is None:
        boundary_count = int(np.ceil(256 * dom.perimeter))
    parts = [np.asarray(dom.probes, float).reshape(-1, dom.dim),
             dom.boundary_sampler(boundary_count).reshape(-1, dom.dim)]
    if interior is not None:
        parts.append(as_points(interior, dom.dim))
    return np.concatenate(parts)


def _check_radii(R_set):
    radii = np.asarray(sorted(R_set, reverse=True), dtype=float)
    if radii.size == 0:
        raise ValueError("empty radius set")
    if np.any(radii <= 0) or np.any(radii > 0.5):
        raise ValueError("radii must lie in (0, 1/2]")
    return radii


def density_measures(dom: Domain, probes, radii, quad=None, threads: int = 1) -> np.ndarray:
    """Matrix ``M[i, j] = |B_{radii[j]}(probes[i]) ∩ Ω|``.

    One batch per radius; with ``threads > 1`` the radii run concurrently.
    Each entry depends only on its own (probe, radius), so the result does
    not depend on the thread count.
    """
    quad = quad or DENSITY_RULE
    probes = as_points(probes, dom.dim)

    def run(R):
        return ball_measures(dom, probes, np.full(len(probes), R), quad)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(threads) as pool:
            cols = list(pool.map(run, radii))
    else:
        cols = [run(R) for R in radii]
    return np.stack(cols, axis=1)


TRENDS = ("log_radius", "loglog_radius")


def _trend_axis(radii, trend):
    if trend == "log_radius":
        return np.log(radii)
    if trend == "loglog_radius":
        return -np.log(np.log(1.0 / radii))
    raise ValueError(f"unknown trend variable {trend!r}; known: {', '.join(TRENDS)}")


def _fit(probes, radii, measures, s, alpha, threshold, slope_tol, trend="log_radius"):
    correction = np.power(np.log(1.0 / radii), -alpha)
    ratios = measures / (np.power(radii, s) * correction)[None, :]
    c_by_r = ratios.min(axis=0)
    i, j = np.unravel_index(int(np.argmin(ratios)), ratios.shape)
    c_fit = float(ratios[i, j])
    if len(radii) > 1 and np.all(c_by_r > 0):
        slope = float(np.polyfit(_trend_axis(radii, trend), np.log(c_by_r), 1)[0])
    else:
        slope = 0.0 if len(radii) == 1 else float("inf")
    ok = bool(c_fit >= threshold and abs(slope) <= slope_tol)
    samples = [{"x": probes[a].tolist(), "R": float(radii[b]), "measure": float(measures[a, b]),
                "ratio": float(ratios[a, b])}
               for a in range(len(probes)) for b in range(len(radii))]
    return DensityReport(float(s), float(alpha), c_fit, (probes[i].tolist(), float(radii[j])),
                         ok, samples, slope, [float(v) for v in c_by_r], trend=trend)


def measure_density_check(dom: Domain, s: float, R_set: Sequence[float] = DEFAULT_RADII,
                          boundary_count: int | None = None, quad=None,
                          threshold: float = 1e-6, slope_tol: float = 0.05,
                          interior=None, threads: int = 1) -> DensityReport:
    """Fit ``c`` in ``|B_R(x) ∩ Ω| >= c R^s`` over probes and radii.

    ``satisfied`` means no violation was found: the fitted constant clears
    ``threshold`` and shows no trend across the radii (``|slope| <= slope_tol``
    for ``log c(R)`` against ``log R``).
    """
    radii = _check_radii(R_set)
    probes = density_probes(dom, boundary_count, interior)
    measures = density_measures(dom, probes, radii, quad, threads)
    return _fit(probes, radii, measures, s, 0.0, threshold, slope_tol)


def log_density_fit(dom: Domain, s: float, alpha_grid: Sequence[float],
                    R_set: Sequence[float] = DEFAULT_RADII, boundary_count: int | None = None,
                    quad=None, threshold: float = 1e-6, slope_tol: float = 0.05,
                    interior=None, threads: int = 1, trend: str = "log_radius") -> DensityReport:
    """Smallest ``alpha`` for which ``c R^s (log 1/R)^-alpha <= |B_R(x) ∩ Ω|`` fits stably.

    Each ``alpha`` gets the trend test of :func:`measure_density_check`.
    With ``trend="loglog_radius"`` the slope of ``log c`` is taken against
    ``-log log(1/R)`` instead of ``log R``; a leftover factor
    ``(log 1/R)^-gamma`` then shows up as slope ``gamma`` rather than as the
    vanishing ``gamma / log(1/R)``.  If no ``alpha`` passes, the report with
    the flattest trend is returned with ``satisfied=False``.
    """
    alphas = sorted(float(a) for a in alpha_grid)
    if not alphas:
        raise ValueError("empty alpha grid")
    radii = _check_radii(R_set)
    probes = density_probes(dom, boundary_count, interior)
    measures = density_measures(dom, probes, radii, quad, threads)
    _trend_axis(radii, trend)
    reports = [_fit(probes, radii, measures, s, a, threshold, slope_tol, trend) for a in alphas]
    scan = [{"alpha": r.alpha, "c_fit": r.c_fit, "slope": r.slope, "passes": r.satisfied}
            for r in reports]
    chosen = next((r for r in reports if r.satisfied), None)
    if chosen is None:
        chosen = min(reports, key=lambda r: abs(r.slope))
    chosen.scan = scan
    return chosen
