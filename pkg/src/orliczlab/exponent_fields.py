"""Variable exponents p(.) and q(.), their continuity checks and extension.

An :class:`ExponentField` wraps a vectorized function on a box together with
its bounds and a modulus of continuity.  Two moduli are built in::

    log_holder:     rho(t) = C / log(e + 1/t)
    loglog_holder:  rho(t) = C / log(e + log(e + 1/t))

Fields can be built from named closed forms (:func:`from_spec`) or from a
CSV grid file (:func:`from_grid_file`).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .box import Box, as_points

E = np.e
MODULUS_KINDS = ("log_holder", "loglog_holder", "custom")


def log_weight(t):
    """``log(e + 1/t)``, the reciprocal shape of the log-Hölder modulus."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.log(E + 1.0 / t)


def loglog_weight(t):
    """``log(e + log(e + 1/t))``."""
    return np.log(E + log_weight(t))


def modulus_function(kind: str, constant: float) -> Callable:
    """Return ``rho`` with ``rho(0) = 0`` for a built-in modulus kind."""
    if kind == "log_holder":
        weight = log_weight
    elif kind == "loglog_holder":
        weight = loglog_weight
    else:
        raise ValueError(f"no built-in modulus for kind {kind!r}")

    def rho(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = constant / weight(t)
        return np.where(t > 0, out, 0.0)

    return rho


@dataclass(frozen=True)
class DecayData:
    p_infinity: float
    nekvinda_c1: float

    def __post_init__(self):
        if not (self.p_infinity >= 1.0):
            raise ValueError(f"invalid decay data: p_infinity={self.p_infinity} < 1")
        if not (0.0 < self.nekvinda_c1 < 1.0):
            raise ValueError(f"invalid decay data: c1={self.nekvinda_c1} not in (0, 1)")


@dataclass(frozen=True)
class ExponentField:
    """A bounded exponent on ``box``.

    ``func`` takes an ``(m, dim)`` array and returns ``m`` values.  ``role`` is
    ``"p"`` (requires ``1 <= inf_val``) or ``"q"`` (any finite bounds).
    """

    func: Callable[[np.ndarray], np.ndarray]
    box: Box
    inf_val: float
    sup_val: float
    modulus_kind: str = "log_holder"
    modulus_constant: float = 0.0
    role: str = "p"
    name: str = "custom"
    modulus_fn: Callable | None = field(default=None, compare=False)
    spec: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.modulus_kind not in MODULUS_KINDS:
            raise ValueError(f"unknown modulus kind {self.modulus_kind!r}")
        if self.modulus_kind == "custom" and self.modulus_fn is None:
            raise ValueError("custom modulus requires modulus_fn")
        if self.modulus_constant < 0:
            raise ValueError("modulus constant must be nonnegative")
        if not (np.isfinite(self.inf_val) and np.isfinite(self.sup_val)):
            raise ValueError("exponent bounds must be finite")
        if self.inf_val > self.sup_val:
            raise ValueError("inf_val exceeds sup_val")
        if self.role == "p" and self.inf_val < 1.0:
            raise ValueError(f"p-type exponent needs inf >= 1, got {self.inf_val}")
        if self.role not in ("p", "q"):
            raise ValueError(f"unknown exponent role {self.role!r}")

    @property
    def dim(self) -> int:
        return self.box.dim

    def __call__(self, x) -> np.ndarray:
        pts = as_points(x, self.dim)
        return np.asarray(self.func(pts), dtype=float).reshape(len(pts))

    def modulus(self) -> Callable:
        if self.modulus_kind == "custom":
            return self.modulus_fn
        return modulus_function(self.modulus_kind, self.modulus_constant)

    def with_role(self, role: str) -> "ExponentField":
        return replace(self, role=role)


# ---------------------------------------------------------------------------
# closed forms


def lipschitz_to_modulus_constant(lipschitz: float, diameter: float, kind: str) -> float:
    """Smallest C with ``L t <= C / w(t)`` on ``(0, diameter]``.

    ``t * w(t)`` is increasing for both built-in weights, so the supremum sits
    at ``t = diameter``.
    """
    if lipschitz == 0 or diameter == 0:
        return 0.0
    weight = log_weight if kind == "log_holder" else loglog_weight
    return float(lipschitz * diameter * weight(diameter))


def constant(value: float, box: Box, role: str = "p", kind: str = "log_holder") -> ExponentField:
    v = float(value)
    return ExponentField(lambda x: np.full(len(x), v), box, v, v, kind, 0.0, role,
                         f"constant({v:g})")


def _dist(x, center):
    return np.linalg.norm(x - np.asarray(center, dtype=float), axis=1)


def affine(base: float, slope: float, box: Box, axis: int = 0, role: str = "p",
           kind: str = "log_holder") -> ExponentField:
    lo, hi = box.lo[axis], box.hi[axis]
    ends = (base + slope * lo, base + slope * hi)
    c = lipschitz_to_modulus_constant(abs(slope), box.diameter, kind)
    return ExponentField(lambda x: base + slope * x[:, axis], box, min(ends), max(ends),
                         kind, c, role, f"affine({base:g},{slope:g})")


def _radial_range(box: Box, center, profile):
    """Range of ``profile(|x - center|)`` over ``box`` for monotone increasing profile."""
    c = np.asarray(center, dtype=float)
    nearest = box.project(c)[0]
    corners = box.grid(2)
    rmin = float(np.linalg.norm(nearest - c))
    rmax = float(np.max(np.linalg.norm(corners - c, axis=1)))
    return float(profile(np.array([rmin]))[0]), float(profile(np.array([rmax]))[0])


def log_bump(base: float, box: Box, amplitude: float = 1.0, constant_c: float = 1.0,
             center=None, role: str = "p") -> ExponentField:
    """``base + min(amplitude, C / log(e + 1/|x - center|))``; log-Hölder with constant C."""
    center = np.zeros(box.dim) if center is None else np.asarray(center, dtype=float)
    rho = modulus_function("log_holder", constant_c)

    def profile(r):
        return np.minimum(amplitude, rho(r))

    lo, hi = _radial_range(box, center, profile)
    return ExponentField(lambda x: base + profile(_dist(x, center)), box, base + lo, base + hi,
                         "log_holder", float(constant_c), role, "log_bump")


def loglog_bump(base: float, box: Box, amplitude: float = 1.0, constant_c: float = 1.0,
                center=None, role: str = "q") -> ExponentField:
    """``base + min(amplitude, C / log(e + log(e + 1/|x - center|)))``."""
    center = np.zeros(box.dim) if center is None else np.asarray(center, dtype=float)
    rho = modulus_function("loglog_holder", constant_c)

    def profile(r):
        return np.minimum(amplitude, rho(r))

    lo, hi = _radial_range(box, center, profile)
    return ExponentField(lambda x: base + profile(_dist(x, center)), box, base + lo, base + hi,
                         "loglog_holder", float(constant_c), role, "loglog_bump")


def sqrt_cusp(base: float, box: Box, center=None, claimed_constant: float = 1.0,
              role: str = "p") -> ExponentField:
    """``base + sqrt|x - center|``: continuous but not log-Hölder at the center."""
    center = np.zeros(box.dim) if center is None else np.asarray(center, dtype=float)
    lo, hi = _radial_range(box, center, np.sqrt)
    return ExponentField(lambda x: base + np.sqrt(_dist(x, center)), box, base + lo, base + hi,
                         "log_holder", float(claimed_constant), role, "sqrt_cusp")


def sine(base: float, amplitude: float, box: Box, frequency: float = 1.0, axis: int = 0,
         role: str = "p", kind: str = "log_holder") -> ExponentField:
    """``base + amplitude * sin(2 pi frequency x_axis)``; bounds from a dense scan."""
    w = 2 * np.pi * frequency
    xs = np.linspace(box.lo[axis], box.hi[axis], 20001)
    vals = base + amplitude * np.sin(w * xs)
    lip = abs(amplitude) * w
    c = lipschitz_to_modulus_constant(lip, box.diameter, kind)
    return ExponentField(lambda x: base + amplitude * np.sin(w * x[:, axis]), box,
                         float(vals.min()), float(vals.max()), kind, c, role, "sine")


def gaussian(base: float, amplitude: float, box: Box, center=None, width: float = 0.25,
             role: str = "p", kind: str = "log_holder") -> ExponentField:
    """``base + amplitude * exp(-|x - center|^2 / width^2)``."""
    center = np.asarray(box.widths / 2 + box.lo_arr if center is None else center, dtype=float)

    def profile(r):
        return amplitude * np.exp(-(r / width) ** 2)

    a, b = _radial_range(box, center, profile)
    lo, hi = min(a, b), max(a, b)
    lip = abs(amplitude) * np.sqrt(2.0) / width * np.exp(-0.5)
    c = lipschitz_to_modulus_constant(lip, box.diameter, kind)
    return ExponentField(lambda x: base + profile(_dist(x, center)), box, base + lo, base + hi,
                         kind, c, role, "gaussian")


def from_grid(coords: list[np.ndarray], values: np.ndarray, role: str = "p",
              kind: str = "log_holder", name: str = "grid") -> ExponentField:
    """Piecewise (bi)linear interpolation of samples on a tensor grid."""
    coords = [np.asarray(c, dtype=float) for c in coords]
    values = np.asarray(values, dtype=float)
    box = Box(tuple(c[0] for c in coords), tuple(c[-1] for c in coords))
    interp = RegularGridInterpolator(coords, values, method="linear")
    lips = []
    for ax, c in enumerate(coords):
        if len(c) > 1:
            slopes = np.diff(values, axis=ax) / np.expand_dims(
                np.diff(c), tuple(i for i in range(values.ndim) if i != ax))
            lips.append(float(np.max(np.abs(slopes))))
    lip = float(np.sqrt(np.sum(np.square(lips)))) if lips else 0.0

    def func(x):
        return interp(box.project(x))

    return ExponentField(func, box, float(values.min()), float(values.max()), kind,
                         lipschitz_to_modulus_constant(lip, box.diameter, kind), role, name)


def from_grid_file(path, role: str = "p", kind: str = "log_holder") -> ExponentField:
    """Load ``x[,y],value`` rows (comment lines start with ``#``) sampled on a tensor grid."""
    rows = []
    with open(path, newline="") as fh:
        for line in csv.reader(fh):
            if not line or line[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in line])
            except ValueError:
                continue  # header row
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] not in (2, 3):
        raise ValueError(f"{path}: expected rows 'x,value' or 'x,y,value'")
    dim = data.shape[1] - 1
    coords = [np.unique(data[:, i]) for i in range(dim)]
    shape = tuple(len(c) for c in coords)
    if int(np.prod(shape)) != len(data):
        raise ValueError(f"{path}: samples do not form a complete tensor grid")
    values = np.full(shape, np.nan)
    idx = tuple(np.searchsorted(coords[i], data[:, i]) for i in range(dim))
    values[idx] = data[:, -1]
    return from_grid(coords, values, role, kind, name=Path(path).name)


_BUILDERS = {
    "constant": lambda box, role, kind, a: constant(a["value"], box, role, kind),
    "affine": lambda box, role, kind, a: affine(a["base"], a["slope"], box, a.get("axis", 0),
                                                role, kind),
    "log_bump": lambda box, role, kind, a: log_bump(a["base"], box, a.get("amplitude", 1.0),
                                                    a.get("C", 1.0), a.get("center"), role),
    "loglog_bump": lambda box, role, kind, a: loglog_bump(a["base"], box,
                                                          a.get("amplitude", 1.0),
                                                          a.get("C", 1.0), a.get("center"),
                                                          role),
    "sqrt_cusp": lambda box, role, kind, a: sqrt_cusp(a["base"], box, a.get("center"),
                                                      a.get("C", 1.0), role),
    "sine": lambda box, role, kind, a: sine(a["base"], a["amplitude"], box,
                                            a.get("frequency", 1.0), a.get("axis", 0), role,
                                            kind),
    "gaussian": lambda box, role, kind, a: gaussian(a["base"], a["amplitude"], box,
                                                    a.get("center"), a.get("width", 0.25), role,
                                                    kind),
}

CLOSED_FORMS = tuple(_BUILDERS)


def from_spec(spec: dict, box: Box, role: str, base_dir=None) -> ExponentField:
    """Build a field from ``{"name": ..., params}`` or ``{"file": path}``."""
    kind = spec.get("modulus", "log_holder" if role == "p" else "loglog_holder")
    if "file" in spec:
        path = Path(spec["file"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        fld = from_grid_file(path, role, kind)
    else:
        name = spec.get("name")
        if name not in _BUILDERS:
            raise ValueError(f"unknown exponent form {name!r}; known: {', '.join(_BUILDERS)}")
        try:
            fld = _BUILDERS[name](box, role, kind, spec)
        except KeyError as exc:
            raise ValueError(f"exponent form {name!r} missing parameter {exc.args[0]!r}") from None
    if "modulus_constant" in spec:
        fld = replace(fld, modulus_constant=float(spec["modulus_constant"]))
    return replace(fld, spec=dict(spec))


# ---------------------------------------------------------------------------
# continuity and decay checks


@dataclass
class ModulusCheck:
    max_ratio: float
    passes: bool
    constant: float
    worst_pair: tuple | None = None

    def to_dict(self) -> dict:
        return {"max_ratio": self.max_ratio, "passes": self.passes, "constant": self.constant,
                "worst_pair": None if self.worst_pair is None
                else [list(map(float, p)) for p in self.worst_pair]}


def _pair_arrays(fld: ExponentField, pairs):
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        raise ValueError("no point pairs given")
    if fld.dim == 1 and arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[1] != 2 or arr.shape[2] != fld.dim:
        raise ValueError(f"pairs must have shape (m, 2, {fld.dim})")
    x, y = arr[:, 0, :], arr[:, 1, :]
    dist = np.linalg.norm(x - y, axis=1)
    if np.any(dist == 0):
        raise ValueError("rejected input: coincident point pair")
    span = fld.box.diameter
    if not (np.all(fld.box.contains(x, 1e-12 * span)) and np.all(fld.box.contains(y, 1e-12 * span))):
        raise ValueError("pair point outside the exponent's box")
    return x, y, dist


def _modulus_check(fld, pairs, weight, constant_c):
    x, y, dist = _pair_arrays(fld, pairs)
    # pair grids reuse few distinct points; evaluate each once
    uniq, inv = np.unique(np.concatenate([x, y]), axis=0, return_inverse=True)
    vals = fld(uniq)[inv.ravel()]
    ratio = np.abs(vals[:len(x)] - vals[len(x):]) * weight(dist)
    k = int(np.argmax(ratio))
    c = fld.modulus_constant if constant_c is None else float(constant_c)
    worst = float(ratio[k])
    # roundoff slack for fields that attain the modulus exactly
    return ModulusCheck(worst, bool(worst <= c * (1 + 1e-12) + 1e-15), c, (x[k], y[k]))


def check_log_holder(fld: ExponentField, pairs, constant_c: float | None = None) -> ModulusCheck:
    """Worst ``|p(x) - p(y)| log(e + 1/|x - y|)`` over ``pairs``."""
    return _modulus_check(fld, pairs, log_weight, constant_c)


def check_loglog_holder(fld: ExponentField, pairs, constant_c: float | None = None) -> ModulusCheck:
    """Worst ``|q(x) - q(y)| log(e + log(e + 1/|x - y|))`` over ``pairs``."""
    return _modulus_check(fld, pairs, loglog_weight, constant_c)


def pair_grid(box: Box, per_axis: int = 12, anchor=None) -> np.ndarray:
    """All distinct pairs of a tensor grid, or pairs ``(x, anchor)`` if ``anchor`` is given."""
    pts = box.grid(per_axis)
    if anchor is not None:
        a = np.asarray(anchor, dtype=float).reshape(1, box.dim)
        pts = pts[np.linalg.norm(pts - a, axis=1) > 0]
        return np.stack([pts, np.repeat(a, len(pts), axis=0)], axis=1)
    i, j = np.triu_indices(len(pts), k=1)
    return np.stack([pts[i], pts[j]], axis=1)


@dataclass
class NekvindaCheck:
    integral_estimate: float
    passes: bool

    def to_dict(self) -> dict:
        return {"integral_estimate": self.integral_estimate, "passes": self.passes}


def nekvinda_integrand(pvals, decay: DecayData):
    inv_inf = 0.0 if np.isinf(decay.p_infinity) else 1.0 / decay.p_infinity
    gap = np.abs(1.0 / np.asarray(pvals, dtype=float) - inv_inf)
    with np.errstate(divide="ignore"):
        expo = np.where(gap > 0, 1.0 / gap, np.inf)
    return np.where(gap > 0, decay.nekvinda_c1 ** expo, 0.0)


def check_nekvinda(fld: ExponentField, decay: DecayData, resolution: int = 4096) -> NekvindaCheck:
    """Midpoint estimate of the Nekvinda integral over the field's box.

    On a bounded box the integral is always finite; the value is reported for
    diagnostics.
    """
    if fld.role != "p":
        raise ValueError("Nekvinda decay applies to p-type exponents")
    if not (decay.p_infinity >= 1):
        raise ValueError("invalid decay data: p_infinity < 1")
    per_axis = resolution if fld.dim == 1 else max(8, int(round(resolution ** 0.5)))
    centers, h = fld.box.cell_centers(per_axis)
    vals = nekvinda_integrand(fld(centers), decay)
    est = float(np.sum(vals) * np.prod(h))
    return NekvindaCheck(est, bool(np.isfinite(est)))


# ---------------------------------------------------------------------------
# extension


def _assert_concave(rho, span: float, samples: int = 4097):
    t = np.linspace(0.0, span, samples)
    r = np.asarray(rho(t), dtype=float)
    if abs(r[0]) > 1e-12:
        raise ValueError("unsupported modulus: rho(0) must be 0")
    second = r[:-2] - 2 * r[1:-1] + r[2:]
    if np.any(second > 1e-12 * max(1.0, np.max(np.abs(r)))):
        raise ValueError("unsupported modulus: not concave on the extension range")


def mcshane_extend(fld: ExponentField, target_box: Box, samples_per_axis: int = 512,
                   chunk: int = 32) -> ExponentField:
    """Extend ``fld`` to ``target_box`` by infimal convolution with its modulus.

    Inside the original box the field is returned unchanged.  Outside it the
    value is ``min_y [p(y) + rho(|x - y|)]`` over a sample grid of the box and
    the projection of ``x`` onto the box, clamped to ``[inf_val, sup_val]``.
    The projection candidate caps the discretization error of the grid
    infimum, which yields the modulus with constant at most ``2 C``.
    """
    if not target_box.contains_box(fld.box):
        raise ValueError("target box must contain the field's box")
    rho = fld.modulus()
    if fld.modulus_kind == "custom":
        _assert_concave(rho, target_box.diameter)
    ys = fld.box.grid(samples_per_axis)
    py = fld(ys)
    inner_box, inner = fld.box, fld.func
    lo, hi = fld.inf_val, fld.sup_val

    def func(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(len(x))
        inside = inner_box.contains(x)
        if np.any(inside):
            out[inside] = inner(x[inside])
        xo = x[~inside]
        if len(xo):
            proj = inner_box.project(xo)
            best = inner(proj) + rho(np.linalg.norm(xo - proj, axis=1))
            for start in range(0, len(xo), chunk):
                block = xo[start:start + chunk]
                d = np.linalg.norm(block[:, None, :] - ys[None, :, :], axis=2)
                cand = np.min(py[None, :] + rho(d), axis=1)
                best[start:start + chunk] = np.minimum(best[start:start + chunk], cand)
            out[~inside] = np.clip(best, lo, hi)
        return out

    doubled = None if fld.modulus_fn is None else (lambda t: 2.0 * rho(t))
    return ExponentField(func, target_box, lo, hi, fld.modulus_kind, 2.0 * fld.modulus_constant,
                         fld.role, f"mcshane({fld.name})", doubled)
