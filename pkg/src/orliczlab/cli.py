"""Command-line front end: one YAML config in, one JSON report out.

Usage::

    orliczlab {phi-check|norm|char-bounds|density|halving|embed-scan|extend}
              --config FILE [--set key=value]... [--csv DIR] [--threads N]
              [--seed S] [--timing]

Exit codes: 0 success, 2 a check failed, 64 usage or config error,
70 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import domain_geometry as dg
from . import embedding_lab as el
from . import exponent_fields as ef
from . import modular_norms as mn
from . import phi_core as pc
from .box import Box
from .quadrature import QuadratureRule
from .reporting import RunReport, dumps, write_csv

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 64, 70

COMMANDS = ("phi-check", "norm", "char-bounds", "density", "halving", "embed-scan", "extend")


class ConfigError(ValueError):
    """Invalid configuration; ``where`` names the offending field."""

    def __init__(self, where: str, message: str):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration


def _set_dotted(cfg: dict, key: str, value):
    parts = key.split(".")
    if not all(parts):
        raise ConfigError("--set", f"malformed key {key!r}")
    node = cfg
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigError(key, f"{part!r} is not a mapping")
        node = nxt
    node[parts[-1]] = value


def parse_overrides(pairs) -> list:
    out = []
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError("--set", f"expected key=value, got {item!r}")
        key, text = item.split("=", 1)
        try:
            value = yaml.safe_load(text) if text else ""
        except yaml.YAMLError as exc:
            raise ConfigError(key, f"cannot parse value {text!r}: {exc}") from None
        out.append((key.strip(), value))
    return out


def _referenced_files(node, where=""):
    if isinstance(node, dict):
        for k, v in node.items():
            loc = f"{where}.{k}" if where else k
            if k in ("file", "path") and isinstance(v, str):
                yield loc, v
            else:
                yield from _referenced_files(v, loc)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from _referenced_files(v, f"{where}[{i}]")


@dataclass
class ExperimentConfig:
    """Parsed configuration plus the directory relative paths refer to."""

    data: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_text(cls, text: str, base_dir=None, overrides=(), seed=None):
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "config"
            raise ConfigError(where, f"YAML parse error: {getattr(exc, 'problem', exc)}") from None
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a mapping")
        for key, value in overrides:
            _set_dotted(data, key, value)
        if seed is not None:
            data["seed"] = int(seed)
        cfg = cls(data, Path(base_dir) if base_dir else Path.cwd())
        cfg.check_files()
        return cfg

    @classmethod
    def load(cls, path, overrides=(), seed=None):
        path = Path(path)
        if not path.is_file():
            raise ConfigError("--config", f"no such file {str(path)!r}")
        return cls.from_text(path.read_text(), path.parent, overrides, seed)

    def echo(self) -> dict:
        return copy.deepcopy(self.data)

    def resolve(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.base_dir / p

    def check_files(self):
        for where, name in _referenced_files(self.data):
            if not self.resolve(name).is_file():
                raise ConfigError(where, f"referenced file {name!r} does not exist")

    def section(self, name: str) -> dict:
        sec = self.data.get(name, {})
        if sec is None:
            return {}
        if not isinstance(sec, dict):
            raise ConfigError(name, "must be a mapping")
        return sec

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))

    # builders -----------------------------------------------------------

    def domain(self) -> dg.Domain:
        spec = self.section("domain") or {"kind": "square"}
        spec = dict(spec)
        if "file" in spec:
            spec["file"] = str(self.resolve(spec["file"]))
        return _wrap("domain", dg.from_spec, spec)

    def box(self) -> Box:
        spec = self.data.get("box")
        if spec is None:
            return self.domain().bbox
        try:
            return Box(tuple(np.atleast_1d(spec["lo"])), tuple(np.atleast_1d(spec["hi"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("box", f"expected {{lo: [...], hi: [...]}} ({exc})") from None

    def exponent(self, role: str) -> ef.ExponentField:
        spec = self.section("exponents").get(role)
        if spec is None:
            spec = {"name": "constant", "value": 2.0 if role == "p" else 0.0}
        if not isinstance(spec, dict):
            raise ConfigError(f"exponents.{role}", "must be a mapping")
        return _wrap(f"exponents.{role}", ef.from_spec, spec, self.box(), role, self.base_dir)

    def n(self) -> int:
        return int(self.data.get("n", self.box().dim))

    def phi(self) -> pc.PhiFunction:
        p, q = self.exponent("p"), self.exponent("q")
        return _wrap("exponents", pc.PhiFunction, p, q, self.n())

    def decay(self) -> ef.DecayData | None:
        spec = self.data.get("decay")
        if spec is None:
            return None
        return _wrap("decay", lambda s: ef.DecayData(float(s["p_infinity"]),
                                                     float(s["nekvinda_c1"])), spec)

    def quadrature(self) -> QuadratureRule | None:
        spec = self.data.get("quadrature")
        if spec is None:
            return None
        spec = dict(spec)
        spec.setdefault("seed", self.seed)
        return _wrap("quadrature", lambda s: QuadratureRule(**s), spec)


def _wrap(where, builder, *args):
    try:
        return builder(*args)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(where, str(exc)) from None


def _radii(sec: dict, default=dg.DEFAULT_RADII) -> list:
    if "radii" in sec:
        return [float(r) for r in sec["radii"]]
    if "radius_exponents" in sec:
        e = sec["radius_exponents"]
        ks = range(int(e["start"]), int(e["stop"]) + 1, int(e.get("step", 1)))
        return [2.0 ** -k for k in ks]
    return list(default)


# ---------------------------------------------------------------------------
# commands; each fills ``results`` in place so partial output survives errors


def cmd_phi_check(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("phi_check")
    phi = cfg.phi()
    box = phi.p.box
    per_axis = int(sec.get("points_per_axis", 16 if box.dim == 2 else 64))
    pts = box.grid(per_axis)
    tg = sec.get("t_grid", {})
    t_grid = np.logspace(np.log10(float(tg.get("min", 1e-6))), np.log10(float(tg.get("max", 1e6))),
                         int(tg.get("count", 64)))
    if "balls" in sec:
        balls = [(b["center"], float(b["radius"])) for b in sec["balls"]]
    else:
        c = 0.5 * (box.lo_arr + box.hi_arr)
        balls = [(c, f * float(np.min(box.widths))) for f in (0.05, 0.1, 0.2)]
    checks = results.setdefault("checks", {})
    checks["A0"] = pc.check_A0(phi, pts).to_dict()
    checks["A1"] = pc.check_A1(phi, balls).to_dict()
    decay = cfg.decay()
    if decay is not None:
        checks["A2"] = pc.check_A2(phi, decay, float(sec.get("a2_s", 1.0)), pts).to_dict()
        checks["nekvinda"] = ef.check_nekvinda(phi.p, decay).to_dict()
    checks["Dec"] = pc.check_dec(phi, t_grid, pts, sec.get("dec_exponent")).to_dict()
    checks["aInc1"] = pc.check_ainc1(phi, t_grid, pts).to_dict()
    pairs = ef.pair_grid(box, int(sec.get("pair_grid_per_axis", 12 if box.dim == 2 else 64)))
    for role, fld in (("p", phi.p), ("q", phi.q)):
        check = (ef.check_log_holder if fld.modulus_kind == "log_holder"
                 else ef.check_loglog_holder)
        checks[f"modulus_{role}"] = check(fld, pairs).to_dict()
    results["satisfies_growth"] = phi.satisfies_growth
    results["skipped"] = [] if decay is not None else ["A2", "nekvinda"]
    ctx.csv("phi_check.csv", ("check", "value", "passes"),
            [(k, v.get("beta_or_bound", v.get("max_ratio", v.get("integral_estimate"))),
              v["passes"]) for k, v in checks.items()])
    return all(v["passes"] for v in checks.values())


def _norm_function(cfg: ExperimentConfig, spec: dict, dom, quad):
    kind = spec.get("kind", "constant")
    if kind == "constant":
        value = float(spec.get("value", 1.0))
        return mn.GridFunction.from_callable(
            dom, lambda x: np.full(len(x), value), quad, gradient=lambda x: np.zeros_like(x))
    if kind == "ramp":
        axis, slope, offset = int(spec.get("axis", 0)), float(spec.get("slope", 1.0)), \
            float(spec.get("offset", 0.0))
        if not 0 <= axis < dom.dim:
            raise ConfigError("norm.function.axis", f"axis {axis} out of range")

        def grad(x):
            g = np.zeros_like(x)
            g[:, axis] = slope
            return g
        return mn.GridFunction.from_callable(dom, lambda x: offset + slope * x[:, axis], quad,
                                             gradient=grad)
    if kind == "characteristic":
        region = _wrap("norm.function.region", dg.from_spec,
                       spec.get("region") or cfg.section("domain"))
        return mn.GridFunction.characteristic(region, quad, float(spec.get("scale", 1.0)))
    if kind == "file":
        return mn.GridFunction.from_csv(cfg.resolve(spec["path"]), dom)
    raise ConfigError("norm.function.kind",
                      f"unknown function kind {kind!r}; known: constant, ramp, characteristic, file")


def cmd_norm(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("norm")
    phi, dom, quad = cfg.phi(), cfg.domain(), cfg.quadrature()
    f = _wrap("norm.function", _norm_function, cfg, sec.get("function", {}), dom, quad)
    if bool(sec.get("sobolev", False)) and f.gradient is None:
        raise ConfigError("norm.sobolev", "Sobolev norm requested but the function has no gradient")
    results["measure"] = f.measure
    results["nodes"] = len(f.values)
    results["modular"] = mn.modular(f, phi)
    results["luxemburg"] = mn.luxemburg(f, phi).to_dict()
    ubc = mn.unit_ball_check(f, phi, tol=float(sec.get("unit_ball_tol", 1e-6)))
    results["unit_ball_check"] = ubc.to_dict()
    rows = [("modular", results["modular"]), ("luxemburg", results["luxemburg"]["norm"])]
    if sec.get("sobolev", False):
        results["sobolev"] = mn.sobolev(f, phi).to_dict()
        rows.append(("sobolev", results["sobolev"]["norm"]))
    ctx.csv("norm.csv", ("quantity", "value"), rows)
    return ubc.passes


def _random_rectangles(spec: dict, box: Box, seed: int) -> list:
    rng = np.random.default_rng(seed)
    count, max_measure = int(spec.get("count", 10)), float(spec.get("max_measure", 0.5))
    out = []
    while len(out) < count:
        a, b = np.sort(rng.uniform(box.lo_arr, box.hi_arr, (2, box.dim)), axis=0)
        if np.all(b - a > 1e-3) and np.prod(b - a) < max_measure:
            if box.dim == 2:
                out.append({"kind": "rectangle", "lo": a.tolist(), "hi": b.tolist()})
            else:
                out.append({"kind": "interval", "a": float(a[0]), "b": float(b[0])})
    return out


def cmd_char_bounds(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("char_bounds")
    phi, quad = cfg.phi(), cfg.quadrature()
    regions = list(sec.get("regions", []))
    if "random_rectangles" in sec:
        regions += _random_rectangles(sec["random_rectangles"], phi.p.box, cfg.seed)
    if not regions:
        raise ConfigError("char_bounds.regions", "no regions given")
    slack = float(sec.get("rel_slack", 1e-3))
    reports = results.setdefault("reports", [])
    for i, spec in enumerate(regions):
        region = _wrap(f"char_bounds.regions[{i}]", dg.from_spec, spec)
        rep = mn.char_fn_norm_bounds(region, phi, quad, slack)
        reports.append({"region": spec, **rep.to_dict()})
    verdicts = [r["passes"] for r in reports]
    results["checked"] = sum(v is not None for v in verdicts)
    results["failed"] = sum(v is False for v in verdicts)
    ctx.csv("char_bounds.csv",
            ("index", "lemma_case", "measure", "lower", "upper", "computed_norm", "passes"),
            [(i, r["lemma_case"], r["measure"], r["lower"], r["upper"], r["computed_norm"],
              r["passes"]) for i, r in enumerate(reports)])
    return results["failed"] == 0


def cmd_density(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("density")
    dom, quad = cfg.domain(), cfg.quadrature()
    s = float(sec.get("s", dom.dim))
    radii = _radii(sec)
    common = dict(R_set=radii, boundary_count=sec.get("boundary_count"), quad=quad,
                  threshold=float(sec.get("threshold", 1e-6)),
                  slope_tol=float(sec.get("slope_tol", 0.05)), interior=sec.get("interior"),
                  threads=ctx.threads)
    if "alpha_grid" in sec:
        rep = dg.log_density_fit(dom, s, sec["alpha_grid"], trend=sec.get("trend", "log_radius"),
                                 **common)
    else:
        rep = dg.measure_density_check(dom, s, **common)
    out = rep.to_dict()
    if not sec.get("keep_samples", False):
        out.pop("samples")
    results["report"] = out
    ctx.csv("density.csv", ("R", "c_min"),
            list(zip(sorted(radii, reverse=True), rep.c_by_radius)))
    return rep.satisfied


def cmd_halving(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("halving")
    dom, quad = cfg.domain(), cfg.quadrature()
    if "x" in sec:
        x = sec["x"]
    elif len(dom.probes):
        x = dom.probes[0].tolist()
    else:
        raise ConfigError("halving.x", "missing and the domain has no default probe")
    seq = dg.halving_sequence(dom, x, float(sec.get("R0", 0.25)), int(sec.get("depth", 8)), quad)
    out = seq.to_dict()
    results["sequence"] = out
    ratios = [a / b for a, b in zip(seq.radii, seq.radii[1:])]
    results["radius_ratios"] = ratios
    tol = float(sec.get("tolerance", 1e-3))
    results["tolerance"] = tol
    ctx.csv("halving.csv", ("step", "radius", "measure", "halving_error"),
            [(i, r, m, e) for i, (r, m, e) in
             enumerate(zip(seq.radii, seq.measures, seq.halving_errors()))])
    return out["max_halving_error"] <= tol


def cmd_embed_scan(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("embed_scan")
    dom, phi = cfg.domain(), cfg.phi()
    rep = el.embedding_ratio_scan(dom, phi, sec.get("family", "standard-v1"),
                                  cfg.quadrature(), ctx.threads)
    results["scan"] = rep.to_dict()
    ctx.csv("embed_scan.csv", rep.CSV_COLUMNS, rep.csv_rows())
    return bool(np.isfinite(rep.sup_ratio))


def cmd_extend(cfg: ExperimentConfig, results: dict, ctx) -> bool:
    sec = cfg.section("extend")
    role = sec.get("field", "p")
    if role not in ("p", "q"):
        raise ConfigError("extend.field", "must be p or q")
    fld = cfg.exponent(role)
    tb = sec.get("target_box")
    if tb is None:
        raise ConfigError("extend.target_box", "missing")
    target = _wrap("extend.target_box", lambda s: Box(tuple(np.atleast_1d(s["lo"])),
                                                      tuple(np.atleast_1d(s["hi"]))), tb)
    ext = _wrap("extend", ef.mcshane_extend, fld, target,
                int(sec.get("samples_per_axis", 64 if fld.dim == 2 else 512)))
    inner = fld.box.grid(int(sec.get("check_per_axis", 32 if fld.dim == 2 else 256)))
    restriction_error = float(np.max(np.abs(ext(inner) - fld(inner))))
    outer = target.grid(int(sec.get("check_per_axis", 32 if fld.dim == 2 else 256)))
    vals = ext(outer)
    pairs = ef.pair_grid(target, int(sec.get("pair_grid_per_axis", 12 if fld.dim == 2 else 64)))
    check = ef.check_log_holder if fld.modulus_kind == "log_holder" else ef.check_loglog_holder
    mod = check(ext, pairs, 2.0 * fld.modulus_constant)
    bounds_ok = bool(vals.min() >= fld.inf_val and vals.max() <= fld.sup_val)
    results.update({
        "restriction_error": restriction_error,
        "restriction_ok": restriction_error <= 1e-12,
        "inf_sup_original": [fld.inf_val, fld.sup_val],
        "inf_sup_sampled": [float(vals.min()), float(vals.max())],
        "bounds_ok": bounds_ok,
        "modulus_check": mod.to_dict(),
    })
    ctx.csv("extend.csv", ("check", "value", "passes"),
            [("restriction_error", restriction_error, results["restriction_ok"]),
             ("sampled_inf", float(vals.min()), bounds_ok),
             ("sampled_sup", float(vals.max()), bounds_ok),
             ("modulus_ratio", mod.max_ratio, mod.passes)])
    return bool(results["restriction_ok"] and bounds_ok and mod.passes)


HANDLERS = {
    "phi-check": cmd_phi_check, "norm": cmd_norm, "char-bounds": cmd_char_bounds,
    "density": cmd_density, "halving": cmd_halving, "embed-scan": cmd_embed_scan,
    "extend": cmd_extend,
}


# ---------------------------------------------------------------------------
# driver


@dataclass
class _Context:
    csv_dir: Path | None
    threads: int
    written: list = field(default_factory=list)

    def csv(self, name, columns, rows):
        if self.csv_dir is not None:
            self.written.append(str(write_csv(self.csv_dir / name, columns, rows)))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orliczlab", description="Musielak-Orlicz space experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="YAML experiment file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a dotted config key; the value is parsed as YAML")
    ap.add_argument("--csv", metavar="DIR", help="also write flat CSV tables into DIR")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--timing", action="store_true",
                    help="add wall-clock time to the report (breaks byte-identical reruns)")
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("orliczlab: error: --threads must be at least 1", file=stderr)
        return EXIT_USAGE
    try:
        cfg = ExperimentConfig.load(args.config, parse_overrides(args.set), args.seed)
    except ConfigError as exc:
        print(f"orliczlab: config error: {exc}", file=stderr)
        return EXIT_USAGE
    ctx = _Context(Path(args.csv) if args.csv else None, args.threads)
    report = RunReport(args.command, cfg.echo())
    start = time.perf_counter()
    code = EXIT_OK
    try:
        report.passed = bool(HANDLERS[args.command](cfg, report.results, ctx))
        code = EXIT_OK if report.passed else EXIT_CHECK
    except ConfigError as exc:
        print(f"orliczlab: config error: {exc}", file=stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, KeyError) as exc:
        report.error = {"type": type(exc).__name__, "message": str(exc)}
        print(f"orliczlab: error: {exc}", file=stderr)
        code = EXIT_USAGE
    except Exception as exc:  # numerical failure: flush what we have
        report.error = {"type": type(exc).__name__, "message": str(exc)}
        print(f"orliczlab: numerical error: {type(exc).__name__}: {exc}", file=stderr)
        code = EXIT_NUMERIC
    if args.timing:
        report.wall_clock_s = time.perf_counter() - start
    if ctx.written:
        report.results["csv_files"] = ctx.written
    stdout.write(dumps(report) + "\n")
    stdout.flush()
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
