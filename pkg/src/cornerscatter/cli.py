"""Experiment runner and command-line entry point.

Config files are flat ``section.key = value`` text; ``#`` starts a comment.
Numbers may use ``pi`` and arithmetic (``theta0 = 3*pi/4``); tuples are
comma separated.  See ``configs/`` for one file per experiment kind.
"""

from __future__ import annotations

import argparse
import ast
import dataclasses
import math
import operator
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

EXPERIMENT_KINDS = (
    "identity-sanity",
    "disk-oracle",
    "corner-scatters",
    "pushforward-nonscattering",
    "blowup-study",
    "oracle-suite",
)

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage '{stage}' failed: {type(exc).__name__}: {exc}")
        self.stage = stage


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass
class DomainConfig:
    kind: str = "sector"          # sector | disk | star
    radius: float = 0.5
    theta0: float = 3 * math.pi / 4
    eps: float = 0.1
    lobes: int = 3


@dataclass
class MediumConfig:
    kind: str = "constant"        # constant | pushforward
    rho: float = 1.0
    c0: float = 0.0
    bump_center: tuple = (0.0, 0.0)
    bump_radius: float = 0.35
    bump_amplitude: float = 0.1


@dataclass
class IncidentConfig:
    kind: str = "plane"           # plane | fourier-bessel
    direction: tuple = (1.0, 0.0)
    orders: tuple = (0,)


@dataclass
class MeshConfig:
    levels: tuple = (0.04, 0.02, 0.01)
    R: float = 1.0
    grading: float = 0.7
    r_eval: float = 0.0           # 0 selects the midpoint between scatterer extent and R


@dataclass
class BlowupConfig:
    source: str = "fem"           # fem | pushforward
    order: int = -1               # -1 selects m + 2
    radii: tuple = (0.2, 0.1, 0.05, 0.025)
    eps: float = 0.25
    twist_amplitude: float = 0.3


@dataclass
class ExperimentConfig:
    kind: str = "identity-sanity"
    kappa: float = 1.0
    output: str = "out"
    seed: int = 0
    domain: DomainConfig = field(default_factory=DomainConfig)
    medium: MediumConfig = field(default_factory=MediumConfig)
    incident: IncidentConfig = field(default_factory=IncidentConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    blowup: BlowupConfig = field(default_factory=BlowupConfig)

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if len(self.mesh.levels) < 1:
            raise ConfigError("at least one refinement level is required")
        if any(h <= 0 for h in self.mesh.levels):
            raise ConfigError("mesh sizes must be positive")
        if self.kappa <= 0:
            raise ConfigError("kappa must be positive")
        need = {
            "disk-oracle": ("domain.kind", "disk"),
            "corner-scatters": ("domain.kind", "sector"),
            "pushforward-nonscattering": ("medium.kind", "pushforward"),
        }.get(self.kind)
        if need is not None:
            section, key = need[0].split(".")
            if getattr(getattr(self, section), key) != need[1]:
                raise ConfigError(f"{self.kind} needs {need[0]} = {need[1]}")
        if self.kind == "disk-oracle" and self.medium.kind != "constant":
            raise ConfigError("disk-oracle needs a constant medium")
        if self.kind == "blowup-study" and self.blowup.source == "pushforward" and self.domain.kind != "sector":
            raise ConfigError("pushforward blowup study needs a sector domain")
        if self.kind == "blowup-study" and len(self.blowup.radii) < 3:
            raise ConfigError("blowup study needs at least three radii")

    def to_lines(self) -> list[str]:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                lines += [f"{f.name}.{g.name} = {_format(getattr(v, g.name))}" for g in dataclasses.fields(v)]
            else:
                lines.append(f"{f.name} = {_format(v)}")
        return lines


def _format(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def _number(text: str) -> float:
    """Arithmetic on numeric literals and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _coerce(default, text: str):
    if isinstance(default, tuple):
        elem = default[0] if default else 0.0
        parts = [p for p in text.split(",") if p.strip()]
        return tuple(_coerce(elem, p) for p in parts)
    if isinstance(default, bool):
        return text.strip().lower() in ("1", "true", "yes")
    if isinstance(default, int):
        v = _number(text)
        if v != int(v):
            raise ConfigError(f"expected an integer, got {text!r}")
        return int(v)
    if isinstance(default, float):
        return float(_number(text))
    return text.strip()


def parse_config(text: str) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        path = key.split(".")
        target = cfg
        for p in path[:-1]:
            if not hasattr(target, p) or not dataclasses.is_dataclass(getattr(target, p)):
                raise ConfigError(f"line {lineno}: unknown section {p!r}")
            target = getattr(target, p)
        name = path[-1]
        if not hasattr(target, name) or dataclasses.is_dataclass(getattr(target, name)):
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(target, name, _coerce(getattr(target, name), value))
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Pipeline pieces
# ---------------------------------------------------------------------------


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise StageError(name, exc) from exc


def build_domain(cfg: ExperimentConfig):
    from .geometry import build_disk_domain, build_sector_domain, build_star_domain

    d = cfg.domain
    if d.kind == "sector":
        return build_sector_domain(d.theta0, d.radius)
    if d.kind == "disk":
        return build_disk_domain(d.radius)
    if d.kind == "star":
        return build_star_domain(d.radius, d.eps, d.lobes)
    raise ConfigError(f"unknown domain kind {d.kind!r}")


def build_medium(cfg: ExperimentConfig, spec):
    from .coefficients import bump_diffeomorphism, constant_medium, pushforward_medium

    m = cfg.medium
    if m.kind == "constant":
        return constant_medium(spec, cfg.kappa, m.rho, m.c0)
    if m.kind == "pushforward":
        phi = bump_diffeomorphism(tuple(m.bump_center), m.bump_radius, m.bump_amplitude)
        return pushforward_medium(phi, spec, cfg.kappa)
    raise ConfigError(f"unknown medium kind {m.kind!r}")


def build_incidents(cfg: ExperimentConfig) -> list[tuple[str, object]]:
    from .waves import fourier_bessel_wave, plane_wave

    inc = cfg.incident
    if inc.kind == "plane":
        d = np.asarray(inc.direction, dtype=float)
        d = d / np.linalg.norm(d)
        return [("plane", plane_wave(cfg.kappa, d))]
    if inc.kind == "fourier-bessel":
        return [(f"fb{m}", fourier_bessel_wave(cfg.kappa, m)) for m in inc.orders]
    raise ConfigError(f"unknown incident kind {inc.kind!r}")


def eval_radius(cfg: ExperimentConfig, spec) -> float:
    if cfg.mesh.r_eval > 0:
        return cfg.mesh.r_eval
    return 0.5 * (spec.extent + cfg.mesh.R)


@dataclass
class LevelResult:
    level: int
    h: float
    dof: int
    rows: list[dict]
    timings: list[tuple[str, float]]
    fields: dict = field(default_factory=dict)
    mesh: object = None


def solve_level(cfg: ExperimentConfig, level: int, h: float, keep_fields: bool = False) -> LevelResult:
    """Mesh, factor once, solve every incident wave, extract far fields."""
    from .farfield import farfield_from_boundary, normalized_scattering_norm, scattering_norm
    from .geometry import mesh_domain
    from .solver import FactorizedTransmission

    spec = _stage("domain", build_domain, cfg)
    medium = _stage("medium", build_medium, cfg, spec)
    timings = []
    t = time.perf_counter()
    mesh = _stage("mesh", mesh_domain, spec, h, cfg.mesh.R, cfg.mesh.grading)
    timings.append(("mesh", time.perf_counter() - t))
    t = time.perf_counter()
    fact = _stage("factorize", FactorizedTransmission, mesh, medium)
    timings.append(("factorize", time.perf_counter() - t))
    r_eval = eval_radius(cfg, spec)
    rows, fields = [], {}
    for name, w in build_incidents(cfg):
        t = time.perf_counter()
        u = _stage("solve", fact.solve, w)
        pattern = _stage("farfield", farfield_from_boundary, u, cfg.kappa, r_eval)
        timings.append((f"solve+farfield:{name}", time.perf_counter() - t))
        rows.append({
            "incident": name,
            "farfield_norm": scattering_norm(pattern),
            "normalized_norm": normalized_scattering_norm(pattern, w, mesh),
            "pattern": pattern,
            "wave": w,
        })
        if keep_fields:
            fields[name] = u
    return LevelResult(level, h, fact.dof, rows, timings, fields, mesh)


def _run_levels(cfg: ExperimentConfig, keep_fields: bool = False) -> list[LevelResult]:
    threads = max(1, int(os.environ.get("CORNERSCATTER_THREADS", "1")))
    levels = list(enumerate(cfg.mesh.levels))
    if threads == 1:
        return [solve_level(cfg, i, h, keep_fields) for i, h in levels]
    with ThreadPoolExecutor(threads) as pool:
        futures = [pool.submit(solve_level, cfg, i, h, keep_fields) for i, h in levels]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# Verdicts per kind
# ---------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    kind: str
    passed: bool
    checks: list[tuple[str, bool, str]]
    summary_header: list[str]
    summary_rows: list[list]
    timing_rows: list[tuple] = field(default_factory=list)
    extra_files: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10e}"
    return str(v)


def _levels_summary(results: list[LevelResult], extra: dict | None = None):
    header = ["level", "h", "dof", "incident", "farfield_norm", "normalized_norm", "reference_error"]
    rows, timing = [], []
    for res in results:
        for row in res.rows:
            err = None if extra is None else extra.get((res.level, row["incident"]))
            rows.append([res.level, res.h, res.dof, row["incident"], row["farfield_norm"],
                         row["normalized_norm"], err])
        timing += [(res.level, res.h, stage, sec) for stage, sec in res.timings]
    return header, rows, timing


def _farfield_files(results: list[LevelResult]) -> dict:
    out = {}
    for res in results:
        for row in res.rows:
            out[f"farfield_L{res.level}_{row['incident']}.csv"] = "\n".join(row["pattern"].to_csv_rows()) + "\n"
    return out


def run_identity_sanity(cfg: ExperimentConfig) -> ExperimentReport:
    results = _run_levels(cfg)
    header, rows, timing = _levels_summary(results)
    worst = max(r[5] for r in rows)
    checks = [("normalized far-field norm < 1e-8", worst < 1e-8, f"max {worst:.3e}")]
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows, timing,
                            _farfield_files(results))


def fitted_order(hs, errs) -> float:
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def run_disk_oracle(cfg: ExperimentConfig) -> ExperimentReport:
    from .farfield import relative_pattern_error
    from .oracles import mie_disk_farfield

    results = _run_levels(cfg)
    errs = {}
    for res in results:
        for row in res.rows:
            ref = _stage("oracle", mie_disk_farfield, cfg.kappa, cfg.medium.rho, cfg.domain.radius, row["wave"])
            errs[(res.level, row["incident"])] = relative_pattern_error(row["pattern"], ref)
    header, rows, timing = _levels_summary(results, errs)
    names = [r["incident"] for r in results[0].rows]
    checks = []
    for name in names:
        hs = [res.h for res in results]
        e = [errs[(res.level, name)] for res in results]
        checks.append((f"{name}: finest relative error < 2%", e[-1] < 0.02, f"{e[-1]:.3e}"))
        if len(hs) >= 2:
            p = fitted_order(hs, e)
            checks.append((f"{name}: fitted order >= 1.8", p >= 1.8, f"{p:.3f}"))
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows, timing,
                            _farfield_files(results))


def run_corner_scatters(cfg: ExperimentConfig) -> ExperimentReport:
    results = _run_levels(cfg)
    header, rows, timing = _levels_summary(results)
    checks = []
    for j, row0 in enumerate(results[0].rows):
        name = row0["incident"]
        norms = [res.rows[j]["normalized_norm"] for res in results]
        lo = min(norms)
        checks.append((f"{name}: normalized norm > 1e-3 at every level", lo > 1e-3, f"min {lo:.3e}"))
        if len(norms) >= 2:
            ratio = norms[-1] / norms[-2]
            checks.append((f"{name}: finest/next ratio > 0.5", ratio > 0.5, f"{ratio:.3f}"))
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows, timing,
                            _farfield_files(results))


def run_pushforward(cfg: ExperimentConfig) -> ExperimentReport:
    results = _run_levels(cfg)
    header, rows, timing = _levels_summary(results)
    checks = []
    for j, row0 in enumerate(results[0].rows):
        name = row0["incident"]
        norms = [res.rows[j]["farfield_norm"] for res in results]
        for a, b, lv in zip(norms, norms[1:], range(1, len(norms))):
            f = a / b if b > 0 else math.inf
            checks.append((f"{name}: norm reduction factor >= 3 at level {lv}", f >= 3, f"{f:.3f}"))
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows, timing,
                            _farfield_files(results))


def blowup_target(cfg: ExperimentConfig, source: str) -> tuple[object, np.ndarray, int, int]:
    """(field, corner, incident order m, rescaling order) for the blowup study."""
    from .coefficients import corner_twist_diffeomorphism
    from .solver import nonscattering_field

    spec = build_domain(cfg)
    name, w = build_incidents(cfg)[0]
    m = int(cfg.incident.orders[0]) if cfg.incident.kind == "fourier-bessel" else 0
    corner = np.asarray(spec.corner_point, dtype=float)
    if source == "pushforward":
        phi = corner_twist_diffeomorphism(spec, cfg.blowup.twist_amplitude)
        u = nonscattering_field(phi, spec, w)
        order = cfg.blowup.order if cfg.blowup.order >= 0 else 3
        return u, corner, m, order
    res = solve_level(cfg, len(cfg.mesh.levels) - 1, cfg.mesh.levels[-1], keep_fields=True)
    u = res.fields[name]
    order = cfg.blowup.order if cfg.blowup.order >= 0 else m + 2
    return u, corner, m, order


def run_blowup_study(cfg: ExperimentConfig) -> ExperimentReport:
    from .blowup import blowup_limit_fit, decay_trace, nondegeneracy_check

    t = time.perf_counter()
    u, x0, m, order = _stage("field", blowup_target, cfg, cfg.blowup.source)
    t_field = time.perf_counter() - t
    radii = sorted(cfg.blowup.radii, reverse=True)
    t = time.perf_counter()
    trace = _stage("decay", decay_trace, u, x0, radii, order)
    nd = _stage("nondegeneracy", nondegeneracy_check, u, x0, order, cfg.blowup.eps, radii=np.array(radii))
    fit = _stage("blowup-fit", blowup_limit_fit, u, x0, order, radii)
    t_diag = time.perf_counter() - t
    checks = []
    if cfg.blowup.source == "pushforward":
        theta0 = math.degrees(cfg.domain.theta0)
        got = math.degrees(fit.support.angle)
        ok = fit.support.kind in ("sector", "half-space") and abs(got - theta0) <= 5.0
        checks.append((f"support is sector({theta0:.1f}deg) within 5deg", ok, fit.support.label))
    else:
        e = trace.exponent
        ok = e is not None and order - 0.2 <= e <= order + 0.3
        checks.append((f"decay exponent in [{order - 0.2:.2f}, {order + 0.3:.2f}]", ok,
                       "undefined" if e is None else f"{e:.3f}"))
        checks.append(("non-degeneracy passes", nd.passed,
                       f"c_eps {nd.c_eps if nd.c_eps is not None else float('nan'):.3e}, slope "
                       f"{nd.slope if nd.slope is not None else float('nan'):.3f}"))
    header = ["r", "S_r", "nondegeneracy_min_ratio"]
    S = dict(zip(trace.radii, trace.S))
    rows = [[r, S[r], mr] for r, mr in zip(nd.radii, nd.min_ratios)]
    extra = {
        "decay.csv": "\n".join(trace.to_csv_rows()) + "\n",
        "blowup_fit.txt": "\n".join([f"order: {order}", f"incident_order: {m}"] + fit.report_lines()) + "\n",
    }
    timing = [(0, cfg.mesh.levels[-1], "field", t_field), (0, cfg.mesh.levels[-1], "diagnostics", t_diag)]
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows, timing, extra)


def run_oracle_suite(cfg: ExperimentConfig) -> ExperimentReport:
    from fractions import Fraction

    from .oracles import (
        cauchy_kowalevski_halfspace,
        distributional_residual,
        halfspace_blowup_solution,
        radius_squared,
        sector_neumann_kernel_dim,
        sector_system_determinant,
        verify_cauchy_kowalevski,
        weiss_energy_exact,
    )
    from .oracles import random_homogeneous
    from .waves import HarmonicPolynomial2D

    rng = np.random.default_rng(cfg.seed)
    checks = []
    m = rng.integers(1, 11, 200)
    th = rng.uniform(0.01, 2 * math.pi - 0.01, 200)
    det_err = max(abs(sector_system_determinant(int(a), b) - 4 * math.sin(a * b) ** 2) for a, b in zip(m, th))
    checks.append(("sector determinant = 4 sin^2(m theta0)", det_err < 1e-12, f"max error {det_err:.2e}"))
    kern = all(sector_neumann_kernel_dim(mm, ell * math.pi / mm) == 1 for mm in range(1, 7) for ell in range(1, 2 * mm))
    checks.append(("kernel dimension 1 at m theta0 in pi Z", kern, ""))
    ck_ok = True
    for _ in range(20):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(1, 6))
        P = random_homogeneous(n, k, rng)
        w = cauchy_kowalevski_halfspace(P, 1, n=n, verify=False)
        ck_ok &= verify_cauchy_kowalevski(w, P, 1).all
    checks.append(("Cauchy-Kowalevski exact checks", ck_ok, "20 random P"))
    W = weiss_energy_exact(radius_squared(2) * Fraction(1, 4), radius_squared(2) * 0 + 1, 2)
    checks.append(("exact Weiss energy of |x|^2/4 is pi/8", W == Fraction(1, 8), f"W/pi = {W}"))
    worst = 0.0
    for mm in (1, 2, 3):
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        H = HarmonicPolynomial2D(mm, a, b)
        worst = max(worst, distributional_residual(halfspace_blowup_solution(H, 1.0), H, 1.0))
    checks.append(("half-space distributional residual < 1e-10", worst < 1e-10, f"{worst:.2e}"))
    header = ["check", "passed", "detail"]
    rows = [[name, int(ok), detail] for name, ok, detail in checks]
    return ExperimentReport(cfg.kind, all(c[1] for c in checks), checks, header, rows)


RUNNERS = {
    "identity-sanity": run_identity_sanity,
    "disk-oracle": run_disk_oracle,
    "corner-scatters": run_corner_scatters,
    "pushforward-nonscattering": run_pushforward,
    "blowup-study": run_blowup_study,
    "oracle-suite": run_oracle_suite,
}


def write_report(cfg: ExperimentConfig, report: ExperimentReport, out: Path) -> None:
    """Single collector: every file is written here, in a fixed order."""
    out.mkdir(parents=True, exist_ok=True)
    lines = [",".join(report.summary_header)]
    lines += [",".join(_fmt(v) for v in row) for row in report.summary_rows]
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    tl = ["level,h,stage,seconds"] + [f"{a},{_fmt(b)},{c},{d:.4f}" for a, b, c, d in report.timing_rows]
    (out / "timing.csv").write_text("\n".join(tl) + "\n")
    for name in sorted(report.extra_files):
        (out / name).write_text(report.extra_files[name])
    verdict = [f"verdict: {'pass' if report.passed else 'fail'}"]
    verdict += [f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip() for name, ok, detail in report.checks]
    (out / "verdict.txt").write_text("\n".join(verdict) + "\n")
    manifest = [f"cornerscatter {__version__}", f"numpy {np.__version__}"]
    import scipy

    manifest.append(f"scipy {scipy.__version__}")
    manifest += cfg.to_lines()
    (out / "manifest.txt").write_text("\n".join(manifest) + "\n")


def run_experiment(cfg: ExperimentConfig, out: Path | None = None) -> tuple[ExperimentReport, int]:
    cfg.validate()
    report = RUNNERS[cfg.kind](cfg)
    write_report(cfg, report, Path(cfg.output if out is None else out))
    return report, EXIT_PASS if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(_number(p)) for p in text.split(",") if p.strip())


def cmd_experiment(args) -> int:
    if args.action == "list":
        for kind in EXPERIMENT_KINDS:
            print(kind)
        return EXIT_PASS
    if args.config is None:
        raise ConfigError("experiment run needs a config file")
    cfg = load_config(args.config)
    report, code = run_experiment(cfg, args.out)
    for name, ok, detail in report.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    print(f"verdict: {'pass' if report.passed else 'fail'}")
    return code


def cmd_solve(args) -> int:
    from .geometry import write_mesh

    cfg = load_config(args.config)
    h = args.h if args.h is not None else cfg.mesh.levels[-1]
    res = solve_level(cfg, 0, h, keep_fields=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for row in res.rows:
        name = row["incident"]
        write_mesh(res.mesh, out / f"field_{name}.txt", res.fields[name].values)
        (out / f"farfield_{name}.csv").write_text("\n".join(row["pattern"].to_csv_rows()) + "\n")
        print(f"{name} dof={res.dof} farfield_norm={row['farfield_norm']:.6e} "
              f"normalized={row['normalized_norm']:.6e}")
    return EXIT_PASS


def _field_from_file(path):
    from .geometry import read_mesh
    from .solver import WaveField

    mesh, values = read_mesh(path)
    if values is None:
        raise ConfigError(f"{path} has no nodal values")
    return WaveField("scattered", mesh, values)


def cmd_farfield(args) -> int:
    from .farfield import farfield_from_boundary

    u = _field_from_file(args.field)
    r_eval = args.r_eval if args.r_eval else 0.75 * u.mesh.truncation_radius
    p = farfield_from_boundary(u, args.kappa, r_eval)
    text = "\n".join(p.to_csv_rows()) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS


def cmd_blowup(args) -> int:
    from .blowup import blowup_limit_fit, decay_trace, nondegeneracy_check

    u = _field_from_file(args.field)
    x0 = u.mesh.vertices[u.mesh.corner_vertex] if args.x0 is None else np.array(_floats(args.x0))
    radii = sorted(_floats(args.radii), reverse=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = decay_trace(u, x0, radii, args.order)
    (out / "decay.csv").write_text("\n".join(trace.to_csv_rows()) + "\n")
    nd = nondegeneracy_check(u, x0, args.order, args.eps, radii=np.array(radii))
    fit = blowup_limit_fit(u, x0, args.order, radii)
    lines = [f"order: {args.order}"] + fit.report_lines()
    lines += [f"nondegeneracy_passed: {nd.passed}", f"nondegeneracy_c_eps: {nd.c_eps}"]
    (out / "blowup_fit.txt").write_text("\n".join(lines) + "\n")
    print("\n".join([f"decay_exponent: {trace.exponent}"] + lines))
    return EXIT_PASS


def cmd_oracle(args) -> int:
    from .oracles import (
        cauchy_kowalevski_halfspace,
        distributional_residual,
        halfspace_blowup_solution,
        mie_disk_farfield,
        sector_neumann_kernel_dim,
        sector_system_determinant,
    )
    from .polynomials import MultiPoly
    from .waves import HarmonicPolynomial2D, plane_wave

    if args.name in ("sector", "det"):
        theta0 = _number(args.theta0)
        print(f"determinant,{sector_system_determinant(args.m, theta0):.17g}")
        print(f"4sin2,{4 * math.sin(args.m * theta0) ** 2:.17g}")
        print(f"neumann_kernel_dim,{sector_neumann_kernel_dim(args.m, theta0)}")
    elif args.name == "mie":
        w = plane_wave(args.kappa, _floats(args.direction))
        sys.stdout.write("\n".join(mie_disk_farfield(args.kappa, args.rho, args.a, w).to_csv_rows()) + "\n")
    elif args.name == "halfspace":
        H = HarmonicPolynomial2D(args.m, complex(args.coef_a), complex(args.coef_b))
        v = halfspace_blowup_solution(H, args.c0)
        sys.stdout.write("\n".join(v.poly.to_lines()) + "\n")
        print(f"# distributional_residual {distributional_residual(v, H, args.c0):.3e}")
    elif args.name == "ck":
        P = MultiPoly.from_lines(Path(args.poly).read_text().splitlines())
        w = cauchy_kowalevski_halfspace(P, args.c0)
        sys.stdout.write("\n".join(w.to_lines()) + "\n")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cornerscatter", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("experiment", help="run or list named experiments")
    e.add_argument("action", choices=("run", "list"))
    e.add_argument("config", nargs="?")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("solve", help="solve one level and write nodal fields and far fields")
    s.add_argument("config")
    s.add_argument("--h", type=float, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    f = sub.add_parser("farfield", help="far field of a stored nodal field")
    f.add_argument("field")
    f.add_argument("--kappa", type=float, required=True)
    f.add_argument("--r-eval", type=float, default=None)
    f.add_argument("--out", default=None)
    f.set_defaults(func=cmd_farfield)

    b = sub.add_parser("blowup", help="decay, non-degeneracy and blowup fit of a stored field")
    b.add_argument("field")
    b.add_argument("--order", type=int, required=True)
    b.add_argument("--radii", default="0.2,0.1,0.05,0.025")
    b.add_argument("--x0", default=None, help="x,y; defaults to the mesh corner vertex")
    b.add_argument("--eps", type=float, default=0.25)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_blowup)

    o = sub.add_parser("oracle", help="evaluate a closed-form oracle")
    o.add_argument("name", choices=("det", "sector", "mie", "halfspace", "ck"))
    o.add_argument("--m", type=int, default=1)
    o.add_argument("--theta0", default="pi/2")
    o.add_argument("--kappa", type=float, default=1.0)
    o.add_argument("--rho", type=float, default=2.0)
    o.add_argument("--radius", "--a", dest="a", type=float, default=0.5)
    o.add_argument("--direction", default="1,0")
    o.add_argument("--coef-a", default="1")
    o.add_argument("--coef-b", default="0")
    o.add_argument("--c0", type=float, default=1.0)
    o.add_argument("--poly", default=None, help="file with P in the 'c e1 .. en' line format")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StageError, OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
