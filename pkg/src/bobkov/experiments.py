"""Experiment configurations, subcommand bodies and the stability-curve experiment."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import linregress, spearmanr
from scipy.stats import t as student_t

from . import ledger as L
from . import sets as S
from . import zoo as Z
from .deficit import (R_LIST, T_LIST, boundary_measure_minkowski, boundary_measure_semigroup, deficit,
                      set_deficit, set_measure)
from .fitting import fit_halfspace_set, fit_phi_affine
from .handles import SetHandle
from .quadrature import QuadratureRule, gauss_hermite_rule, grid_rule, mc_rule

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
DELTA_FLOOR = 1e-10
AGREEMENT_TOL = 3e-3
STABILITY_R = (0.02, 0.01, 0.005)
FAMILIES = ("wedge", "union", "smoothed")
DEFAULT_PARAMETERS = {
    "wedge": tuple(float(v) for v in np.geomspace(0.05, 1.0, 10)),
    "union": tuple(float(v) for v in np.geomspace(0.05, 1.0, 10)),
    "smoothed": tuple(float(v) for v in np.geomspace(0.05, 2.0, 10)),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Serializable settings shared by all subcommands.

    ``target`` names a zoo key or a dict such as ``{"set": "wedge", "theta": 0.3}``
    or ``{"function": "phi_affine", "a": [1, 0], "b": 0}``.
    """
    schema_version: int = CONFIG_VERSION
    dimension: int = 2
    seed: int = 0
    quadrature: dict = field(default_factory=dict)
    r_grid: tuple = R_LIST
    t_grid: tuple = T_LIST
    target: object = None
    family: str = "wedge"
    parameters: tuple = ()
    method: str = "minkowski"
    restarts: int = 8
    quick: bool = False
    workers: int = 1
    out: str = "results"

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        version = d.get("schema_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported schema_version {version}; expected {CONFIG_VERSION}")
        d = dict(d)
        for k in ("r_grid", "t_grid", "parameters"):
            if k in d:
                d[k] = tuple(float(v) for v in d[k])
        cfg = cls(**d)
        if cfg.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}")
        if cfg.method not in ("minkowski", "semigroup"):
            raise ConfigError("method must be 'minkowski' or 'semigroup'")
        return cfg

    @classmethod
    def load(cls, path: str) -> ExperimentConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("r_grid", "t_grid", "parameters"):
            d[k] = list(d[k])
        return d


# ---------------------------------------------------------------- resolution


def resolve_rule(cfg: ExperimentConfig, n: int, sharp: bool = False) -> QuadratureRule:
    q = dict(cfg.quadrature)
    kind = q.pop("kind", None)
    if kind is None:
        return Z.outer_rule(n, sharp)
    if kind == "gauss-hermite":
        return gauss_hermite_rule(n, int(q.get("points", Z.OUTER_POINTS)))
    if kind == "grid":
        return grid_rule(n, float(q.get("spacing", 0.05)))
    if kind == "monte-carlo":
        return mc_rule(n, int(q.get("samples", 200_000)), seed=cfg.seed, antithetic=bool(q.get("antithetic", True)))
    raise ConfigError(f"unknown quadrature kind {kind!r}")


def _set_from_spec(spec: dict, n: int) -> SetHandle:
    kind = spec.get("set")
    if kind == "halfspace":
        return S.halfspace(spec.get("a", [-1.0] + [0.0] * (n - 1)), spec.get("b", 0.0))
    if kind == "ball":
        return S.ball(spec.get("radius", 1.0), n)
    if kind == "slab":
        return S.slab(spec.get("half_width", 0.5), n)
    if kind == "wedge":
        return S.wedge(spec["theta"])
    if kind == "union":
        return S.halfspace_union(spec["theta"], spec.get("offset", 0.3))
    if kind == "intersection":
        return S.intersection(spec["normals"], spec["offsets"])
    return Z.get_set(kind).set


def resolve_target(cfg: ExperimentConfig):
    """Returns ("function", ZooFunction-like handle, rule) or ("set", SetHandle, None)."""
    tgt = cfg.target
    if tgt is None:
        raise ConfigError("config needs a 'target'")
    if isinstance(tgt, str):
        try:
            z = Z.get_function(tgt, cfg.seed)
            rule = resolve_rule(cfg, z.handle.n) if cfg.quadrature else z.rule
            return "function", z.handle, rule
        except KeyError:
            return "set", Z.get_set(tgt).set, None
    if "set" in tgt:
        return "set", _set_from_spec(tgt, cfg.dimension), None
    kind = tgt.get("function")
    if kind == "phi_affine":
        f = Z.phi_affine(tgt["a"], tgt.get("b", 0.0))
    elif kind == "constant":
        f = Z.constant(tgt["c"], cfg.dimension)
    elif kind == "phi_product":
        f = Z.phi_product(cfg.dimension)
    elif kind == "smoothed":
        f = S.smoothed_indicator(_set_from_spec(tgt["of"], cfg.dimension), tgt["tau"])
        return "function", f, resolve_rule(cfg, f.n, sharp=True)
    else:
        return "function", Z.get_function(kind, cfg.seed).handle, resolve_rule(cfg, cfg.dimension)
    return "function", f, resolve_rule(cfg, f.n)


# ---------------------------------------------------------------- output


def atomic_write(path: str, text: str) -> str:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path: str, obj) -> str:
    return atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=L._json_default) + "\n")


# ---------------------------------------------------------------- subcommands


def cmd_deficit(cfg: ExperimentConfig, out_dir: str) -> dict:
    kind, obj, rule = resolve_target(cfg)
    if kind == "function":
        rep = deficit(obj, rule).to_dict()
    else:
        rep = set_deficit(obj, cfg.method, r_list=cfg.r_grid, t_list=cfg.t_grid).to_dict()
    write_json(os.path.join(out_dir, "deficit.json"), rep)
    return rep


def cmd_perimeter(cfg: ExperimentConfig, out_dir: str) -> dict:
    kind, A, _ = resolve_target(cfg)
    if kind != "set":
        raise ConfigError("perimeter needs a set target")
    mink = boundary_measure_minkowski(A, cfg.r_grid)
    semi = boundary_measure_semigroup(A, cfg.t_grid)
    gap = abs(mink.value - semi.value)
    tol = max(AGREEMENT_TOL, 5.0 * (mink.error + semi.error))
    rep = {"name": A.name, "measure": set_measure(A), "minkowski": mink.to_dict(), "semigroup": semi.to_dict(),
           "difference": gap, "tolerance": tol, "agree": bool(gap <= tol), "schema_version": CONFIG_VERSION}
    write_json(os.path.join(out_dir, "perimeter.json"), rep)
    return rep


def cmd_fit(cfg: ExperimentConfig, out_dir: str) -> dict:
    kind, obj, rule = resolve_target(cfg)
    if kind == "function":
        res = fit_phi_affine(obj, rule, restarts=cfg.restarts, seed=cfg.seed)
    else:
        res = fit_halfspace_set(obj, restarts=cfg.restarts, seed=cfg.seed)
    d = res.to_dict()
    write_json(os.path.join(out_dir, "fit.json"), d)
    return d


def cmd_verify(cfg: ExperimentConfig, out_dir: str) -> tuple[list, dict]:
    results = L.run_ledger(cfg.seed, quick=cfg.quick, workers=cfg.workers)
    paths = L.write_ledger(results, out_dir)
    return results, paths


# ---------------------------------------------------------------- stability


@dataclass(frozen=True)
class CurvePoint:
    parameter: float
    delta: float
    delta_error: float
    distance: float
    a: tuple
    b: float


@dataclass(frozen=True)
class StabilityCurve:
    family: str
    points: tuple
    dropped: tuple = ()
    slope: float = math.nan
    slope_low: float = math.nan
    slope_high: float = math.nan
    spearman: float = math.nan
    calibration: float = math.nan
    bound_holds: bool = False
    seed: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["parameter", "delta", "delta_error", "distance", "a", "b", "bound"])
        for p in self.points:
            w.writerow([repr(p.parameter), repr(p.delta), repr(p.delta_error), repr(p.distance),
                        " ".join(repr(v) for v in p.a), repr(p.b), repr(log_rate_bound(p.delta, self.calibration))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"family": self.family, "points": len(self.points), "dropped": list(self.dropped),
                "slope": self.slope, "slope_ci95": [self.slope_low, self.slope_high],
                "spearman": self.spearman, "calibration_C": self.calibration,
                "bound_holds": self.bound_holds, "seed": self.seed}


def log_rate_bound(delta: float, C: float) -> float:
    """C / log(1/delta)^{1/6}."""
    return float(C / math.log(1.0 / delta) ** (1.0 / 6.0)) if 0 < delta < 1 else math.inf


def _family_point(family: str, p: float, cfg: ExperimentConfig):
    """(delta, delta error, distance, a, b) for one family member."""
    if family == "smoothed":
        f = S.smoothed_indicator(Z.quadrant(), p)
        rep = deficit(f, grid_rule(2, 0.05))
        fit = fit_phi_affine(f, grid_rule(2, 0.05), restarts=cfg.restarts, seed=cfg.seed)
        return rep.delta, rep.error, fit.objective, tuple(fit.a), fit.b
    A = S.wedge(p) if family == "wedge" else S.halfspace_union(p)
    sd = set_deficit(A, "minkowski", r_list=STABILITY_R, order=2)
    fit = fit_halfspace_set(A, restarts=cfg.restarts, seed=cfg.seed)
    return sd.delta, sd.error, fit.objective, tuple(fit.a), fit.b


def slope_fit(deltas, distances, level: float = 0.95):
    """Least-squares slope of log(distance) on log(delta) and its confidence band."""
    x, y = np.log(deltas), np.log(distances)
    r = linregress(x, y)
    q = float(student_t.ppf(0.5 + level / 2, len(x) - 2)) if len(x) > 2 else math.inf
    return float(r.slope), float(r.slope - q * r.stderr), float(r.slope + q * r.stderr)


def run_stability(family: str = "wedge", parameters=None, cfg: ExperimentConfig | None = None) -> StabilityCurve:
    cfg = cfg or ExperimentConfig(family=family)
    params = sorted(parameters or cfg.parameters or DEFAULT_PARAMETERS[family])
    pts, dropped = [], []
    for p in params:
        delta, err, dist, a, b = _family_point(family, float(p), cfg)
        if delta <= max(DELTA_FLOOR, 5.0 * err) or dist <= 0:
            log.info("dropping %s parameter %g: delta %.3g (error %.3g) below floor", family, p, delta, err)
            dropped.append(float(p))
            continue
        pts.append(CurvePoint(float(p), float(delta), float(err), float(dist), tuple(float(v) for v in a), float(b)))
    if len(pts) < 3:
        return StabilityCurve(family, tuple(pts), tuple(dropped), seed=cfg.seed)
    d = np.array([q.delta for q in pts])
    s = np.array([q.distance for q in pts])
    slope, lo, hi = slope_fit(d, s)
    rho = float(spearmanr(d, s).statistic)
    # single-point calibration at the largest deficit
    k = int(np.argmax(d))
    C = float(s[k]) * math.log(1.0 / float(d[k])) ** (1.0 / 6.0)
    holds = bool(all(q.distance <= log_rate_bound(q.delta, C) * (1 + 1e-12) for q in pts))
    return StabilityCurve(family, tuple(pts), tuple(dropped), slope, lo, hi, rho, C, holds, cfg.seed)


def cmd_stability(cfg: ExperimentConfig, out_dir: str) -> StabilityCurve:
    curve = run_stability(cfg.family, cfg.parameters, cfg)
    atomic_write(os.path.join(out_dir, f"stability_{cfg.family}.csv"), curve.to_csv())
    write_json(os.path.join(out_dir, f"stability_{cfg.family}.json"), curve.summary())
    return curve
