"""Experiment runner: declarative JSON configs, reproducible seeds, report emission.

Config format (JSON): ``{"kind": ..., "parameters": {...}, "seed": int,
"output_dir": str}`` with kind-specific parameter schemas; unknown keys are
rejected before any computation.  Reports are written as ``report.json``
(sorted keys, no timestamps, embeds the config hash and package version) plus
kind-specific CSV tables; wall-clock metadata goes to the ``meta.json``
sidecar, which is excluded from the byte-identical rerun guarantee.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from . import degiorgi as dg
from . import mixed_norms as mn
from . import pde_solver as pde
from . import sde_mc as sde
from . import variational as vr
from .embeddings import ExponentConfig, check_Re01, check_Re1, in_I_d_p0
from .mixed_norms import INF, GridFunction, MixedNormSpec

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

KINDS = ("norms", "embed", "variational", "pde", "degiorgi", "sde", "acceptance")


class ValidationError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    parameters: dict = dc_field(default_factory=dict)
    seed: int = 0
    output_dir: str = "out"


def _positive(name, lo=0.0, hi=math.inf, integer=False):
    def check(v):
        if integer and not isinstance(v, int):
            raise ValidationError(f"parameter {name} must be an integer, got {v!r}")
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValidationError(f"parameter {name} must be numeric, got {v!r}")
        if not (lo < v <= hi) and not (math.isinf(hi) and v > lo):
            raise ValidationError(f"parameter {name} must lie in ({lo}, {hi}], got {v}")
        return v

    return check


def _choice(name, options):
    def check(v):
        if v not in options:
            raise ValidationError(f"parameter {name} must be one of {sorted(options)}, got {v!r}")
        return v

    return check


def _numeric_list(name):
    def check(v):
        if not isinstance(v, (list, tuple)) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
            raise ValidationError(f"parameter {name} must be a list of numbers")
        return list(v)

    return check


SCHEMAS = {
    "norms": {
        "fixture": _choice("fixture", ("constant", "bump", "indicator", "random")),
        "d": _positive("d", 0, 3, integer=True),
        "nt": _positive("nt", 1, 512, integer=True),
        "nx": _positive("nx", 1, 512, integer=True),
        "p": _positive("p", 0.999),
        "q": _positive("q", 0.999),
        "lattice_step": _positive("lattice_step", 0, 1.0),
    },
    "embed": {
        "d": _positive("d", 0, 3, integer=True),
        "p0": _positive("p0", 0.5),
        "n_points": _positive("n_points", 0, 100000, integer=True),
    },
    "variational": {
        "n_components": _positive("n_components", 0, 4, integer=True),
        "n_instances": _positive("n_instances", 0, 1000, integer=True),
        "knot_count": _positive("knot_count", 2, 400, integer=True),
    },
    "pde": {
        "fixture": _choice("fixture", tuple(pde.PDE_FIXTURES)),
        "d": _positive("d", 0, 3, integer=True),
        "alpha": _positive("alpha", 0, 10),
        "R": _positive("R", 0.999),
        "n": _positive("n", 0.999),
        "nx": _positive("nx", 3, 512, integer=True),
        "dt": _positive("dt", 0, 1.0),
        "T": _positive("T", 0),
        "box": _positive("box", 0),
        "p0": _positive("p0", 0.5),
        "p4": _positive("p4", 0.999),
        "q4": _positive("q4", 0.999),
    },
    "degiorgi": {
        "nx": _positive("nx", 3, 512, integer=True),
        "dt": _positive("dt", 0, 1.0),
        "level": _positive("level", -1e-12),
        "p4": _positive("p4", 1.999),
    },
    "sde": {
        "family": _choice("family", tuple(sde.SDE_FAMILIES)),
        "d": _positive("d", 0, 3, integer=True),
        "alpha": _positive("alpha", -1e-12, 10),
        "beta": _positive("beta", -1e-12, 10),
        "lambda": _positive("lambda", -1e-12, 100),
        "R": _positive("R", 0.999),
        "n": _positive("n", 0.999),
        "n_paths": _positive("n_paths", 0, 10**6, integer=True),
        "dt": _positive("dt", 0, 1e-2),
        "T": _positive("T", 0),
        "x0": _numeric_list("x0"),
    },
    "acceptance": {
        "criteria": _numeric_list("criteria"),
    },
}

DEFAULTS = {
    "norms": {"fixture": "constant", "d": 1, "nt": 16, "nx": 16, "p": 2.0, "q": 4.0,
              "lattice_step": 0.25},
    "embed": {"d": 3, "p0": INF, "n_points": 200},
    "variational": {"n_components": 2, "n_instances": 5, "knot_count": 33},
    "pde": {"fixture": "example-6.2", "d": 2, "alpha": 0.2, "R": 1.0, "n": 4, "nx": 48,
            "dt": 0.02, "T": 0.5, "box": 4.0, "p0": 2.4, "p4": 4.0, "q4": INF},
    "degiorgi": {"nx": 80, "dt": 0.02, "level": 0.0, "p4": 4.0},
    "sde": {"family": "brownian", "d": 2, "alpha": 0.0, "beta": 0.0, "lambda": 0.0,
            "R": 1.0, "n": 1.0, "n_paths": 2000, "dt": 0.01, "T": 0.5, "x0": [0.0, 0.0]},
    "acceptance": {},
}


def load_config(path, kind: str, seed, out) -> ExperimentConfig:
    """Read and validate a config file; CLI flags override seed/output_dir."""
    raw = {}
    if path is not None:
        raw = json.loads(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object")
    unknown = set(raw) - {"kind", "parameters", "seed", "output_dir"}
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    cfg_kind = raw.get("kind", kind)
    if cfg_kind != kind:
        raise ValidationError(f"config kind {cfg_kind!r} does not match subcommand {kind!r}")
    if cfg_kind not in KINDS:
        raise ValidationError(f"unknown kind {cfg_kind!r}")
    params = dict(DEFAULTS[cfg_kind])
    user = raw.get("parameters", {})
    if not isinstance(user, dict):
        raise ValidationError("parameters must be an object")
    schema = SCHEMAS[cfg_kind]
    for key, val in user.items():
        if key not in schema:
            raise ValidationError(f"unknown parameter {key!r} for kind {cfg_kind!r}")
        if isinstance(val, str) and val == "inf":
            val = INF
        params[key] = schema[key](val)
    cfg_seed = raw.get("seed", 0)
    if seed is not None:
        cfg_seed = seed
    if not isinstance(cfg_seed, int):
        raise ValidationError("seed must be an integer")
    output_dir = raw.get("output_dir", "out")
    if out is not None:
        output_dir = out
    return ExperimentConfig(cfg_kind, params, cfg_seed, str(output_dir))


def _canonical(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, float) and math.isnan(obj):
        return "nan"
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(_canonical({"kind": config.kind, "parameters": config.parameters,
                                  "seed": config.seed}), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _write_report(outdir: Path, config: ExperimentConfig, body: dict, started: float) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    report = {
        "kind": config.kind,
        "seed": config.seed,
        "parameters": _canonical(config.parameters),
        "config_hash": config_hash(config),
        "version": __version__,
    }
    report.update(_canonical(body))
    (outdir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=1) + "\n")
    meta = {"wall_seconds": time.time() - started, "written_at": time.time()}
    (outdir / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# experiment bodies
# ---------------------------------------------------------------------------


def _norms_fixture(name, d, nt, nx, rng):
    box = [(0.0, 1.0)] * d
    if name == "constant":
        fn = lambda t, X: np.ones(X.shape[:-1])
    elif name == "bump":
        fn = lambda t, X: np.exp(-((X - 0.5) ** 2).sum(axis=-1) / 0.02 - (t - 0.5) ** 2 / 0.02)
    elif name == "indicator":
        fn = lambda t, X: (t < 0.5) * np.ones(X.shape[:-1])
    else:
        vals = rng.standard_normal((nt,) + (nx,) * d)
        return GridFunction(0.0, 1.0 / nt, (0.0,) * d, (1.0 / nx,) * d, vals)
    return mn.from_callable(fn, (0.0, 1.0), nt, box, (nx,) * d)


def run_norms(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    rng = np.random.default_rng(config.seed)
    f = _norms_fixture(p["fixture"], p["d"], p["nt"], p["nx"], rng)
    spec_t = MixedNormSpec(p["p"], p["q"], "time-outer")
    spec_x = MixedNormSpec(p["p"], p["q"], "space-outer")
    records = [
        mn.norm_record("mixed_norm", spec_t, mn.mixed_norm(f, spec_t)),
        mn.norm_record("mixed_norm", spec_x, mn.mixed_norm(f, spec_x)),
        mn.norm_record("localized_norm", spec_t,
                       mn.localized_norm(f, spec_t, p["lattice_step"])),
    ]
    if p["q"] >= p["p"]:
        records.append(mn.norm_record("minkowski_gap", None,
                                      mn.minkowski_gap(f, p["p"], p["q"])))
    mn.save_grid_function(f, outdir / "field")
    return {"records": records}


def run_embed(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    rng = np.random.default_rng(config.seed)
    rows = []
    for _ in range(p["n_points"]):
        def draw():
            return INF if rng.random() < 0.15 else float(np.exp(rng.uniform(0, math.log(64))))
        pq = sorted([draw(), draw()])
        cfg = ExponentConfig(d=p["d"], p0=p["p0"], p2=draw(), q2=draw(),
                             p3=pq[0], q3=pq[1])
        pp, qq = draw(), draw()
        re1 = check_Re1(cfg)
        rows.append({
            "d": p["d"], "p0": p["p0"], "p": pp, "q": qq,
            "predicate": "index_set", "value": in_I_d_p0(pp, qq, cfg),
        })
        rows.append({"d": p["d"], "p0": p["p0"], "p": cfg.p2, "q": cfg.q2,
                     "predicate": "drift_part_1", "value": repr(re1) if not isinstance(re1, bool) else re1})
        rows.append({"d": p["d"], "p0": p["p0"], "p": cfg.p3, "q": cfg.q3,
                     "predicate": "drift_part_2", "value": check_Re01(cfg)})
    _write_csv(outdir / "sweep.csv", [{k: str(v) for k, v in r.items()} for r in rows])
    return {"n_rows": len(rows), "rows": rows[:12]}


def run_variational(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    rng = np.random.default_rng(config.seed)
    rows = []
    for k in range(p["n_instances"]):
        n = p["n_components"]
        samples = np.stack([
            np.interp(np.linspace(0, 1, 65), np.linspace(0, 1, 5), rng.uniform(0, 2, 5))
            for _ in range(n)
        ])
        gap = float(rng.uniform(0.25, 1.0))
        prob = vr.VariationalProblem(0.0, gap, rng.uniform(1, 3, n), rng.uniform(1, 3, n),
                                     rng.uniform(0.5, 2, n), samples)
        value, profile = vr.brute_force_infimum(prob, p["knot_count"])
        explicit = vr.functional_value(prob, vr.explicit_cutoff(prob).resampled(p["knot_count"]))
        lhs, expo, rhs, c_fit = vr.sa3_bound_report(prob, p["knot_count"])
        rows.append({"instance": k, "gap": gap, "oracle": value, "explicit": explicit,
                     "exponent": expo, "rhs_value": rhs, "c_fit": c_fit,
                     "bounded": bool(lhs <= c_fit * rhs)})
        if k == 0:
            vr.profile_to_csv(profile, outdir / "best_profile.csv")
    return {"instances": rows}


def run_pde(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    kwargs = {}
    if p["fixture"] in ("example-6.1", "diagonal-power"):
        kwargs = {"d": p["d"], "alpha": p["alpha"], "R": p["R"], "n": p["n"]}
    elif p["fixture"] == "example-6.2":
        kwargs = {"alpha": p["alpha"], "R": p["R"], "n": p["n"]}
    elif p["fixture"] == "identity":
        kwargs = {"d": p["d"]}
    field = pde.build_field(p["fixture"], **kwargs)
    field = field.with_forcing(lambda t, X: np.exp(-((X**2).sum(axis=-1)) / 0.32))
    box = [(-p["box"], p["box"])] * field.d
    u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]), box,
                                       (p["nx"],) * field.d, "periodic")
    steps = int(round(p["T"] / p["dt"]))
    cfg = pde.SolverConfig(dt=p["dt"], T=steps * p["dt"])
    u = pde.solve(field, u0, cfg)
    exp_cfg = ExponentConfig(d=field.d, p0=p["p0"], p4=p["p4"], q4=p["q4"])
    x0 = tuple(-p["box"] for _ in range(field.d))
    dx = tuple(2 * p["box"] / p["nx"] for _ in range(field.d))
    hyp = pde.check_hypotheses(field, exp_cfg, x0, dx, (p["nx"],) * field.d)
    rep = pde.max_principle_report(u, field, exp_cfg, cfg.T, lattice_step=0.5)
    mn.save_grid_function(u, outdir / "solution")
    return {"hypotheses": hyp.as_dict(), "max_principle": rep.as_dict(),
            "grad_sup": mn.gradient_sup(u)}


def run_degiorgi(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    field = pde.identity_field(1, forcing=lambda t, X: np.exp(-(X[..., 0] ** 2) / 0.18))
    u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                       [(-2.5, 2.5)], (p["nx"],), "periodic")
    steps = int(round(4.0 / p["dt"]))
    u = pde.solve(field, u0, pde.SolverConfig(dt=p["dt"], T=steps * p["dt"]))
    up = dg.pad_run_backward(u, -4.0 - p["dt"])
    cfg = ExponentConfig(d=1, p0=INF, p4=p["p4"], q4=INF)
    rows = []
    diag = dg.energy_estimate_diagnostic(up, field, p["level"], 1.0, 2.0, cfg)
    sweep = dg.energy_gap_sweep(up, field, p["level"], cfg, [1.0, 0.5, 0.25])
    rows.append({"run_id": config_hash(config)[:12], "op": "energy_estimate",
                 "lhs": diag.lhs, "rhs": diag.rhs_total, "ratio": diag.ratio,
                 "gamma_fit": sweep["gamma_fit"]})
    lhs, rhs, ratio = dg.local_max_diagnostic(up, field, cfg, 2.0)
    rows.append({"run_id": config_hash(config)[:12], "op": "local_max",
                 "lhs": lhs, "rhs": rhs, "ratio": ratio, "gamma_fit": None})
    _write_csv(outdir / "diagnostics.csv", [{k: str(v) for k, v in r.items()} for r in rows])
    return {"diagnostics": rows}


def run_sde(config: ExperimentConfig, outdir: Path) -> dict:
    p = config.parameters
    coeffs = sde.build_coefficients(p["family"], d=p["d"], R=p["R"], alpha=p["alpha"],
                                    beta=p["beta"], lam=p["lambda"], n=p["n"])
    steps = int(round(p["T"] / p["dt"]))
    ens = sde.euler_maruyama(coeffs, p["x0"], 0.0, steps * p["dt"], p["dt"],
                             p["n_paths"], config.seed)
    sup, sup_se = sde.sup_moment(ens)
    box = [(-4.0, 4.0)] * coeffs.d
    f = mn.from_callable(lambda t, X: ((X**2).sum(axis=-1) <= 1.0).astype(float),
                         (0.0, steps * p["dt"]), max(steps, 2), box, (32,) * coeffs.d)
    kry, kry_se = sde.krylov_functional(ens, f, 0.0, steps * p["dt"])
    sde.export_ensemble(ens, outdir / "ensemble")
    return {"sup_moment": sup, "sup_stderr": sup_se,
            "occupation_estimate": kry, "occupation_stderr": kry_se,
            "n_frozen": ens.n_frozen}


def run_acceptance(config: ExperimentConfig, outdir: Path) -> dict:
    wanted = config.parameters.get("criteria")
    indices = None if not wanted else [int(i) for i in wanted]
    results = acceptance.run_all(indices=indices, progress=print)
    rows = [{"index": r.index, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results]
    return {"criteria": rows, "all_passed": all(r.passed for r in results)}


RUNNERS = {
    "norms": run_norms,
    "embed": run_embed,
    "variational": run_variational,
    "pde": run_pde,
    "degiorgi": run_degiorgi,
    "sde": run_sde,
    "acceptance": run_acceptance,
}


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit code."""
    started = time.time()
    outdir = Path(config.output_dir)
    try:
        body = RUNNERS[config.kind](config, outdir if outdir.exists() else _mkdir(outdir))
    except (ValidationError, pde.SolverConfigError, sde.SdeParameterError,
            vr.FeasibilityError, mn.GridError, mn.ExponentError) as exc:
        _write_error(outdir, config, "validation", str(exc))
        return EXIT_VALIDATION
    except (pde.SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _write_error(outdir, config, "numerical", str(exc))
        return EXIT_NUMERICAL
    _write_report(outdir, config, body, started)
    if config.kind == "acceptance" and not body.get("all_passed", True):
        return EXIT_ACCEPTANCE
    return EXIT_OK


def _mkdir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_error(outdir: Path, config: ExperimentConfig, category: str, message: str) -> None:
    _mkdir(outdir)
    record = {"error": category, "message": message, "kind": config.kind,
              "config_hash": config_hash(config)}
    (outdir / "error.json").write_text(json.dumps(record, sort_keys=True, indent=1) + "\n")


def list_builtin_fixtures() -> dict:
    """Catalog of named coefficient families and canned test functions."""
    catalog = {}
    for name, info in pde.PDE_FIXTURES.items():
        catalog[name] = {"kind": "pde", "condition": info["condition"]}
    for name, condition in sde.SDE_FAMILIES.items():
        entry = catalog.get(name)
        if entry is not None:
            entry["kind"] = "pde+sde"
        else:
            catalog[name] = {"kind": "sde", "condition": condition}
    for name in ("constant", "bump", "indicator", "random"):
        catalog[name] = {"kind": "test-function", "condition": "none"}
    return catalog


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="parabolab",
                                     description="numerical laboratory experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS + ("fixtures",):
        sp = sub.add_parser(kind)
        sp.add_argument("--config", default=None, help="JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--out", default=None, help="output directory override")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent sub-experiments")
    args = parser.parse_args(argv)
    if args.command == "fixtures":
        print(json.dumps(list_builtin_fixtures(), sort_keys=True, indent=1))
        return EXIT_OK
    try:
        config = load_config(args.config, args.command, args.seed, args.out)
    except (ValidationError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rc = run(config)
    if rc == EXIT_OK:
        print(f"ok: report in {config.output_dir}")
    else:
        print(f"failed with exit code {rc}; see {config.output_dir}", file=sys.stderr)
    return rc


if __name__ == "__main__":
    sys.exit(main())
