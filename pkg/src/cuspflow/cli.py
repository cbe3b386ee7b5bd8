"""Command-line experiment runner.

Every subcommand resolves a configuration (defaults, then a JSON document
given by ``--config``, then explicit flags), runs one experiment driver and
writes ``<subcommand>.csv``, ``<subcommand>.json`` and ``manifest.json`` to
the output directory.  Exit codes: 0 success, 1 invalid configuration,
2 budget exceeded, 3 failed ``--assert``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as ex
from .coarse import (
    NotStabilized,
    epsilon_max,
    estimate_delta,
    sample_rays,
    visual_distance,
)
from .cusp import BudgetExceeded, CuspGraph
from .groups import PRESETS, GroupError, RadiusCapExceeded
from .lie import LinearForm
from .measures import (
    InsufficientRange,
    OrbitTable,
    conformality_check,
    critical_exponent,
)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_ASSERT = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

COMMON = {"seed": 0, "psi": [1.0]}

DEFAULTS = {
    "build-cusp": {"preset": "psl2z", "word_radius": 8, "max_depth": 8, "vertex_cap": 2_000_000,
                   "samples": 200},
    "delta": {"preset": "psl2z", "word_radius": 8, "max_depth": 6, "samples": 2000,
              "epsilon": None, "rays": 8},
    "distance-compare": {"preset": "psl2z", "word_radius": 10, "max_depth": 8},
    "kappa-envelope": {"records": 200, "tmax": 40.0, "samples": 1000},
    "reparam": {"records": 200, "tmax": 40.0, "samples": 2000, "seed": 2},
    "exponent": {"preset": "schottky2", "word_radius": 10, "T_max": None, "scales": [0.5, 2.0, 3.0]},
    "patterson": {"T_max": 12.0, "s_offset": 0.02, "levels": [8.0, 10.0, 12.0]},
    "shadow-lemma": {"samples": 100, "T_max": 12.0, "s_offset": 0.02, "shadow_radius": 2.0,
                     "seed": 1},
    "entropy-drop": {"preset": "psl2z", "T_max": 20.0},
    "thin-mass": {"T_max": 20.0, "level": 15.0},
    "mixing": {"N_samples": 100_000, "seed": 7, "T_max": 12.0, "s_offset": 0.02,
               "bump_pairs": [dict(b) for b in ex.BUMP_PAIRS], "times": [2.0, 20.0]},
    "expansion": {"samples": 100, "tmax": 20.0, "horizon": 8.0, "seed": 3},
}

FLAGS = {
    "--preset": ("preset", str),
    "--word-radius": ("word_radius", int),
    "--max-depth": ("max_depth", int),
    "--vertex-cap": ("vertex_cap", int),
    "--epsilon": ("epsilon", float),
    "--horizon": ("horizon", float),
    "--samples": ("samples", int),
    "--seed": ("seed", int),
    "--psi": ("psi", str),
    "--tmax": ("tmax", float),
    "--records": ("records", int),
    "--T-max": ("T_max", float),
    "--s-offset": ("s_offset", float),
    "--N-samples": ("N_samples", int),
}


def _form(value) -> LinearForm:
    try:
        if isinstance(value, str):
            return LinearForm.parse(value)
        return LinearForm(tuple(np.atleast_1d(value).tolist()))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid psi: {value!r} ({err})") from err


def resolve_config(command: str, doc: dict | None, overrides: dict) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[command])
    for source in (doc or {}), overrides:
        for k, v in source.items():
            if v is None:
                continue
            if k not in cfg:
                raise ConfigError(f"unknown key {k!r} for {command}")
            cfg[k] = v
    if "preset" in cfg and cfg["preset"] not in PRESETS:
        raise ConfigError(f"unknown preset {cfg['preset']!r}")
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed must be an integer")
    form = _form(cfg["psi"])
    cfg["psi"] = list(form.c)
    for key in ("samples", "records", "N_samples", "word_radius", "max_depth", "vertex_cap"):
        if key in cfg and (not isinstance(cfg[key], int) or cfg[key] < 1):
            raise ConfigError(f"{key} must be a positive integer")
    for key in ("tmax", "horizon", "s_offset"):
        if key in cfg and cfg[key] is not None and not float(cfg[key]) > 0:
            raise ConfigError(f"{key} must be positive")
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode("utf-8")).hexdigest()


def blob_hash(data: bytes) -> str:
    """Content hash in the format of a git blob id."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_bytes(header, rows, chash: str) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["config_hash", *header])
    short = chash[:12]
    for r in rows:
        w.writerow([short, *(_cell(x) for x in r)])
    return buf.getvalue().encode("utf-8")


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    return v


def write_outputs(out: Path, command: str, cfg: dict, outcome: ex.Outcome,
                  extra: dict[str, bytes], inputs: dict[str, bytes]) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)
    files = {f"{command}.csv": csv_bytes(outcome.header, outcome.rows, chash)}
    result = {"command": command, "passed": outcome.passed, "metrics": outcome.metrics,
              "config_hash": chash}
    files[f"{command}.json"] = (json.dumps(_jsonable(result), sort_keys=True, indent=1) + "\n").encode()
    files.update(extra)
    for name, data in files.items():
        (out / name).write_bytes(data)
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "config_hash": chash,
        "inputs": {k: blob_hash(v) for k, v in sorted(inputs.items())},
        "outputs": {k: blob_hash(v) for k, v in sorted(files.items())},
    }
    (out / "manifest.json").write_text(json.dumps(_jsonable(manifest), sort_keys=True, indent=1) + "\n",
                                       encoding="utf-8")
    return manifest


# ---------------------------------------------------------------------------
# subcommands; each returns (outcome, extra files)


def run_build_cusp(cfg):
    G = CuspGraph(ex.preset(cfg["preset"]), cfg["word_radius"], cfg["max_depth"], cfg["vertex_cap"])
    summary = G.summary()
    edges = ("\n".join(G.export_edges()) + "\n").encode("utf-8")
    rows = sorted(summary.items())
    passed, metrics = True, dict(summary)
    if cfg["preset"] == "cyclic-parabolic":
        check = ex.soundness(cfg["word_radius"], cfg["max_depth"], cfg["samples"], cfg["seed"])
        passed = check.passed
        metrics.update(oracle_mismatches=check.metrics["mismatches"])
    return ex.Outcome("build-cusp", passed, metrics, ("key", "value"), rows), {"edges.txt": edges}


def run_delta(cfg):
    p = ex.preset(cfg["preset"])
    G = ex.cached_graph(cfg["preset"], cfg["word_radius"], cfg["max_depth"] if p.peripherals else 1)
    est = estimate_delta(G, cfg["samples"], cfg["seed"], core_margin=0)
    eps_max = epsilon_max(est.delta)
    eps = eps_max if cfg["epsilon"] is None else float(cfg["epsilon"])
    if eps > eps_max + 1e-15:
        raise ConfigError(f"epsilon {eps} exceeds the admissible {eps_max:.6g} for delta {est.delta:g}")
    rays = sample_rays(G, 0, cfg["rays"], cfg["seed"])
    rows = []
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            try:
                v = visual_distance(rays[i], rays[j], eps, delta=est.delta)
            except NotStabilized:
                v = math.nan
            rows.append((i, j, v))
    metrics = {"delta": est.delta, "mean_defect": est.mean_defect, "samples": est.n_samples,
               "epsilon": eps, "epsilon_max": eps_max}
    passed = math.isfinite(est.delta) and (est.delta == 0.0 or not p.is_free)
    return ex.Outcome("delta", passed, metrics, ("ray_i", "ray_j", "visual_distance"), rows), {}


def run_distance_compare(cfg):
    form = _form(cfg["psi"])
    R = cfg["word_radius"]
    out = ex.distance_fit(cfg["preset"], R, cfg["max_depth"], form)
    nxt = ex.distance_fit(cfg["preset"], R + 2, cfg["max_depth"], form)
    change = abs(nxt.C - out.C) / out.C if out.C > 0 else math.inf
    passed = out.c > 0 and out.c_prime > 0 and math.isfinite(out.C) and change < 0.15
    metrics = {"c": out.c, "c_prime": out.c_prime, "C": out.C, "a": out.a, "a_prime": out.a_prime,
               "C_next_radius": nxt.C, "relative_change": change}
    return ex.Outcome("distance-compare", passed, metrics, ("distance", "psi_min", "psi_max"),
                      list(out.rows)), {}


def run_kappa_envelope(cfg):
    form = _form(cfg["psi"])
    env = ex.contraction_envelope(cfg["records"], cfg["seed"], cfg["tmax"], form)
    recs = ex.sample_graph_records(cfg["records"], seed=cfg["seed"], min_length=int(math.ceil(cfg["tmax"])),
                                   form=form)
    coc = ex.kappa_cocycle(recs, cfg["samples"], cfg["seed"])
    metrics = dict(env.metrics)
    metrics.update(cocycle_error=coc.metrics["max_relative_error"],
                   kappa_zero_exact=coc.metrics["kappa_zero_exact"])
    dump = "\n".join(r.to_json() for r in recs[:10]) + "\n"
    return (ex.Outcome("kappa-envelope", env.passed and coc.passed, metrics, env.header, env.rows),
            {"records.jsonl": dump.encode("utf-8")})


def run_reparam(cfg):
    o = ex.reparameterization(cfg["records"], cfg["samples"], cfg["seed"], cfg["tmax"], _form(cfg["psi"]))
    return o, {}


def _exponent_table(cfg) -> OrbitTable:
    p = ex.preset(cfg["preset"])
    if cfg["preset"] == "psl2z" and cfg["T_max"] is not None:
        return OrbitTable.sl2z_by_norm(float(cfg["T_max"]))
    if cfg["preset"] == "cyclic-parabolic":
        return OrbitTable.peripheral_powers(p, t_max=float(cfg["T_max"] or 20.0))
    return OrbitTable.from_ball(p, cfg["word_radius"])


def run_exponent(cfg):
    form = _form(cfg["psi"])
    tab = _exponent_table(cfg)
    base = critical_exponent(tab, form)
    rows, ok, gap_max = [], True, 0.0
    for t in cfg["scales"]:
        est = critical_exponent(tab, form.scaled(float(t)))
        err = math.hypot(t * est.stderr, base.stderr)
        gap = abs(t * est.delta - base.delta)
        ok &= gap <= err
        gap_max = max(gap_max, gap)
        rows.append((t, est.delta, est.stderr, t * est.delta, gap, err))
    grid = np.linspace(0.0, tab.complete_to(form), 41)
    curve = tab.counting_curve(form, grid)
    extra = csv_bytes(("T", "N(T)"), list(zip(grid.tolist(), curve.tolist())), config_hash(cfg))
    metrics = {"delta": base.delta, "stderr": base.stderr, "elements": len(tab),
               "complete_to": tab.complete_to(form), "max_homogeneity_gap": gap_max}
    return (ex.Outcome("exponent", bool(ok), metrics,
                       ("scale", "delta", "stderr", "scale_times_delta", "gap", "combined_stderr"), rows),
            {"counting_curve.csv": extra})


def conformality_curve(levels, s_offset: float, cells: int = 8):
    """Largest |log(gamma_* nu(cell) / integral of the conformal density)| per truncation level."""
    gens = [np.array([[[0.0, -1.0], [1.0, 0.0]]]), np.array([[[1.0, 1.0], [0.0, 1.0]]]),
            np.array([[[1.0, -1.0], [0.0, 1.0]]])]
    edges = np.linspace(0.0, np.pi, cells + 1)
    out = []
    for T in levels:
        nu, s = ex.modular_patterson(float(T), s_offset=s_offset)
        worst = 0.0
        for g in gens:
            for lo, hi in zip(edges[:-1], edges[1:]):
                def cell(v, lo=lo, hi=hi):
                    ang = np.arctan2(v[:, 0, 1], v[:, 0, 0]) % np.pi
                    return (ang >= lo) & (ang < hi)
                lhs, rhs = conformality_check(nu, g, cell, ex.ALPHA, s)
                if lhs > 0 and rhs > 0:
                    worst = max(worst, abs(math.log(lhs / rhs)))
        out.append((float(T), s, len(nu), worst))
    return out


def run_patterson(cfg):
    T = float(cfg["T_max"])
    nu, s = ex.modular_patterson(T, s_offset=cfg["s_offset"])
    ang = np.arctan2(nu.vectors[:, 0, 1], nu.vectors[:, 0, 0]) % np.pi
    order = np.argsort(ang, kind="stable")
    atoms = csv_bytes(("angle", "weight"), list(zip(ang[order].tolist(), nu.weights[order].tolist())),
                      config_hash(cfg))
    curve = conformality_curve(cfg["levels"], cfg["s_offset"])
    defects = [r[3] for r in curve]
    metrics = {"s": s, "atoms": len(nu), "mass": nu.mass, "defect_first": defects[0],
               "defect_last": defects[-1]}
    return (ex.Outcome("patterson", defects[-1] <= defects[0], metrics,
                       ("T", "s", "atoms", "conformality_defect"), curve),
            {"atoms.csv": atoms})


def run_shadow(cfg):
    o = ex.shadow_lemma(cfg["samples"], cfg["seed"], cfg["shadow_radius"], cfg["T_max"], cfg["s_offset"])
    return o, {}


def run_entropy_drop(cfg):
    return ex.peripheral_exponent(cfg["T_max"], cfg["preset"], _form(cfg["psi"])), {}


def run_thin_mass(cfg):
    return ex.thin_mass(cfg["level"], cfg["T_max"], _form(cfg["psi"])), {}


def run_mixing(cfg):
    pairs = tuple({**b, "center": tuple(b["center"])} for b in cfg["bump_pairs"])
    o = ex.mixing(cfg["N_samples"], cfg["seed"], pairs, tuple(cfg["times"]), cfg["T_max"], cfg["s_offset"])
    return o, {}


def run_expansion(cfg):
    return ex.expansion(cfg["samples"], cfg["seed"], cfg["tmax"], cfg["horizon"]), {}


RUNNERS = {
    "build-cusp": run_build_cusp,
    "delta": run_delta,
    "distance-compare": run_distance_compare,
    "kappa-envelope": run_kappa_envelope,
    "reparam": run_reparam,
    "exponent": run_exponent,
    "patterson": run_patterson,
    "shadow-lemma": run_shadow,
    "entropy-drop": run_entropy_drop,
    "thin-mass": run_thin_mass,
    "mixing": run_mixing,
    "expansion": run_expansion,
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cuspflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON configuration document")
        p.add_argument("--out", type=Path, default=None, help="output directory")
        p.add_argument("--assert", dest="assert_", action="store_true",
                       help="exit with code 3 unless the check passes")
        for flag, (key, typ) in FLAGS.items():
            if key in DEFAULTS[name] or key in COMMON:
                p.add_argument(flag, dest=key, type=typ, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    command = args.command
    overrides = {key: getattr(args, key) for key, _ in FLAGS.values() if hasattr(args, key)}
    inputs = {}
    try:
        doc = None
        if args.config is not None:
            raw = args.config.read_bytes()
            inputs["config"] = raw
            doc = json.loads(raw.decode("utf-8"))
            if not isinstance(doc, dict):
                raise ConfigError("configuration must be a JSON object")
        cfg = resolve_config(command, doc, overrides)
        outcome, extra = RUNNERS[command](cfg)
    except (BudgetExceeded, RadiusCapExceeded) as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, GroupError, InsufficientRange, json.JSONDecodeError, OSError) as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out or Path("cuspflow-out") / command
    inputs["resolved_config"] = json.dumps(_jsonable(cfg), sort_keys=True).encode("utf-8")
    write_outputs(out, command, cfg, outcome, extra, inputs)
    print(outcome.line())
    if args.assert_ and not outcome.passed:
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
