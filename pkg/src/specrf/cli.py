"""Experiment driver: `specrf <subcommand> --config cfg.json --out dir`.

Subcommands
-----------
gen            emit a synthetic dataset CSV (or a SUSY-like CI fixture)
fit            fit one random-feature model and report its risks
sweep-heatmap  mean test error over an (M, T) grid, Figure-1 style
rates          schedule-driven excess-risk decay over a grid of sample sizes
verify         filter-axiom checks plus Monte Carlo concentration events
ntk-compare    width sweep of the operator-vs-kernel-GD discrepancy

Every run writes CSV artifacts plus a manifest JSON (config echo, seed,
output hashes) into the output directory.  The seed precedence is
SPECRF_SEED environment variable > --seed flag > config file.

Exit codes: 0 success, 2 invariant violation, 3 config error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, conclab, dataio, estimator, features, neuralop, spectral, synthetic

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration

DEFAULTS: dict[str, dict] = {
    "gen": {
        "seed": 0,
        "kind": "synthetic",          # or "susy-fixture"
        "n": 1000,
        "r": 0.5,
        "b": 1.0,
        "d_max": 256,
        "R": 1.0,
        "noise_half_width": 0.5,
        "filename": "dataset.csv",
    },
    "fit": {
        "seed": 0,
        "problem": {"r": 0.5, "b": 1.0, "d_max": 256, "R": 1.0,
                    "noise_half_width": 0.5},
        "csv": None,                  # optional input CSV instead of synthetic
        "label_column": 0,
        "feature_columns": None,
        "row_limit": None,
        "standardize": True,
        "n_train": 500,
        "n_test": 500,
        "M": 200,
        "filter": "landweber",        # tikhonov | landweber | cutoff
        "lambda": None,               # tikhonov/cutoff; defaults to 1/sqrt(n)
        "alpha": 0.5,
        "T": 100,
        "rff_lengthscale": 1.0,       # CSV inputs are fitted with RFF features
    },
    "sweep-heatmap": {
        "seed": 0,
        # smooth target learnable by the tanh tangent kernel, light noise
        "problem": {"r": 1.5, "b": 1.0, "d_max": 8, "R": 2.0,
                    "noise_half_width": 0.1},
        "n_train": 1000,
        "n_test": 1000,
        "M_grid": [16, 32, 64, 128, 256, 512],
        "T_grid": [1, 4, 16, 64, 256, 1024],
        "alpha": 0.5,
        "repetitions": 10,
        "activation": "tanh",
        "use_lift": False,            # J(u) = (u, 1): p = d + 2
        "input_bound": None,          # default: sqrt(d_y + d_k + 1) for unit inputs
        "svg": False,
        "paper_scale": {"n_train": 5000, "n_test": 5000, "repetitions": 50},
    },
    "rates": {
        "seed": 0,
        "problem_seed": 0,    # target draw, decoupled from the run seed
        "r": 0.5,
        "b": 1.0,
        "d_max": 512,
        "R": 1.2,
        "noise_half_width": 1.0,
        "n_grid": [500, 1000, 2000, 4000, 8000],
        "n_test": 2000,
        "repetitions": 20,
        "delta": 0.1,
        # the theorem's free constants; defaults calibrated at desk scale
        # (C_multiplier ~ 1/log^3(2/delta) cancels the delta factor)
        "C_multiplier": 0.037,
        "M_multiplier": 2.0,
        "filter": "tikhonov",
        "paper_scale": {"repetitions": 50},
    },
    "verify": {
        "seed": 0,
        "grid_points": 100,
        "max_landweber_steps": 100,
        "landweber_alpha": 1.0,
        "q_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
        "broken_filter": False,       # inject an E-violating filter (for tests)
        "problem": {"r": 0.5, "b": 1.0, "d_max": 32, "R": 1.0,
                    "noise_half_width": 0.3},
        "events": list(conclab.ALL_EVENTS),
        "event_n": 100,
        "event_M": 100,
        "event_lambda": 0.1,
        "delta": 0.1,
        "trials": 200,
    },
    "ntk-compare": {
        "seed": 0,
        "grid_size": 16,
        "n_train": 32,
        "n_test": 64,
        "M_grid": [64, 256, 1024],
        "alpha": 0.25,
        "T": 32,
        "repetitions": 10,
        "activation": "tanh",
        "tau": 1.0,
        "noise_half_width": 0.0,
        "paper_scale": {"repetitions": 50},
    },
}


def load_config(command: str, path: str | None, seed_flag: int | None,
                paper_scale: bool) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS[command]))  # deep copy
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise IOError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be a JSON object")
        for key, value in user.items():
            if key not in cfg:
                raise ConfigError(f"unknown config key {key!r} for {command}")
            if isinstance(cfg.get(key), dict) and isinstance(value, dict):
                cfg[key].update(value)
            else:
                cfg[key] = value
    if paper_scale:
        cfg.update(cfg.get("paper_scale", {}))
    cfg.pop("paper_scale", None)
    if seed_flag is not None:
        cfg["seed"] = seed_flag
    env_seed = os.environ.get("SPECRF_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"SPECRF_SEED must be an integer: {env_seed!r}") from exc
    validate_config(command, cfg)
    return cfg


def validate_config(command: str, cfg: dict) -> None:
    def positive(name):
        if cfg[name] is not None and cfg[name] <= 0:
            raise ConfigError(f"{name} must be positive")

    for grid_key in ("M_grid", "T_grid", "n_grid"):
        if grid_key in cfg:
            grid = cfg[grid_key]
            if not isinstance(grid, list) or not grid:
                raise ConfigError(f"{grid_key} must be a nonempty list")
            if any(int(g) < 1 for g in grid):
                raise ConfigError(f"{grid_key} entries must be >= 1")
    if "repetitions" in cfg and cfg["repetitions"] < 1:
        raise ConfigError("repetitions must be >= 1")
    for name in ("n", "n_train", "n_test", "alpha", "T", "trials"):
        if name in cfg:
            positive(name)
    if "delta" in cfg and not 0.0 < cfg["delta"] < 1.0:
        raise ConfigError("delta must be in (0, 1)")
    if command == "verify":
        unknown = [e for e in cfg["events"] if e not in conclab.ALL_EVENTS]
        if unknown:
            raise ConfigError(f"unknown events: {unknown}")
    if command == "ntk-compare" and cfg["activation"] not in ("tanh", "identity"):
        raise ConfigError("activation must be 'tanh' or 'identity'")
    if command == "rates" and cfg["filter"] not in ("tikhonov", "landweber"):
        raise ConfigError("rates filter must be 'tikhonov' or 'landweber'")
    if command == "fit" and cfg["filter"] not in ("tikhonov", "landweber", "cutoff"):
        raise ConfigError("fit filter must be tikhonov, landweber, or cutoff")


def _activation(name: str) -> features.Activation:
    return features.tanh_act() if name == "tanh" else features.identity_act()


def _build_problem(pcfg: dict, seed: int):
    spec = synthetic.spectrum_spec(b=pcfg["b"], d_max=int(pcfg["d_max"]))
    problem = synthetic.make_problem(spec, r=pcfg["r"], R=pcfg["R"], seed=seed)
    noise = synthetic.noise_model(problem, pcfg["noise_half_width"])
    return problem, noise


def _pmap(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# gen

def cmd_gen(cfg: dict, out: Path, jobs: int) -> int:
    path = out / cfg["filename"]
    if cfg["kind"] == "susy-fixture":
        dataio.make_susy_fixture(path, n=int(cfg["n"]), seed=cfg["seed"])
    elif cfg["kind"] == "synthetic":
        problem, noise = _build_problem(cfg, cfg["seed"])
        U, V = synthetic.sample_dataset(problem, int(cfg["n"]), noise,
                                        seed=cfg["seed"] + 1)
        rows = [{"u": float(u), "v": float(v)} for u, v in zip(U, V)]
        dataio.save_results(rows, path)
    else:
        raise ConfigError(f"unknown gen kind {cfg['kind']!r}")
    dataio.write_manifest(out / "manifest.json", cfg, cfg["seed"], [path],
                          extra={"version": __version__, "subcommand": "gen"})
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit

def _make_filter(name: str, alpha: float) -> spectral.SpectralFilter:
    if name == "tikhonov":
        return spectral.tikhonov()
    if name == "landweber":
        return spectral.landweber(alpha)
    if name == "cutoff":
        return spectral.cutoff()
    raise ConfigError(f"unknown filter {name!r}")


def cmd_fit(cfg: dict, out: Path, jobs: int) -> int:
    seed = cfg["seed"]
    rng_seeds = np.random.SeedSequence(seed).spawn(3)
    oracle = None
    if cfg["csv"] is not None:
        ds = dataio.load_csv(cfg["csv"], label_column=cfg["label_column"],
                             feature_columns=cfg["feature_columns"],
                             row_limit=cfg["row_limit"])
        train, test = dataio.split(ds, int(cfg["n_train"]), int(cfg["n_test"]),
                                   seed=int(rng_seeds[0].generate_state(1)[0]))
        if cfg["standardize"]:
            train, params = dataio.standardize(train)
            test = dataio.apply_standardize(test, params)
        fmap = features.rff_map(train.inputs.shape[1], cfg["rff_lengthscale"])
        U_tr, V_tr = train.inputs, train.outputs
        U_te, V_te = test.inputs, test.outputs
        inputs_hash = dataio.file_sha256(cfg["csv"])
    else:
        problem, noise = _build_problem(cfg["problem"], seed)
        U_tr, V_tr = synthetic.sample_dataset(
            problem, int(cfg["n_train"]), noise,
            seed=int(rng_seeds[0].generate_state(1)[0]))
        U_te, V_te = synthetic.sample_dataset(
            problem, int(cfg["n_test"]), noise,
            seed=int(rng_seeds[1].generate_state(1)[0]))
        fmap = problem.feature_map
        oracle = problem.target
        inputs_hash = None

    fs = features.sample_features(fmap, int(cfg["M"]),
                                  seed=int(rng_seeds[2].generate_state(1)[0]))
    design = features.build_design(fs, U_tr)
    name = cfg["filter"]
    if name == "landweber":
        model = estimator.fit_gd(design, V_tr, cfg["alpha"], int(cfg["T"]))
    else:
        lam = cfg["lambda"] if cfg["lambda"] is not None else 1.0 / math.sqrt(len(U_tr))
        model = estimator.fit_closed(design, V_tr, _make_filter(name, cfg["alpha"]), lam)
    report = estimator.evaluate(model, U_te, V_te, oracle=oracle)
    train_report = estimator.evaluate(model, U_tr, V_tr, oracle=oracle)
    rows = [{
        "filter": name,
        "lambda": model.lam,
        "M": model.M,
        "train_risk": train_report.empirical_risk,
        "test_risk": report.empirical_risk,
        "excess_l2": report.excess_l2 if report.excess_l2 is not None else math.nan,
        "n_train": len(U_tr),
        "n_test": report.n_test,
    }]
    path = out / "fit.csv"
    dataio.save_results(rows, path)
    extra = {"version": __version__, "subcommand": "fit"}
    if inputs_hash:
        extra["inputs_sha256"] = inputs_hash
    dataio.write_manifest(out / "manifest.json", cfg, seed, [path], extra=extra)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep-heatmap

def _heatmap_cell(args: dict) -> list[dict]:
    """All T-grid errors for one (M, repetition): a single GD trajectory."""
    try:
        return _heatmap_cell_inner(args)
    except Exception as exc:
        raise RuntimeError(
            f"heatmap cell M={args['M']} rep={args['rep']} failed: {exc}"
        ) from exc


def _heatmap_cell_inner(args: dict) -> list[dict]:
    cfg = args["cfg"]
    problem, noise = _build_problem(cfg["problem"], cfg["seed"])
    data_seed, test_seed, feat_seed = [
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence(args["cell_seed"]).spawn(3)
    ]
    U_tr, V_tr = synthetic.sample_dataset(problem, int(cfg["n_train"]), noise, data_seed)
    U_te, V_te = synthetic.sample_dataset(problem, int(cfg["n_test"]), noise, test_seed)

    arch = features.OperatorArchitecture(
        _activation(cfg["activation"]), np.zeros(1), d_y=1,
        use_lift=bool(cfg["use_lift"]),
    )
    bound = cfg["input_bound"]
    if bound is None:
        # J(u) = ((u,) u, 1) with |u| <= 1 on the synthetic input domain
        bound = math.sqrt(arch.d_k + arch.d_y + 1.0)
    fmap = features.ntk_feature_map(arch, input_bound=bound)
    fs = features.sample_features(fmap, args["M"], feat_seed)
    design = features.build_design(fs, U_tr.reshape(-1, 1))

    t_grid = sorted(int(t) for t in cfg["T_grid"])
    rows = []
    for model in estimator.fit_gd_path(design, V_tr, cfg["alpha"], t_grid):
        rep = estimator.evaluate(model, U_te.reshape(-1, 1), V_te)
        rows.append({"M": args["M"], "T": round(1.0 / (cfg["alpha"] * model.lam)),
                     "rep": args["rep"], "error": rep.empirical_risk})
    return rows


def cmd_sweep_heatmap(cfg: dict, out: Path, jobs: int) -> int:
    reps = int(cfg["repetitions"])
    m_grid = sorted(int(m) for m in cfg["M_grid"])
    cells = []
    root = np.random.SeedSequence(cfg["seed"])
    cell_seeds = root.spawn(len(m_grid) * reps)
    k = 0
    for m in m_grid:
        for rep in range(reps):
            cells.append({"cfg": cfg, "M": m, "rep": rep,
                          "cell_seed": int(cell_seeds[k].generate_state(1)[0])})
            k += 1
    nested = _pmap(_heatmap_cell, cells, jobs)
    flat = [row for rows in nested for row in rows]
    summary = []
    for m in m_grid:
        for t in sorted(int(t) for t in cfg["T_grid"]):
            errs = np.array([r["error"] for r in flat if r["M"] == m and r["T"] == t])
            summary.append({"M": m, "T": t, "mean_error": float(errs.mean()),
                            "std_error": float(errs.std(ddof=1)) if errs.size > 1 else 0.0})
    path = out / "heatmap.csv"
    dataio.save_results(summary, path)
    outputs = [path]
    if cfg["svg"]:
        svg_path = out / "heatmap.svg"
        _write_svg_heatmap(summary, svg_path)
        outputs.append(svg_path)
    dataio.write_manifest(out / "manifest.json", cfg, cfg["seed"], outputs,
                          extra={"version": __version__, "subcommand": "sweep-heatmap"})
    return EXIT_OK


def _write_svg_heatmap(rows: list[dict], path: Path, cell: int = 28) -> None:
    """Minimal SVG rendering with a fixed linear color ramp, for eyeballing."""
    ms = sorted({r["M"] for r in rows})
    ts = sorted({r["T"] for r in rows})
    lo = min(r["mean_error"] for r in rows)
    hi = max(r["mean_error"] for r in rows)
    span = hi - lo if hi > lo else 1.0
    w, h = len(ts) * cell + 60, len(ms) * cell + 40
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">']
    for r in rows:
        x = 50 + ts.index(r["T"]) * cell
        y = 10 + ms.index(r["M"]) * cell
        frac = (r["mean_error"] - lo) / span
        shade = int(255 * (1.0 - frac))
        parts.append(
            f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
            f'fill="rgb(255,{shade},{shade})"/>'
        )
    for i, m in enumerate(ms):
        parts.append(f'<text x="4" y="{10 + i * cell + cell // 2}" font-size="9">M={m}</text>')
    for j, t in enumerate(ts):
        parts.append(f'<text x="{50 + j * cell}" y="{h - 14}" font-size="9">T={t}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# rates

def _rates_cell(args: dict) -> dict:
    cfg = args["cfg"]
    problem, noise = _build_problem(
        {"r": cfg["r"], "b": cfg["b"], "d_max": cfg["d_max"], "R": cfg["R"],
         "noise_half_width": cfg["noise_half_width"]},
        cfg["problem_seed"],
    )
    sched: dict = args["schedule"]
    data_seed, test_seed, feat_seed = [
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence(args["cell_seed"]).spawn(3)
    ]
    U_tr, V_tr = synthetic.sample_dataset(problem, args["n"], noise, data_seed)
    U_te, _ = synthetic.sample_dataset(problem, int(cfg["n_test"]), noise, test_seed)
    fs = features.sample_features(problem.feature_map, sched["M_n"], feat_seed)
    design = features.build_design(fs, U_tr)
    # schedule lambdas live on the raw kernel scale; the design is
    # kappa-normalized, so divide by kappa^2 (exact for tikhonov)
    lam = min(1.0, sched["lambda_n"] / problem.kappa ** 2)
    if cfg["filter"] == "tikhonov":
        model = estimator.fit_closed(design, V_tr, spectral.tikhonov(), lam)
    else:
        model = estimator.fit_gd(design, V_tr, 1.0, max(1, round(1.0 / lam)))
    report = estimator.evaluate(model, U_te, np.zeros_like(U_te), oracle=problem.target)
    return {"n": args["n"], "rep": args["rep"], "excess_l2": report.excess_l2,
            "lambda_n": sched["lambda_n"], "T_n": sched["T_n"], "M_n": sched["M_n"],
            "meets_n0": sched["meets_n0"]}


def cmd_rates(cfg: dict, out: Path, jobs: int) -> int:
    mult = synthetic.ScheduleMultipliers(C=cfg["C_multiplier"], M=cfg["M_multiplier"], p=1)
    n_grid = sorted(int(n) for n in cfg["n_grid"])
    reps = int(cfg["repetitions"])
    cells = []
    root = np.random.SeedSequence(cfg["seed"])
    cell_seeds = root.spawn(len(n_grid) * reps)
    k = 0
    for n in n_grid:
        sched = synthetic.rate_schedule(n, cfg["r"], cfg["b"], cfg["delta"], mult)
        for rep in range(reps):
            cells.append({"cfg": cfg, "n": n, "rep": rep,
                          "schedule": sched.to_dict(),
                          "cell_seed": int(cell_seeds[k].generate_state(1)[0])})
            k += 1
    rows = _pmap(_rates_cell, cells, jobs)

    per_n = []
    for n in n_grid:
        vals = np.array([r["excess_l2"] for r in rows if r["n"] == n])
        first = next(r for r in rows if r["n"] == n)
        per_n.append({"n": n, "excess_l2": float(vals.mean()),
                      "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
                      "lambda_n": first["lambda_n"], "T_n": first["T_n"],
                      "M_n": first["M_n"], "meets_n0": first["meets_n0"]})
    slope = synthetic.fit_rate([p["n"] for p in per_n],
                               [p["excess_l2"] for p in per_n])
    target = -cfg["r"] / (2.0 * cfg["r"] + cfg["b"])
    rates_path = out / "rates.csv"
    dataio.save_results(per_n, rates_path)
    summary_path = out / "summary.csv"
    dataio.save_results(
        [{"slope": slope, "target_slope": target, "r": cfg["r"], "b": cfg["b"],
          "repetitions": reps, "delta": cfg["delta"]}],
        summary_path,
    )
    dataio.write_manifest(out / "manifest.json", cfg, cfg["seed"],
                          [rates_path, summary_path],
                          extra={"version": __version__, "subcommand": "rates",
                                 "slope": slope, "target_slope": target})
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

def _broken_filter() -> spectral.SpectralFilter:
    """phi_lambda(t) = 2/lambda violates the E bound (|phi| * lambda = 2)."""
    return spectral.SpectralFilter(
        kind="custom", custom_phi=lambda lam, t: np.full_like(t, 2.0 / lam)
    )


def cmd_verify(cfg: dict, out: Path, jobs: int) -> int:
    n_pts = int(cfg["grid_points"])
    t_grid = np.linspace(1.0 / n_pts, 1.0, n_pts)
    lam_grid = np.linspace(1.0 / n_pts, 1.0, n_pts)
    q_full = list(cfg["q_grid"])

    checks = [
        (spectral.tikhonov(), lam_grid, [q for q in q_full if q <= 1.0]),
        (
            spectral.landweber(cfg["landweber_alpha"]),
            spectral.landweber_lambda_grid(cfg["landweber_alpha"],
                                           int(cfg["max_landweber_steps"])),
            q_full,
        ),
        (spectral.cutoff(), lam_grid, q_full),
    ]
    if cfg["broken_filter"]:
        checks.append((_broken_filter(), lam_grid, []))

    filter_rows = []
    any_flag = False
    for filt, lams, qs in checks:
        report = spectral.verify_filter_constants(filt, t_grid, lams, qs)
        any_flag = any_flag or not report.passed
        filter_rows.extend(report.rows())
    filters_path = out / "verify_filters.csv"
    dataio.save_results(filter_rows, filters_path)

    problem, noise = _build_problem(cfg["problem"], cfg["seed"])
    event_rows = []
    event_seeds = np.random.SeedSequence(cfg["seed"]).spawn(len(cfg["events"]))
    for eid, eseed in zip(cfg["events"], event_seeds):
        espec = conclab.EventSpec(
            event_id=eid, kappa=problem.kappa, delta=cfg["delta"],
            lam=cfg["event_lambda"], n=int(cfg["event_n"]), M=int(cfg["event_M"]),
        )
        report = conclab.simulate_event(espec, problem, noise,
                                        trials=int(cfg["trials"]),
                                        seed=int(eseed.generate_state(1)[0]))
        any_flag = any_flag or report.violation_rate > cfg["delta"]
        event_rows.append(report.to_row())
    events_path = out / "verify_events.csv"
    dataio.save_results(event_rows, events_path)

    dataio.write_manifest(out / "manifest.json", cfg, cfg["seed"],
                          [filters_path, events_path],
                          extra={"version": __version__, "subcommand": "verify"})
    return EXIT_VIOLATION if any_flag else EXIT_OK


# ---------------------------------------------------------------------------
# ntk-compare

def _operator_dataset(n: int, n_x: int, noise_half_width: float, seed: int):
    """Random smooth input functions on the grid and an integral-operator
    target: v(x_k) = running mean of u up to x_k."""
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n_x)
    coeff = rng.normal(size=(n, 3))
    U = sum(
        coeff[:, k - 1][:, None] * np.cos(k * np.pi * grid)[None, :] / k
        for k in range(1, 4)
    )
    V = np.cumsum(U, axis=1) / np.arange(1, n_x + 1)
    if noise_half_width > 0:
        V = V + rng.uniform(-noise_half_width, noise_half_width, size=V.shape)
    return grid, U[:, :, None], V


def cmd_ntk_compare(cfg: dict, out: Path, jobs: int) -> int:
    n_x = int(cfg["grid_size"])
    grid, U_tr, V_tr = _operator_dataset(
        int(cfg["n_train"]), n_x, cfg["noise_half_width"], cfg["seed"] + 1)
    _, U_te, _ = _operator_dataset(
        int(cfg["n_test"]), n_x, 0.0, cfg["seed"] + 2)
    arch = features.OperatorArchitecture(_activation(cfg["activation"]), grid, d_y=1)
    seeds = [int(s.generate_state(1)[0])
             for s in np.random.SeedSequence(cfg["seed"]).spawn(int(cfg["repetitions"]))]
    rows = neuralop.compare_to_kernel_gd(
        arch, U_tr, V_tr, U_te,
        widths=sorted(int(m) for m in cfg["M_grid"]),
        alpha=cfg["alpha"], n_steps=int(cfg["T"]), seeds=seeds, tau=cfg["tau"],
    )
    medians = neuralop.median_discrepancies(rows)
    summary = [{"M": m, "median_discrepancy": med, "seeds": len(seeds)}
               for m, med in medians.items()]
    path = out / "ntk_compare.csv"
    dataio.save_results(summary, path)
    detail_path = out / "ntk_compare_detail.csv"
    dataio.save_results(rows, detail_path)
    dataio.write_manifest(out / "manifest.json", cfg, cfg["seed"],
                          [path, detail_path],
                          extra={"version": __version__, "subcommand": "ntk-compare"})
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point

COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "sweep-heatmap": cmd_sweep_heatmap,
    "rates": cmd_rates,
    "verify": cmd_verify,
    "ntk-compare": cmd_ntk_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specrf", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the paper's sample sizes and repetition counts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.seed, args.paper_scale)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # invariant violations and cell failures
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
