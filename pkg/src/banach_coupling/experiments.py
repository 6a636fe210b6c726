"""Experiment driver: config parsing, seeded runs, CSV/JSON artifacts.

A run writes three artifacts into its output directory:

* ``results.csv``   per-replicate rows, columns fixed per experiment kind
* ``summary.json``  aggregates and pass/fail per check, plus effective
                    tolerances (overrides recorded)
* ``law.csv``       the analytic reference curve sampled on the grid

The ``infinity`` kind additionally writes ``coupling_times.json`` with
per-replicate, per-block coupling times.  All files are written to a
temporary name and renamed into place.  Running the same config with
the same seed yields byte-identical CSVs regardless of thread count.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis, coupling, simulation, wiener_space
from .simulation import RngPolicy, checkpoint_grid, uniform_grid
from .wiener_space import ModelSpec, diagonal_model, h_norm

KINDS = ("coupling-time", "maximality", "infinity", "ruin", "density", "isometry")

_FAMILY_RE = re.compile(r"^h-divergent-geometric\(([^)]+)\)$")

# law.csv keeps at most this many rows for fine grids
_LAW_MAX_ROWS = 4097

# Above this coefficient-energy norm a displacement is flagged as belonging
# to a divergent-energy family; per-block norms stay finite and meaningful.
H_DIVERGENCE_THRESHOLD = 4.0

DEFAULT_TOLERANCES = {
    "coupling-time": {"ks_exact": 0.02, "ks_grid": 0.03, "censor_bound": 0.01,
                      "runtime_target_s": 60.0},
    "maximality": {"z": 3.0},
    "infinity": {"final_ratio": 0.10},
    "ruin": {"z": 3.0},
    "density": {"z": 3.0, "join_mass_target": 0.317311, "join_mass_abs": 1e-6},
    "isometry": {"z": 3.0},
}

DEFAULT_PARAMS = {
    "coupling-time": {"bridge": True},
    "maximality": {"bridge": True},
    "infinity": {"bridge": True},
    "ruin": {"lambdas": [2.0, 5.0, 10.0]},
    "density": {"hnorms": [0.5, 1.0, 2.0]},
    "isometry": {"x_count": 3},
}


class ConfigError(ValueError):
    """Invalid experiment configuration, carrying the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: ModelSpec
    displacement: np.ndarray | None
    family: str | None
    grid_doc: dict | None
    replicates: int
    seed: int
    params: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    tolerance_overrides: dict = field(default_factory=dict)


def _require(doc: dict, path: str, required: set, optional: set):
    unknown = set(doc) - required - optional
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{path}.{sorted(missing)[0]}", "missing required field")


def _parse_family(text: str, path: str) -> float:
    m = _FAMILY_RE.match(text)
    if not m:
        raise ConfigError(path, f"unknown displacement family {text!r}")
    try:
        rho = float(m.group(1))
    except ValueError:
        raise ConfigError(path, f"bad family parameter {m.group(1)!r}") from None
    if not 0.0 < rho < 1.0:
        raise ConfigError(path, "family ratio must lie in (0, 1)")
    return rho


def _parse_displacement(doc, path: str):
    """Returns (coeffs or None, family label or None, derived model or None)."""
    if not isinstance(doc, dict):
        raise ConfigError(path, "displacement must be an object")
    if "family" in doc:
        _require(doc, path, {"family", "count"}, set())
        rho = _parse_family(doc["family"], f"{path}.family")
        count = doc["count"]
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"{path}.count", "count must be a positive integer")
        sigmas = [rho ** k for k in range(1, count + 1)]
        model = diagonal_model(sigmas, wiener_space.AMBIENT_L2)
        return np.ones(count), doc["family"], model
    _require(doc, path, {"coeffs"}, set())
    coeffs = doc["coeffs"]
    if not isinstance(coeffs, list) or not coeffs:
        raise ConfigError(f"{path}.coeffs", "coeffs must be a nonempty list")
    x = np.asarray(coeffs, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{path}.coeffs", "coefficients must be finite")
    return x, None, None


def _parse_grid(doc, path: str, kind: str):
    if not isinstance(doc, dict):
        raise ConfigError(path, "grid must be an object")
    if kind == "infinity":
        _require(doc, path, {"checkpoints"}, {"horizon"})
        cps = doc["checkpoints"]
        if not isinstance(cps, list) or not cps:
            raise ConfigError(f"{path}.checkpoints", "checkpoints must be a nonempty list")
        try:
            grid = checkpoint_grid(cps)
        except simulation.GridError as exc:
            raise ConfigError(f"{path}.checkpoints", str(exc)) from None
        if "horizon" in doc and float(doc["horizon"]) != grid.horizon:
            raise ConfigError(f"{path}.horizon", "horizon must equal the last checkpoint")
        return grid
    _require(doc, path, {"horizon", "step"}, set())
    try:
        return uniform_grid(float(doc["horizon"]), float(doc["step"]))
    except simulation.GridError as exc:
        raise ConfigError(path, str(exc)) from None


def parse_config(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("$", "config must be a JSON object")
    _require(doc, "$", {"schema", "kind", "replicates", "seed"},
             {"model", "displacement", "grid", "params", "tolerances"})
    if doc["schema"] != 1:
        raise ConfigError("$.schema", f"unsupported schema {doc['schema']!r} (expected 1)")
    kind = doc["kind"]
    if kind not in KINDS:
        raise ConfigError("$.kind", f"unknown kind {kind!r}; expected one of {list(KINDS)}")
    replicates = doc["replicates"]
    if not isinstance(replicates, int) or replicates < 1:
        raise ConfigError("$.replicates", "replicates must be a positive integer")
    seed = doc["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 1 << 64:
        raise ConfigError("$.seed", "seed must be an integer in [0, 2**64)")

    needs_displacement = kind in ("coupling-time", "maximality", "infinity", "ruin")
    x = family = derived_model = None
    if needs_displacement:
        if "displacement" not in doc:
            raise ConfigError("$.displacement", f"kind {kind!r} requires a displacement")
        x, family, derived_model = _parse_displacement(doc["displacement"], "$.displacement")
    elif "displacement" in doc:
        raise ConfigError("$.displacement", f"kind {kind!r} takes no displacement")

    if derived_model is not None:
        if "model" in doc:
            raise ConfigError("$.model", "model is derived from the displacement family")
        model = derived_model
    else:
        if "model" not in doc:
            raise ConfigError("$.model", "missing model")
        try:
            model = ModelSpec.from_json(doc["model"])
        except wiener_space.ModelError as exc:
            raise ConfigError("$.model", str(exc)) from None
    if x is not None and x.size != model.K:
        raise ConfigError("$.displacement.coeffs",
                          f"expected {model.K} coefficients, got {x.size}")
    if x is not None and not np.any(x != 0.0):
        raise ConfigError("$.displacement.coeffs", "displacement must be nonzero")

    needs_grid = kind in ("coupling-time", "maximality", "infinity", "ruin")
    grid_doc = None
    if needs_grid:
        if "grid" not in doc:
            raise ConfigError("$.grid", f"kind {kind!r} requires a grid")
        _parse_grid(doc["grid"], "$.grid", kind)  # validate eagerly
        grid_doc = doc["grid"]
    elif "grid" in doc:
        raise ConfigError("$.grid", f"kind {kind!r} takes no grid")

    params = dict(DEFAULT_PARAMS[kind])
    for key, value in (doc.get("params") or {}).items():
        if key not in params:
            raise ConfigError(f"$.params.{key}", f"unknown parameter for kind {kind!r}")
        params[key] = value
    _validate_params(kind, params)

    tolerances = dict(DEFAULT_TOLERANCES[kind])
    overrides = {}
    for key, value in (doc.get("tolerances") or {}).items():
        if key not in tolerances:
            raise ConfigError(f"$.tolerances.{key}", f"unknown tolerance for kind {kind!r}")
        tolerances[key] = float(value)
        overrides[key] = float(value)

    return ExperimentConfig(
        kind=kind, model=model, displacement=x, family=family, grid_doc=grid_doc,
        replicates=replicates, seed=seed, params=params,
        tolerances=tolerances, tolerance_overrides=overrides,
    )


def _validate_params(kind: str, params: dict):
    if kind == "ruin":
        lambdas = params["lambdas"]
        if not isinstance(lambdas, list) or not lambdas or any(
            not (isinstance(v, (int, float)) and v > 1.0) for v in lambdas
        ):
            raise ConfigError("$.params.lambdas", "lambdas must be a list of reals > 1")
    if kind == "density":
        hnorms = params["hnorms"]
        if not isinstance(hnorms, list) or not hnorms or any(
            not (isinstance(v, (int, float)) and v > 0.0) for v in hnorms
        ):
            raise ConfigError("$.params.hnorms", "hnorms must be a list of positive reals")
    if kind == "isometry":
        if not isinstance(params["x_count"], int) or params["x_count"] < 1:
            raise ConfigError("$.params.x_count", "x_count must be a positive integer")
    if kind in ("coupling-time", "maximality", "infinity"):
        if not isinstance(params["bridge"], bool):
            raise ConfigError("$.params.bridge", "bridge must be a boolean")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return parse_config(doc)


# ---------------------------------------------------------------------------
# artifact writers

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path: str, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _write_json(path: str, doc):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _decimate(values: np.ndarray, max_rows: int = _LAW_MAX_ROWS) -> np.ndarray:
    if values.size <= max_rows:
        return values
    idx = np.unique(np.round(np.linspace(0, values.size - 1, max_rows)).astype(int))
    return values[idx]


def _map_replicates(n: int, threads: int, worker):
    """Run worker(r) for r in range(n), optionally fanned over a thread
    pool; results always come back in replicate order."""
    if threads <= 1:
        return [worker(r) for r in range(n)]
    chunk = max(1, math.ceil(n / (threads * 4)))
    ranges = [range(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda rng: [worker(r) for r in rng], ranges)
        return [item for part in parts for item in part]


# ---------------------------------------------------------------------------
# per-kind runners

def _displacement_summary(cfg: ExperimentConfig) -> dict:
    x = cfg.displacement
    if x is None:
        return {}
    hn = h_norm(x)
    doc = {"h_norm": hn, "h_divergent": bool(hn > H_DIVERGENCE_THRESHOLD)}
    if cfg.family is not None:
        doc.update({"family": cfg.family, "count": int(x.size), "h_divergent_family": True})
    else:
        doc["coeffs"] = [float(v) for v in x]
    return doc


def _run_coupling_time(cfg: ExperimentConfig, threads: int):
    grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
    x = cfg.displacement
    a = h_norm(x) / 2.0
    dt = float(grid.times[1] - grid.times[0])
    horizon = grid.horizon
    tol = cfg.tolerances
    analytic_censored = 1.0 - analysis.first_passage_cdf(a, horizon)
    if analytic_censored > tol["censor_bound"]:
        raise ConfigError("$.grid.horizon",
                          f"horizon leaves {analytic_censored:.4f} censored mass, "
                          f"above the bound {tol['censor_bound']}")
    policy = RngPolicy(cfg.seed)
    bridge = cfg.params["bridge"]

    def worker(r: int):
        t_exact = simulation.sample_first_passage(a, policy, r)
        t_grid = coupling.grid_first_passage_time(x, dt, grid.steps, policy, r, bridge=bridge)
        return t_exact, t_grid

    draws = _map_replicates(cfg.replicates, threads, worker)
    rows = [
        (r, te, horizon if tg is None else tg, tg is None)
        for r, (te, tg) in enumerate(draws)
    ]
    law = analysis.LawSpec(analysis.LAW_FIRST_PASSAGE, a=a)
    exact_sample = analysis.EmpiricalSample(
        np.array([te for te, _ in draws]), np.zeros(len(draws), dtype=bool))
    grid_sample = analysis.empirical_sample([tg for _, tg in draws], horizon=horizon)
    checks = [
        dict(analysis.ks_report(exact_sample, law, critical=tol["ks_exact"]),
             law=law.label() + " [exact sampler]"),
        dict(analysis.ks_report(grid_sample, law, critical=tol["ks_grid"]),
             law=law.label() + " [grid detection]"),
    ]
    ts = _decimate(grid.times)
    law_rows = [(t, analysis.first_passage_cdf(a, t)) for t in ts]
    extras = {
        "censored_fraction": grid_sample.n_censored / cfg.replicates,
        "analytic_censored_fraction": float(analytic_censored),
    }
    header = ("replicate", "t_exact", "t_grid", "grid_censored")
    return rows, header, law_rows, ("t", "cdf"), checks, extras


def _run_maximality(cfg: ExperimentConfig, threads: int):
    grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
    x = cfg.displacement
    hn = h_norm(x)
    dt = float(grid.times[1] - grid.times[0])
    target = analysis.max_coupling_prob(hn, grid.horizon)
    policy = RngPolicy(cfg.seed)
    bridge = cfg.params["bridge"]

    def worker(r: int):
        t = coupling.grid_first_passage_time(x, dt, grid.steps, policy, r, bridge=bridge)
        return t is not None

    flags = _map_replicates(cfg.replicates, threads, worker)
    rows = [(r, bool(f)) for r, f in enumerate(flags)]
    check = analysis.fraction_check(
        f"max-coupling-prob(hnorm={hn:g}, t={grid.horizon:g})",
        successes=int(np.sum(flags)), n=cfg.replicates, target=target,
        z=cfg.tolerances["z"])
    ts = _decimate(grid.times[1:])
    law_rows = [(t, analysis.max_coupling_prob(hn, t)) for t in ts]
    return rows, ("replicate", "coupled"), law_rows, ("t", "max_coupling_prob"), [check], {}


def _run_infinity(cfg: ExperimentConfig, threads: int):
    grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
    x = cfg.displacement
    model = cfg.model
    plan = coupling.plan_blocks(model, x)
    policy = RngPolicy(cfg.seed)
    bridge = cfg.params["bridge"]
    d0 = wiener_space.w_norm(model, x)

    def worker(r: int):
        res = coupling.run_block_coupling(model, x, plan, grid, policy, r, bridge=bridge)
        return res.d_w, res.n_uncoupled, res.coupling_times, res.coupled

    outcomes = _map_replicates(cfg.replicates, threads, worker)
    rows = []
    times_doc = []
    for r, (d_w, n_unc, t_blocks, _) in enumerate(outcomes):
        for i, t in enumerate(grid.times):
            rows.append((r, t, d_w[i], int(n_unc[i])))
        times_doc.append({"replicate": r,
                          "T_n": [None if t is None else float(t) for t in t_blocks]})
    dist = np.array([d for d, _, _, _ in outcomes])  # (n, |grid|)
    medians = np.median(dist[:, 1:], axis=0)
    check = analysis.median_trajectory_check(
        f"block-coupling decay ({plan.n_blocks} blocks)",
        grid.times[1:], medians, d0, cfg.tolerances["final_ratio"])
    frac_coupled = float(np.mean([c for _, _, _, c in outcomes]))
    law_rows = []
    for t in grid.times[1:]:
        p = 1.0
        for hn in plan.block_h_norms:
            if hn > 0.0:
                p *= analysis.max_coupling_prob(hn, t)
        law_rows.append((t, p))
    extras = {
        "fraction_all_coupled": frac_coupled,
        "block_plan": {
            "cuts": list(plan.cuts),
            "tail_norms": [float(v) for v in plan.tail_norms],
            "block_w_norms": [float(v) for v in plan.block_w_norms],
            "block_h_norms": [float(v) for v in plan.block_h_norms],
        },
        "_side_json": ("coupling_times.json", times_doc),
    }
    header = ("replicate", "t", "d_W", "n_uncoupled")
    return rows, header, law_rows, ("t", "all_coupled_prob"), [check], extras


def _run_ruin(cfg: ExperimentConfig, threads: int):
    grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
    x = cfg.displacement
    dt = float(grid.times[1] - grid.times[0])
    policy = RngPolicy(cfg.seed)
    lambdas = [float(v) for v in cfg.params["lambdas"]]

    def worker(r: int):
        return coupling.sample_factor_sup(x, dt, grid.steps, policy, r)

    draws = _map_replicates(cfg.replicates, threads, worker)
    rows = [(r, sup, absorbed) for r, (sup, absorbed) in enumerate(draws)]
    sups = np.array([s for s, _ in draws])
    checks = [analysis.ruin_check(lam, sups, z=cfg.tolerances["z"]) for lam in lambdas]
    lam_grid = np.linspace(1.0, max(lambdas), 513)
    law_rows = [(lam, 1.0 / lam) for lam in lam_grid]
    extras = {"absorbed_fraction": float(np.mean([a for _, a in draws]))}
    return rows, ("replicate", "sup", "absorbed"), law_rows, ("lambda", "exceed_prob"), checks, extras


def _run_density(cfg: ExperimentConfig, threads: int):
    model = cfg.model
    K = model.K
    n = cfg.replicates
    policy = RngPolicy(cfg.seed)
    hnorms = [float(v) for v in cfg.params["hnorms"]]
    theta = np.empty((n, K))
    for k in range(K):
        theta[:, k] = policy.stream(0, k).standard_normal(n)
    dirn = np.ones(K) / np.sqrt(K)

    rows = []
    checks = []
    tol = cfg.tolerances
    jm = analysis.join_mass(2.0)
    checks.append({
        "law": "join-mass(hnorm=2) formula",
        "n": 1,
        "target": tol["join_mass_target"],
        "empirical": jm,
        "statistic": abs(jm - tol["join_mass_target"]),
        "critical_value": tol["join_mass_abs"],
        "pass": bool(abs(jm - tol["join_mass_target"]) <= tol["join_mass_abs"]),
    })
    for hn in hnorms:
        logdens = analysis.cameron_martin_log_density(hn * dirn, theta)
        rows.extend((i, hn, logdens[i]) for i in range(n))
        checks.append(analysis.mean_check(
            f"density-mean(hnorm={hn:g})", np.exp(logdens), 1.0, z=tol["z"]))
    h_grid = np.linspace(0.0, 2.0 * max(hnorms), 401)
    law_rows = [(h, analysis.join_mass(h)) for h in h_grid]
    return rows, ("sample", "hnorm", "logdens"), law_rows, ("hnorm", "join_mass"), checks, {}


def _run_isometry(cfg: ExperimentConfig, threads: int):
    model = cfg.model
    K = model.K
    n = cfg.replicates
    policy = RngPolicy(cfg.seed)
    x_count = cfg.params["x_count"]
    rows = []
    checks = []
    law_rows = []
    z = cfg.tolerances["z"]
    for j in range(x_count):
        x = policy.stream(j, simulation.LANE_AUX_BASE).standard_normal(K)
        theta = np.empty((n, K))
        for k in range(K):
            theta[:, k] = policy.stream(j, k).standard_normal(n)
        lin = theta @ x
        target = float(np.dot(x, x))
        rows.extend((i, j, lin[i]) for i in range(n))
        checks.append(analysis.variance_check(
            f"pairing-variance(x={j}, hnorm2={target:.6g})", lin, target, z=z))
        half = z * target * np.sqrt(2.0 / (n - 1))
        law_rows.append((j, target, target - half, target + half))
    header = ("sample", "x_index", "linear")
    return rows, header, law_rows, ("x_index", "hnorm_sq", "band_lo", "band_hi"), checks, {}


_RUNNERS = {
    "coupling-time": _run_coupling_time,
    "maximality": _run_maximality,
    "infinity": _run_infinity,
    "ruin": _run_ruin,
    "density": _run_density,
    "isometry": _run_isometry,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str, threads: int = 1) -> dict:
    """Run one configured experiment and write its artifacts.

    Returns the summary document; ``summary["pass"]`` reflects whether
    every statistical check passed.
    """
    started = time.perf_counter()
    rows, header, law_rows, law_header, checks, extras = _RUNNERS[cfg.kind](cfg, threads)
    runtime = time.perf_counter() - started

    os.makedirs(out_dir, exist_ok=True)
    side = extras.pop("_side_json", None)
    summary = {
        "schema": 1,
        "kind": cfg.kind,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "threads": threads,
        "model": json.loads(cfg.model.to_json()),
        "displacement": _displacement_summary(cfg),
        "grid": cfg.grid_doc,
        "params": {k: v for k, v in cfg.params.items()},
        "tolerances": cfg.tolerances,
        "tolerance_overrides": cfg.tolerance_overrides,
        "checks": checks,
        "pass": bool(all(c["pass"] for c in checks)),
        "runtime_s": runtime,
    }
    summary.update(extras)
    if cfg.kind == "coupling-time":
        summary["runtime_target_met"] = bool(runtime < cfg.tolerances["runtime_target_s"])
    _write_csv(os.path.join(out_dir, "results.csv"), header, rows)
    _write_csv(os.path.join(out_dir, "law.csv"), law_header, law_rows)
    if side is not None:
        _write_json(os.path.join(out_dir, side[0]), side[1])
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def describe_config(cfg: ExperimentConfig, h_threshold: float = H_DIVERGENCE_THRESHOLD) -> str:
    """Human-readable preview used by the validate command.

    Displacements whose coefficient energy exceeds ``h_threshold`` are
    flagged as divergent; for those the per-block norms in the plan
    preview are the meaningful finite quantities.
    """
    lines = [
        f"kind: {cfg.kind}",
        f"model: {cfg.model.kind}, K={cfg.model.K}"
        + (f", ambient={cfg.model.ambient}" if cfg.model.ambient else ""),
        f"replicates: {cfg.replicates}",
        f"seed: {cfg.seed}",
    ]
    x = cfg.displacement
    if x is not None:
        head = ", ".join(format(v, ".6g") for v in x[:10])
        more = " ..." if x.size > 10 else ""
        fam = f" (family {cfg.family})" if cfg.family else ""
        lines.append(f"displacement{fam}: [{head}{more}]")
        flag = ""
        if h_norm(x) > h_threshold:
            flag = (f" [H-divergent: exceeds threshold {h_threshold:g}; "
                    "see per-block norms]")
        elif cfg.family:
            flag = " [H-divergent family]"
        lines.append(f"displacement h_norm: {h_norm(x):.6g}" + flag)
    if cfg.grid_doc is not None:
        grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
        lines.append(f"grid: horizon={grid.horizon:g}, points={grid.times.size}")
    if cfg.kind == "coupling-time":
        grid = _parse_grid(cfg.grid_doc, "$.grid", cfg.kind)
        a = h_norm(x) / 2.0
        lines.append(f"first-passage level a = {a:g}; analytic censored fraction "
                     f"{1.0 - analysis.first_passage_cdf(a, grid.horizon):.3e}")
    if cfg.kind == "infinity":
        plan = coupling.plan_blocks(cfg.model, x)
        lines.append(f"block plan: {plan.n_blocks} blocks, cuts {list(plan.cuts)}")
        for i, (rng, tail) in enumerate(zip(plan.ranges, plan.tail_norms), start=1):
            lines.append(
                f"  block {i}: coeffs [{rng[0]}, {rng[1]}), "
                f"h_norm {plan.block_h_norms[i-1]:.6g}, "
                f"w_norm {plan.block_w_norms[i-1]:.6g}, "
                f"tail after block {tail:.6g} (bound {2.0 ** (-(i + 1)):.6g})")
    return "\n".join(lines)
