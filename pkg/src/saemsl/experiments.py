"""Configuration, seeded replication harness and result reporting.

An experiment is one YAML file: model, method, true parameters, start
policy, method hyperparameters, replicate count and base seed. Replicate
i runs with an RNG seeded base_seed + i; datasets come from a separate
data seed (one shared dataset, or a fresh dataset per replicate with seed
data_seed + i so different methods can share the same dataset sequence).
Results persist incrementally; batches never abort on replicate failures.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import linalg, mcmc, synlik
from .models import get_model
from .models.base import LatentPath, ObsSeries
from .saem import StepSchedule, saem_smc_run
from .smc import FilterDegeneracyError

logger = logging.getLogger(__name__)

METHODS = ("saem-smc", "saem-sl", "sl-optim", "pm-bsl", "abc-mcmc")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class StartPolicy:
    policy: str                      # "fixed" | "gaussian"
    values: dict | None = None       # fixed: natural-scale values
    center: dict | None = None       # gaussian: natural-scale center
    variances: list | None = None    # gaussian: working-scale diagonal

    def draw(self, space, rng: np.random.Generator) -> np.ndarray:
        if self.policy == "fixed":
            return space.from_dict(self.values)
        if self.policy == "gaussian":
            phi0 = space.to_working(space.from_dict(self.center))
            sd = np.sqrt(np.asarray(self.variances, dtype=float))
            if sd.shape[0] != space.dim:
                raise ValueError("start variances must match the parameter count")
            return space.to_natural(phi0 + sd * rng.standard_normal(space.dim))
        raise ValueError(f"unknown start policy '{self.policy}'")


@dataclass
class ExperimentConfig:
    name: str
    model: str
    method: str
    replicates: int
    base_seed: int
    theta_true: dict
    data_seed: int
    data_mode: str = "shared"        # "shared" | "fresh"
    data_path: str | None = None     # optional pre-exported dataset directory
    start: StartPolicy = field(default_factory=lambda: StartPolicy("fixed", {}))
    method_params: dict = field(default_factory=dict)
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method '{self.method}' (have {METHODS})")
        if self.data_mode not in ("shared", "fresh"):
            raise ValueError(f"data mode must be shared|fresh, got '{self.data_mode}'")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")

    def build_model(self):
        return get_model(self.model, **self.model_params)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        data = raw.get("data", {})
        start_raw = raw.get("start", {"policy": "fixed", "values": {}})
        start = StartPolicy(
            policy=start_raw["policy"],
            values=start_raw.get("values"),
            center=start_raw.get("center"),
            variances=start_raw.get("variances"),
        )
        return cls(
            name=raw["name"],
            model=raw["model"],
            method=raw["method"],
            replicates=int(raw.get("replicates", 1)),
            base_seed=int(raw["base_seed"]),
            theta_true=dict(data["theta_true"]),
            data_seed=int(data.get("seed", raw["base_seed"] + 777)),
            data_mode=data.get("mode", "shared"),
            data_path=data.get("path"),
            start=start,
            method_params=dict(raw.get("method_params", {})),
            model_params=dict(raw.get("model_params", {})),
        )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    return ExperimentConfig.from_dict(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    d["start"] = StartPolicy(**d["start"])
    return ExperimentConfig(**d)


# ---------------------------------------------------------------------------
# datasets


def generate_dataset(model, theta_true: np.ndarray, seed: int):
    rng = np.random.default_rng(seed)
    return model.simulate(theta_true, rng)


def dataset_for_replicate(cfg: ExperimentConfig, model, index: int):
    if cfg.data_path is not None:
        _, _, lat, obs = load_dataset(cfg.data_path)
        return lat, obs
    theta_true = model.space.from_dict(cfg.theta_true)
    seed = cfg.data_seed if cfg.data_mode == "shared" else cfg.data_seed + index
    return generate_dataset(model, theta_true, seed)


def make_dataset(cfg: ExperimentConfig, out_dir) -> Path:
    """Persist the experiment's dataset: observation/latent CSVs + manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = cfg.build_model()
    lat, obs = dataset_for_replicate(cfg, model, 0)
    with open(out / "obs.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "value"])
        for t, v in zip(obs.times, obs.values):
            w.writerow([repr(float(t)), repr(float(v))])
    with open(out / "latent.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "state"])
        for t, v in zip(lat.times, lat.values):
            w.writerow([repr(float(t)), repr(float(v))])
    manifest = {
        "model": cfg.model,
        "model_params": cfg.model_params,
        "theta_true": cfg.theta_true,
        "seed": cfg.data_seed,
        "n_obs": int(len(obs)),
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    return out


def load_dataset(path):
    """Reload a make_dataset directory -> (model name, theta_true, LatentPath, ObsSeries)."""
    path = Path(path)
    with open(path / "manifest.json") as fh:
        manifest = json.load(fh)

    def read(fname, col):
        times, vals = [], []
        with open(path / fname, newline="") as fh:
            for row in csv.DictReader(fh):
                times.append(float(row["time"]))
                vals.append(float(row[col]))
        return np.asarray(times), np.asarray(vals)

    t_o, v_o = read("obs.csv", "value")
    t_l, v_l = read("latent.csv", "state")
    return (manifest["model"], manifest["theta_true"],
            LatentPath(t_l, v_l), ObsSeries(t_o, v_o))


# ---------------------------------------------------------------------------
# replicate execution


@dataclass
class ReplicateResult:
    index: int
    seed: int
    status: str                  # ok | degenerate | failed
    walltime: float
    final: dict | None           # natural-scale estimate (posterior means for MCMC)
    error: str | None = None
    extra: dict | None = None    # method-specific payload (posterior intervals, rates)


def _write_trace(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _priors_from_params(model, params: dict) -> mcmc.PriorSpec:
    raw = params["priors"]
    priors = []
    for name in model.space.names:
        spec = raw[name]
        priors.append(mcmc.Prior1D(spec["kind"], float(spec["a"]), float(spec["b"])))
    return mcmc.PriorSpec(tuple(priors))


def run_replicate(cfg: ExperimentConfig, index: int, out_dir=None) -> ReplicateResult:
    """Execute one replicate; never raises, failures land in the status."""
    t_start = time.perf_counter()
    seed = cfg.base_seed + index
    rep_dir = None
    if out_dir is not None:
        rep_dir = Path(out_dir) / f"replicate_{index:03d}"
        rep_dir.mkdir(parents=True, exist_ok=True)
    try:
        model = cfg.build_model()
        rng = np.random.default_rng(seed)
        _, obs = dataset_for_replicate(cfg, model, index)
        theta0 = cfg.start.draw(model.space, rng)
        final, extra = _dispatch(cfg, model, obs, theta0, rng, rep_dir)
        status = "ok"
        err = None
    except FilterDegeneracyError as exc:
        final, extra, status, err = None, None, "degenerate", str(exc)
    except Exception as exc:  # failures recorded, batch continues
        logger.exception("replicate %d failed", index)
        final, extra, status, err = None, None, "failed", f"{type(exc).__name__}: {exc}"
    walltime = time.perf_counter() - t_start
    if final is not None and not all(np.isfinite(v) for v in final.values()):
        status, err = "failed", "non-finite final estimate"
        final = None
    result = ReplicateResult(index=index, seed=seed, status=status,
                             walltime=walltime, final=final, error=err,
                             extra=extra)
    if rep_dir is not None:
        with open(rep_dir / "result.json", "w") as fh:
            json.dump(asdict(result), fh, indent=2)
    return result


def _dispatch(cfg, model, obs, theta0, rng, rep_dir):
    p = cfg.method_params
    names = list(model.space.names)
    if cfg.method == "saem-smc":
        sched = StepSchedule(int(p["K1"]), int(p["K"]), float(p.get("beta", 1.0)))
        res = saem_smc_run(model, obs, theta0, sched, int(p["M"]),
                           int(p["M_bar"]), rng)
        if rep_dir is not None:
            rows = [[k, *map(float, row)] for k, row in enumerate(res.thetas)]
            _write_trace(rep_dir / "trace.csv", ["iter", *names], rows)
        return model.space.as_dict(res.final), None

    if cfg.method == "saem-sl":
        sched = StepSchedule(int(p["K1"]), int(p["K"]), float(p.get("beta", 1.0)))
        s_obs = model.obs_summaries(obs.values)
        tr = synlik.saem_sl_run(model, s_obs, theta0, sched, int(p["R"]),
                                int(p["L"]), bool(p.get("robust", False)), rng)
        if rep_dir is not None:
            rows = [[0, *map(float, tr.thetas[0]), ""]]
            rows += [[k + 1, *map(float, tr.thetas[k + 1]), float(tr.logsl[k])]
                     for k in range(len(tr.logsl))]
            _write_trace(rep_dir / "trace.csv", ["iter", *names, "logSL"], rows)
            snapshot = {"iteration": tr.state.k,
                        "mean": tr.state.mean.tolist(),
                        "cov": tr.state.cov.tolist()}
            with open(rep_dir / "moments.json", "w") as fh:
                json.dump(snapshot, fh, indent=2)
        return model.space.as_dict(tr.final), None

    if cfg.method == "sl-optim":
        s_y = model.obs_summaries(obs.values)
        theta = synlik.data_sl_maximize(model, s_y, theta0, int(p["R"]),
                                        int(p["iters"]), rng)
        if rep_dir is not None:
            _write_trace(rep_dir / "trace.csv", ["iter", *names],
                         [[0, *map(float, theta0)], [1, *map(float, theta)]])
        return model.space.as_dict(theta), None

    if cfg.method == "pm-bsl":
        prior = _priors_from_params(model, p)
        s_y = model.obs_summaries(obs.values)
        chain = mcmc.pm_bsl_run(
            model, s_y, prior, theta0, int(p["R"]), int(p["iters"]),
            bool(p.get("robust", False)), rng,
            proposal_scale0=p.get("proposal_scale0", 0.1),
            proposal_warmup=int(p.get("proposal_warmup", 500)))
        burn = int(p.get("burn_in", 0))
        post = mcmc.posterior_summary(chain, burn)
        if rep_dir is not None:
            _write_chain(rep_dir / "chain.csv", chain, names)
            with open(rep_dir / "posterior.json", "w") as fh:
                json.dump(post, fh, indent=2)
        extra = {"posterior": post, "acceptance_rate": chain.acceptance_rate}
        return {k: v["mean"] for k, v in post.items()}, extra

    if cfg.method == "abc-mcmc":
        return _run_abc(cfg, model, obs, theta0, rng, rep_dir)

    raise AssertionError(f"unhandled method {cfg.method}")


def _write_chain(path, chain: mcmc.Chain, names):
    draws = chain.natural()
    rows = [[0, *map(float, draws[0]), float(chain.log_targets[0]), ""]]
    rows += [[t + 1, *map(float, draws[t + 1]), float(chain.log_targets[t + 1]),
              int(chain.accepted[t])] for t in range(len(chain.accepted))]
    _write_trace(path, ["iter", *names, "logtarget", "accepted"], rows)


def _run_abc(cfg, model, obs, theta0, rng, rep_dir):
    p = cfg.method_params
    names = list(model.space.names)
    prior = _priors_from_params(model, p)
    s_y = model.obs_summaries(obs.values)
    d_s = s_y.shape[0]
    scale0 = p.get("proposal_scale0", 0.1)
    warmup = int(p.get("proposal_warmup", 500))

    weights = np.ones(d_s)
    pilot_rates = None
    if "pilot" in p:
        pilot = p["pilot"]
        kern = mcmc.AbcKernelSpec(
            tuple((float(d), int(pilot["iters_per_delta"])) for d in pilot["deltas"]),
            np.ones(d_s))
        pilot_res = mcmc.abc_mcmc_run(model, s_y, prior, kern, theta0, rng,
                                      proposal_scale0=scale0,
                                      proposal_warmup=warmup)
        weights = mcmc.calibrate_weights(pilot_res.summary_store)
        pilot_rates = pilot_res.segment_rates
        if rep_dir is not None:
            np.savetxt(rep_dir / "pilot_summary_store.csv",
                       pilot_res.summary_store, delimiter=",",
                       header=",".join(model.layout.labels_y), comments="")
            with open(rep_dir / "weights.json", "w") as fh:
                json.dump({"weights": weights.tolist()}, fh, indent=2)
    elif "weights" in p:
        weights = np.asarray(p["weights"], dtype=float)

    main = p["main"]
    kern = mcmc.AbcKernelSpec(
        tuple((float(d), int(main["iters_per_delta"])) for d in main["deltas"]),
        weights)
    res = mcmc.abc_mcmc_run(model, s_y, prior, kern, theta0, rng,
                            proposal_scale0=scale0, proposal_warmup=warmup)
    # posterior from the final (smallest-delta) segment draws
    label, lo, hi = res.chain.segments[-1]
    seg = res.chain.natural()[lo:hi]
    post = {}
    for i, name in enumerate(names):
        col = seg[:, i]
        post[name] = {"mean": float(np.mean(col)),
                      "lo95": linalg.percentile(col, 2.5),
                      "hi95": linalg.percentile(col, 97.5)}
    if rep_dir is not None:
        _write_chain(rep_dir / "chain.csv", res.chain, names)
        np.savetxt(rep_dir / "summary_store.csv", res.summary_store,
                   delimiter=",", header=",".join(model.layout.labels_y),
                   comments="")
        with open(rep_dir / "posterior.json", "w") as fh:
            json.dump(post, fh, indent=2)
    extra = {
        "posterior": post,
        "segment_rates": [(float(d), int(it), float(r))
                          for d, it, r in res.segment_rates],
        "pilot_segment_rates": ([(float(d), int(it), float(r))
                                 for d, it, r in pilot_rates]
                                if pilot_rates else None),
        "final_segment": label,
        "weights": weights.tolist(),
    }
    return {k: v["mean"] for k, v in post.items()}, extra


# ---------------------------------------------------------------------------
# batches


def _worker(cfg_dict: dict, index: int, out_dir: str | None) -> dict:
    cfg = config_from_dict(cfg_dict)
    result = run_replicate(cfg, index, out_dir)
    return asdict(result)


def run_batch(cfg: ExperimentConfig, out_dir=None, workers: int = 1):
    """Run all replicates (optionally across a process pool) and summarize.

    Returns the list of ReplicateResult in replicate order. Results are
    persisted incrementally to results.csv as replicates complete.
    """
    out = None
    results_path = None
    if out_dir is not None:
        out = Path(out_dir) / cfg.name
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "manifest.json", "w") as fh:
            json.dump(config_to_dict(cfg), fh, indent=2)
        results_path = out / "results.csv"
    model = cfg.build_model()
    names = list(model.space.names)

    collected: list[ReplicateResult] = []
    writer_fh = None
    writer = None
    if results_path is not None:
        writer_fh = open(results_path, "w", newline="")
        writer = csv.writer(writer_fh)
        writer.writerow(["replicate", "seed", "status", "walltime", *names])

    def collect(res: ReplicateResult):
        collected.append(res)
        if writer is not None:
            final = res.final or {}
            writer.writerow([res.index, res.seed, res.status,
                             f"{res.walltime:.3f}",
                             *[repr(final.get(n, "")) if n in final else ""
                               for n in names]])
            writer_fh.flush()

    try:
        if workers <= 1:
            for i in range(cfg.replicates):
                collect(run_replicate(cfg, i, out))
        else:
            cfg_dict = config_to_dict(cfg)
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futs = {pool.submit(_worker, cfg_dict, i,
                                    str(out) if out else None): i
                        for i in range(cfg.replicates)}
                for fut in as_completed(futs):
                    d = fut.result()
                    collect(ReplicateResult(**d))
    finally:
        if writer_fh is not None:
            writer_fh.close()

    collected.sort(key=lambda r: r.index)
    if out is not None:
        table = summarize_batch(collected, names)
        write_summary(out, table)
    return collected


@dataclass
class SummaryTable:
    params: list
    medians: dict
    q1: dict
    q3: dict
    n_ok: int
    n_total: int
    failures: dict

    def text(self) -> str:
        width = max([len(p) for p in self.params] + [9])
        lines = [f"{'parameter':<{width}}  {'median':>12}  {'Q1':>12}  {'Q3':>12}"]
        for p in self.params:
            lines.append(f"{p:<{width}}  {self.medians[p]:>12.6g}  "
                         f"{self.q1[p]:>12.6g}  {self.q3[p]:>12.6g}")
        lines.append(f"# ok {self.n_ok}/{self.n_total}"
                     + (f", excluded: {self.failures}" if self.failures else ""))
        return "\n".join(lines)


def summarize_batch(results, param_names) -> SummaryTable:
    """Per-parameter median and quartiles over ok replicates (type-7)."""
    ok = [r for r in results if r.status == "ok" and r.final is not None]
    if not ok:
        raise ValueError("no successful replicates to summarize")
    failures = {}
    for r in results:
        if r.status != "ok":
            failures[r.status] = failures.get(r.status, 0) + 1
    medians, q1, q3 = {}, {}, {}
    for name in param_names:
        vals = np.array([r.final[name] for r in ok])
        medians[name] = linalg.percentile(vals, 50.0)
        q1[name] = linalg.percentile(vals, 25.0)
        q3[name] = linalg.percentile(vals, 75.0)
    return SummaryTable(params=list(param_names), medians=medians, q1=q1,
                        q3=q3, n_ok=len(ok), n_total=len(results),
                        failures=failures)


def write_summary(out_dir, table: SummaryTable) -> None:
    out = Path(out_dir)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "median", "q1", "q3", "n_ok", "n_total"])
        for p in table.params:
            w.writerow([p, repr(table.medians[p]), repr(table.q1[p]),
                        repr(table.q3[p]), table.n_ok, table.n_total])
    with open(out / "summary.txt", "w") as fh:
        fh.write(table.text() + "\n")


def reload_results(out_dir, cfg: ExperimentConfig | None = None):
    """Rebuild ReplicateResult rows from a persisted results.csv."""
    out = Path(out_dir)
    results = []
    with open(out / "results.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        names = [c for c in reader.fieldnames
                 if c not in ("replicate", "seed", "status", "walltime")]
        for row in reader:
            final = None
            if row["status"] == "ok":
                final = {n: float(row[n]) for n in names if row[n] != ""}
            results.append(ReplicateResult(
                index=int(row["replicate"]), seed=int(row["seed"]),
                status=row["status"], walltime=float(row["walltime"]),
                final=final))
    return results, names


# ---------------------------------------------------------------------------
# qq diagnostics


def export_qq_data(model, theta, R: int, rng: np.random.Generator):
    """Normal qq data for each joint summary coordinate at theta.

    Each record pairs the sorted standardized summaries with the normal
    quantiles at (i - 0.5)/R and carries the qq correlation; constant
    coordinates are flagged degenerate and get no pairs.
    """
    rows = synlik.simulate_joint_summaries(model, np.asarray(theta, float), R, rng)
    theoretical = np.array([linalg.normal_quantile((i + 0.5) / R) for i in range(R)])
    records = []
    for j, label in enumerate(model.layout.labels):
        col = rows[:, j]
        sd = float(np.std(col, ddof=1))
        if not np.isfinite(sd) or sd < 1e-12:
            records.append({"label": label, "degenerate": True,
                            "pairs": None, "correlation": float("nan")})
            continue
        standardized = np.sort((col - np.mean(col)) / sd)
        corr = float(np.corrcoef(standardized, theoretical)[0, 1])
        records.append({"label": label, "degenerate": False,
                        "pairs": np.column_stack([standardized, theoretical]),
                        "correlation": corr})
    return records


def write_qq_data(out_dir, records) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "qq.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["summary", "i", "sample_q", "theoretical_q"])
        for rec in records:
            if rec["degenerate"]:
                continue
            for i, (s, t) in enumerate(rec["pairs"]):
                w.writerow([rec["label"], i, repr(float(s)), repr(float(t))])
    with open(out / "qq_correlations.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["summary", "correlation", "degenerate"])
        for rec in records:
            w.writerow([rec["label"], repr(rec["correlation"]),
                        int(rec["degenerate"])])
