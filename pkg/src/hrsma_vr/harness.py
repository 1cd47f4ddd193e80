"""Experiment orchestration: runs, sweeps, clustering ablation, plot data.

An :class:`ExperimentConfig` names a system configuration, the algorithms
and multiple-access schemes to compare, one sweep axis and a list of seeds.
Every (algorithm, scheme, sweep value) combination is a *run
configuration*; its hash names the results directory::

    <out>/experiment.json
    <out>/metrics.csv                      all rows, deterministic order
    <out>/runs/<config-hash>/config.json
    <out>/runs/<config-hash>/<seed>/metrics.csv
    <out>/runs/<config-hash>/<seed>/checkpoint.bin
    <out>/runs/<config-hash>/<seed>/checkpoint.json
    <out>/runs/<config-hash>/<seed>/steps.log
    <out>/runs/<config-hash>/<seed>/timing.json

Metrics files hold only seeded quantities, so re-running a configuration
reproduces them byte for byte. Wall-clock time goes to ``timing.json``.

Seed discipline: the root seed of a run is spawned into independent
streams for the training environment, the evaluation environment and the
policy's own randomness during training and during evaluation. None of
them depends on the algorithm or on clustering, so every algorithm is
evaluated on the same channel and CPU draws.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import MyopicMemory, MyopicPolicy, RandomPolicy, UPAPolicy, upa_grid_search
from .checkpoint import load_arrays, read_sidecar, save_arrays, write_sidecar
from .config import QUALITY_TABLE, SystemConfig
from .env import StreamingEnv
from .ppo import MLP, GaussianActor, PPOConfig, actor_forward, train

__all__ = [
    "ALGORITHMS",
    "SCHEMES",
    "SWEEP_AXES",
    "POWER_SWEEP_DB",
    "QUALITY_SWEEP",
    "CPU_SWEEP_HZ",
    "METRIC_FIELDS",
    "ExperimentConfig",
    "MetricsRow",
    "RunError",
    "run_config_id",
    "run_single",
    "run_experiment",
    "compare_clustering",
    "emit_plot_data",
    "evaluate_checkpoint",
    "audit_steps_log",
    "write_metrics_csv",
    "read_metrics_csv",
]

log = logging.getLogger(__name__)

ALGORITHMS = ("DRL", "MP", "UPA", "RANDOM")
SCHEMES = ("RSMA", "SDMA")
SWEEP_AXES = ("power_db", "quality", "cpu_hz")
POWER_SWEEP_DB = (0.0, 5.0, 10.0, 15.0, 20.0)
QUALITY_SWEEP = tuple(QUALITY_TABLE)
CPU_SWEEP_HZ = (2.3e2, 2.3e4, 2.3e6, 2.3e8, 2.3e9)

METRIC_FIELDS = (
    "mean_reward",
    "mean_max_latency",
    "mean_sum_rate",
    "mean_transmit_latency",
    "mean_render_latency",
)
CSV_FIELDS = ("config_id", "algorithm", "scheme", "clustering", "sweep_axis", "sweep_value",
              "seed") + METRIC_FIELDS


class RunError(RuntimeError):
    """A run produced unusable output (for example a NaN metric)."""


def experiment_ppo_defaults() -> PPOConfig:
    """PPO settings used by experiments: rewards are not discounted forward.

    Rewards are immediate consequences of each action (the action does not
    influence future states), so the per-step reward is the natural target.
    """
    return PPOConfig(gamma=0.0)


def _axis_value(axis: str, value):
    if axis == "quality":
        value = str(value)
        if value not in QUALITY_TABLE:
            raise ValueError(f"unknown quality tier {value!r}")
        return value
    return float(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a set of runs.

    ``sweep_values=None`` means the single value already in ``system``.
    ``upa_triple`` fixes the UPA action instead of grid-searching it.
    """

    system: SystemConfig = field(default_factory=SystemConfig)
    algorithms: tuple = ("DRL", "MP", "UPA")
    schemes: tuple = ("RSMA",)
    sweep_axis: str = "power_db"
    sweep_values: tuple | None = None
    seeds: tuple = (0, 1, 2, 3, 4)
    train_steps: int = 10_000
    eval_steps: int = 1_000
    ppo: PPOConfig = field(default_factory=experiment_ppo_defaults)
    upa_triple: tuple | None = None
    upa_calibration_states: int = 16
    audit_fraction: float = 0.01

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        values = self.sweep_values
        if values is None:
            values = (getattr(self.system, self.sweep_axis),)
        values = tuple(_axis_value(self.sweep_axis, v) for v in values)
        if not values:
            raise ValueError("sweep_values must be nonempty")
        set_("sweep_values", values)
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ValueError("seeds must be nonempty")
        if len(set(seeds)) != len(seeds):
            raise ValueError(f"seeds must be distinct, got {seeds}")
        set_("seeds", seeds)
        set_("algorithms", tuple(str(a).upper() for a in self.algorithms))
        set_("schemes", tuple(str(s).upper() for s in self.schemes))
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}, got {bad}")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}, got {bad}")
        if self.train_steps < 0 or self.eval_steps < 1:
            raise ValueError("train_steps must be >= 0 and eval_steps >= 1")
        if not 0.0 <= self.audit_fraction <= 1.0:
            raise ValueError("audit_fraction must lie in [0, 1]")
        if self.upa_triple is not None:
            set_("upa_triple", tuple(float(v) for v in self.upa_triple))
            if len(self.upa_triple) != 3:
                raise ValueError("upa_triple needs (common, group, cpu) fractions")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "algorithms": list(self.algorithms),
            "schemes": list(self.schemes),
            "sweep_axis": self.sweep_axis,
            "sweep_values": list(self.sweep_values),
            "seeds": list(self.seeds),
            "train_steps": self.train_steps,
            "eval_steps": self.eval_steps,
            "ppo": self.ppo.to_dict(),
            "upa_triple": None if self.upa_triple is None else list(self.upa_triple),
            "upa_calibration_states": self.upa_calibration_states,
            "audit_fraction": self.audit_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        if "system" in data:
            data["system"] = SystemConfig.from_dict(data["system"])
        if "ppo" in data:
            base = experiment_ppo_defaults().to_dict()
            base.update(data["ppo"])
            data["ppo"] = PPOConfig.from_dict(base)
        for key in ("algorithms", "schemes", "seeds", "sweep_values", "upa_triple"):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{exc.lineno}: {exc.msg}") from None
        return cls.from_dict(data)


@dataclass
class MetricsRow:
    """Evaluation summary of one run; latencies in seconds.

    The transmit and render latencies are those of the worst user at each
    step, so they add up to the max-latency.
    """

    config_id: str
    algorithm: str
    scheme: str
    clustering: bool
    sweep_axis: str
    sweep_value: object
    seed: int
    mean_reward: float
    mean_max_latency: float
    mean_sum_rate: float
    mean_transmit_latency: float
    mean_render_latency: float
    wall_clock_s: float = 0.0

    def csv_values(self) -> list:
        out = []
        for name in CSV_FIELDS:
            v = getattr(self, name)
            out.append(repr(float(v)) if isinstance(v, float) else str(v))
        return out


def write_metrics_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for row in rows:
            w.writerow(row.csv_values())


def read_metrics_csv(path) -> list:
    path = Path(path)
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}:1: unexpected metrics header")
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(CSV_FIELDS):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_FIELDS)} fields")
            d = dict(zip(CSV_FIELDS, rec))
            try:
                rows.append(MetricsRow(
                    config_id=d["config_id"], algorithm=d["algorithm"], scheme=d["scheme"],
                    clustering=d["clustering"] == "True", sweep_axis=d["sweep_axis"],
                    sweep_value=_axis_value(d["sweep_axis"], d["sweep_value"]),
                    seed=int(d["seed"]),
                    **{k: float(d[k]) for k in METRIC_FIELDS},
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


# -- single run -----------------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    """One (algorithm, scheme, sweep value) cell of an experiment."""

    system: SystemConfig
    algorithm: str
    sweep_axis: str
    sweep_value: object
    train_steps: int
    eval_steps: int
    ppo: PPOConfig
    upa_triple: tuple | None
    upa_calibration_states: int
    audit_fraction: float

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "algorithm": self.algorithm,
            "sweep_axis": self.sweep_axis,
            "sweep_value": self.sweep_value,
            "train_steps": self.train_steps,
            "eval_steps": self.eval_steps,
            "ppo": self.ppo.to_dict() if self.algorithm == "DRL" else None,
            "upa_triple": None if self.upa_triple is None else list(self.upa_triple),
            "upa_calibration_states": self.upa_calibration_states,
        }


def run_config_id(spec: RunSpec) -> str:
    """Short content hash of a run configuration (seed excluded)."""
    blob = json.dumps(spec.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def expand_runs(exp: ExperimentConfig):
    """Run specs in deterministic (algorithm, scheme, sweep value) order."""
    specs = []
    for algorithm in exp.algorithms:
        for scheme in exp.schemes:
            for value in exp.sweep_values:
                system = exp.system.replace(scheme=scheme, **{exp.sweep_axis: value})
                ppo = dataclasses.replace(exp.ppo, total_steps=exp.train_steps)
                specs.append(RunSpec(system, algorithm, exp.sweep_axis, value,
                                     exp.train_steps, exp.eval_steps, ppo, exp.upa_triple,
                                     exp.upa_calibration_states, exp.audit_fraction))
    return specs


def _streams(seed):
    train_ss, eval_ss, pol_train_ss, pol_eval_ss = np.random.SeedSequence(seed).spawn(4)
    return train_ss, eval_ss, pol_train_ss, pol_eval_ss


class _DRLPolicy:
    def __init__(self, actor: GaussianActor):
        self.actor = actor

    def act(self, state, env):
        return actor_forward(self.actor, env.observe(state)).action


class _Wrapped:
    """Adapter giving baselines the ``act(state, env)`` signature."""

    def __init__(self, policy):
        self.policy = policy

    def act(self, state, env):
        return self.policy.act(state)


def _train_policy(spec: RunSpec, seed):
    """Train or calibrate the policy; returns (policy, checkpoint arrays, meta)."""
    cfg = spec.system
    train_ss, _, pol_train_ss, _ = _streams(seed)
    if spec.algorithm == "DRL":
        result = train(lambda ss: StreamingEnv(cfg, seed=ss), spec.ppo, seed=train_ss)
        arrays = {"actor_net": result.actor.net.params, "actor_log_std": result.actor.log_std,
                  "critic_net": result.critic.params}
        meta = {"actor_sizes": list(result.actor.sizes),
                "critic_sizes": list(result.critic.sizes),
                "reward_curve": result.reward_curve, "train_steps_done": result.steps,
                "dropped_transitions": result.dropped}
        return _DRLPolicy(result.actor), arrays, meta
    if spec.algorithm == "UPA":
        triple = spec.upa_triple
        if triple is None:
            env = StreamingEnv(cfg, seed=train_ss)
            triple = upa_grid_search(env, spec.upa_calibration_states, seed=train_ss)
        return (_Wrapped(UPAPolicy(cfg, triple)), {"upa_triple": np.asarray(triple)},
                {"upa_triple": list(triple)})
    if spec.algorithm == "MP":
        policy = MyopicPolicy(cfg.action_dim, np.random.default_rng(pol_train_ss))
        if spec.train_steps > 0:
            env = StreamingEnv(cfg, seed=train_ss)
            state = env.reset()
            for _ in range(spec.train_steps):
                a = policy.act(state)
                tr = env.step(a)
                policy.observe(a, tr.reward)
                state = env.reset() if tr.done else tr.next_state
        arrays = {}
        if policy.memory is not None:
            m = policy.memory
            arrays = {"mp_best_action": m.best_action, "mp_last_action": m.last_action,
                      "mp_rewards": np.array([m.best_reward, m.last_reward])}
        return policy, arrays, {}
    policy = RandomPolicy(cfg.action_dim, np.random.default_rng(pol_train_ss))
    return policy, {}, {}


def _policy_from_checkpoint(spec: RunSpec, arrays: dict, meta: dict):
    cfg = spec.system
    if spec.algorithm == "DRL":
        net = MLP(meta["actor_sizes"], arrays["actor_net"])
        return _DRLPolicy(GaussianActor(net, arrays["actor_log_std"]))
    if spec.algorithm == "UPA":
        return _Wrapped(UPAPolicy(cfg, tuple(float(v) for v in arrays["upa_triple"])))
    if spec.algorithm == "MP":
        policy = MyopicPolicy(cfg.action_dim, None)
        if "mp_best_action" in arrays:
            best, last = arrays["mp_rewards"]
            policy.memory = MyopicMemory(float(best), arrays["mp_best_action"].copy(),
                                         float(last), arrays["mp_last_action"].copy())
        return policy
    return RandomPolicy(cfg.action_dim, None)


def _step_record(i, tr, action_vec=None):
    lat = tr.latency
    worst = int(np.argmax(lat.l_total))
    groups = np.argmax(tr.state.membership, axis=0)
    return {
        "step": i,
        "t": int(tr.state.t),
        "reward": float(tr.reward),
        "max_latency": float(lat.max_latency),
        "sum_rate": float(tr.rates.sum_rate),
        "worst_user": worst,
        "transmit_latency": float(lat.l_transmit[worst]),
        "render_latency": float(lat.l_render[worst]),
        "rates": [float(v) for v in tr.rates.r_user_total],
        "groups": [int(g) for g in groups],
        "cpu_shares": [float(v) for v in tr.action.cpu_shares],
        "available_cpu": [float(v) for v in tr.state.available_cpu],
    }


def _evaluate(spec: RunSpec, policy, seed, steps_path=None):
    """Roll the policy for ``eval_steps`` on the evaluation stream."""
    cfg = spec.system
    _, eval_ss, _, pol_eval_ss = _streams(seed)
    actor = policy
    if isinstance(policy, (MyopicPolicy, RandomPolicy)):
        # evaluation draws come from their own stream so a restored
        # checkpoint replays the same evaluation
        policy.rng = np.random.default_rng(pol_eval_ss)
        actor = _Wrapped(policy)
    online = isinstance(policy, MyopicPolicy)
    env = StreamingEnv(cfg, seed=eval_ss)
    state = env.reset()
    sums = dict.fromkeys(("reward", "max_latency", "sum_rate", "transmit_latency",
                          "render_latency"), 0.0)
    fh = open(steps_path, "w", encoding="utf-8") if steps_path else None
    try:
        if fh:
            header = {"header": {"frame_bits": env.frame_bits, "bandwidth_hz": cfg.bandwidth_hz,
                                 "cpu_hz": cfg.cpu_hz, "render_cycles": cfg.render_cycles,
                                 "num_users": cfg.num_users, "num_groups": cfg.num_groups}}
            fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in range(spec.eval_steps):
            a = actor.act(state, env)
            tr = env.step(a)
            if online:
                policy.observe(a, tr.reward)
            rec = _step_record(i, tr)
            for k in sums:
                sums[k] += rec[k]
            if fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
            state = env.reset() if tr.done else tr.next_state
    finally:
        if fh:
            fh.close()
    n = spec.eval_steps
    return {f"mean_{k}": v / n for k, v in sums.items()}


def _make_row(spec, config_id, seed, metrics, wall):
    row = MetricsRow(config_id, spec.algorithm, spec.system.scheme,
                     spec.system.clustering_enabled, spec.sweep_axis, spec.sweep_value, seed,
                     wall_clock_s=wall, **metrics)
    bad = [k for k in METRIC_FIELDS if math.isnan(getattr(row, k))]
    if bad:
        raise RunError(f"NaN metric(s) {bad} in run {config_id} ({spec.algorithm}, "
                       f"{spec.system.scheme}, {spec.sweep_axis}={spec.sweep_value}, seed {seed})")
    return row


def run_single(spec: RunSpec, seed: int, run_dir=None) -> MetricsRow:
    """Train (if needed), evaluate and persist one run."""
    t0 = time.perf_counter()
    config_id = run_config_id(spec)
    policy, arrays, meta = _train_policy(spec, seed)
    steps_path = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        steps_path = run_dir / "steps.log"
        save_arrays(run_dir / "checkpoint.bin", arrays)
        write_sidecar(run_dir / "checkpoint.json", {
            "config_id": config_id, "seed": seed, "algorithm": spec.algorithm,
            "run": spec.to_dict(), **meta,
        })
    metrics = _evaluate(spec, policy, seed, steps_path)
    row = _make_row(spec, config_id, seed, metrics, time.perf_counter() - t0)
    if run_dir is not None:
        write_metrics_csv(run_dir / "metrics.csv", [row])
        write_sidecar(run_dir / "timing.json", {"wall_clock_s": row.wall_clock_s})
        if spec.audit_fraction > 0:
            audit_steps_log(steps_path, spec.audit_fraction)
    log.info("run %s seed %d %s-%s %s=%s reward %.4g latency %.4g s (%.1f s)", config_id,
             seed, spec.algorithm, spec.system.scheme, spec.sweep_axis, spec.sweep_value,
             row.mean_reward, row.mean_max_latency, row.wall_clock_s)
    return row


def evaluate_checkpoint(run_dir) -> MetricsRow:
    """Re-run the evaluation of a saved run from its checkpoint."""
    run_dir = Path(run_dir)
    meta = read_sidecar(run_dir / "checkpoint.json")
    arrays = load_arrays(run_dir / "checkpoint.bin")
    r = meta["run"]
    system = SystemConfig.from_dict(r["system"])
    ppo = PPOConfig.from_dict(r["ppo"]) if r["ppo"] else experiment_ppo_defaults()
    spec = RunSpec(system, r["algorithm"], r["sweep_axis"],
                   _axis_value(r["sweep_axis"], r["sweep_value"]), r["train_steps"],
                   r["eval_steps"], ppo,
                   None if r["upa_triple"] is None else tuple(r["upa_triple"]),
                   r["upa_calibration_states"], 0.0)
    policy = _policy_from_checkpoint(spec, arrays, meta)
    t0 = time.perf_counter()
    metrics = _evaluate(spec, policy, int(meta["seed"]))
    return _make_row(spec, meta["config_id"], int(meta["seed"]), metrics,
                     time.perf_counter() - t0)


def audit_steps_log(path, fraction: float = 0.01, rtol: float = 1e-12) -> int:
    """Re-derive latency and reward for a deterministic subset of logged steps.

    Every ``round(1 / fraction)``-th step is checked: each user's latency
    is rebuilt from the logged rate, CPU share and available CPU, and the
    logged max-latency and reward must agree. Returns the number of steps
    audited; raises :class:`RunError` on a mismatch.
    """
    path = Path(path)
    if fraction <= 0:
        return 0
    stride = max(1, int(round(1.0 / fraction)))
    audited = 0
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())["header"]
        N, B = header["frame_bits"], header["bandwidth_hz"]
        eta, W = header["cpu_hz"], header["render_cycles"]
        for lineno, line in enumerate(fh, start=2):
            rec = json.loads(line)
            if rec["step"] % stride:
                continue
            groups = np.asarray(rec["groups"])
            rates = np.asarray(rec["rates"], dtype=float)
            f = np.asarray(rec["cpu_shares"])[groups]
            F = np.asarray(rec["available_cpu"])[groups]
            with np.errstate(divide="ignore"):
                l_v = np.where(rates > 0, N / (B * rates), math.inf)
            total = l_v + W / (f * F * eta)
            worst = float(total.max())
            ok = math.isclose(worst, rec["max_latency"], rel_tol=rtol) or (
                math.isinf(worst) and math.isinf(rec["max_latency"]))
            expected_reward = 0.0 if math.isinf(worst) else 1.0 / worst
            ok = ok and abs(expected_reward - rec["reward"]) <= 1e-9 * max(1.0, expected_reward)
            if not ok:
                raise RunError(f"{path}:{lineno}: logged latency/reward disagree with the "
                               f"re-derived values ({rec['max_latency']} vs {worst})")
            audited += 1
    return audited


# -- experiments ---------------------------------------------------------------

def _run_all(exp: ExperimentConfig, out_dir=None, resume: bool = False) -> list:
    rows = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        exp.save(out / "experiment.json")
    for spec in expand_runs(exp):
        cid = run_config_id(spec)
        cfg_dir = None
        if out is not None:
            cfg_dir = out / "runs" / cid
            cfg_dir.mkdir(parents=True, exist_ok=True)
            write_sidecar(cfg_dir / "config.json", spec.to_dict())
        for seed in exp.seeds:
            run_dir = None if cfg_dir is None else cfg_dir / str(seed)
            if resume and run_dir is not None and (run_dir / "metrics.csv").exists():
                rows.extend(read_metrics_csv(run_dir / "metrics.csv"))
                continue
            rows.append(run_single(spec, seed, run_dir))
    return rows


def run_experiment(exp: ExperimentConfig, out_dir=None, resume: bool = False) -> list:
    """Run every (algorithm, scheme, sweep value, seed) and collect rows.

    With ``out_dir`` every run is persisted and all rows are also written to
    ``<out_dir>/metrics.csv``. ``resume`` reuses runs whose metrics file
    already exists.
    """
    rows = _run_all(exp, out_dir, resume)
    if out_dir is not None:
        write_metrics_csv(Path(out_dir) / "metrics.csv", rows)
    return rows


def compare_clustering(exp: ExperimentConfig, out_dir=None, resume: bool = False) -> list:
    """Run the experiment with clustering on and off on the same seeds.

    Returns ``(clustered_row, unclustered_row)`` pairs in run order.
    """
    on = exp.replace(system=exp.system.replace(clustering_enabled=True))
    off = exp.replace(system=exp.system.replace(clustering_enabled=False))
    base = Path(out_dir) if out_dir is not None else None
    rows_on = run_experiment(on, None if base is None else base / "clustered", resume)
    rows_off = run_experiment(off, None if base is None else base / "unclustered", resume)
    pairs = list(zip(rows_on, rows_off))
    for a, b in pairs:
        if (a.algorithm, a.scheme, a.sweep_value, a.seed) != (b.algorithm, b.scheme,
                                                               b.sweep_value, b.seed):
            raise RunError("clustering pair mismatch")
    if base is not None:
        write_metrics_csv(base / "metrics.csv", [r for p in pairs for r in p])
    return pairs


def _pair_label(row: MetricsRow) -> str:
    label = f"{row.algorithm}-{row.scheme}"
    return label if row.clustering else label + "-noclust"


def emit_plot_data(rows, axis: str, out_dir, metrics=("mean_reward", "mean_max_latency",
                                                       "mean_sum_rate")) -> list:
    """Aggregate rows over seeds into one CSV per metric.

    Column order: ``<axis>, num_seeds``, then for every algorithm/scheme
    pair (sorted by label) ``<pair>_median, <pair>_q25, <pair>_q75``.
    Rows follow the order in which sweep values first appear. Missing
    cells are left empty. Returns the written paths.
    """
    rows = [r for r in rows if r.sweep_axis == axis]
    if not rows:
        raise ValueError(f"no metrics rows for sweep axis {axis!r}")
    unknown = [m for m in metrics if m not in METRIC_FIELDS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = sorted({_pair_label(r) for r in rows})
    values = list(dict.fromkeys(r.sweep_value for r in rows))
    paths = []
    for metric in metrics:
        path = out_dir / f"{axis}_{metric}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            header = [axis, "num_seeds"]
            for lab in labels:
                header += [f"{lab}_median", f"{lab}_q25", f"{lab}_q75"]
            w.writerow(header)
            for v in values:
                cells = [str(v)]
                seeds = {r.seed for r in rows if r.sweep_value == v}
                cells.append(str(len(seeds)))
                for lab in labels:
                    data = [getattr(r, metric) for r in rows
                            if r.sweep_value == v and _pair_label(r) == lab]
                    if data:
                        q25, med, q75 = np.percentile(data, [25, 50, 75])
                        cells += [repr(float(med)), repr(float(q25)), repr(float(q75))]
                    else:
                        cells += ["", "", ""]
                w.writerow(cells)
        paths.append(path)
    return paths
