"""Acceptance suite: one PASS/FAIL line per criterion.

The experiment-level criteria (6 to 10) share one results directory, so a
configuration needed by several criteria is trained once. Set
``HRSMA_ACCEPTANCE_DIR`` to keep that directory between sessions; by
default a fresh temporary directory is used. Lines are collected in
``RESULTS`` and echoed at the end of the session by ``conftest.py``.
"""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from hrsma_vr.config import SystemConfig
from hrsma_vr.env import StreamingEnv
from hrsma_vr.harness import (
    CPU_SWEEP_HZ,
    POWER_SWEEP_DB,
    QUALITY_SWEEP,
    ExperimentConfig,
    expand_runs,
    run_config_id,
    run_experiment,
)
from hrsma_vr.latency import ComputeState, system_latency_and_reward
from hrsma_vr.ppo import (
    MLP,
    PPOConfig,
    actor_forward,
    clip_bound,
    objective_and_grads,
    surrogate_objective,
    train,
)
from hrsma_vr.ppo.bandit import BanditEnv
from hrsma_vr.rsma_phy import (
    PowerAllocation,
    achievable_rates,
    assign_common_portions,
    project_power,
    sdma_rates,
    user_total_rate,
)
from test_ppo import _assert_grad_close, _central_difference, _tiny_problem

RESULTS = []

# pinned tolerances and thresholds
ORACLE_RTOL = 1e-12
ORACLE_BUDGET_S = 10.0
POWER_SLACK = 1e-12
FD_RTOL = 1e-4
PPO_BUDGET_S = 30.0
BANDIT_TOL = 0.05
BANDIT_STEPS = 5000
BANDIT_MIN_SEEDS = 4
UPA_FACTOR = 1.2
MP_FACTOR = 1.5
ORDERING_BUDGET_S = 30 * 60.0
LATENCY_CEILING_S = 0.100
SUM_RATE_IQR_FACTOR = 2.0

SEEDS = (0, 1, 2, 3, 4)
ALGS = ("DRL", "MP", "UPA")
FULL = dict(seeds=SEEDS, train_steps=10_000, eval_steps=1_000)


def record(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return passed


@pytest.fixture(scope="session")
def results_dir(tmp_path_factory):
    path = os.environ.get("HRSMA_ACCEPTANCE_DIR")
    if path:
        Path(path).mkdir(parents=True, exist_ok=True)
        return Path(path)
    return tmp_path_factory.mktemp("acceptance")


def _run(results_dir, **kwargs):
    return run_experiment(ExperimentConfig(**{**FULL, **kwargs}), results_dir, resume=True)


def _median(rows, metric, **match):
    vals = [getattr(r, metric) for r in rows
            if all(getattr(r, k) == v for k, v in match.items())]
    assert len(vals) == len(SEEDS), (match, len(vals))
    return float(np.median(vals))


def _iqr(rows, metric, **match):
    vals = [getattr(r, metric) for r in rows
            if all(getattr(r, k) == v for k, v in match.items())]
    q25, q75 = np.percentile(vals, [25, 75])
    return float(q75 - q25)


def _random_instance(rng):
    K, G = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    labels = rng.integers(0, G, K)
    membership = np.zeros((G, K), dtype=int)
    membership[labels, np.arange(K)] = 1
    sizes = membership.sum(axis=1)
    alpha = project_power(rng.random(1 + G + K) * rng.choice([0.3, 1.0, 3.0]))
    alpha[1 : 1 + G][sizes == 0] = 0.0
    sq = rng.lognormal(0.0, 1.5, K)
    P0 = float(rng.choice([1.0, 10.0, 100.0, 1e3]))
    return K, G, labels, membership, PowerAllocation.from_vector(alpha, G), sq, P0


# -- 1 --------------------------------------------------------------------------

def test_criterion_1_formula_oracles():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        K, G, labels, m, alloc, sq, P0 = _random_instance(rng)
        rep = achievable_rates(sq, P0, alloc, m)
        a_g, a_p = list(alloc.alpha_group), list(alloc.alpha_private)
        pairs = []
        for k in range(K):
            g = int(labels[k])
            pairs.append((rep.gamma_super[k], oracles.super_sinr(sq[k], P0, alloc.alpha_c, a_g,
                                                                 a_p)))
            pairs.append((rep.gamma_group[k], oracles.group_sinr(sq[k], P0, g, a_g, a_p)))
            pairs.append((rep.gamma_private[k], oracles.private_sinr(sq[k], P0, g, k, a_g, a_p)))
        r_p, r_g, r_c = oracles.rates(list(sq), P0, alloc.alpha_c, a_g, a_p, list(labels))
        pairs += list(zip(rep.r_private, r_p)) + list(zip(rep.r_group, r_g))
        pairs.append((rep.r_super, r_c))

        w_super, w_group = rng.random(K), rng.random((G, K))
        portions = assign_common_portions(w_super, w_group, rep, m)
        totals = user_total_rate(rep, portions, m)
        ref_totals = []
        for k in range(K):
            g = int(labels[k])
            members = [i for i in range(K) if labels[i] == g]
            share_g = r_g[g] * w_group[g, k] / sum(w_group[g, i] for i in members)
            share_c = r_c * w_super[k] / sum(w_super)
            ref_totals.append(r_p[k] + share_g + share_c)
        pairs += list(zip(totals, ref_totals))

        f, F = rng.uniform(0.05, 1.0, G), rng.uniform(0.05, 1.0, G)
        eta = float(rng.choice([230.0, 2.3e6, 2.3e9]))
        lat = system_latency_and_reward(totals, ComputeState(eta, F, f), m, 8e5, 1e8)
        ref_lat = oracles.user_latencies(ref_totals, list(labels), list(f), list(F), 8e5, 1e8,
                                         eta)
        pairs += list(zip(lat.l_total, ref_lat))
        pairs.append((lat.reward, 1.0 / max(ref_lat)))
        for a, b in pairs:
            if a != b:
                worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    elapsed = time.perf_counter() - t0
    ok = worst <= ORACLE_RTOL and elapsed < ORACLE_BUDGET_S
    record(1, ok, f"1000 instances, worst relative error {worst:.2e} "
                  f"(tol {ORACLE_RTOL:g}), {elapsed:.1f} s (budget {ORACLE_BUDGET_S:g} s)")
    assert ok


# -- 2 --------------------------------------------------------------------------

def test_criterion_2_sdma_equivalence():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(1000):
        K, G, labels, m, alloc, sq, P0 = _random_instance(rng)
        zeroed = PowerAllocation(0.0, np.zeros(G), alloc.alpha_private)
        rep = achievable_rates(sq, P0, zeroed, m)
        portions = assign_common_portions(rng.random(K), rng.random((G, K)), rep, m)
        totals = user_total_rate(rep, portions, m)
        ref = sdma_rates(sq, P0, alloc.alpha_private)
        if not (np.array_equal(rep.r_private, ref) and np.array_equal(totals, ref)):
            mismatches += 1
    ok = mismatches == 0
    record(2, ok, f"{mismatches} of 1000 instances differ from the SDMA rates (bitwise)")
    assert ok


# -- 3 --------------------------------------------------------------------------

def test_criterion_3_constraints_every_step():
    rng = np.random.default_rng(11)
    violations, steps = [], 0
    for episode in range(10):
        env = StreamingEnv(seed=episode)
        env.reset()
        done = False
        while not done:
            tr = env.step(rng.random(env.action_dim) * rng.choice([0.5, 1.0, 4.0]))
            done = tr.done
            steps += 1
            m = tr.state.membership
            if tr.action.alpha.total > 1 + POWER_SLACK:
                violations.append(("power", steps))
            if np.sum(tr.portions.super_portions) != tr.rates.r_super:
                violations.append(("super portions", steps))
            for g in range(m.shape[0]):
                if m[g].any() and np.sum(tr.portions.group_portions[g]) != tr.rates.r_group[g]:
                    violations.append(("group portions", steps))
                if np.any(tr.portions.group_portions[g][m[g] == 0] != 0):
                    violations.append(("non-member portion", steps))
            f = tr.action.cpu_shares
            if not np.all((f > 0) & (f <= 1)):
                violations.append(("cpu share", steps))
            if not np.array_equal(m.sum(axis=0), np.ones(m.shape[1])):
                violations.append(("membership", steps))
    ok = not violations
    record(3, ok, f"{steps} steps over 10 episodes, {len(violations)} violations"
                  + (f" (first {violations[0]})" if violations else ""))
    assert ok


# -- 4 --------------------------------------------------------------------------

def _transcribed_surrogate(r, eps, a):
    u = (1 + eps) * a if a >= 0 else (1 - eps) * a
    return min(r * a, u)


def test_criterion_4_ppo_math():
    t0 = time.perf_counter()
    ratios = np.linspace(0.0, 3.0, 100)
    advs = np.linspace(-5.0, 5.0, 100)
    R, A = np.meshgrid(ratios, advs)
    got = surrogate_objective(R, 0.2, A)
    bounds = clip_bound(0.2, A)
    grid_bad = 0
    for i in range(100):
        for j in range(100):
            r, a = float(R[i, j]), float(A[i, j])
            u = (1 + 0.2) * a if a >= 0 else (1 - 0.2) * a
            if bounds[i, j] != u or got[i, j] != _transcribed_surrogate(r, 0.2, a):
                grid_bad += 1

    grad_bad = 0
    for seed in range(50):
        actor, critic, batch = _tiny_problem(seed)
        _, _, g_a, g_c, _ = objective_and_grads(actor, critic, batch, 0.2)
        base = actor.get_flat()

        def surrogate_at(theta, actor=actor, critic=critic, batch=batch):
            actor.set_flat(theta)
            return objective_and_grads(actor, critic, batch, 0.2)[0]

        def value_loss_at(w, actor=actor, critic=critic, batch=batch):
            return objective_and_grads(actor, MLP(critic.sizes, w), batch, 0.2)[1]

        fd_a = _central_difference(surrogate_at, base)
        actor.set_flat(base)
        fd_c = _central_difference(value_loss_at, critic.params)
        try:
            _assert_grad_close(g_a, fd_a, rtol=FD_RTOL)
            _assert_grad_close(g_c, fd_c, rtol=FD_RTOL)
        except AssertionError:
            grad_bad += 1
    elapsed = time.perf_counter() - t0
    ok = grid_bad == 0 and grad_bad == 0 and elapsed < PPO_BUDGET_S
    record(4, ok, f"grid mismatches {grid_bad}/10000, gradient failures {grad_bad}/50 "
                  f"(rtol {FD_RTOL:g}), {elapsed:.1f} s (budget {PPO_BUDGET_S:g} s)")
    assert ok


# -- 5 --------------------------------------------------------------------------

def test_criterion_5_bandit():
    env = BanditEnv()
    means = []
    for seed in range(5):
        res = train(lambda ss: BanditEnv(), PPOConfig(gamma=0.0, total_steps=BANDIT_STEPS),
                    seed=seed)
        means.append(float(actor_forward(res.actor, np.zeros(1)).action[0]))
    hits = sum(abs(m - env.optimum) <= BANDIT_TOL for m in means)
    ok = hits >= BANDIT_MIN_SEEDS
    record(5, ok, f"{hits}/5 seeds within {BANDIT_TOL} of optimum {env.optimum} after "
                  f"{BANDIT_STEPS} steps (need {BANDIT_MIN_SEEDS}); means "
                  + ", ".join(f"{m:.3f}" for m in means))
    assert ok


# -- 6 --------------------------------------------------------------------------

def _timing(results_dir, exp):
    total = 0.0
    for spec in expand_runs(exp):
        for seed in exp.seeds:
            path = results_dir / "runs" / run_config_id(spec) / str(seed) / "timing.json"
            total += json.loads(path.read_text())["wall_clock_s"]
    return total


@pytest.mark.slow
def test_criterion_6_reward_ordering(results_dir):
    exp = ExperimentConfig(algorithms=ALGS, schemes=("RSMA", "SDMA"), **FULL)
    rows = run_experiment(exp, results_dir, resume=True)
    med = {(a, s): _median(rows, "mean_reward", algorithm=a, scheme=s)
           for a in ALGS for s in ("RSMA", "SDMA")}
    wall = _timing(results_dir, exp)
    checks = {
        f"DRL>={UPA_FACTOR}xUPA": med["DRL", "RSMA"] >= UPA_FACTOR * med["UPA", "RSMA"],
        f"DRL>={MP_FACTOR}xMP": med["DRL", "RSMA"] >= MP_FACTOR * med["MP", "RSMA"],
        "DRL-RSMA>DRL-SDMA": med["DRL", "RSMA"] > med["DRL", "SDMA"],
        "MP-RSMA>MP-SDMA": med["MP", "RSMA"] > med["MP", "SDMA"],
        "runtime": wall < ORDERING_BUDGET_S,
    }
    ok = all(checks.values())
    record(6, ok, "median reward " + ", ".join(f"{a}-{s} {v:.2f}" for (a, s), v in med.items())
           + f"; DRL/UPA {med['DRL', 'RSMA'] / med['UPA', 'RSMA']:.2f}, "
           f"DRL/MP {med['DRL', 'RSMA'] / med['MP', 'RSMA']:.2f}; "
           + ", ".join(f"{k} {'ok' if v else 'FAILED'}" for k, v in checks.items())
           + f"; {wall / 60:.1f} min")
    assert ok


# -- 7 --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_7_latency_magnitude(results_dir):
    powers = (10.0, 15.0, 20.0)
    rows = _run(results_dir, algorithms=("DRL",), sweep_values=powers)
    lat = [_median(rows, "mean_max_latency", sweep_value=p) for p in powers]
    below = lat[-1] < LATENCY_CEILING_S
    monotone = all(b <= a for a, b in zip(lat, lat[1:]))
    ok = below and monotone
    record(7, ok, "DRL-RSMA median max-latency "
           + ", ".join(f"{p:g} dB {v * 1e3:.1f} ms" for p, v in zip(powers, lat))
           + f"; below {LATENCY_CEILING_S * 1e3:g} ms at 20 dB {'ok' if below else 'FAILED'}"
           + f", non-increasing {'ok' if monotone else 'FAILED'}")
    assert ok


# -- 8 --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_8_quality_sweep(results_dir):
    rows = _run(results_dir, algorithms=ALGS, sweep_axis="quality", sweep_values=QUALITY_SWEEP)
    parts, ok = [], True
    for alg in ALGS:
        lat = [_median(rows, "mean_max_latency", algorithm=alg, sweep_value=q)
               for q in QUALITY_SWEEP]
        rate = [_median(rows, "mean_sum_rate", algorithm=alg, sweep_value=q)
                for q in QUALITY_SWEEP]
        iqr = max(_iqr(rows, "mean_sum_rate", algorithm=alg, sweep_value=q)
                  for q in QUALITY_SWEEP)
        monotone = all(b >= a for a, b in zip(lat, lat[1:]))
        spread = max(rate) - min(rate)
        flat = spread <= SUM_RATE_IQR_FACTOR * iqr + 1e-9 * max(rate)
        ok &= monotone and flat
        parts.append(f"{alg} latency ms [" + ", ".join(f"{v * 1e3:.1f}" for v in lat)
                     + f"] {'ok' if monotone else 'FAILED'}, sum-rate spread {spread:.3f} vs "
                     f"{SUM_RATE_IQR_FACTOR:g}xIQR {SUM_RATE_IQR_FACTOR * iqr:.3f} "
                     f"{'ok' if flat else 'FAILED'}")
    record(8, ok, "; ".join(parts))
    assert ok


# -- 9 --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_9_cpu_sweep(results_dir):
    rows = _run(results_dir, algorithms=ALGS, sweep_axis="cpu_hz", sweep_values=CPU_SWEEP_HZ)
    parts, ok = [], True
    low = CPU_SWEEP_HZ[0]
    for alg in ALGS:
        lat = [_median(rows, "mean_max_latency", algorithm=alg, sweep_value=c)
               for c in CPU_SWEEP_HZ]
        monotone = all(b <= a for a, b in zip(lat, lat[1:]))
        render = _median(rows, "mean_render_latency", algorithm=alg, sweep_value=low)
        transmit = _median(rows, "mean_transmit_latency", algorithm=alg, sweep_value=low)
        dominant = render > transmit
        ok &= monotone and dominant
        parts.append(f"{alg} latency ms [" + ", ".join(f"{v * 1e3:.3g}" for v in lat)
                     + f"] {'ok' if monotone else 'FAILED'}, at {low:g} Hz render "
                     f"{render * 1e3:.2f} ms vs transmit {transmit * 1e3:.2f} ms "
                     f"{'ok' if dominant else 'FAILED'}")
    record(9, ok, "; ".join(parts))
    assert ok


# -- 10 -------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_10_clustering_ablation(results_dir):
    on = _run(results_dir, algorithms=("DRL",), sweep_values=POWER_SWEEP_DB)
    off = _run(results_dir, algorithms=("DRL",), sweep_values=POWER_SWEEP_DB,
               system=SystemConfig(clustering_enabled=False))
    parts, ok = [], True
    for p in POWER_SWEEP_DB:
        a = _median(on, "mean_max_latency", sweep_value=p)
        b = _median(off, "mean_max_latency", sweep_value=p)
        ok &= a <= b
        parts.append(f"{p:g} dB {a * 1e3:.1f} vs {b * 1e3:.1f} ms")
    record(10, ok, "DRL-RSMA clustered vs unclustered median max-latency: " + ", ".join(parts))
    assert ok


# -- 11 -------------------------------------------------------------------------

def test_criterion_11_determinism(tmp_path):
    exp = ExperimentConfig(algorithms=("DRL", "MP", "UPA", "RANDOM"), schemes=("RSMA", "SDMA"),
                           seeds=(0, 1), train_steps=1030, eval_steps=200,
                           upa_calibration_states=2)
    run_experiment(exp, tmp_path / "a")
    run_experiment(exp, tmp_path / "b")
    a = (tmp_path / "a" / "metrics.csv").read_bytes()
    b = (tmp_path / "b" / "metrics.csv").read_bytes()
    ok = a == b and len(a.splitlines()) == 1 + 4 * 2 * 2
    record(11, ok, f"metrics CSV of {len(a.splitlines()) - 1} runs repeated "
                   f"{'byte-identical' if a == b else 'DIFFERENT'}")
    assert ok
