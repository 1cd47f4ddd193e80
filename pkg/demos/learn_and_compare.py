"""
Learning an allocation policy
=============================

Train the PPO agent briefly and compare it with the three baselines on the
same evaluation channel draws. Longer training is a matter of raising
``train_steps``; the command-line ``sweep`` verb runs the full grid.
"""

# %%
# A small experiment
# ------------------
import numpy as np

from hrsma_vr.harness import ExperimentConfig, run_experiment

exp = ExperimentConfig(algorithms=("DRL", "MP", "UPA", "RANDOM"), seeds=(0, 1),
                       train_steps=2060, eval_steps=206, upa_calibration_states=4)
rows = run_experiment(exp)

# %%
# Median over seeds
# -----------------
for alg in exp.algorithms:
    reward = np.median([r.mean_reward for r in rows if r.algorithm == alg])
    latency = np.median([r.mean_max_latency for r in rows if r.algorithm == alg])
    print(f"{alg:7s} reward {reward:8.2f}   max-latency {latency * 1e3:7.2f} ms")

# %%
# Where the time goes
# -------------------
# Transmit and render latency of the slowest viewer, averaged over steps.
for r in rows:
    print(f"{r.algorithm:7s} seed {r.seed}: transmit {r.mean_transmit_latency * 1e3:6.2f} ms, "
          f"render {r.mean_render_latency * 1e6:7.3f} us")
