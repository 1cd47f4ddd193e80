"""
Rate splitting layers for one channel draw
==========================================

Sweep the super common power fraction for a fixed clustering and watch
how the three stream layers trade off against treating interference as
noise.
"""

# %%
# One channel draw
# ----------------
# The environment already knows how to sample channels and cluster users,
# so borrow its first state.
import numpy as np

from hrsma_vr import SystemConfig, StreamingEnv
from hrsma_vr.rsma_phy import (
    PowerAllocation,
    achievable_rates,
    assign_common_portions,
    sdma_rates,
    user_total_rate,
)

cfg = SystemConfig()
state = StreamingEnv(cfg, seed=0).reset()
sq = cfg.num_antennas * state.channel_rms**2
membership = state.membership
print("groups:", np.argmax(membership, axis=0))

# %%
# Sweep the common fraction
# -------------------------
# Whatever is left after the super common stream is split evenly between
# group streams and private streams.
K, G = cfg.num_users, cfg.num_groups
for a_c in np.linspace(0.0, 0.9, 10):
    rest = 1.0 - a_c
    alloc = PowerAllocation(a_c, np.full(G, rest / 2 / G), np.full(K, rest / 2 / K))
    rep = achievable_rates(sq, cfg.power_linear, alloc, membership)
    portions = assign_common_portions(np.ones(K), np.ones((G, K)), rep, membership)
    total = user_total_rate(rep, portions, membership)
    print(f"alpha_c={a_c:.1f}  R_c={rep.r_super:6.3f}  worst user={total.min():6.3f}  "
          f"sum={rep.sum_rate:6.3f}")

# %%
# Interference as noise
# ---------------------
# Same budget on private streams only.
sdma = sdma_rates(sq, cfg.power_linear, np.full(K, 1.0 / K))
print(f"SDMA worst user={sdma.min():.3f}  sum={sdma.sum():.3f}")
