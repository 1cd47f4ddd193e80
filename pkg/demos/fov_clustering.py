"""
Grouping viewers by what they watch
===================================

Cluster synthetic head-movement features with k-means and look at how much
smaller the rendered frame gets when each group only needs its own view.
"""

# %%
# Synthetic viewers
# -----------------
# Six viewers follow three attention centres; a little noise keeps the
# groups from being trivial.
import numpy as np

from hrsma_vr.clustering import (
    generate_synthetic_behaviour,
    group_frame_bits,
    kmeans_cluster,
    wcss,
)

features = generate_synthetic_behaviour(6, 103, 3, seed=4, noise_deg=4.0, switch_prob=0.02)
print(features.shape)

# %%
# Cluster every time step
# -----------------------
for t in range(0, 103, 20):
    m = kmeans_cluster(features[t], 3, seed=t)
    labels = np.argmax(m, axis=0)
    print(t, labels, f"wcss={wcss(features[t], labels):.1f}")

# %%
# Bits per frame
# --------------
# A group stream only carries its field of view instead of the full sphere.
clustered = group_frame_bits(8e5, True)
full = group_frame_bits(8e5, False)
print(f"{clustered:.3g} bits vs {full:.3g} bits ({full / clustered:.2f}x)")
