"""
Splitting a segment into large- and small-scale variations
==========================================================
"""
# %%
import numpy as np

from securetag import LinkSpec, MotionProcess, MotionState, generate_trace, scica, segment_trace
from securetag.decomposition import (cluster_components, diagonal_average, dtw_matrix, embed,
                                     embedding_dimension, low_freq_energy, select_variations)

# %% [markdown]
# One 20 s segment of a walking wearer, sampled every 200 ms.

# %%
trace = generate_trace(LinkSpec(motion=MotionProcess(MotionState.WALKING), rng_seed=3))
segment = segment_trace(trace, 20.0)[0]
print(len(segment), "samples at", segment.sample_rate, "Hz")

# %% [markdown]
# Delay embedding turns the series into a Hankel matrix, and diagonal
# averaging undoes it exactly.

# %%
L = embedding_dimension(segment.sample_rate)
H = embed(segment.values, L)
print("embedding", H.shape, "exact inverse:", np.array_equal(diagonal_average(H), segment.values))

# %%
comps = scica(segment)
print(len(comps), "components; reconstruction error",
      np.abs(comps.reconstruction() + comps.mean - segment.values).max())

# %% [markdown]
# Components that look alike under time warping are merged first.

# %%
dist = dtw_matrix(comps.components)
tree = cluster_components(comps)
for a, b, d in tree.merges[:5]:
    print(f"merge {a:2d} + {b:2d} at DTW distance {d:.2f}")

# %%
split = select_variations(tree, comps)
total = low_freq_energy(split.large_scale + split.small_scale, segment.sample_rate)
print("large-scale members:", split.members)
print("share of low-frequency energy:",
      round(low_freq_energy(split.large_scale, segment.sample_rate) / total, 2))
print("std large", split.large_scale.std().round(2), "std small", split.small_scale.std().round(2))
