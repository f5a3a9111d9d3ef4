"""
Calibrating and classifying
===========================

Learn the weights from fifteen minutes of labelled traces per class, then
label fresh traces segment by segment.
"""
# %%
from dataclasses import replace

import numpy as np

from securetag import (EnvDynamics, Label, LinkKind, LinkSpec, MotionProcess, MotionState,
                       calibrate, classify_trace, generate_trace)
from securetag.harness import calibration_traces

# %%
on, off = calibration_traces(sample_period=0.2)
profile = calibrate(on, off)
for name, value in profile.as_dict().items():
    print(f"{name:20s} {value:.4f}")

# %% [markdown]
# Off-body links differ most in their slow, motion-free level changes, so the
# large-scale weight ends up heavier than the small-scale one.

# %%
walk = MotionProcess(MotionState.WALKING)
conditions = {
    "onbody static": LinkSpec(kind=LinkKind.ON_BODY, rng_seed=50),
    "onbody walking": LinkSpec(kind=LinkKind.ON_BODY, motion=walk, rng_seed=51),
    "offbody calm": LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.CALM, rng_seed=52),
    "offbody busy": LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.BUSY, rng_seed=53),
    "offbody moderate": LinkSpec(kind=LinkKind.OFF_BODY, env_dynamics=EnvDynamics.MODERATE,
                                 rng_seed=54),
}
for name, link in conditions.items():
    decisions = classify_trace(generate_trace(replace(link, duration=600)), profile)
    share = np.mean([d.label is Label.OFF_BODY for d in decisions])
    print(f"{name:17s} labelled off-body in {share:5.1%} of {len(decisions)} segments")
