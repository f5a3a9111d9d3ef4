"""
Attack scenarios and sample-period sweep
========================================

Run the two-person scenarios with a spoofing neighbour, then vary the RSS
sample period.
"""
# %%
from dataclasses import replace

from securetag.harness import default_profile, preset, run_batch

SEEDS = tuple(range(20))

# %%
profile = default_profile()
for name in ("S1", "S2", "S3", "S4"):
    cfg = replace(preset(name), seeds=SEEDS)
    _, m = run_batch(cfg, profile)
    print(f"{name}: mitigation {m.mitigation_rate:.2f}  false alarms {m.false_alarm_rate:.3f}"
          f"  ({m.n_attempts} attempts, {m.n_segments} legitimate segments)")

# %% [markdown]
# Sitting still next to the wearer is the hard case: a calm off-body link
# looks most like a static on-body one.

# %%
for period in (0.1, 0.2, 0.3, 0.4, 0.5):
    cfg = replace(preset("S1"), seeds=SEEDS, sample_period=period)
    _, m = run_batch(cfg, default_profile(period, cfg.pipeline))
    print(f"sample period {period:.1f} s: mitigation {m.mitigation_rate:.2f}"
          f"  false alarms {m.false_alarm_rate:.3f}  runtime {m.runtime:.1f} s")
