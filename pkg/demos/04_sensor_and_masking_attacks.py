#!/usr/bin/env python3
"""The other attack channels: sensors, coordination, and fat plants.

Three separate mechanisms beyond the actuator-zero attack:

* an unstable pole lets a sensor attack grow while the loop absorbs it,
* coordinated actuator+sensor injection masks anything on any plant,
* with more inputs than outputs, one actuator can hide another.
"""

import dataclasses

import numpy as np

from liftguard import ContinuousPlant, DiscretePlant, discretize, run_single_rate, ss_response, standard_loop
from liftguard.attack import (
    AttackPlan,
    synth_coordinated_attack,
    synth_fat_masking,
    synth_sensor_attack,
)
from liftguard.errors import CapabilityError

THETA = 0.01

# =============================================================================
# Sensor attack: needs an unstable pole.  The controller chases the faked
# measurement, steering the true output to cancel it; both stay small
# while the injection explodes.

unstable = ContinuousPlant(
    Ac=[[np.log(2.0)]], Bc=[[1.0]], Cc=[[1.0]], Dc=[[0.0]], name="pole-at-2"
)
cfg, factors = standard_loop(unstable, T=1.0, theta=THETA, horizon=200)
plan = synth_sensor_attack(cfg, factors=factors)
trace = run_single_rate(dataclasses.replace(cfg, attack=plan, horizon=plan.horizon))
print(f"sensor attack on {unstable.name}: ratio {plan.zeta.real:.1f} per step")
print(f"  verdict: {'stealthy' if trace.verdict.stealthy else 'detected'}, "
      f"monitor peak {np.max(trace.monitor):.4e}, "
      f"injection grew {abs(trace.d_s[-1,0])/abs(trace.d_s[0,0]):.2e}x")
assert trace.verdict.stealthy

# A stable plant offers no such channel.
stable = ContinuousPlant(
    Ac=[[-1.0, 0.3], [0.0, -0.5]], Bc=[[1.0], [0.5]], Cc=[[1.0, 0.2]], Dc=[[0.0]],
    name="stable-2",
)
scfg, sfactors = standard_loop(stable, T=0.5, theta=THETA)
try:
    synth_sensor_attack(scfg, factors=sfactors)
except CapabilityError as exc:
    print(f"  stable plant: {exc}")

# =============================================================================
# Coordinated attack: pick the sensor injection to cancel the actuator
# injection's effect at the measured output.  Works on any plant; no
# zero or pole structure needed.  Here the actuator signal is an
# unbounded ramp, yet the measured output never moves.

P = discretize(stable, 0.5)
d_a, d_s = synth_coordinated_attack(P, np.arange(500, dtype=float))
masked = AttackPlan(
    kind="coordinated", zeta=1.0, direction=[1.0], epsilon=1.0, horizon=500,
    channel_map=(0,), companion={"d_a": d_a, "d_s": d_s},
)
big_cfg = dataclasses.replace(scfg, horizon=500, attack=masked)
attacked = run_single_rate(big_cfg)
clean = run_single_rate(dataclasses.replace(big_cfg, attack=None))
dev = np.max(np.abs(attacked.y - clean.y))
print(f"\ncoordinated masking: ramp to {d_a[-1,0]:.0f} on the actuator, "
      f"measured output deviates by {dev:.2e}")
assert dev <= 1e-10

# =============================================================================
# Fat plant: two inputs, one output.  The second channel's injection is
# the first channel's response filtered through the negated channel
# inverse, so the output never sees either.

fat = DiscretePlant(
    A=[[0.3, 0.1], [0.0, -0.2]],
    B=[[1.0, 0.2], [0.0, 1.0]],
    C=[[0.5, 0.3]],
    D=[[0.7, 1.1]],
    period=1.0,
)
d1 = 1.05 ** np.arange(120)  # growing injection on channel one
u1, u2 = synth_fat_masking(fat, d1)
y = ss_response(fat, np.column_stack([u1, u2]))
print(f"\nfat-plant masking: channel-1 injection grew to {d1[-1]:.1f}, "
      f"output peak {np.max(np.abs(y)):.2e}")
assert np.max(np.abs(y)) <= 1e-8

print("\nConclusion: secure at least one output channel and keep the plant "
      "observable from it, or coordination makes detection hopeless.")
