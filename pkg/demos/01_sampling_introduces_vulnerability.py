#!/usr/bin/env python3
"""How sample-and-hold control manufactures an attack surface.

The triple integrator has no finite zeros in continuous time.  Discretize
it with a zero-order hold and the discrete model sprouts two transmission
zeros, one of them strictly outside the unit circle.  That single zero is
all an attacker needs to inject an unbounded actuator signal that the
monitoring system cannot see.
"""

import numpy as np

from liftguard import (
    ContinuousPlant,
    classify_vulnerability,
    coprime_factorize,
    discretize,
    transmission_zeros,
)

# =============================================================================
# The plant: a chain of three integrators, position measured.

plant = ContinuousPlant(
    Ac=[[0, 1, 0], [0, 0, 1], [0, 0, 0]],
    Bc=[[0], [0], [1]],
    Cc=[[1, 0, 0]],
    Dc=[[0]],
    name="triple-integrator",
)
print(f"plant: {plant.name} (n={plant.n}, inputs={plant.n_u}, outputs={plant.n_y})")

# =============================================================================
# Hold-equivalent discretization at a one-second period.  The zeros of the
# discrete model do not come from the continuous dynamics: they are created
# by the sampling process itself, and for this plant they are independent
# of the period.

T = 1.0
P = discretize(plant, T)
report = transmission_zeros(P)

print(f"\ndiscrete zeros at period T={T}:")
for rec in report.zeros:
    if rec.z_value is None:
        print(f"  zero at z-infinity ({rec.classification})")
        continue
    print(
        f"  z = {rec.z_value.real:+.6f}{rec.z_value.imag:+.6f}j"
        f"   reciprocal = {rec.lambda_value.real:+.6f}"
        f"   -> {rec.classification}"
    )

expected = np.roots([1.0, 4.0, 1.0])
print(f"  (these are the roots of z^2 + 4z + 1: {np.sort(expected)})")

# =============================================================================
# The verdicts.  One zero sits at z = -2 - sqrt(3), i.e. outside the unit
# circle: an unbounded actuator attack exists.  The sensor side has no
# strictly unstable pole; what it does have is a triple pole exactly on
# the circle, which the classifier honestly reports as undecided (the
# repeated-boundary case needs invariant-factor multiplicities, out of
# scope here) rather than silently calling it safe.

factors = coprime_factorize(P)
verdict = classify_vulnerability(report, left_numerator=factors.Nl)
print(f"\nactuator stealthy attack possible: {verdict.actuator}"
      f" (mechanism: {verdict.actuator_mechanism})")
print(f"sensor   stealthy attack possible: {verdict.sensor}")
for note in verdict.notes:
    print(f"  note: {note}")
assert verdict.actuator == "yes"
assert verdict.sensor == "undecided"

witness = verdict.actuator_witness
print(f"\nwitness zero: z = {witness.z_value.real:.6f} "
      f"(growth ratio available to the attacker: {abs(witness.z_value):.3f} per step)")

# =============================================================================
# Contrast: the double integrator's only finite zero sits exactly on the
# unit circle at -1 and is simple, which supports no unbounded plan.

double = ContinuousPlant(
    Ac=[[0, 1], [0, 0]], Bc=[[0], [1]], Cc=[[1, 0]], Dc=[[0]], name="double-integrator"
)
P2 = discretize(double, T)
verdict2 = classify_vulnerability(transmission_zeros(P2))
print(f"\n{double.name}: actuator stealthy attack possible: {verdict2.actuator}")
assert verdict2.actuator == "no"

print("\nConclusion: the faster/coarser story is about relative degree -- any "
      "hold-equivalent model of a plant with relative degree three or more "
      "carries sampling zeros, and they can land outside the circle.")
