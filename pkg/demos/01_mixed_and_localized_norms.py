"""Mixed and localized space-time norms on grid functions.

Walks through the two norm orderings, the discrete Minkowski ordering between
them, windowed (localized) norms over shifted unit cylinders, and the covering
equivalence band between window radii.
"""

import numpy as np

from parabolab import mixed_norms as mn
from parabolab.mixed_norms import INF, MixedNormSpec

# A space-time field on [0, 4] x [-2, 2]: a drifting Gaussian bump.
f = mn.from_callable(
    lambda t, X: np.exp(-((X[..., 0] - 0.4 * np.sin(t)) ** 2) / 0.3),
    (0.0, 4.0), 64, [(-2.0, 2.0)], (64,))

print("== mixed norms, both orderings ==")
for spec in (MixedNormSpec(2, 4, "time-outer"), MixedNormSpec(2, 4, "space-outer"),
             MixedNormSpec(INF, 1, "time-outer")):
    print(f"  {spec.label():>18} = {mn.mixed_norm(f, spec):.6f}")

print("\n== Minkowski ordering (q >= p) ==")
for (p, q) in [(1.0, 2.0), (2.0, 6.0), (1.5, 1.5)]:
    gap = mn.minkowski_gap(f, p, q)
    print(f"  p={p}, q={q}: space-outer minus time-outer = {gap:+.3e} (>= 0)")

print("\n== localized (windowed) norms ==")
spec = MixedNormSpec(2, 2, "time-outer")
full = mn.mixed_norm(f, spec)
for step in (1.0, 0.5, 0.25):
    loc = mn.localized_norm(f, spec, lattice_step=step)
    print(f"  lattice step {step:>4}: sup over unit windows = {loc:.6f} "
          f"(full norm {full:.6f})")

print("\n== covering equivalence between window radii ==")
for r in (1.0, 2.0, 0.5):
    lo, hi = mn.covering_equivalence_report(f, spec, T=2.0, r=r)
    print(f"  radius {r}: per-center ratio band [{lo:.4f}, {hi:.4f}]")

print("\n== the localized energy norm ==")
print(f"  v_norm(f, kappa=2) = {mn.v_norm(f, 2.0):.6f}")
print(f"  v_norm(3f, kappa=2) = {mn.v_norm(f.scaled(3.0), 2.0):.6f}  (3x, exactly)")
