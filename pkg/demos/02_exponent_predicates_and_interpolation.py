"""Exponent admissibility predicates and the empirical interpolation constant.

Shows the kappa relation, the index-set membership tests, the reduced forms of
the drift conditions at p0 = inf, and a sweep recording the empirical constant
of the space-time interpolation inequality.
"""

import numpy as np

from parabolab import embeddings as em
from parabolab.embeddings import B1_MUST_VANISH, ExponentConfig
from parabolab.mixed_norms import INF

print("== kappa from the degeneracy exponent (2/kappa = 1/p0 + 1) ==")
for (p0, d) in [(INF, 3), (3.0, 3), (2.4, 2), (1.0, 1)]:
    print(f"  d={d}, p0={p0}: kappa = {em.kappa_from_p0(p0, d):.4f}")

print("\n== index-set membership ==")
cfg = ExponentConfig(d=3, p0=INF)
for (p, q) in [(INF, INF), (3.0, 4.0), (1.0, 1.0)]:
    print(f"  (p, q) = ({p}, {q}) in index set: {em.in_I_d_p0(p, q, cfg)}")

print("\n== drift admissibility and the b1-must-vanish signal ==")
print("  p0 = inf, p2=6, q2=8 (d=3):", em.check_Re1(ExponentConfig(d=3, p0=INF, p2=6.0, q2=8.0)))
print("  p0 = 2 <= d = 3:", em.check_Re1(ExponentConfig(d=3, p0=2.0)))
print("  p3=q3=3 (d=3):", em.check_Re01(ExponentConfig(d=3, p0=INF, p3=3.0, q3=3.0)))

print("\n== interpolation ratio sweep (empirical constant C*) ==")
out = em.gn_ratio_sweep(d=1, r=4.0, s=2.0, kappa=2.0, n_functions=40, seed=7)
ratios = np.array(out["ratios"])
print(f"  theta from the relation: {out['theta']:.4f}")
print(f"  ratios over 40 seeded bump mixtures: median {np.median(ratios):.4f}, "
      f"max (C*) {out['c_star']:.4f}")

print("\n== windowed interpolation bound on nested cylinders ==")
fields = em.random_field_family(1, 3, seed=123)
cal = em.calibrate_window_constant(4.0, 2.0, 2.0, 1, eps=0.5)
print(f"  calibrated C_eps = {cal['c_eps']:.4f} "
      f"(raw family max {cal['raw_max']:.4f} x margin {cal['margin']})")
for i, f in enumerate(fields):
    lhs, rhs = em.localized_gn_check(f, 1.0, 2.0, 4.0, 2.0, 0.5, 2.0)
    print(f"  fresh field {i}: lhs = {lhs:.5f} <= rhs = {rhs:.5f}")
