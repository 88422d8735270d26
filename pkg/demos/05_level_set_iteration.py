"""Level-set machinery: schedules, the fast-decay recursion, and the diagnostics.

The level/cylinder schedules interleave strictly; the recursion lemma's
worst-case equality iteration collapses below its threshold seed; and both
sides of the energy and local-maximum estimates are evaluated on a forced heat
run (padded backward in time so the origin-centered cylinders fit).
"""

import numpy as np

from parabolab import degiorgi as dg
from parabolab import pde_solver as pde
from parabolab.embeddings import ExponentConfig
from parabolab.mixed_norms import INF

print("== schedules ==")
sched = dg.LevelSchedule(kappa=1.0, tau=1.0, sigma=2.0)
for n in (1, 2, 3, 5, 10):
    k, t, tt = dg.schedule(sched, n)
    print(f"  n={n:>2}: level {k:.5f}, radius {t:.5f}, intermediate {tt:.5f}")

print("\n== recursion: below vs above the threshold seed ==")
params = dg.RecursionParams(C0=2.0, lam=2.0, deltas=(1.0,), a1=0.1)
res = dg.recursion_simulate(params)
print(f"  threshold = {res.threshold}; a1 = 0.1 (below)")
print("  a_n:", np.array2string(res.a[:8], precision=6))
print(f"  decay bound a_n <= a1 * lam^(-(n-1)/delta) holds: {res.bound_ok}")
res_hot = dg.recursion_simulate(dg.RecursionParams(2.0, 2.0, (1.0,), 1.25))
print(f"  a1 = 1.25 (10x threshold): diverged = {res_hot.diverged}")

print("\n== diagnostics on a forced heat run ==")
field = pde.identity_field(1, forcing=lambda t, X: np.exp(-(X[..., 0] ** 2) / 0.18))
u0 = pde.spatial_initial_condition(lambda X: np.zeros(X.shape[:-1]),
                                   [(-2.5, 2.5)], (100,), "periodic")
u = pde.solve(field, u0, pde.SolverConfig(dt=0.02, T=4.0))
up = dg.pad_run_backward(u, -4.1)  # vanishing past, per the zero-start setting
cfg = ExponentConfig(d=1, p0=INF, p4=4.0, q4=INF)

print("  window exponent pairs:", dg.iteration_exponents(cfg))
diag = dg.energy_estimate_diagnostic(up, field, kappa_level=0.0, tau1=1.0, tau2=2.0,
                                     cfg=cfg)
print(f"  energy estimate: lhs = {diag.lhs:.5f}, rhs = {diag.rhs_total:.5f}, "
      f"ratio = {diag.ratio:.4f}")
sweep = dg.energy_gap_sweep(up, field, 0.0, cfg, [1.0, 0.5, 0.25])
print(f"  fitted gap power gamma = {sweep['gamma_fit']:.3f}")

lhs, rhs, ratio = dg.local_max_diagnostic(up, field, cfg, p=2.0)
print(f"  local maximum estimate: lhs = {lhs:.5f}, rhs = {rhs:.5f}, ratio = {ratio:.4f}")

print("\n== exact level-set inequality on the run ==")
from parabolab.mixed_norms import Cylinder

lhs, rhs = dg.lk1_check(up, 0.05, 0.15, Cylinder(1.5, (0.0, (0.0,))), 2.0, 2.0)
print(f"  measure bound: lhs = {lhs:.5f} <= rhs = {rhs:.5f}")
