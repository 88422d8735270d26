"""Monte Carlo for the truncated singular diffusion families.

Simulates the mollified isotropic singular family, measures the occupation
functional against a localized norm, fits the path modulus exponent, traces
the empirical-law Cauchy table across the mollification index, and probes
pathwise uniqueness by shared-noise perturbation decay.
"""

import numpy as np

from parabolab import mixed_norms as mn
from parabolab import sde_mc as sde
from parabolab.mixed_norms import INF, MixedNormSpec

print("== the truncation family ==")
from parabolab.cutoffs import CutoffFamily

fam = CutoffFamily(R=2.0, alpha=-0.3, n=4)
for r in (0.0, 1.0, 2.0, 3.0, 5.0):
    print(f"  phi_R({r}) = {fam.phi(r):.4f}, shifted power = {fam.f_n(r):.4f}")

print("\n== Brownian benchmark: occupation functional vs localized norm ==")
coeffs = sde.build_coefficients("brownian", d=3)
ens = sde.euler_maruyama(coeffs, np.zeros(3), 0.0, 1.0, 0.01, 20000, 42)
f = mn.from_callable(lambda t, X: ((X**2).sum(axis=-1) <= 1.0).astype(float),
                     (0, 1), 100, [(-1.25, 1.25)] * 3, (40,) * 3)
est, se = sde.krylov_functional(ens, f, 0.0, 1.0)
loc = mn.localized_norm(f, MixedNormSpec(4.0, INF, "time-outer"), lattice_step=0.5)
print(f"  E int f(s, X_s) ds = {est:.5f} +- {se:.5f}")
print(f"  localized forcing norm = {loc:.5f}; ratio = {est / loc:.4f}")
gaps = [0.125, 0.25, 0.5, 1.0]
ests = [sde.krylov_functional(ens, f, 0.0, t1)[0] for t1 in gaps]
theta = np.polyfit(np.log(gaps), np.log(ests), 1)[0]
print(f"  gap-sweep exponent theta_fit = {theta:.3f}")

print("\n== path modulus ==")
dt = 1.0 / 1024
ens1 = sde.euler_maruyama(sde.build_coefficients("brownian", d=1), [0.0], 0.0, 1.0,
                          dt, 2000, 8)
rep = sde.modulus_report(ens1, np.array([1, 2, 4, 8, 16, 32]) * dt)
print(f"  Brownian modulus slope = {rep.slope:.3f} (near the 1/4 law)")

print("\n== Cauchy table across the mollification index ==")
rep = sde.approximation_cauchy_report("example-6.1", [1, 2, 4, 8, 16], [1.8, 0, 0],
                                      0.3, 0.005, 10000, 99, d=3, R=1.0, alpha=0.1)
for nlab, dist in zip([f"{a}->{b}" for a, b in zip(rep.n_list, rep.n_list[1:])],
                      rep.distances):
    print(f"  W1({nlab:>6}) = {dist:.6f}")
print(f"  rank correlation = {rep.spearman:.2f}; sup moments "
      f"{[round(m, 4) for m in rep.sup_moments]}")

print("\n== perturbation decay (uniqueness proxy, raw singular field) ==")
out = sde.uniqueness_perturbation_report([1e-1, 1e-2, 1e-3, 1e-4, 0.0], np.full(3, 0.5),
                                         0.2, 0.005, 3000, 13, family_tag="prop-6.1",
                                         d=3, alpha=0.3, beta=0.2, lam=1.0, n=INF)
for row in out["rows"]:
    print(f"  eps = {row['eps']:>7}: E sup |X - X_eps| = {row['divergence']:.6f}")
print(f"  floored evaluations of the raw field: {out['floor_hits']}")
