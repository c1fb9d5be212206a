"""Pair-copula building blocks: densities, h-functions and their inverses.

Every vine edge is one of these bivariate families.  The h-function
C(v | u) is what the vine recursions pass from tree to tree, and its
inverse is what simulation uses.
"""
import numpy as np

from vinesurv.bicop import Bicop, par_to_tau, tau_to_par

# Pick parameters with the same Kendall's tau so the families are comparable.
tau = 0.5
u = np.array([0.05, 0.5, 0.95])
for fam in ("N", "t", "F", "G", "G.s", "BB1"):
    par = tau_to_par(fam, tau)
    cop = Bicop(fam, par)
    # Corner densities show tail dependence: G in the upper corner, G.s and BB1
    # mostly in the lower one, t symmetrically in both.
    print(f"{fam:4s} params={np.round(par, 3)} tau={par_to_tau(fam, par):.3f} "
          f"c(u,u)={np.round(cop.pdf(u, u), 3)}")

# h-inverse undoes the h-function: this is how a dependent draw is made.
cop = Bicop("G", (2.0,))
rng = np.random.default_rng(0)
u1 = rng.uniform(size=5)
p = rng.uniform(size=5)
v = cop.hinv1(u1, p)
print("round trip |h(hinv(p)) - p|:", np.abs(cop.hfunc1(u1, v) - p).max())

# Simulate 5000 pairs and compare the empirical tau to the target.
from scipy import stats
u1 = rng.uniform(size=5000)
v = cop.hinv1(u1, rng.uniform(size=5000))
print("empirical tau", round(stats.kendalltau(u1, v).statistic, 3), "target", par_to_tau("G", (2.0,)))
