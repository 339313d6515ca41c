"""
RK3 stability of the penalized scheme
=====================================

The explicit step is limited twice: by the advection CFL and by the stiff
penalty modes living in the solid.
"""
import numpy as np

from ibmfr.fr_elements import FRConfig, gauss_nodes
from ibmfr.fully_discrete import (dt_from_cfl, find_cfl_max, find_critical_eta, rk3_polynomial,
                                  sweep_fully_discrete)
from ibmfr.ibm_assembly import MeshSpec, PenalizationSpec, build_mask

cfg = FRConfig(P=3)
mesh = MeshSpec(T=1.0, N=40)
mask = build_mask(mesh, 1, gauss_nodes(3))

cmax = find_cfl_max(cfg, mesh)
print(f"CFL(max) = {cmax:.5f}; 0.1 CFL(max) is dt = {dt_from_cfl(0.1 * cmax, 1.0, 3, mesh.h):.3e}")

# A penalty eigenvalue -1/eta is stable while dt/eta stays inside the real-axis
# interval of the RK3 polynomial, [-2.5127, 0]
for ratio in (2.0, 2.5, 2.6):
    print(f"  |R(-{ratio})| = {abs(rk3_polynomial(-ratio)):.4f}")

# Critical penalty time at fixed dt, for three CFL numbers
for frac in (0.1, 0.5, 0.7):
    dt = dt_from_cfl(frac * cmax, 1.0, 3, mesh.h)
    ce = find_critical_eta(cfg, mesh, mask, dt)
    print(f"CFL {frac:.1f} CFL(max): eta_crit/dt in ({ce.eta_low / dt:.4f}, {ce.eta_high / dt:.4f})")

# With eta = dt every fully-discrete mode is damped
dt = dt_from_cfl(0.5 * cmax, 1.0, 3, mesh.h)
fd = sweep_fully_discrete(cfg, mesh, mask, PenalizationSpec(eta=dt), dt,
                          np.linspace(0.005, 2.0, 9), shift=True)
print("eta = dt: all stable:", bool(fd.stable.all()), " worst solid Imag(k*):", fd.solid_max_imag)
