"""
How the best solid diffusivity scales
=====================================

eta * eta_v,opt / r^2 is close to a constant per polynomial order.  A small
grid of meshes and penalty times is enough to see it.
"""
from ibmfr.fr_elements import FRConfig, gauss_nodes
from ibmfr.ibm_assembly import MeshSpec, PenalizationSpec, build_mask
from ibmfr.timedomain import (SimulationSpec, eta_v_guideline, find_optimal_eta_v, fit_scaling,
                              snap_wavenumber)

cases = []
for P in (3, 4):
    cfg = FRConfig(P)
    for N in (20, 40):
        mesh = MeshSpec(1.0, N)
        mask = build_mask(mesh, 1, gauss_nodes(P))
        k0 = snap_wavenumber(0.3142, mesh, P)
        for eta in (1e-3, 1e-4):
            o = find_optimal_eta_v(SimulationSpec(cfg, mesh, mask, PenalizationSpec(eta=eta),
                                                  dt=1e-5, k0=k0))
            cases.append((mask.r, P, eta, o.eta_v_opt))
            print(f"P={P} r=1/{N} eta={eta:g}: eta_v,opt={o.eta_v_opt:.4g} "
                  f"C={eta * o.eta_v_opt / mask.r ** 2:.4f}")

fit = fit_scaling(cases)
for P, C in fit.C.items():
    print(f"P={P}: C = {C:.4f} (max deviation {fit.residual[P]:.0%})")

# The tabulated constants turn into a quick estimate
print("guideline, eta=1e-3, r=0.0128, P=2:", eta_v_guideline(1e-3, 0.0128, 2))
