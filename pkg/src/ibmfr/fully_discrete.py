"""Fully-discrete analysis of the RK3-advanced penalized operator.

For a linear system every three-stage third-order Runge-Kutta method
advances u by the same matrix A = R(dt M) with
R(z) = 1 + z + z^2/2 + z^3/6, so the analysis works with that polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .fr_elements import FRConfig, gauss_nodes, local_operators
from .ibm_assembly import (GlobalOperator, MaskSpec, MeshSpec, PenalizationSpec, PhaseMode,
                           assemble_semi_discrete)
from .spectral import (SOLID_TOL, branch_spread, eig_dense, mode_set, semi_discrete_modes,
                       track_branches)

STABILITY_TOL = 1e-10
MAPPING_TOL = 1e-8


class BracketError(RuntimeError):
    pass


class MonotonicityError(RuntimeError):
    pass


def rk3_polynomial(z):
    z = np.asarray(z)
    return 1.0 + z + z * z / 2.0 + z ** 3 / 6.0


def amplification(M, dt) -> np.ndarray:
    """A = I + dt M + (dt M)^2/2 + (dt M)^3/6, evaluated Horner-style."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    M = M.entries if isinstance(M, GlobalOperator) else np.asarray(M)
    Z = dt * M
    I = np.eye(M.shape[0])
    return I + Z @ (I + Z @ (I + Z / 3.0) / 2.0)


def fd_modified_wavenumbers(eigenvalues, dt, c):
    """k* = i ln(lambda)/(c dt), principal branch.

    Real(k*) = -arg(lambda)/(c dt), Imag(k*) = ln|lambda|/(c dt).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if c == 0:
        raise ValueError("advection speed c must be non-zero")
    lam = np.asarray(eigenvalues, dtype=complex)
    if np.any(lam == 0):
        raise ValueError("amplification eigenvalue is exactly zero (mode annihilated in one step)")
    return 1j * np.log(lam) / (c * dt)


def cfl(c, dt, P, h) -> float:
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    return abs(c) * dt * (2 * P + 1) / h


def dt_from_cfl(cfl_number, c, P, h) -> float:
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    return cfl_number * h / (abs(c) * (2 * P + 1))


def spectral_mapping_error(A_eigs, M_eigs, dt) -> float:
    """Multiset distance between eig(A) and R(dt eig(M)), optimally paired."""
    a = np.asarray(A_eigs)
    b = rk3_polynomial(dt * np.asarray(M_eigs))
    if a.shape != b.shape:
        raise ValueError("eigenvalue sets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = np.maximum(1.0, np.abs(a[rows]))
    return float(np.max(cost[rows, cols] / scale)) if len(a) else 0.0


@dataclass(frozen=True)
class FDResult:
    k: float
    dt: float
    cfl: float
    eigenvalues: np.ndarray
    kstar_fd: np.ndarray
    stable: bool
    solid_mode_dissipation: float | None = None


def fully_discrete_analysis(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec,
                            pen: PenalizationSpec, k, dt, solid=None) -> FDResult:
    """Spectrum of A(k) at one wavenumber, checked against the spectral mapping.

    ``solid`` optionally lists mode indices of M(k) whose fully-discrete
    dissipation is summarized in ``solid_mode_dissipation``.
    """
    op = assemble_semi_discrete(k, cfg, mesh, mask, pen, PhaseMode.BLOCH)
    A = amplification(op, dt)
    ms = mode_set(op.entries, k, cfg.c)
    lam_A, _ = eig_dense(A)
    err = spectral_mapping_error(lam_A, ms.eigenvalues, dt)
    if err > MAPPING_TOL:
        raise ArithmeticError(f"eig(A) departs from R(dt eig(M)) by {err:.3e} at k={k:.6g}")
    ks = fd_modified_wavenumbers(lam_A, dt, cfg.c)
    solid_diss = None
    if solid:
        mapped = fd_modified_wavenumbers(rk3_polynomial(dt * ms.eigenvalues[list(solid)]), dt, cfg.c)
        solid_diss = float(mapped.imag.max())
    return FDResult(k=float(k), dt=float(dt), cfl=cfl(cfg.c, dt, cfg.P, mesh.h),
                    eigenvalues=lam_A, kstar_fd=ks,
                    stable=bool(np.abs(lam_A).max() <= 1.0 + STABILITY_TOL),
                    solid_mode_dissipation=solid_diss)


@dataclass(frozen=True)
class FDCurve:
    """Fully-discrete primary curve over a normalized k-grid (units h/(P+1))."""

    kgrid: np.ndarray
    dt: float
    cfl: float
    primary_real: np.ndarray
    primary_real_unwrapped: np.ndarray
    primary_imag: np.ndarray
    gamma_ibm: float
    corrected_imag: np.ndarray
    solid_max_imag: float | None
    stable: np.ndarray
    mapping_error: float


def sweep_fully_discrete(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec, pen: PenalizationSpec,
                         dt, kgrid=None, shift=False, max_step=None) -> FDCurve:
    """Map the tracked semi-discrete branches through R(dt z).

    A is a polynomial in M, so every eigenvector of M(k) is one of A(k) and
    the semi-discrete branch tracking carries over unchanged.  eig(A) is
    still computed at every requested sample and compared with the mapped
    spectrum.
    """
    from .spectral import sweep_semi_discrete

    curve = sweep_semi_discrete(cfg, mesh, mask, pen, kgrid, shift=shift, max_step=max_step)
    scale = mesh.h / (cfg.P + 1)
    cls = curve.classification
    lamA_mapped = rk3_polynomial(dt * curve.all_modes)
    offset = math.pi / (mesh.N * mesh.h) if shift else 0.0
    mapping = 0.0
    for j, kn in enumerate(curve.kgrid):
        A = amplification(assemble_semi_discrete(kn / scale + offset, cfg, mesh, mask, pen,
                                                 PhaseMode.BLOCH), dt)
        lam_A, _ = eig_dense(A)
        mapping = max(mapping, spectral_mapping_error(lam_A, curve.all_modes[j], dt))
    if mapping > MAPPING_TOL:
        raise ArithmeticError(f"eig(A) departs from R(dt eig(M)) by {mapping:.3e}")
    ks = fd_modified_wavenumbers(lamA_mapped, dt, cfg.c)
    prim = cls.branch_values(ks, cls.primary)
    # principal-branch real part, plus a continuous version along the branch
    phase = cls.branch_values(np.angle(lamA_mapped), cls.primary)
    unwrapped = -np.unwrap(phase) / (cfg.c * dt)
    gamma = float(prim.imag[0] * scale)
    solid_max = None
    if cls.solid:
        solid_vals = np.array([cls.branch_values(ks.imag, b) for b in cls.solid])
        solid_max = float(solid_vals.max() * scale)
    return FDCurve(kgrid=curve.kgrid, dt=float(dt), cfl=cfl(cfg.c, dt, cfg.P, mesh.h),
                   primary_real=prim.real * scale, primary_real_unwrapped=unwrapped * scale,
                   primary_imag=prim.imag * scale, gamma_ibm=gamma,
                   corrected_imag=prim.imag * scale - gamma, solid_max_imag=solid_max,
                   stable=np.abs(lamA_mapped).max(axis=1) <= 1.0 + STABILITY_TOL,
                   mapping_error=mapping)


def _symbol_eigenvalues(cfg, h, kgrid):
    ops = local_operators(cfg, h)
    scale = h / (cfg.P + 1)
    return np.concatenate([eig_dense(ops.symbol(kn / scale))[0] for kn in kgrid])


def find_cfl_max(cfg: FRConfig, mesh: MeshSpec, kgrid=None, rtol=1e-4) -> float:
    """Largest stable CFL of the solid-free scheme (bisection on max |R(dt lambda)|).

    The solid-free global spectrum is the union of single-element symbol
    spectra, so the symbol is sampled over a full period kh in [0, 2 pi].
    """
    P, h = cfg.P, mesh.h
    if kgrid is None:
        kgrid = np.linspace(0.0, 2 * math.pi / (P + 1), 801)
    lam = _symbol_eigenvalues(cfg, h, np.asarray(kgrid, dtype=float))

    def stable(c_num):
        dt = dt_from_cfl(c_num, cfg.c, P, h)
        return np.abs(rk3_polynomial(dt * lam)).max() <= 1.0 + STABILITY_TOL

    lo, hi = 1e-6, 1.0
    if not stable(lo):
        raise BracketError(f"scheme unstable already at CFL={lo:g}")
    while stable(hi):
        lo, hi = hi, 2 * hi
        if hi > 1e6:
            raise BracketError("no unstable CFL found below 1e6")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if stable(mid) else (lo, mid)
    return lo


def one_period_kgrid(mesh: MeshSpec, P: int, samples=9):
    """Normalized wavenumbers covering one Bloch period pi/T of the global spectrum."""
    k = np.linspace(0.0, math.pi / mesh.T, samples)
    return k * mesh.h / (P + 1)


@dataclass(frozen=True)
class CriticalEta:
    eta_low: float
    eta_high: float
    dt: float
    cfl: float
    history: tuple = field(repr=False)
    fallback: bool = False

    @property
    def eta(self) -> float:
        return 0.5 * (self.eta_low + self.eta_high)


def solid_dissipation(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec, pen: PenalizationSpec,
                      dt, kgrid, solid_tol=SOLID_TOL):
    """Fully-discrete dissipation of the most unstable Solid branch.

    Branches are tracked over ``kgrid``; those with k-independent eigenvalues
    (spread below solid_tol/eta) are Solid.  Returns (max normalized
    Imag(k*_fd) over them, fallback flag); without any Solid branch every
    non-primary mode is considered and the flag is set.
    """
    scale = mesh.h / (cfg.P + 1)
    sets = semi_discrete_modes(cfg, mesh, mask, pen, np.asarray(kgrid) / scale)
    branches = track_branches(sets)
    spread = branch_spread(sets, branches)
    solid = np.flatnonzero(spread < solid_tol * pen.inv_eta)
    fallback = solid.size == 0
    lam = np.array([ms.eigenvalues for ms in sets])
    vals = np.take_along_axis(lam, branches, axis=1)
    if fallback:
        # primary: the branch whose k* is closest to khat at the first sample
        khat0 = sets[0].k / (1.0 - mask.r)
        keep = np.ones(vals.shape[1], dtype=bool)
        keep[np.argmin(np.abs(sets[0].kstar - khat0))] = False
        vals = vals[:, keep]
    else:
        vals = vals[:, solid]
    ks = fd_modified_wavenumbers(rk3_polynomial(dt * vals), dt, cfg.c)
    return float(ks.imag.max() * scale), fallback


def find_critical_eta(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec, dt, kgrid=None,
                      bracket=(0.1, 2.0), rtol=1e-3, eta_v=0.0) -> CriticalEta:
    """Smallest stable penalty time at fixed ``dt``, bracketed by bisection.

    The search variable is eta/dt inside ``bracket``; the target is the sign
    change of the most unstable Solid branch's fully-discrete dissipation
    (positive means growth).
    """
    if mask.Z < 1:
        raise ValueError("critical eta needs a solid (Z >= 1)")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if kgrid is None:
        kgrid = one_period_kgrid(mesh, cfg.P)
    history = []
    flags = []

    def diss(ratio):
        pen = PenalizationSpec(eta=ratio * dt, eta_v=eta_v)
        d, fb = solid_dissipation(cfg, mesh, mask, pen, dt, kgrid)
        history.append((ratio * dt, d))
        flags.append(fb)
        return d

    lo, hi = bracket
    d_lo, d_hi = diss(lo), diss(hi)
    if not (d_lo > 0 >= d_hi):
        raise BracketError(
            f"no stability change in eta/dt in [{lo}, {hi}]: solid dissipation "
            f"{d_lo:.4g} at {lo}, {d_hi:.4g} at {hi}")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if diss(mid) > 0:
            lo = mid
        else:
            hi = mid
    hist = tuple(sorted(history))
    verdict = [d > 0 for _, d in hist]
    # unstable samples must all sit below stable ones
    if any(not a and b for a, b in zip(verdict[:-1], verdict[1:])):
        raise MonotonicityError(f"stability verdict not monotone in eta: {hist}")
    return CriticalEta(eta_low=lo * dt, eta_high=hi * dt, dt=float(dt),
                       cfl=cfl(cfg.c, dt, cfg.P, mesh.h), history=hist, fallback=any(flags))
