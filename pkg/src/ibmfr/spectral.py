"""Semi-discrete eigensolution and non-modal analysis.

Eigenvalues lambda_m of the global operator M(k) map to modified
wavenumbers k* = i lambda / c: Real(k*) is the numerical phase speed
(dispersion), Imag(k*) the damping (dissipation).  Curves are reported in
units normalized by the resolution scale h/(P+1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .fr_elements import FRConfig, gauss_nodes
from .ibm_assembly import (MaskSpec, MeshSpec, PenalizationSpec, PhaseMode,
                           assemble_semi_discrete, build_mask)

EIG_RESIDUAL_TOL = 1e-9
EIG_MAX_SIZE = 4096
SOLID_TOL = 1e-6
TIE_TOL = 1e-6


# worst residual/||A|| ratio seen by any checked decomposition in this process
_worst_ratio = [0.0]


def worst_residual_ratio(reset=False) -> float:
    """Largest ||A v - lambda v|| / ||A|| observed so far (optionally reset)."""
    val = _worst_ratio[0]
    if reset:
        _worst_ratio[0] = 0.0
    return val


class EigenSolverError(RuntimeError):
    pass


class ClassificationError(RuntimeError):
    pass


class ModeLabel(enum.IntEnum):
    PRIMARY = 0
    SECONDARY = 1
    SOLID = 2


def _eig_checked(A):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n > EIG_MAX_SIZE:
        raise ValueError(f"matrix of size {n} exceeds the dense limit {EIG_MAX_SIZE}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    try:
        w, V = scipy.linalg.eig(A, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise EigenSolverError(f"QR iteration failed for a {n}x{n} matrix: {exc}") from exc
    order = np.lexsort((-w.imag, -w.real))
    w, V = w[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    # largest column norm: a cheap lower bound on ||A||_2, so the test is never looser
    norm = float(np.sqrt((np.abs(A) ** 2).sum(axis=0).max())) if n else 0.0
    res = np.linalg.norm(A @ V - V * w, axis=0)
    worst = float(res.max()) if n else 0.0
    if norm > 0:
        _worst_ratio[0] = max(_worst_ratio[0], worst / norm)
    if worst > EIG_RESIDUAL_TOL * max(norm, np.finfo(float).tiny):
        raise EigenSolverError(
            f"eigenpair residual {worst:.3e} exceeds {EIG_RESIDUAL_TOL:g}*||A|| "
            f"(||A|| = {norm:.3e}) for a {n}x{n} matrix")
    return w, V, worst, norm


def eig_dense(A):
    """Full eigendecomposition of a dense square matrix.

    LAPACK geev (balancing, Hessenberg reduction, shifted QR).  Pairs come
    back sorted by decreasing real part, then decreasing imaginary part,
    with unit-norm eigenvectors; each pair is checked against the residual
    bound ||A v - lambda v|| <= 1e-9 ||A||.
    """
    w, V, _, _ = _eig_checked(A)
    return w, V


def modified_wavenumbers(eigenvalues, c):
    """k* with Real(k*) = -Imag(lambda)/c and Imag(k*) = Real(lambda)/c."""
    if c == 0:
        raise ValueError("advection speed c must be non-zero")
    return 1j * np.asarray(eigenvalues) / c


def rescale_wavenumber(k, r):
    """Wavenumber seen by the fluid part of the domain, k / (1 - r)."""
    if not 0 <= r < 1:
        raise ValueError(f"solid ratio must lie in [0, 1), got {r}")
    return np.asarray(k) / (1.0 - r)


@dataclass(frozen=True)
class ModeSet:
    k: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    kstar: np.ndarray
    residual: float
    norm: float
    trace: complex


@dataclass(frozen=True)
class Classification:
    """Branches tracked over the k-grid.

    ``branches[j, b]`` is the mode index of branch ``b`` at grid sample ``j``;
    ``labels[j, m]`` the label of mode ``m`` at sample ``j``.
    """

    branches: np.ndarray
    branch_labels: np.ndarray
    labels: np.ndarray
    primary: int
    solid: tuple
    solid_spread: np.ndarray

    def branch_values(self, table, b):
        """Pick branch ``b`` out of a per-sample, per-mode table."""
        idx = self.branches[:, b]
        return np.asarray(table)[np.arange(len(idx)), idx]


def mode_set(M, k, c) -> ModeSet:
    w, V, worst, norm = _eig_checked(M)
    return ModeSet(k=float(k), eigenvalues=w, eigenvectors=V,
                   kstar=modified_wavenumbers(w, c), residual=worst, norm=norm,
                   trace=complex(np.trace(M)))


def _match(prev: ModeSet, cur: ModeSet) -> np.ndarray:
    """Assignment prev mode -> cur mode maximizing eigenvector overlap.

    Overlaps are quantized to TIE_TOL; inside one quantum the smaller
    eigenvalue jump wins.
    """
    ov = np.abs(prev.eigenvectors.conj().T @ cur.eigenvectors)
    quanta = np.floor(ov / TIE_TOL)
    jump = np.abs(prev.eigenvalues[:, None] - cur.eigenvalues[None, :])
    cost = -quanta + 0.5 * jump / (jump.max() + 1e-300)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(rows), dtype=int)
    perm[rows] = cols
    return perm


def track_branches(mode_sets) -> np.ndarray:
    """branches[j, b]: index of branch b's mode at sample j (b = its index at j = 0)."""
    n = len(mode_sets[0].eigenvalues)
    branches = np.empty((len(mode_sets), n), dtype=int)
    branches[0] = np.arange(n)
    for j in range(1, len(mode_sets)):
        perm = _match(mode_sets[j - 1], mode_sets[j])
        branches[j] = perm[branches[j - 1]]
    return branches


def branch_spread(mode_sets, branches) -> np.ndarray:
    """Extent hypot(ptp Re, ptp Im) of every tracked branch's eigenvalues."""
    lam = np.array([ms.eigenvalues for ms in mode_sets])
    vals = np.take_along_axis(lam, branches, axis=1)
    return np.hypot(np.ptp(vals.real, axis=0), np.ptp(vals.imag, axis=0))


def classify_modes(mode_sets, r=0.0, inv_eta=0.0, khat0=None, k_norm_first=None,
                   solid_tol=SOLID_TOL, tie_tol=1e-3, primary_tol=0.5) -> Classification:
    """Track eigen-branches across ``mode_sets`` and label them.

    Primary: the branch with Real(k*)/khat closest to one at the first
    sample.  Solid: branches whose eigenvalue spread over the grid is below
    ``solid_tol / eta``.  Everything else is Secondary.
    """
    if not mode_sets:
        raise ValueError("no mode sets to classify")
    if k_norm_first is not None and k_norm_first > 0.01 + 1e-12:
        raise ValueError(f"k-grid must start near 0 (first normalized sample "
                         f"{k_norm_first:.4g} > 0.01)")
    n = len(mode_sets[0].eigenvalues)
    nk = len(mode_sets)
    branches = track_branches(mode_sets)

    first = mode_sets[0]
    if khat0 is None:
        khat0 = first.k / (1.0 - r)
    score = np.abs(first.kstar.real / khat0 - 1.0)
    order = np.argsort(score, kind="stable")
    if n > 1 and score[order[1]] - score[order[0]] < tie_tol * max(score[order[0]], 1e-12) + 1e-12:
        cands = ", ".join(f"k*={first.kstar[i]:.6g}" for i in order[:2])
        raise ClassificationError(
            f"ambiguous primary mode at k={first.k:.6g}: {cands} "
            "(two Bloch replicas equidistant from khat; retry with the pi/N shift)")
    if score[order[0]] > primary_tol:
        raise ClassificationError(
            f"no mode recovers khat={khat0:.6g} at the first sample (closest k*="
            f"{first.kstar[order[0]]:.6g}); toggle the pi/N shift")
    primary = int(np.where(branches[0] == order[0])[0][0])

    spread = branch_spread(mode_sets, branches)
    solid = []
    if inv_eta > 0:
        solid = [b for b in range(n) if b != primary and spread[b] < solid_tol * inv_eta]

    branch_labels = np.full(n, ModeLabel.SECONDARY, dtype=int)
    branch_labels[primary] = ModeLabel.PRIMARY
    branch_labels[solid] = ModeLabel.SOLID
    labels = np.empty((nk, n), dtype=int)
    for j in range(nk):
        labels[j, branches[j]] = branch_labels
    return Classification(branches=branches, branch_labels=branch_labels, labels=labels,
                          primary=primary, solid=tuple(solid), solid_spread=spread)


def ibm_induced_dissipation(primary_kstar, h, P):
    """gamma_IBM: normalized primary dissipation at the smallest k sample."""
    return float(np.imag(np.asarray(primary_kstar)[0]) * h / (P + 1))


def default_kgrid(n=200, lo=0.005, hi=math.pi):
    """Normalized wavenumbers k h/(P+1), uniform in (lo, hi]."""
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class DispersionCurve:
    kgrid: np.ndarray
    khat: np.ndarray
    primary_real: np.ndarray
    primary_imag: np.ndarray
    gamma_ibm: float
    corrected_imag: np.ndarray
    all_modes: np.ndarray
    labels: np.ndarray
    shift_applied: bool
    classification: Classification
    max_residual_ratio: float


def _tracking_grid(k_phys, mesh, max_step):
    """Insert samples so consecutive wavenumbers differ by at most ``max_step``."""
    pts = [k_phys[0]]
    keep = [0]
    for a, b in zip(k_phys[:-1], k_phys[1:]):
        m = max(1, math.ceil((b - a) / max_step - 1e-9))
        pts.extend(a + (b - a) * np.arange(1, m + 1) / m)
        keep.append(len(pts) - 1)
    return np.array(pts), np.array(keep)


def semi_discrete_modes(cfg, mesh, mask, pen, k_phys):
    out = []
    for k in k_phys:
        op = assemble_semi_discrete(k, cfg, mesh, mask, pen, PhaseMode.BLOCH)
        try:
            out.append(mode_set(op.entries, k, cfg.c))
        except EigenSolverError as exc:
            raise EigenSolverError(f"at k={k:.6g}: {exc}") from exc
    return out


def sweep_semi_discrete(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec,
                        pen: PenalizationSpec, kgrid=None, shift=False,
                        max_step=None) -> DispersionCurve:
    """Primary-mode dispersion/dissipation of the global operator over ``kgrid``.

    ``kgrid`` holds normalized wavenumbers k h/(P+1).  Branches are tracked on
    a refined internal grid (step at most pi/(4T) by default) because the
    global spectrum is pi/T-periodic in k; only the requested samples are
    returned.  ``shift`` offsets every k by pi/(N h), i.e. pi/N in units of 1/h.
    """
    kgrid = default_kgrid() if kgrid is None else np.asarray(kgrid, dtype=float)
    if np.any(kgrid <= 0) or np.any(np.diff(kgrid) <= 0):
        raise ValueError("kgrid must be positive and strictly increasing")
    P, h = cfg.P, mesh.h
    scale = h / (P + 1)
    k_phys = kgrid / scale
    offset = math.pi / (mesh.N * mesh.h) if shift else 0.0
    if max_step is None:
        max_step = math.pi / (4 * mesh.T)
    k_track, keep = _tracking_grid(k_phys, mesh, max_step)
    sets = semi_discrete_modes(cfg, mesh, mask, pen, k_track + offset)
    khat_phys = rescale_wavenumber(k_track, mask.r)
    cls_full = classify_modes(sets, r=mask.r, inv_eta=pen.inv_eta, khat0=khat_phys[0],
                              k_norm_first=kgrid[0])
    kstar = np.array([ms.kstar for ms in sets])
    prim = cls_full.branch_values(kstar, cls_full.primary)[keep]
    gamma = ibm_induced_dissipation(prim, h, P)
    lam = np.array([ms.eigenvalues for ms in sets])[keep]
    ratios = [ms.residual / max(ms.norm, 1e-300) for ms in sets]
    cls = Classification(branches=cls_full.branches[keep], branch_labels=cls_full.branch_labels,
                         labels=cls_full.labels[keep], primary=cls_full.primary,
                         solid=cls_full.solid, solid_spread=cls_full.solid_spread)
    return DispersionCurve(
        kgrid=kgrid, khat=rescale_wavenumber(kgrid, mask.r),
        primary_real=prim.real * scale, primary_imag=prim.imag * scale,
        gamma_ibm=gamma, corrected_imag=prim.imag * scale - gamma,
        all_modes=lam, labels=cls.labels, shift_applied=bool(shift),
        classification=cls, max_residual_ratio=float(max(ratios)))


def reference_curve(cfg: FRConfig, h: float, kgrid):
    """Standard-scheme (no solid) primary curve from the single-element symbol.

    Returns (real, imag) normalized by h/(P+1), tracked from the smallest k.
    """
    mesh = MeshSpec(T=h / 2.0, N=1)
    mask = build_mask(mesh, 0, gauss_nodes(cfg.P))
    curve = sweep_semi_discrete(cfg, mesh, mask, PenalizationSpec(), kgrid,
                                max_step=math.pi / (8 * mesh.T))
    return curve.primary_real, curve.primary_imag


def short_term_diffusion(M, u0, P, h=1.0, c=1.0, weights=None):
    """Short-term (non-modal) diffusion: the normalized Rayleigh quotient.

    (h / (c (P+1))) Real(<u0, M u0> / <u0, u0>); the h/c factor converts d/dt
    into d/dtau* with tau* = t c (P+1)/h.  ``weights`` defines the inner
    product <a, b> = sum w conj(a) b; for nodal states pass the Gauss
    quadrature weights so the quotient measures the L2 norm of the solution
    polynomial.  Default: Euclidean.
    """
    u0 = np.asarray(u0)
    w = np.ones(u0.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    nrm = float(np.sum(w * np.abs(u0) ** 2))
    if nrm == 0:
        raise ValueError("initial state must be non-zero")
    return float(h / (c * (P + 1)) * (np.sum(w * np.conj(u0) * (M @ u0)) / nrm).real)


@dataclass(frozen=True)
class NonModalCurve:
    kgrid: np.ndarray
    omega_tilde: np.ndarray
    omega_tilde_corrected: np.ndarray
    omega_tilde_k0: float


def nonmodal_sweep(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec, pen: PenalizationSpec,
                   kgrid=None) -> NonModalCurve:
    """Short-term diffusion for wave initial data exp(ikx) over ``kgrid``.

    The norm is the L2 norm of the piecewise solution polynomial, evaluated
    exactly by the element Gauss rule.
    """
    kgrid = default_kgrid() if kgrid is None else np.asarray(kgrid, dtype=float)
    ns = gauss_nodes(cfg.P)
    x = mesh.coordinates(ns)
    w = np.tile(ns.quadrature_weights, mesh.N)
    scale = mesh.h / (cfg.P + 1)

    def omega(k):
        M = assemble_semi_discrete(k, cfg, mesh, mask, pen, PhaseMode.BLOCH).entries
        return short_term_diffusion(M, np.exp(1j * k * x), cfg.P, mesh.h, cfg.c, w)

    om = np.array([omega(k) for k in kgrid / scale])
    om0 = omega(0.0)
    return NonModalCurve(kgrid=kgrid, omega_tilde=om, omega_tilde_corrected=om - om0,
                         omega_tilde_k0=om0)
