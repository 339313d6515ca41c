"""Time-domain runs of the penalized advection equation and the studies built on them.

Time stepping is three-stage third-order RK.  For this linear system the
n-step solution is A^n u0 with A = R(dt M), so the default "propagator"
stepper applies precomputed powers of A and checks the norm between chunks;
the "heun" stepper performs the stage updates one step at a time.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar

from .fr_elements import FRConfig, gauss_nodes
from .fully_discrete import STABILITY_TOL, amplification, rk3_polynomial
from .ibm_assembly import (MaskSpec, MeshSpec, PenalizationSpec, PhaseMode,
                           assemble_semi_discrete)
from .spectral import eig_dense

BLOWUP_FACTOR = 1e6
MAX_CHECKS = 256
GUIDELINE_C = {2: 0.09, 3: 0.09, 4: 0.05}


class ICForm(enum.Enum):
    SINE = "sine"
    EXP = "exp"


def workers() -> int:
    """Worker count from IBMFR_WORKERS (default: available cores)."""
    raw = os.environ.get("IBMFR_WORKERS")
    if raw is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity")
                   else (os.cpu_count() or 1))
    n = int(raw)
    if n < 1:
        raise ValueError(f"IBMFR_WORKERS must be a positive integer, got {raw!r}")
    return n


def _map(fn, items, n_workers=None):
    items = list(items)
    n_workers = workers() if n_workers is None else n_workers
    if n_workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))


def snap_wavenumber(k_norm, mesh: MeshSpec, P: int) -> float:
    """Closest periodic wavenumber m pi/T to the normalized value k h/(P+1)."""
    k = k_norm * (P + 1) / mesh.h
    m = round(k * mesh.T / math.pi)
    return m * math.pi / mesh.T


@dataclass(frozen=True)
class SimulationSpec:
    cfg: FRConfig
    mesh: MeshSpec
    mask: MaskSpec
    pen: PenalizationSpec
    dt: float
    k0: float
    t_final: float = 1.1
    ic_form: ICForm = ICForm.SINE
    stepper: str = "propagator"
    keep_snapshots: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final >= 0:
            raise ValueError(f"t_final must be non-negative, got {self.t_final}")
        m = self.k0 * self.mesh.T / math.pi
        if abs(m - round(m)) > 1e-9 * max(1.0, abs(m)):
            raise ValueError(f"k0={self.k0} is not periodic on [-T, T] (needs m*pi/T)")
        if self.stepper not in ("propagator", "heun"):
            raise ValueError(f"unknown stepper {self.stepper!r}")

    def coordinates(self):
        return self.mesh.coordinates(gauss_nodes(self.cfg.P))

    def initial_state(self):
        x = self.coordinates()
        if self.ic_form is ICForm.SINE:
            return np.sin(self.k0 * x)
        return np.exp(1j * self.k0 * x)


@dataclass(frozen=True)
class SimulationResult:
    final_state: np.ndarray
    error: float
    stable: bool
    blowup_time: float | None
    steps: int
    times: np.ndarray
    norms: np.ndarray
    snapshots: tuple = field(default=(), repr=False)


def error_rms(state, mesh: MeshSpec, mask: MaskSpec, x=None) -> float:
    """RMS of the state over the points downstream of the solid, x in [delta, T]."""
    state = np.asarray(state)
    if x is None:
        P = state.size // mesh.N - 1
        x = mesh.coordinates(gauss_nodes(P))
    window = (x >= mask.delta) & (x <= mesh.T)
    if not window.any():
        raise ValueError("error window [delta, T] contains no solution points")
    return float(np.sqrt(np.mean(np.abs(state[window]) ** 2)))


def _operator(spec: SimulationSpec):
    op = assemble_semi_discrete(0.0, spec.cfg, spec.mesh, spec.mask, spec.pen, PhaseMode.UNIT)
    M = np.array(op.entries)
    f = np.array(op.forcing)
    if np.any(f != 0):
        # constant source: carry a trailing unit component
        n = M.shape[0]
        Ma = np.zeros((n + 1, n + 1))
        Ma[:n, :n] = M
        Ma[:n, n] = f
        return Ma, True
    return M, False


def _heun_step(M, u, dt):
    k1 = M @ u
    k2 = M @ (u + dt / 3.0 * k1)
    k3 = M @ (u + 2.0 * dt / 3.0 * k2)
    return u + dt / 4.0 * (k1 + 3.0 * k3)


def simulate(spec: SimulationSpec) -> SimulationResult:
    with np.errstate(over="ignore", invalid="ignore"):
        return _simulate(spec)


def _simulate(spec):
    M, augmented = _operator(spec)
    u0 = spec.initial_state()
    if augmented:
        u0 = np.append(u0, 1.0)
    if np.iscomplexobj(u0):
        M = M.astype(complex)
    n_full = int(math.floor(spec.t_final / spec.dt * (1 + 1e-12)))
    last = spec.t_final - n_full * spec.dt
    if last <= 1e-12 * spec.dt:
        last = 0.0
    limit = BLOWUP_FACTOR * np.linalg.norm(u0)

    u = u0.copy()
    t = 0.0
    times, norms, snaps = [0.0], [float(np.linalg.norm(u0))], []
    blowup = None
    last_good = u.copy()

    def check(u, t):
        nrm = float(np.linalg.norm(u))
        times.append(t)
        norms.append(nrm)
        if spec.keep_snapshots:
            snaps.append((t, u.copy()))
        return np.isfinite(nrm) and nrm <= limit

    steps = 0
    if spec.stepper == "heun":
        for _ in range(n_full):
            u = _heun_step(M, u, spec.dt)
            steps += 1
            t = steps * spec.dt
            if not check(u, t):
                blowup = t
                break
            last_good = u
    else:
        chunk = 1 if n_full <= MAX_CHECKS else 2 ** math.ceil(math.log2(n_full / MAX_CHECKS))
        A = amplification(M, spec.dt)
        Ac = np.linalg.matrix_power(A, chunk)
        while steps < n_full:
            m = min(chunk, n_full - steps)
            u = (Ac if m == chunk else np.linalg.matrix_power(A, m)) @ u
            steps += m
            t = steps * spec.dt
            if not check(u, t):
                blowup = t
                break
            last_good = u
    if blowup is None and last > 0:
        u = _heun_step(M, u, last) if spec.stepper == "heun" else amplification(M, last) @ u
        steps += 1
        t = spec.t_final
        if not check(u, t):
            blowup = t
        else:
            last_good = u

    final = last_good if blowup is not None else u
    if augmented:
        final = final[:-1]
    err = error_rms(final, spec.mesh, spec.mask, spec.coordinates())
    return SimulationResult(final_state=final, error=err, stable=blowup is None,
                            blowup_time=blowup, steps=steps, times=np.array(times),
                            norms=np.array(norms), snapshots=tuple(snaps))


def spectral_critical_dt(eigenvalues, rtol=1e-3, tol=STABILITY_TOL) -> float:
    """Largest dt with max |R(dt lambda)| <= 1 + tol (bisection from below)."""
    lam = np.asarray(eigenvalues)
    rho = float(np.abs(lam).max())
    if rho == 0:
        return math.inf

    def ok(dt):
        return np.abs(rk3_polynomial(dt * lam)).max() <= 1.0 + tol

    lo, hi = 1e-6 / rho, 4.0 / rho
    if not ok(lo):
        raise ArithmeticError("operator has eigenvalues with positive real part")
    while ok(hi):
        hi *= 2
        if hi > 1e6 / rho:
            return math.inf
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def operator_critical_dt(cfg, mesh, mask, pen, rtol=1e-3) -> float:
    """Spectral stability limit of the time-stepping (unit-phase) operator."""
    M = assemble_semi_discrete(0.0, cfg, mesh, mask, pen, PhaseMode.UNIT).entries
    return spectral_critical_dt(eig_dense(M)[0], rtol)


@dataclass(frozen=True)
class SweepResult:
    eta_grid: np.ndarray
    eta_v_grid: np.ndarray
    error: np.ndarray
    stable: np.ndarray
    dt: np.ndarray
    critical_dt: np.ndarray
    eta_v_opt: np.ndarray
    opt_defined: np.ndarray


def _cell_spec(base: SimulationSpec, eta, eta_v, dt_policy, safety=0.5):
    pen = replace(base.pen, eta=float(eta), eta_v=float(eta_v))
    dcrit = operator_critical_dt(base.cfg, base.mesh, base.mask, pen)
    dt = base.dt if dt_policy == "fixed" else min(base.dt, safety * dcrit)
    return replace(base, pen=pen, dt=dt), dcrit


def _check_grid(g, name):
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size == 0 or not np.all(np.isfinite(g)):
        raise ValueError(f"{name} must be a finite 1-D grid")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return g


def sweep_eta_v(base: SimulationSpec, eta_grid, eta_v_grid, dt_policy="fixed",
                n_workers=None) -> SweepResult:
    """Error surface over (eta, eta_v); eta_v_opt is the grid argmin per eta.

    Unstable cells are excluded from the argmin and ties go to the smaller
    eta_v.  ``dt_policy="auto"`` lowers dt per cell to half the spectral
    stability limit whenever the base dt would be unstable.
    """
    eta_grid = _check_grid(eta_grid, "eta grid")
    eta_v_grid = _check_grid(eta_v_grid, "eta_v grid")
    if dt_policy not in ("fixed", "auto"):
        raise ValueError(f"unknown dt policy {dt_policy!r}")
    cells = [(a, b) for a in eta_grid for b in eta_v_grid]

    def run(cell):
        spec, dcrit = _cell_spec(base, *cell, dt_policy)
        res = simulate(spec)
        return res.error, res.stable, spec.dt, dcrit

    out = _map(run, cells, n_workers)
    shape = (eta_grid.size, eta_v_grid.size)
    err = np.array([o[0] for o in out]).reshape(shape)
    stable = np.array([o[1] for o in out]).reshape(shape)
    dts = np.array([o[2] for o in out]).reshape(shape)
    dcrit = np.array([o[3] for o in out]).reshape(shape)
    opt = np.full(eta_grid.size, np.nan)
    defined = stable.any(axis=1)
    for i in np.flatnonzero(defined):
        e = np.where(stable[i], err[i], np.inf)
        opt[i] = eta_v_grid[int(np.argmin(e))]
    return SweepResult(eta_grid, eta_v_grid, err, stable, dts, dcrit, opt, defined)


@dataclass(frozen=True)
class OptimalEtaV:
    eta: float
    eta_v_opt: float
    error_opt: float
    error_zero: float
    interior: bool
    grid: np.ndarray
    grid_error: np.ndarray
    grid_stable: np.ndarray

    @property
    def gain(self) -> float:
        return self.error_zero / self.error_opt


def log_grid(lo, hi, per_decade=8):
    n = int(round(math.log10(hi / lo) * per_decade)) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def find_optimal_eta_v(base: SimulationSpec, eta_v_grid=None, dt_policy="auto",
                       refine=True, rtol=0.02, n_workers=None) -> OptimalEtaV:
    """Location of the error dip in eta_v for the penalty time in ``base.pen``.

    The error curve on a log grid is scanned for interior local minima and
    the deepest one is taken; a monotone curve falls back to its argmin.
    The minimum is then refined on log10(eta_v) to ``rtol`` relative.
    """
    grid = log_grid(1e-3, 1e3) if eta_v_grid is None else _check_grid(eta_v_grid, "eta_v grid")
    if grid[0] <= 0:
        raise ValueError("eta_v grid must be positive")
    sw = sweep_eta_v(base, [base.pen.eta], np.concatenate([[0.0], grid]), dt_policy, n_workers)
    err0 = float(sw.error[0, 0])
    e = np.where(sw.stable[0, 1:], sw.error[0, 1:], np.inf)
    if not np.isfinite(e).any():
        raise ArithmeticError(f"every eta_v run is unstable at eta={base.pen.eta:g}")
    interior = [i for i in range(1, len(e) - 1)
                if np.isfinite(e[i]) and e[i] < e[i - 1] and e[i] <= e[i + 1]]
    i = min(interior, key=lambda j: (e[j], j)) if interior else int(np.argmin(e))
    best, best_err = grid[i], float(e[i])

    if refine and 0 < i < len(grid) - 1:
        def f(logv):
            spec, _ = _cell_spec(base, base.pen.eta, 10.0 ** logv, dt_policy)
            r = simulate(spec)
            return r.error if r.stable else math.inf

        lo, hi = math.log10(grid[i - 1]), math.log10(grid[i + 1])
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": math.log10(1.0 + rtol)})
        if res.fun < best_err:
            best, best_err = 10.0 ** res.x, float(res.fun)
    return OptimalEtaV(eta=base.pen.eta, eta_v_opt=float(best), error_opt=best_err,
                       error_zero=err0, interior=bool(interior), grid=grid,
                       grid_error=sw.error[0, 1:], grid_stable=sw.stable[0, 1:])


@dataclass(frozen=True)
class CriticalDt:
    dt: float
    dt_spectral: float
    mismatch: float
    history: tuple = field(repr=False, default=())


def find_critical_dt(cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec, pen: PenalizationSpec,
                     k0, t_final=1.1, rtol=1e-3, ic_form=ICForm.SINE) -> CriticalDt:
    """Largest dt whose run to ``t_final`` stays bounded, by bisection.

    The bracket is seeded from the spectral limit of the unit-phase operator;
    ``mismatch`` is the relative gap between the two verdicts (a run can
    survive slightly past the spectral limit because growth over the finite
    horizon stays below the blowup threshold).
    """
    d_spec = operator_critical_dt(cfg, mesh, mask, pen, rtol)
    history = []

    def ok(dt):
        spec = SimulationSpec(cfg, mesh, mask, pen, dt=dt, k0=k0, t_final=t_final,
                              ic_form=ic_form)
        s = simulate(spec).stable
        history.append((dt, s))
        return s

    lo, hi = 0.5 * d_spec, 1.5 * d_spec
    tries = 0
    while not ok(lo):
        lo, hi = 0.5 * lo, lo
        tries += 1
        if tries > 20:
            raise ArithmeticError("no stable time step found")
    tries = 0
    while ok(hi):
        lo, hi = hi, 2 * hi
        tries += 1
        if tries > 20 or hi > t_final:
            raise ArithmeticError(f"run stays bounded up to dt={hi:g}; no critical step")
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return CriticalDt(dt=lo, dt_spectral=d_spec, mismatch=abs(lo - d_spec) / d_spec,
                      history=tuple(sorted(history)))


@dataclass(frozen=True)
class ScalingFit:
    C: dict
    residual: dict
    cases: tuple


def fit_scaling(cases) -> ScalingFit:
    """C(P) = geometric mean of eta * eta_v_opt / r^2 over each order's cases."""
    groups: dict = {}
    for r, P, eta, eta_v in cases:
        if not (0 < r < 1 and eta > 0 and eta_v > 0):
            raise ValueError(f"invalid case {(r, P, eta, eta_v)}")
        groups.setdefault(int(P), []).append(eta * eta_v / r ** 2)
    if not groups:
        raise ValueError("no cases to fit")
    C, resid = {}, {}
    for P, vals in sorted(groups.items()):
        if len(vals) < 3:
            raise ValueError(f"order P={P} has {len(vals)} cases; need at least 3")
        v = np.array(vals)
        C[P] = float(np.exp(np.mean(np.log(v))))
        resid[P] = float(np.max(np.abs(v / C[P] - 1.0)))
    return ScalingFit(C=C, residual=resid, cases=tuple(tuple(c) for c in cases))


def eta_v_guideline(eta, r, P) -> float:
    """Suggested solid diffusivity C(P) r^2 / eta."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not 0 < r < 1:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    if P not in GUIDELINE_C:
        raise ValueError(f"no guideline constant for P={P} (tabulated: 2, 3, 4)")
    return GUIDELINE_C[P] * r * r / eta


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    ci: tuple
    etas: np.ndarray
    errors: np.ndarray
    excluded: tuple


def fit_decay_exponent(etas, errors, confidence=0.95) -> DecayFit:
    etas, errors = np.asarray(etas, float), np.asarray(errors, float)
    if etas.size < 2:
        raise ValueError("need at least two points")
    fit = stats.linregress(np.log(etas), np.log(errors))
    if etas.size > 2:
        half = stats.t.ppf(0.5 + confidence / 2, etas.size - 2) * fit.stderr
    else:
        half = math.nan
    return DecayFit(exponent=float(fit.slope), ci=(fit.slope - half, fit.slope + half),
                    etas=etas, errors=errors, excluded=())


def estimate_penalization_decay(cfg, mesh, mask, k0, etas, t_final=1.1) -> DecayFit:
    """Log-log slope of the downstream error against eta (informational)."""
    etas = np.sort(np.asarray(etas, float))
    if etas[0] <= 0 or math.log10(etas[-1] / etas[0]) < 2 - 1e-9:
        raise ValueError("eta list must be positive and span at least two decades")
    dt = min(1e-5, 0.5 * etas[0])
    used, errs, excluded = [], [], []
    for eta in etas:
        res = simulate(SimulationSpec(cfg, mesh, mask, PenalizationSpec(eta=eta), dt=dt,
                                      k0=k0, t_final=t_final))
        if eta < 0.5 * dt or not res.stable:
            excluded.append(float(eta))
            continue
        used.append(eta)
        errs.append(res.error)
    fit = fit_decay_exponent(used, errs)
    return replace(fit, excluded=tuple(excluded))
