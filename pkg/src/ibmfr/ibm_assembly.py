"""Global semi-discrete operator for penalized advection on a periodic 1-D mesh.

The domain is [-T, T] split into N equal elements.  The solid occupies the Z
elements immediately to the right of x = 0, and inside it the equation picks
up the penalty -(1/eta)(u - u_s) and, optionally, a diffusion eta_v u_xx
discretized with LDG.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fr_elements import FRConfig, NodeSet, gauss_nodes, local_operators


class PhaseMode(enum.Enum):
    """How the periodic wrap couples element N to element 1.

    BLOCH attaches exp(-+2ikT) to the corner blocks (ghost elements of a
    Bloch wave); UNIT is the plain periodic wrap used for time stepping.
    """

    BLOCH = "bloch"
    UNIT = "unit"


@dataclass(frozen=True)
class MeshSpec:
    T: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.T / self.N

    @property
    def J(self) -> float:
        return self.h / 2.0

    def element_edges(self) -> np.ndarray:
        return -self.T + self.h * np.arange(self.N + 1)

    def coordinates(self, ns: NodeSet) -> np.ndarray:
        """Physical coordinates of all solution points, element-major."""
        left = self.element_edges()[:-1]
        return (left[:, None] + 0.5 * self.h * (ns.nodes[None, :] + 1.0)).ravel()


@dataclass(frozen=True)
class MaskSpec:
    Z: int
    r: float
    chi: np.ndarray
    delta: float

    @property
    def solid_points(self) -> int:
        return int(self.chi.sum())


@dataclass(frozen=True)
class PenalizationSpec:
    """Penalty time ``eta`` (``math.inf`` switches the penalty off),
    solid diffusivity ``eta_v`` and the LDG flux parameters."""

    eta: float = math.inf
    eta_v: float = 0.0
    u_s: float = 0.0
    ldg_beta: float = 0.5
    ldg_tau: float = 0.1

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")
        if not self.eta_v >= 0:
            raise ValueError(f"eta_v must be non-negative, got {self.eta_v!r}")

    @property
    def inv_eta(self) -> float:
        return 0.0 if math.isinf(self.eta) else 1.0 / self.eta


@dataclass(frozen=True)
class GlobalOperator:
    k: float
    entries: np.ndarray
    cfg: FRConfig
    mesh: MeshSpec
    mask: MaskSpec
    pen: PenalizationSpec
    phase_mode: PhaseMode
    # constant source (chi/eta) u_s; zero unless u_s != 0
    forcing: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def apply(self, u):
        return self.entries @ u + self.forcing


def build_mask(mesh: MeshSpec, Z: int, nodes: NodeSet) -> MaskSpec:
    if int(Z) != Z or Z < 0 or Z >= mesh.N:
        raise ValueError(f"Z must satisfy 0 <= Z < N={mesh.N}, got {Z!r}")
    n = nodes.P + 1
    chi = np.zeros(mesh.N * n)
    if Z > 0:
        if mesh.N % 2:
            raise ValueError("x = 0 must be an element interface (N even) when Z > 0")
        if Z > mesh.N // 2:
            raise ValueError(f"solid of Z={Z} elements does not fit in (0, T] with N={mesh.N}")
        first = mesh.N // 2
        chi[first * n:(first + Z) * n] = 1.0
    chi.setflags(write=False)
    return MaskSpec(Z=int(Z), r=Z / mesh.N, chi=chi, delta=Z * mesh.h)


def solid_ratio_2d(S_solid: float, S_domain: float) -> float:
    """Square root of the solid-to-domain area ratio."""
    if not (S_solid > 0 and S_domain > 0):
        raise ValueError("areas must be positive")
    if S_solid >= S_domain:
        raise ValueError("solid area must be smaller than the domain area")
    return math.sqrt(S_solid / S_domain)


def _wrap_phases(k, mesh, phase_mode):
    if phase_mode is PhaseMode.BLOCH:
        return np.exp(-2j * k * mesh.T), np.exp(2j * k * mesh.T)
    return 1.0, 1.0


def _shift_matrices(N, left_phase, right_phase):
    """(SL v)_e = v_{e-1}, (SR v)_e = v_{e+1}, periodic with wrap phases."""
    dtype = complex if np.iscomplexobj(np.asarray([left_phase, right_phase])) else float
    SL = np.zeros((N, N), dtype=dtype)
    SR = np.zeros((N, N), dtype=dtype)
    for e in range(N):
        SL[e, (e - 1) % N] += left_phase if e == 0 else 1.0
        SR[e, (e + 1) % N] += right_phase if e == N - 1 else 1.0
    return SL, SR


def assemble_ldg_second_derivative(cfg: FRConfig, mesh: MeshSpec,
                                   phase_mode: PhaseMode = PhaseMode.UNIT, k: float = 0.0,
                                   beta: float = 0.5, tau: float = 0.1) -> np.ndarray:
    """Global LDG approximation of d^2/dx^2 built from two FR sweeps.

    Gradient sweep q = du/dx with u_hat = {u} - beta [u]; divergence sweep
    with q_hat = {q} + beta [q] + (tau/h) [u], where [a] = a^+ - a^- is the
    jump across an interface (right trace minus left trace).  With beta = 1/2
    u_hat is the left (upstream for c > 0) trace and q_hat the right one; the
    tau term is dissipative.
    """
    ops = local_operators(cfg, mesh.h)
    N, n, h = mesh.N, cfg.P + 1, mesh.h
    I_N = np.eye(N)
    TL = np.kron(I_N, ops.l_left[None, :])
    TR = np.kron(I_N, ops.l_right[None, :])
    GL = np.kron(I_N, ops.gL_r[:, None])
    GR = np.kron(I_N, ops.gR_r[:, None])
    Dg = np.kron(I_N, ops.D)
    SL, SR = _shift_matrices(N, *_wrap_phases(k, mesh, phase_mode))

    # interface states seen by element e: left interface (SL TR | TL), right (TR | SR TL)
    uL_minus, uL_plus = SL @ TR, TL
    uR_minus, uR_plus = TR, SR @ TL

    def u_hat(minus, plus):
        return (0.5 + beta) * minus + (0.5 - beta) * plus

    Q = (2.0 / h) * (Dg + GL @ (u_hat(uL_minus, uL_plus) - TL)
                     + GR @ (u_hat(uR_minus, uR_plus) - TR))

    qL_minus, qL_plus = SL @ TR @ Q, TL @ Q
    qR_minus, qR_plus = TR @ Q, SR @ TL @ Q

    def q_hat(qm, qp, um, up):
        return (0.5 - beta) * qm + (0.5 + beta) * qp + (tau / h) * (up - um)

    qhat_L = q_hat(qL_minus, qL_plus, uL_minus, uL_plus)
    qhat_R = q_hat(qR_minus, qR_plus, uR_minus, uR_plus)
    return (2.0 / h) * (Dg @ Q + GL @ (qhat_L - TL @ Q) + GR @ (qhat_R - TR @ Q))


def assemble_semi_discrete(k: float, cfg: FRConfig, mesh: MeshSpec, mask: MaskSpec,
                           pen: PenalizationSpec,
                           phase_mode: PhaseMode = PhaseMode.BLOCH) -> GlobalOperator:
    n = cfg.P + 1
    size = mesh.N * n
    if mask.chi.shape != (size,):
        raise ValueError(f"mask has {mask.chi.size} points, operator needs {size}")
    ops = local_operators(cfg, mesh.h)
    left_phase, right_phase = _wrap_phases(k, mesh, phase_mode)
    dtype = complex if phase_mode is PhaseMode.BLOCH else float
    M = np.zeros((size, size), dtype=dtype)
    N = mesh.N

    for e in range(N):
        rows = slice(e * n, (e + 1) * n)
        M[rows, e * n:(e + 1) * n] += ops.C
        el, er = (e - 1) % N, (e + 1) % N
        M[rows, el * n:(el + 1) * n] += ops.L * (left_phase if e == 0 else 1.0)
        M[rows, er * n:(er + 1) * n] += ops.R * (right_phase if e == N - 1 else 1.0)

    chi = mask.chi
    M[np.diag_indices(size)] -= chi * pen.inv_eta
    if pen.eta_v > 0:
        D2 = assemble_ldg_second_derivative(cfg, mesh, phase_mode, k,
                                            pen.ldg_beta, pen.ldg_tau)
        M += pen.eta_v * chi[:, None] * D2
    forcing = chi * pen.inv_eta * pen.u_s
    M.setflags(write=False)
    forcing.setflags(write=False)
    return GlobalOperator(k=k, entries=M, cfg=cfg, mesh=mesh, mask=mask, pen=pen,
                          phase_mode=phase_mode, forcing=forcing)
