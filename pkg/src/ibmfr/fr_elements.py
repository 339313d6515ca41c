"""Reference-element machinery for nodal flux reconstruction (FR).

Solution points are the Legendre-Gauss nodes and the correction functions
are the left/right Radau polynomials, which makes the scheme identical to
nodal DG for linear advection.  Everything here is a pure function of the
polynomial order and the element size.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

P_MAX = 10

_NEWTON_TOL = 1e-15
_NEWTON_MAXITER = 100


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def legendre(n, x):
    """Legendre polynomial L_n and its derivative at ``x`` (three-term recurrence)."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    dp0, dp1 = np.zeros_like(x), np.ones_like(x)
    for m in range(1, n):
        p2 = ((2 * m + 1) * x * p1 - m * p0) / (m + 1)
        dp2 = dp0 + (2 * m + 1) * p1
        p0, p1 = p1, p2
        dp0, dp1 = dp1, dp2
    return p1, dp1


@dataclass(frozen=True)
class FRConfig:
    """Scheme parameters: order ``P``, speed ``c`` and upwinding ``lambda_upwind``.

    ``lambda_upwind = 1`` gives the upwind flux, ``0`` the central flux.
    """

    P: int
    c: float = 1.0
    lambda_upwind: float = 1.0
    correction_family: str = "radau_dg"

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 0:
            raise ValueError(f"P must be a non-negative integer, got {self.P!r}")
        if self.P > P_MAX:
            raise ValueError(f"P={self.P} unsupported (0 <= P <= {P_MAX})")
        if not 0.0 <= self.lambda_upwind <= 1.0:
            raise ValueError(f"lambda_upwind must lie in [0, 1], got {self.lambda_upwind}")
        if self.correction_family != "radau_dg":
            raise ValueError(f"unknown correction family {self.correction_family!r}")


@dataclass(frozen=True)
class NodeSet:
    nodes: np.ndarray
    barycentric_weights: np.ndarray
    quadrature_weights: np.ndarray

    @property
    def P(self) -> int:
        return len(self.nodes) - 1


def gauss_nodes(P: int) -> NodeSet:
    """Legendre-Gauss nodes (roots of L_{P+1}) with barycentric and quadrature weights.

    Newton iteration on the Legendre recurrence, started from Chebyshev-type
    guesses; each root is then reflected to make the set exactly symmetric.
    """
    if int(P) != P or P < 0:
        raise ValueError(f"P must be a non-negative integer, got {P!r}")
    if P > P_MAX:
        raise ValueError(f"P={P} unsupported (0 <= P <= {P_MAX})")
    n = P + 1
    i = np.arange(1, n + 1)
    x = -np.cos(np.pi * (4 * i - 1) / (4 * n + 2))
    for _ in range(_NEWTON_MAXITER):
        val, der = legendre(n, x)
        dx = val / der
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    x = np.sort(x)
    x = 0.5 * (x - x[::-1])
    if n % 2 == 1:
        x[P // 2] = 0.0

    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    _, der = legendre(n, x)
    wq = 2.0 / ((1.0 - x ** 2) * der ** 2)
    return NodeSet(_frozen(x), _frozen(w), _frozen(wq))


def diff_matrix(ns: NodeSet) -> np.ndarray:
    """D[i, j] = l_j'(r_i), barycentric form with the negative-sum diagonal."""
    x, w = ns.nodes, ns.barycentric_weights
    n = len(x)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (w[j] / w[i]) / (x[i] - x[j])
        D[i, i] = -np.sum(D[i])
    return D


def lagrange_row(ns: NodeSet, r: float) -> np.ndarray:
    """Values l_j(r) of all Lagrange basis polynomials at one point."""
    x, w = ns.nodes, ns.barycentric_weights
    d = r - x
    hit = np.isclose(d, 0.0, rtol=0.0, atol=1e-15)
    if hit.any():
        row = np.zeros(len(x))
        row[np.argmax(hit)] = 1.0
        return row
    t = w / d
    return t / t.sum()


def boundary_interpolation(ns: NodeSet) -> tuple[np.ndarray, np.ndarray]:
    """Rows extrapolating nodal data to r = -1 and r = +1."""
    return lagrange_row(ns, -1.0), lagrange_row(ns, 1.0)


def radau_corrections(P: int, r):
    """Left/right Radau correction polynomials g^L, g^R evaluated at ``r``."""
    a, _ = legendre(P + 1, r)
    b, _ = legendre(P, r)
    gL = 0.5 * (-1) ** (P + 1) * (a - b)
    gR = 0.5 * (a + b)
    return gL, gR


def radau_correction_derivatives(P: int, ns: NodeSet) -> tuple[np.ndarray, np.ndarray]:
    """Nodal derivatives (dg^L/dr, dg^R/dr) at the solution points."""
    if P < 0:
        raise ValueError("P must be non-negative")
    _, da = legendre(P + 1, ns.nodes)
    _, db = legendre(P, ns.nodes)
    gL_r = 0.5 * (-1) ** (P + 1) * (da - db)
    gR_r = 0.5 * (da + db)
    return gL_r, gR_r


@dataclass(frozen=True)
class LocalOperators:
    """Per-element FR operators; du_n/dt = L u_{n-1} + C u_n + R u_{n+1}."""

    D: np.ndarray
    l_left: np.ndarray
    l_right: np.ndarray
    gL_r: np.ndarray
    gR_r: np.ndarray
    L: np.ndarray
    C: np.ndarray
    R: np.ndarray
    h: float
    nodes: NodeSet = field(repr=False)

    @property
    def J(self) -> float:
        return self.h / 2.0

    def symbol(self, k: float) -> np.ndarray:
        """Single-element periodic symbol L e^{-ikh} + C + R e^{ikh}."""
        return self.L * np.exp(-1j * k * self.h) + self.C + self.R * np.exp(1j * k * self.h)


def local_operators(cfg: FRConfig, h: float) -> LocalOperators:
    if not h > 0:
        raise ValueError(f"element size must be positive, got h={h}")
    ns = gauss_nodes(cfg.P)
    D = diff_matrix(ns)
    lL, lR = boundary_interpolation(ns)
    gL_r, gR_r = radau_correction_derivatives(cfg.P, ns)
    c, lam = cfg.c, cfg.lambda_upwind
    up, down = c + lam * abs(c), c - lam * abs(c)

    L = -(1.0 / h) * np.outer(gL_r, up * lR)
    C = -(2.0 / h) * (
        c * D
        - 0.5 * np.outer(gL_r, up * lL)
        + 0.5 * np.outer(gR_r, (lam * abs(c) - c) * lR)
    )
    R = -(1.0 / h) * np.outer(gR_r, down * lL)
    return LocalOperators(
        D=_frozen(D), l_left=_frozen(lL), l_right=_frozen(lR),
        gL_r=_frozen(gL_r), gR_r=_frozen(gR_r),
        L=_frozen(L), C=_frozen(C), R=_frozen(R), h=float(h), nodes=ns,
    )
