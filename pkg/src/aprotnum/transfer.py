"""SL(2, R) transfer matrices acting on column vectors (psi', psi)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .apmodels import GeneralizedPotential, PotentialSampler, PreconditionError
from .prufer import DEFAULT_GAP_STEP, IntegratorConfig, NonFiniteError, _gap_grid, _single_gap, advance

__all__ = [
    "PolarDecomp",
    "jump_matrix",
    "propagate_gap",
    "exact_propagator_constant",
    "polar_decompose",
    "g_map",
    "rotation",
    "matrix_vs_angle_check",
]

DET_TOL = 1e-6


@dataclass(frozen=True)
class PolarDecomp:
    """D = A U with A = [[r, z], [z, (1 + z^2)/r]] and U the rotation by vartheta."""

    r: float
    vartheta: float
    z: float

    @property
    def A(self) -> np.ndarray:
        return np.array([[self.r, self.z], [self.z, (1.0 + self.z * self.z) / self.r]])

    @property
    def U(self) -> np.ndarray:
        return rotation(self.vartheta)

    def matrix(self) -> np.ndarray:
        return self.A @ self.U


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def jump_matrix(v: float) -> np.ndarray:
    return np.array([[1.0, float(v)], [0.0, 1.0]])


def propagate_gap(
    q: PotentialSampler, e: float, x_from: float, x_to: float, cfg: IntegratorConfig, gap: int = 0
) -> np.ndarray:
    """RK4 fundamental matrix of d/dx (psi', psi) = [[0, q - E], [1, 0]] (psi', psi) on one gap."""
    if x_to < x_from:
        raise PreconditionError("need x_to >= x_from")
    if x_to == x_from:
        return np.eye(2)
    h_max = cfg.h_max if cfg.h_max is not None else min(DEFAULT_GAP_STEP, (x_to - x_from) / 50)
    qs, start, nsub, h = _single_gap(q, gap, x_from, x_to, h_max)
    out = _kernels.propagate_matrix(qs, start, nsub, h, float(e))
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("propagator became non-finite", gap)
    return out


def exact_propagator_constant(q0: float, e: float, length: float) -> np.ndarray:
    """Closed-form propagator for constant q over ``length``."""
    if length < 0:
        raise PreconditionError("length must be >= 0")
    k2 = e - q0
    L = length
    if k2 > 0:
        k = math.sqrt(k2)
        c, s = math.cos(k * L), math.sin(k * L)
        return np.array([[c, -k * s], [s / k, c]])
    if k2 < 0:
        kap = math.sqrt(-k2)
        c, s = math.cosh(kap * L), math.sinh(kap * L)
        return np.array([[c, kap * s], [s / kap, c]])
    return np.array([[1.0, 0.0], [L, 1.0]])


def _check_det(d: np.ndarray) -> None:
    det = d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0]
    if not abs(det - 1.0) <= DET_TOL:
        raise PreconditionError(f"matrix is not in SL(2,R): det = {det!r}")


def polar_decompose(d) -> PolarDecomp:
    """Unique D = A U with A symmetric positive definite and U orthogonal."""
    d = np.asarray(d, dtype=float)
    _check_det(d)
    s = d @ d.T
    # principal square root of a 2x2 SPD matrix with det s = 1
    a = (s + np.eye(2)) / math.sqrt(s[0, 0] + s[1, 1] + 2.0)
    det_a = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    a_inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det_a
    u = a_inv @ d
    theta = math.atan2(u[1, 0], u[0, 0])
    if theta == -math.pi:
        theta = math.pi
    return PolarDecomp(r=float(a[0, 0]), vartheta=theta, z=float(0.5 * (a[0, 1] + a[1, 0])))


def g_map(d) -> tuple:
    """D -> (r cos vartheta, r sin vartheta, z)."""
    pd = polar_decompose(d)
    return (pd.r * math.cos(pd.vartheta), pd.r * math.sin(pd.vartheta), pd.z)


def matrix_vs_angle_check(p: GeneralizedPotential, e: float, xi: float, n: int, cfg: IntegratorConfig) -> float:
    """Max deviation (mod 2 pi) between the matrix path and the scalar angle path.

    The vector (cos xi, sin xi) is pushed through RK4 gap propagators and
    jump matrices; its argument at each lattice point is compared with the
    reduced angle from the Prüfer integration.
    """
    if n < 0:
        raise PreconditionError("n must be >= 0")
    if n == 0:
        return 0.0
    h_max = cfg.step_for(p, e)
    angles = advance(p, e, [xi], 0, n, cfg)[:, 0]
    grid = _gap_grid(p, 0, n, h_max)
    vec = np.array([math.cos(xi), math.sin(xi)])
    worst = 0.0
    for g in range(n):
        prop = _kernels.propagate_matrix(grid.qs, grid.starts[g], grid.nsub[g], grid.h[g], float(e))
        vec = jump_matrix(grid.vend[g]) @ (prop @ vec)
        vec /= math.hypot(vec[0], vec[1])
        diff = math.atan2(vec[1], vec[0]) - angles[g]
        diff = abs(math.remainder(diff, 2 * math.pi))
        worst = max(worst, diff)
    return worst
