"""Independent references for constant, periodic and piecewise-constant potentials."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .apmodels import GeneralizedPotential, PreconditionError, shift_potential
from .prufer import AngleTrajectory, IntegratorConfig, advance
from .transfer import exact_propagator_constant, jump_matrix

__all__ = [
    "PeriodicSpec",
    "OracleError",
    "closed_form_rho_constant",
    "kp_discriminant",
    "circle_map_rho",
    "exact_piecewise_evolve",
]

TWO_PI = 2 * math.pi


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodicSpec:
    """A potential with p . period == p; the spatial period is x_period."""

    potential: GeneralizedPotential
    lattice_period: int

    def __post_init__(self):
        if self.lattice_period < 1:
            raise ValueError("lattice_period must be >= 1")

    @property
    def spatial_period(self) -> float:
        return self.potential.gamma.x(self.lattice_period)

    def is_periodic(self, window: int = 50, tol: float = 1e-12) -> bool:
        p, k = self.potential, self.lattice_period
        s = shift_potential(p, k)
        i = np.arange(-window, window + 1)
        if np.max(np.abs(s.gamma.x(i) - p.gamma.x(i))) > tol:
            return False
        if np.max(np.abs(s.V(i) - p.V(i))) > tol:
            return False
        xs = np.linspace(p.gamma.x(-window), p.gamma.x(window), 20 * window + 7)
        return bool(np.max(np.abs(s.q_at(xs) - p.q_at(xs))) <= tol * (1 + p.q.bound))


def closed_form_rho_constant(q0: float, e: float) -> float:
    return math.sqrt(e - q0) if e > q0 else 0.0


def kp_discriminant(e: float, length: float, v: float) -> float:
    """Trace of the one-cell monodromy of the Kronig-Penney comb."""
    if not length > 0:
        raise PreconditionError("length must be positive")
    if e > 0:
        k = math.sqrt(e)
        return 2 * math.cos(k * length) + v * math.sin(k * length) / k
    if e < 0:
        kap = math.sqrt(-e)
        return 2 * math.cosh(kap * length) + v * math.sinh(kap * length) / kap
    return 2 + v * length


def _lift_table(spec: PeriodicSpec, e: float, grid_size: int, cfg: IntegratorConfig) -> np.ndarray:
    grid = TWO_PI * np.arange(grid_size) / grid_size
    g = advance(spec.potential, e, grid, 0, spec.lattice_period, cfg, record=False)[0]
    if np.any(np.diff(g) <= 0) or not g[-1] < g[0] + TWO_PI:
        raise OracleError("tabulated one-period map is not monotone")
    return np.append(g, g[0] + TWO_PI)


def circle_map_rho(
    spec: PeriodicSpec,
    e: float,
    grid_size: int = 256,
    iterations: int = 1_000_000,
    cfg: IntegratorConfig = IntegratorConfig(),
    xi0: float = 0.0,
    refine_tol: float = 1e-6,
    max_grid: int = 1 << 13,
) -> float:
    """Rotation number from the interpolated one-period lift.

    The lift Xi -> theta_E(x_p; Xi) is tabulated on ``grid_size`` points and
    iterated through monotone linear interpolation.  The grid is doubled
    until two consecutive grids agree to ``refine_tol``.
    """
    if grid_size < 16 or iterations < 1:
        raise PreconditionError("need grid_size >= 16 and iterations >= 1")
    L = spec.spatial_period
    n = grid_size
    prev = None
    while True:
        table = _lift_table(spec, e, n, cfg)
        end = _kernels.iterate_lift(table, float(xi0), int(iterations))
        rho = (end - xi0) / (iterations * L)
        if prev is not None and abs(rho - prev) < refine_tol:
            return rho
        if 2 * n > max_grid:
            return rho
        prev = rho
        n *= 2


def _field_bound(q: float, e: float) -> float:
    return max(1.0, abs(q - e))


def exact_piecewise_evolve(
    p: GeneralizedPotential, e: float, xi: float, n_steps: int, refine_cap: int = 1 << 14
) -> AngleTrajectory:
    """Angle trajectory from closed-form gap propagators and jump matrices.

    q must be constant on every gap (q.kind 'constant' or 'piecewise').  The
    lift is recovered by sampling each gap's exact solution so finely that
    the field bound max(1, |q - E|) times the sample spacing is below pi/2,
    which certifies that consecutive principal differences are the true
    increments.
    """
    if p.q.kind not in ("constant", "piecewise"):
        raise PreconditionError("exact evolution needs a piecewise-constant q")
    if n_steps < 1:
        raise PreconditionError("n_steps must be >= 1")
    xs = p.gamma.window(0, n_steps)
    gaps = np.arange(n_steps, dtype=np.int64)
    qv = p.q.on_gap(gaps, 0.5 * (xs[:-1] + xs[1:]))
    vs = p.V.window(1, n_steps)
    theta = float(xi)
    vec = np.array([math.cos(xi), math.sin(xi)])
    thetas = [theta]
    for g in range(n_steps):
        length = xs[g + 1] - xs[g]
        q0 = float(qv[g])
        count = max(8, math.ceil(length * (1 + math.sqrt(abs(e - q0))) * 4))
        while length / count * _field_bound(q0, e) >= math.pi / 2:
            count *= 2
            if count > refine_cap:
                raise OracleError(f"cannot certify branch tracking on gap {g}")
        start = vec
        angle = math.atan2(vec[1], vec[0])
        for j in range(1, count + 1):
            vec = exact_propagator_constant(q0, e, length * j / count) @ start
            vec /= math.hypot(vec[0], vec[1])
            new = math.atan2(vec[1], vec[0])
            theta += math.remainder(new - angle, TWO_PI)
            angle = new
        c = float(vs[g])
        vec = jump_matrix(c) @ vec
        vec /= math.hypot(vec[0], vec[1])
        after = math.atan2(vec[1], vec[0])
        # the shear keeps psi fixed, so the change is the principal difference
        theta += math.remainder(after - angle, TWO_PI)
        thetas.append(theta)
    return AngleTrajectory(float(e), float(xi), np.arange(n_steps + 1), xs, np.array(thetas))
