"""Prüfer angle dynamics with delta-interactions.

Between lattice points the lift theta of arg(psi' + i psi) solves

    theta' = cos^2 theta - (q(x) - E) sin^2 theta,

and at x_n it jumps by J(v_n, theta(x_n-)), the argument change along the
straight unipotent path from I to [[1, v], [0, 1]].  Recorded angles are
right-continuous: theta(x_n) already contains the jump at x_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .apmodels import GeneralizedPotential, PotentialSampler, PreconditionError, shift_potential

__all__ = [
    "IntegratorConfig",
    "AngleTrajectory",
    "NonFiniteError",
    "jump_angle",
    "integrate_gap",
    "step_lattice",
    "evolve",
    "advance",
    "observable_F",
    "skew_step",
    "theta_at",
]

CHUNK = 2048
# step for a standalone gap when no lattice fixes m
DEFAULT_GAP_STEP = 0.0025
MAX_SUBSTEPS = 1 << 20


class NonFiniteError(ArithmeticError):
    """The integrator met a non-finite potential value or state."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``h_max=None`` means m/50 for the lattice in use.  The step actually
    taken on a gap is h_max halved until h * (1 + |E| + sup|q|) is at most
    ``substep_angle_cap``; since that product bounds |dtheta| over an RK4
    step, no step can exceed the cap.
    """

    h_max: Optional[float] = None
    substep_angle_cap: float = math.pi / 4
    record_lattice: bool = True

    def __post_init__(self):
        if self.h_max is not None and not (self.h_max > 0 and math.isfinite(self.h_max)):
            raise ValueError("h_max must be a positive finite number")
        if not self.substep_angle_cap > 0:
            raise ValueError("substep_angle_cap must be positive")

    def step_for(self, p: GeneralizedPotential, energy: float) -> float:
        m = p.gamma.m
        h = m / 50 if self.h_max is None else self.h_max
        if h > m / 4 * (1 + 1e-12):
            raise PreconditionError(f"h_max={h:g} exceeds m/4={m / 4:g}")
        bound = 1.0 + abs(energy) + p.q.bound
        while h * bound > self.substep_angle_cap:
            h *= 0.5
        return h


@dataclass
class AngleTrajectory:
    energy: float
    initial: float
    n: np.ndarray
    x: np.ndarray
    theta: np.ndarray

    @property
    def lattice_angles(self):
        return list(zip(self.n.tolist(), self.x.tolist(), self.theta.tolist()))

    def reduced(self) -> np.ndarray:
        return np.mod(self.theta, 2 * math.pi)


def jump_angle(c: float, xi: float) -> float:
    """J(c, xi): change of the continuous argument under the shear I -> [[1, c], [0, 1]]."""
    return float(_kernels.jump(float(c), float(xi)))


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------


@dataclass
class _GapGrid:
    xs: np.ndarray  # x_{n0}, ..., x_{n0+count}
    qs: np.ndarray
    starts: np.ndarray
    nsub: np.ndarray
    h: np.ndarray
    vend: np.ndarray  # v at the right end of each gap


def _substeps(lengths: np.ndarray, h_max: float) -> np.ndarray:
    # the 1e-9 keeps L/h = 50.000000000000007 from becoming 51 steps
    raw = np.ceil(lengths / h_max - 1e-9)
    if not np.all(raw <= MAX_SUBSTEPS):
        raise PreconditionError(
            f"step {h_max:g} needs more than {MAX_SUBSTEPS} substeps per gap; energy or potential is too large"
        )
    return np.maximum(1, raw).astype(np.int64)


def _sample_gaps(q: PotentialSampler, gaps: np.ndarray, left: np.ndarray, nsub: np.ndarray, h: np.ndarray):
    counts = 2 * nsub + 1
    starts = np.zeros(len(counts), dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    total = int(counts.sum())
    owner = np.repeat(np.arange(len(counts)), counts)
    j = np.arange(total) - starts[owner]
    x = left[owner] + j * (0.5 * h[owner])
    qs = q.on_gap(gaps[owner], x)
    if not np.all(np.isfinite(qs)):
        bad = int(owner[np.argmax(~np.isfinite(qs))])
        raise NonFiniteError(f"potential is not finite on gap {int(gaps[bad])}", int(gaps[bad]))
    return np.ascontiguousarray(qs), starts


def _gap_grid(p: GeneralizedPotential, n0: int, count: int, h_max: float) -> _GapGrid:
    xs = p.gamma.window(n0, n0 + count)
    lengths = np.diff(xs)
    nsub = _substeps(lengths, h_max)
    h = lengths / nsub
    gaps = np.arange(n0, n0 + count, dtype=np.int64)
    qs, starts = _sample_gaps(p.q, gaps, xs[:-1], nsub, h)
    vend = np.ascontiguousarray(p.V.window(n0 + 1, n0 + count))
    return _GapGrid(xs, qs, starts, nsub, h, vend)


def _single_gap(q: PotentialSampler, gap: int, x_from: float, x_to: float, h_max: float):
    length = np.array([x_to - x_from])
    nsub = _substeps(length, h_max)
    h = length / nsub
    qs, starts = _sample_gaps(q, np.array([gap], dtype=np.int64), np.array([x_from]), nsub, h)
    return qs, int(starts[0]), int(nsub[0]), float(h[0])


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def integrate_gap(
    q: PotentialSampler,
    e: float,
    theta0: float,
    x_from: float,
    x_to: float,
    cfg: IntegratorConfig,
    gap: int = 0,
) -> float:
    """theta(x_to-) from theta(x_from) across a gap free of lattice points."""
    if not x_to > x_from:
        raise PreconditionError("need x_to > x_from")
    h_max = cfg.h_max if cfg.h_max is not None else min(DEFAULT_GAP_STEP, (x_to - x_from) / 50)
    bound = 1.0 + abs(e) + q.bound
    while h_max * bound > cfg.substep_angle_cap:
        h_max *= 0.5
    qs, start, nsub, h = _single_gap(q, gap, x_from, x_to, h_max)
    out = _kernels.rk4_forward(float(theta0), qs, start, nsub, h, float(e))
    if not math.isfinite(out):
        raise NonFiniteError("angle became non-finite", gap)
    return float(out)


def step_lattice(p: GeneralizedPotential, e: float, theta_n: float, n: int, cfg: IntegratorConfig) -> float:
    """theta(x_{n+1}) from theta(x_n), jump at x_{n+1} included."""
    return float(advance(p, e, [theta_n], n, 1, cfg)[-1, 0])


def advance(
    p: GeneralizedPotential,
    e: float,
    thetas,
    n0: int,
    count: int,
    cfg: IntegratorConfig,
    record: bool = True,
    reduce: bool = False,
):
    """Evolve a batch of angles from x_{n0} through ``count`` gaps.

    Returns an array of shape (count, K) of angles at x_{n0+1..n0+count}
    when ``record`` is set, else shape (1, K) with the final angles.  With
    ``reduce`` the angles are carried mod 2*pi and the return value is the
    pair (angles, increments).
    """
    th = np.array(thetas, dtype=float).ravel().copy()
    k = th.size
    h_max = cfg.step_for(p, e)
    rows = count if record else 1
    out = np.empty((rows, k))
    incr = (np.empty((rows, k)) if record else np.zeros((1, k))) if reduce else None
    done = 0
    while done < count:
        c = min(CHUNK, count - done)
        grid = _gap_grid(p, n0 + done, c, h_max)
        buf = np.empty((c, k))
        ibuf = np.empty((c, k)) if reduce else np.empty((1, 1))
        bad = _kernels.advance_chunk(th, float(e), grid.qs, grid.starts, grid.nsub, grid.h, grid.vend, reduce, buf, ibuf)
        if bad >= 0:
            idx = n0 + done + bad
            raise NonFiniteError(f"angle became non-finite on gap {idx}", idx)
        if record:
            out[done : done + c] = buf
            if reduce:
                incr[done : done + c] = ibuf
        else:
            out[0] = buf[-1]
            if reduce:
                incr[0] += ibuf.sum(axis=0)
        done += c
    return (out, incr) if reduce else out


def retreat(p: GeneralizedPotential, e: float, thetas, n0: int, count: int, cfg: IntegratorConfig) -> np.ndarray:
    """Evolve angles at x_{n0} backwards to x_{n0-count}; returns the final angles."""
    th = np.array(thetas, dtype=float).ravel().copy()
    h_max = cfg.step_for(p, e)
    done = 0
    while done < count:
        c = min(CHUNK, count - done)
        start = n0 - done - c
        grid = _gap_grid(p, start, c, h_max)
        buf = np.empty((c, th.size))
        bad = _kernels.retreat_chunk(th, float(e), grid.qs, grid.starts, grid.nsub, grid.h, grid.vend, buf)
        if bad >= 0:
            raise NonFiniteError(f"angle became non-finite on gap {start + bad}", start + bad)
        done += c
    return th


def evolve(p: GeneralizedPotential, e: float, xi: float, n_steps: int, cfg: IntegratorConfig) -> AngleTrajectory:
    """theta_E(x_n; p, xi) for n = 0..n_steps."""
    if n_steps < 1:
        raise PreconditionError("n_steps must be >= 1")
    thetas = advance(p, e, [xi], 0, n_steps, cfg)[:, 0]
    return AngleTrajectory(
        energy=float(e),
        initial=float(xi),
        n=np.arange(n_steps + 1),
        x=p.gamma.window(0, n_steps),
        theta=np.concatenate([[float(xi)], thetas]),
    )


def theta_at(p: GeneralizedPotential, e: float, xi: float, k: int, cfg: IntegratorConfig) -> float:
    """theta_E(x_k; p, xi) for any integer k (backwards for k < 0)."""
    if k == 0:
        return float(xi)
    if k > 0:
        return float(advance(p, e, [xi], 0, k, cfg, record=False)[0, 0])
    return float(retreat(p, e, [xi], 0, -k, cfg)[0])


def observable_F(p: GeneralizedPotential, e: float, vartheta: float, cfg: IntegratorConfig) -> float:
    """One-lattice-step increment theta_E(x_1; p, vartheta) - vartheta."""
    return theta_at(p, e, vartheta, 1, cfg) - vartheta


def skew_step(p: GeneralizedPotential, e: float, vartheta: float, k: int, cfg: IntegratorConfig):
    """Phi_E^k(p, vartheta) = (p . k, theta_E(x_k; p, vartheta) mod 2 pi)."""
    theta = theta_at(p, e, vartheta, k, cfg)
    return shift_potential(p, k), theta % (2 * math.pi)
