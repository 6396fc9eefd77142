"""Rotation-number estimation, energy scans and plateau detection."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .apmodels import GeneralizedPotential, PreconditionError, density
from .prufer import IntegratorConfig, advance

__all__ = [
    "RotationEstimate",
    "ScanRow",
    "estimate_rho",
    "estimate_rho_birkhoff",
    "energy_grid",
    "scan",
    "detect_plateaus",
]


@dataclass(frozen=True)
class RotationEstimate:
    energy: float
    rho: float
    error_est: float
    n_steps: int
    x_final: float


@dataclass(frozen=True)
class ScanRow:
    energy: float
    rho: float
    error_est: float
    n_steps: int
    x_final: float
    error: Optional[str] = None


def _check_horizon(n_steps: int) -> None:
    if n_steps < 2 or n_steps % 2:
        raise PreconditionError("n_steps must be even and >= 2")


def estimate_rho(
    p: GeneralizedPotential, e: float, xi: float, n_steps: int, cfg: IntegratorConfig
) -> RotationEstimate:
    """(theta(x_N) - xi) / x_N, with |rho(N) - rho(N/2)| as the error estimate."""
    _check_horizon(n_steps)
    half = n_steps // 2
    first = advance(p, e, [xi], 0, half, cfg, record=False)[0, 0]
    last = advance(p, e, [first], half, half, cfg, record=False)[0, 0]
    x_half, x_n = p.gamma.x(half), p.gamma.x(n_steps)
    rho = (last - xi) / x_n
    rho_half = (first - xi) / x_half
    return RotationEstimate(float(e), float(rho), float(abs(rho - rho_half)), n_steps, float(x_n))


def estimate_rho_birkhoff(
    p: GeneralizedPotential, e: float, xi: float, n_steps: int, cfg: IntegratorConfig
) -> RotationEstimate:
    """[Gamma] times the Birkhoff average of the one-step observable along the skew product.

    The angle is carried mod 2 pi between steps, so each term is the
    observable evaluated at a point of the base x circle, not a difference of
    lifts.
    """
    _check_horizon(n_steps)
    half = n_steps // 2
    reduced = xi % (2 * math.pi)
    _, inc = advance(p, e, [reduced], 0, n_steps, cfg, reduce=True)
    inc = inc[:, 0]
    s_half = math.fsum(inc[:half])
    s_all = s_half + math.fsum(inc[half:])
    rho = density(p.gamma, n_steps) * s_all / n_steps
    rho_half = density(p.gamma, half) * s_half / half
    return RotationEstimate(float(e), float(rho), float(abs(rho - rho_half)), n_steps, float(p.gamma.x(n_steps)))


def energy_grid(e_min: float, e_max: float, e_step: float) -> np.ndarray:
    if not e_step > 0:
        raise PreconditionError("e_step must be positive")
    if e_max < e_min:
        raise PreconditionError("need e_min <= e_max")
    count = int(math.floor((e_max - e_min) / e_step + 1e-9)) + 1
    return e_min + e_step * np.arange(count)


def _row(p, e, xi, n_steps, cfg) -> ScanRow:
    try:
        est = estimate_rho(p, e, xi, n_steps, cfg)
    except (ArithmeticError, ValueError) as exc:
        return ScanRow(float(e), math.nan, math.nan, n_steps, math.nan, f"{type(exc).__name__}: {exc}")
    return ScanRow(est.energy, est.rho, est.error_est, est.n_steps, est.x_final)


def scan(
    p: GeneralizedPotential,
    e_min: float = None,
    e_max: float = None,
    e_step: float = None,
    xi: float = 0.0,
    n_steps: int = 10_000,
    cfg: IntegratorConfig = IntegratorConfig(),
    energies: Optional[Sequence[float]] = None,
    jobs: Optional[int] = None,
) -> list:
    """One ScanRow per energy, sorted by energy.

    Rows are independent; with ``jobs > 1`` they run on a thread pool (the
    compiled kernels release the GIL).  Failures are recorded per row.
    """
    if energies is None:
        if not (e_min is not None and e_max is not None and e_step is not None):
            raise PreconditionError("give either energies or e_min, e_max, e_step")
        energies = energy_grid(e_min, e_max, e_step)
    energies = sorted(float(e) for e in energies)
    if not energies:
        raise PreconditionError("empty energy list")
    jobs = jobs or int(os.environ.get("ROTNUM_JOBS", 0)) or os.cpu_count() or 1
    if jobs == 1 or len(energies) == 1:
        rows = [_row(p, e, xi, n_steps, cfg) for e in energies]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda e: _row(p, e, xi, n_steps, cfg), energies))
    return sorted(rows, key=lambda r: r.energy)


def detect_plateaus(rows: Sequence[ScanRow], flat_tol: float = 1e-3, min_width: int = 5) -> list:
    """Runs of >= min_width consecutive rows whose rho spans at most flat_tol.

    Returns (e_lo, e_hi, mean rho) per run.  Runs are grown greedily from the
    left and never overlap; rows with a failed estimate break a run.
    """
    rhos = [r.rho for r in rows]
    out = []
    i, n = 0, len(rows)
    while i < n:
        if not math.isfinite(rhos[i]):
            i += 1
            continue
        lo = hi = rhos[i]
        j = i + 1
        while j < n and math.isfinite(rhos[j]):
            lo2, hi2 = min(lo, rhos[j]), max(hi, rhos[j])
            if hi2 - lo2 > flat_tol:
                break
            lo, hi = lo2, hi2
            j += 1
        if j - i >= min_width:
            out.append((rows[i].energy, rows[j - 1].energy, math.fsum(rhos[i:j]) / (j - i)))
            i = j
        else:
            i += 1
    return out
