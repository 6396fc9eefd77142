"""Almost periodic point sets, bi-sequences and generalized potentials.

Every object here is infinite in principle, so it is stored as a rule
(index -> position, index -> value, (gap index, position) -> value) rather
than as an array.  Anything that needs a sup or inf over Z truncates to a
caller-supplied window of indices.

Rules are vectorized: they receive numpy arrays and return numpy arrays.
They are small frozen dataclasses so that potentials can be pickled, hashed
and compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "PointSetModel",
    "BiSequenceModel",
    "PotentialSampler",
    "GeneralizedPotential",
    "ApDiagnosticsReport",
    "PreconditionError",
    "periodic_lattice",
    "sine_lattice",
    "constant_sequence",
    "alternating_sequence",
    "sine_sequence",
    "quasiperiodic_sequence",
    "periodic_sequence",
    "constant_potential",
    "trig_potential",
    "piecewise_constant_potential",
    "shift_point_set",
    "shift_potential",
    "point_set_dist",
    "shift_contraction_check",
    "entourage_contains",
    "entourage_gap",
    "epsilon_periods",
    "density",
    "mean_value_seq",
    "mean_value_potential",
]

DEFAULT_SAMPLES_PER_GAP = 64


class PreconditionError(ValueError):
    """Raised when an operation is called outside its domain."""


# ---------------------------------------------------------------------------
# rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _LinearRule:
    spacing: float

    def __call__(self, i):
        return self.spacing * np.asarray(i, dtype=float)


@dataclass(frozen=True)
class _SineRule:
    """x(i) = L*i + a*(sin(w*i + phi) - sin(phi))."""

    a: float
    omega: float
    phi: float
    spacing: float

    def __call__(self, i):
        i = np.asarray(i, dtype=float)
        return self.spacing * i + self.a * (np.sin(self.omega * i + self.phi) - math.sin(self.phi))


@dataclass(frozen=True)
class _ShiftedPositionRule:
    base: Callable
    tau: int

    def __call__(self, i):
        i = np.asarray(i, dtype=np.int64)
        return self.base(i + self.tau) - self.base(np.int64(self.tau))


@dataclass(frozen=True)
class _ConstantValues:
    value: float

    def __call__(self, i):
        return np.full(np.shape(i), self.value, dtype=float)


@dataclass(frozen=True)
class _AlternatingValues:
    amplitude: float

    def __call__(self, i):
        i = np.asarray(i, dtype=np.int64)
        return np.where(i % 2 == 0, self.amplitude, -self.amplitude).astype(float)


@dataclass(frozen=True)
class _CosineSum:
    """c0 + sum_k a_k cos(w_k t + phi_k), used for both sequences and q."""

    c0: float
    amplitudes: tuple
    omegas: tuple
    phases: tuple

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.c0, dtype=float)
        for a, w, p in zip(self.amplitudes, self.omegas, self.phases):
            out += a * np.cos(w * t + p)
        return out


@dataclass(frozen=True)
class _PeriodicValues:
    values: tuple

    def __call__(self, i):
        i = np.asarray(i, dtype=np.int64)
        return np.asarray(self.values, dtype=float)[i % len(self.values)]


@dataclass(frozen=True)
class _ShiftedIndexRule:
    base: Callable
    tau: int

    def __call__(self, i):
        return self.base(np.asarray(i, dtype=np.int64) + self.tau)


@dataclass(frozen=True)
class _PositionOnly:
    """Gap rule that ignores the gap index: q continuous across Gamma."""

    func: Callable

    def __call__(self, gap, x):
        return self.func(x)


@dataclass(frozen=True)
class _PiecewiseConstant:
    """f = u_i on (x_i, x_{i+1})."""

    values: Callable

    def __call__(self, gap, x):
        return np.broadcast_to(self.values(gap), np.shape(x)).astype(float)


@dataclass(frozen=True)
class _ShiftedGapRule:
    base: Callable
    tau: int
    offset: float

    def __call__(self, gap, x):
        return self.base(np.asarray(gap, dtype=np.int64) + self.tau, np.asarray(x, dtype=float) + self.offset)


def _root(rule, shifted_type):
    if isinstance(rule, shifted_type):
        return rule.base, rule.tau
    return rule, 0


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointSetModel:
    """A lattice {x_i} with x_0 = 0 and spacings in [m, M].

    ``rule`` maps an integer array of indices to positions.
    """

    rule: Callable
    m: float
    M: float

    def __post_init__(self):
        if not (self.m > 0 and self.M >= self.m):
            raise ValueError(f"need 0 < m <= M, got m={self.m}, M={self.M}")
        x0 = float(self.rule(np.int64(0)))
        if x0 != 0.0:
            raise ValueError(f"x(0) must be 0, got {x0}")

    def x(self, i):
        out = self.rule(np.asarray(i, dtype=np.int64))
        return float(out) if np.ndim(out) == 0 else out

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Positions x_lo, ..., x_hi (inclusive)."""
        return np.asarray(self.rule(np.arange(lo, hi + 1, dtype=np.int64)), dtype=float)

    def spacing_ok(self, lo: int, hi: int, tol: float = 1e-12) -> bool:
        d = np.diff(self.window(lo, hi))
        return bool(np.all(d >= self.m - tol) and np.all(d <= self.M + tol))

    def index_of(self, x):
        """Largest i with x_i <= x (vectorized)."""
        xa = np.asarray(x, dtype=float)
        a, b = xa / self.M, xa / self.m
        lo = np.floor(np.minimum(a, b)).astype(np.int64) - 1
        hi = np.floor(np.maximum(a, b)).astype(np.int64) + 2
        while True:
            open_ = hi - lo > 1
            if not open_.any():
                break
            mid = (lo + hi) // 2
            below = np.asarray(self.rule(mid)) <= xa
            lo = np.where(open_ & below, mid, lo)
            hi = np.where(open_ & ~below, mid, hi)
        return int(lo) if np.ndim(lo) == 0 else lo

    def shifted(self, tau: int) -> "PointSetModel":
        return shift_point_set(self, tau)


@dataclass(frozen=True)
class BiSequenceModel:
    """A bounded bi-sequence {v_i}, |v_i| <= bound."""

    rule: Callable
    bound: float

    def __call__(self, i):
        out = self.rule(np.asarray(i, dtype=np.int64))
        return float(out) if np.ndim(out) == 0 else out

    def window(self, lo: int, hi: int) -> np.ndarray:
        return np.asarray(self.rule(np.arange(lo, hi + 1, dtype=np.int64)), dtype=float)

    def shifted(self, tau: int) -> "BiSequenceModel":
        if tau == 0:
            return self
        base, t0 = _root(self.rule, _ShiftedIndexRule)
        t = t0 + int(tau)
        return BiSequenceModel(base if t == 0 else _ShiftedIndexRule(base, t), self.bound)


@dataclass(frozen=True)
class PotentialSampler:
    """The background q.

    ``rule(gap, x)`` returns q on the open gap (x_gap, x_{gap+1}) extended
    continuously to its endpoints, so integrators see one-sided limits.
    """

    rule: Callable
    bound: float
    kind: str = "custom"

    def on_gap(self, gap, x):
        return np.asarray(self.rule(np.asarray(gap, dtype=np.int64), np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class GeneralizedPotential:
    """The triple (q, V, Gamma): q(x) + sum_i v_i delta(x - x_i)."""

    q: PotentialSampler
    V: BiSequenceModel
    gamma: PointSetModel

    def q_at(self, x):
        """q at positions x, using the right limit at lattice points."""
        x = np.asarray(x, dtype=float)
        return self.q.on_gap(self.gamma.index_of(x), x)

    @property
    def field_bound(self) -> float:
        return self.q.bound

    def shifted(self, tau: int) -> "GeneralizedPotential":
        return shift_potential(self, tau)


@dataclass
class ApDiagnosticsReport:
    epsilon: float
    found_periods: list
    window_bound: Optional[int]
    search_range: tuple
    window: int = 0

    def summary(self) -> str:
        lo, hi = self.search_range
        ell = "not found in range" if self.window_bound is None else str(self.window_bound)
        return (
            f"eps={self.epsilon:g} range=[{lo},{hi}] window={self.window} "
            f"periods={len(self.found_periods)} ell={ell}"
        )


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------


def periodic_lattice(spacing: float = 1.0) -> PointSetModel:
    return PointSetModel(_LinearRule(float(spacing)), float(spacing), float(spacing))


def sine_lattice(a: float, omega: float = 1.0, phi: float = 0.0, spacing: float = 1.0) -> PointSetModel:
    """x_i = L*i + a*(sin(w*i + phi) - sin(phi)); requires |a|*w < L."""
    if not abs(a) * abs(omega) < spacing:
        raise ValueError(f"|a|*omega must be < spacing ({abs(a) * abs(omega)} >= {spacing})")
    swing = 2.0 * abs(a) * abs(math.sin(omega / 2.0))
    return PointSetModel(_SineRule(float(a), float(omega), float(phi), float(spacing)), spacing - swing, spacing + swing)


def constant_sequence(value: float) -> BiSequenceModel:
    return BiSequenceModel(_ConstantValues(float(value)), abs(float(value)))


def alternating_sequence(amplitude: float = 1.0) -> BiSequenceModel:
    """v_i = amplitude * (-1)^i."""
    return BiSequenceModel(_AlternatingValues(float(amplitude)), abs(float(amplitude)))


def sine_sequence(amplitude: float, omega: float = 1.0, phase: float = 0.0) -> BiSequenceModel:
    return quasiperiodic_sequence([(amplitude, omega, phase - math.pi / 2)])


def quasiperiodic_sequence(terms: Sequence[tuple], c0: float = 0.0) -> BiSequenceModel:
    """v_i = c0 + sum_k a_k cos(w_k i + phi_k)."""
    a, w, p = _unzip_terms(terms)
    return BiSequenceModel(_CosineSum(float(c0), a, w, p), abs(c0) + sum(abs(x) for x in a))


def periodic_sequence(values: Sequence[float]) -> BiSequenceModel:
    vals = tuple(float(v) for v in values)
    if not vals:
        raise ValueError("periodic sequence needs at least one value")
    return BiSequenceModel(_PeriodicValues(vals), max(abs(v) for v in vals))


def constant_potential(value: float) -> PotentialSampler:
    return PotentialSampler(_PositionOnly(_ConstantValues(float(value))), abs(float(value)), "constant")


def trig_potential(terms: Sequence[tuple], c0: float = 0.0) -> PotentialSampler:
    """q(x) = c0 + sum_k a_k cos(w_k x + phi_k)."""
    a, w, p = _unzip_terms(terms)
    return PotentialSampler(
        _PositionOnly(_CosineSum(float(c0), a, w, p)), abs(c0) + sum(abs(x) for x in a), "trig"
    )


def piecewise_constant_potential(values: BiSequenceModel) -> PotentialSampler:
    """q = u_i on (x_i, x_{i+1}) for whatever lattice the potential uses."""
    return PotentialSampler(_PiecewiseConstant(values.rule), values.bound, "piecewise")


def _unzip_terms(terms):
    terms = [tuple(t) for t in terms]
    for t in terms:
        if len(t) not in (2, 3):
            raise ValueError(f"term must be (amplitude, omega[, phase]), got {t}")
    a = tuple(float(t[0]) for t in terms)
    w = tuple(float(t[1]) for t in terms)
    p = tuple(float(t[2]) if len(t) == 3 else 0.0 for t in terms)
    return a, w, p


# ---------------------------------------------------------------------------
# shifts
# ---------------------------------------------------------------------------


def shift_point_set(gamma: PointSetModel, tau: int) -> PointSetModel:
    """Gamma . tau = {x_{i+tau} - x_tau}.

    Nested shifts collapse onto the unshifted rule, so the group law holds
    bit for bit.
    """
    tau = int(tau)
    if tau == 0:
        return gamma
    base, t0 = _root(gamma.rule, _ShiftedPositionRule)
    t = t0 + tau
    rule = base if t == 0 else _ShiftedPositionRule(base, t)
    return PointSetModel(rule, gamma.m, gamma.M)


def shift_potential(p: GeneralizedPotential, tau: int) -> GeneralizedPotential:
    """(f, V, Gamma) . tau = (f(. + x_tau), V . tau, Gamma . tau)."""
    tau = int(tau)
    if tau == 0:
        return p
    gbase, t0 = _root(p.gamma.rule, _ShiftedPositionRule)
    qbase, _ = _root(p.q.rule, _ShiftedGapRule)
    t = t0 + tau
    if t == 0:
        qrule = qbase
    else:
        qrule = _ShiftedGapRule(qbase, t, float(gbase(np.int64(t))))
    return GeneralizedPotential(
        PotentialSampler(qrule, p.q.bound, p.q.kind),
        p.V.shifted(tau),
        shift_point_set(p.gamma, tau),
    )


# ---------------------------------------------------------------------------
# metrics and almost-periodicity diagnostics
# ---------------------------------------------------------------------------


def _one_sided(g1: PointSetModel, g2: PointSetModel, window: int) -> float:
    x1 = g1.window(-window, window)
    j = g2.index_of(x1)
    left = np.abs(x1 - g2.x(j))
    right = np.abs(g2.x(j + 1) - x1)
    return float(np.max(np.minimum(left, right)))


def point_set_dist(g1: PointSetModel, g2: PointSetModel, window: int) -> float:
    """Windowed Hausdorff distance between two lattices.

    Only the points x_i with |i| <= window are tested, so this is a lower
    bound for the distance over all of Z.
    """
    if window < 1:
        raise PreconditionError("window must be >= 1")
    return max(_one_sided(g1, g2, window), _one_sided(g2, g1, window))


def shift_contraction_check(
    g1: PointSetModel, g2: PointSetModel, taus: Sequence[int], window: int, tol: float = 1e-12
) -> bool:
    """True iff dist(G1.tau, G2.tau) <= 2 dist(G1, G2) for every tau."""
    m = min(g1.m, g2.m)
    d = point_set_dist(g1, g2, window)
    if not d < m / 2:
        raise PreconditionError(f"dist={d:.6g} is not below m/2={m / 2:.6g}")
    for tau in taus:
        if point_set_dist(g1.shifted(tau), g2.shifted(tau), window) > 2 * d + tol:
            return False
    return True


def _function_clause(p1: GeneralizedPotential, p2: GeneralizedPotential, r: float, window: int, samples_per_gap: int) -> bool:
    x1 = p1.gamma.window(-window, window)
    lo, hi = x1[0], x1[-1]
    j = p2.gamma.index_of(np.array([lo, hi]))
    x2 = p2.gamma.window(int(j[0]), int(j[1]) + 1)
    pts = np.union1d(x1, x2)
    pts = pts[(pts >= lo) & (pts <= hi)]
    a, b = pts[:-1], pts[1:]
    frac = np.arange(1, samples_per_gap + 1) / (samples_per_gap + 1)
    xs = a[:, None] + (b - a)[:, None] * frac[None, :]
    # closed r-neighbourhood of Gamma_1 u Gamma_2
    keep = np.minimum(xs - a[:, None], b[:, None] - xs) > r
    xs = xs[keep]
    if xs.size == 0:
        return True
    return bool(np.max(np.abs(p1.q_at(xs) - p2.q_at(xs))) < r)


def entourage_contains(
    p1: GeneralizedPotential,
    p2: GeneralizedPotential,
    r: float,
    window: int,
    samples_per_gap: int = DEFAULT_SAMPLES_PER_GAP,
) -> bool:
    """Membership of (p1, p2) in the uniformity neighbourhood S_r.

    All three clauses (lattice distance, sup norm of V, sup of |f1 - f2|
    away from the closed r-neighbourhood of the lattices) are evaluated on
    the index window |i| <= window.
    """
    if not r > 0:
        raise PreconditionError("r must be positive")
    if window < 1:
        raise PreconditionError("window must be >= 1")
    if not point_set_dist(p1.gamma, p2.gamma, window) < r:
        return False
    dv = np.abs(p1.V.window(-window, window) - p2.V.window(-window, window))
    if not np.max(dv) < r:
        return False
    return _function_clause(p1, p2, r, window, samples_per_gap)


def entourage_gap(p1: GeneralizedPotential, p2: GeneralizedPotential, window: int, max_exp: int = 40) -> float:
    """Smallest dyadic r = 2^-k (k >= 0) with (p1, p2) in S_r; inf if none up to 1."""
    best = math.inf
    for k in range(max_exp + 1):
        r = 2.0 ** -k
        if entourage_contains(p1, p2, r, window):
            best = r
        else:
            break
    return best


def epsilon_periods(
    p: GeneralizedPotential,
    eps: float,
    tau_range: int,
    window: int,
    samples_per_gap: int = DEFAULT_SAMPLES_PER_GAP,
) -> ApDiagnosticsReport:
    """Windowed search for the eps-almost periods of p in [-tau_range, tau_range]."""
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    found = [
        tau
        for tau in range(-tau_range, tau_range + 1)
        if entourage_contains(shift_potential(p, tau), p, eps, window, samples_per_gap)
    ]
    return ApDiagnosticsReport(
        epsilon=eps,
        found_periods=found,
        window_bound=_relative_denseness(found, -tau_range, tau_range),
        search_range=(-tau_range, tau_range),
        window=window,
    )


def _relative_denseness(found: list, lo: int, hi: int) -> Optional[int]:
    """Smallest l such that every run of l consecutive integers in [lo, hi] meets found."""
    if not found:
        return None
    f = sorted(found)
    gaps = [f[0] - lo + 1, hi - f[-1] + 1]
    gaps += [b - a for a, b in zip(f, f[1:])]
    return max(gaps)


# ---------------------------------------------------------------------------
# densities and mean values
# ---------------------------------------------------------------------------


def density(gamma: PointSetModel, n: int) -> float:
    if n < 1:
        raise PreconditionError("n must be >= 1")
    return n / gamma.x(n)


def mean_value_seq(v: BiSequenceModel, n1: int, n2: int) -> float:
    if not n2 > n1:
        raise PreconditionError("need n2 > n1")
    return math.fsum(v.window(n1, n2 - 1)) / (n2 - n1)


def _simpson_weights(k: int) -> np.ndarray:
    w = np.ones(k)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def mean_value_potential(p: GeneralizedPotential, z1: float, z2: float, quad_points_per_gap: int = 17) -> float:
    """Mean of q + sum v_i delta(x - x_i) over [z1, z2).

    q is integrated gap by gap with composite Simpson, so jumps of q at the
    lattice never fall inside a quadrature panel.
    """
    if not z2 > z1:
        raise PreconditionError("need z2 > z1")
    k = quad_points_per_gap | 1
    if k < 3:
        k = 3
    i0 = p.gamma.index_of(z1)
    i1 = p.gamma.index_of(z2)
    xs = p.gamma.window(i0, i1 + 1)
    gaps = np.arange(i0, i1 + 1, dtype=np.int64)
    a = np.maximum(xs[:-1], z1)
    b = np.minimum(xs[1:], z2)
    live = b > a
    a, b, gaps = a[live], b[live], gaps[live]
    t = np.linspace(0.0, 1.0, k)
    nodes = a[:, None] + (b - a)[:, None] * t[None, :]
    vals = p.q.on_gap(np.broadcast_to(gaps[:, None], nodes.shape), nodes)
    integral = math.fsum(((b - a) / (k - 1)) * (vals @ _simpson_weights(k)))
    in_span = (xs >= z1) & (xs < z2)
    idx = np.arange(i0, i1 + 2, dtype=np.int64)[in_span]
    masses = math.fsum(p.V(idx)) if idx.size else 0.0
    return (integral + masses) / (z2 - z1)
