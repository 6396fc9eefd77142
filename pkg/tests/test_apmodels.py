import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aprotnum import apmodels as ap

from conftest import make


def test_point_set_invariants(gamma_half):
    assert gamma_half.x(0) == 0.0
    assert gamma_half.spacing_ok(-2000, 2000)
    assert np.all(np.diff(gamma_half.window(-500, 500)) > 0)


def test_sine_lattice_guard():
    with pytest.raises(ValueError):
        ap.sine_lattice(1.2)


def test_custom_rule_must_pass_origin():
    with pytest.raises(ValueError):
        ap.PointSetModel(lambda i: np.asarray(i, dtype=float) + 0.5, 1.0, 1.0)


@pytest.mark.parametrize("x", [-1000.3, -2.0, -0.5, 0.0, 0.2, 1.0, 7.99, 12345.6])
def test_index_of_brackets(gamma_half, x):
    i = gamma_half.index_of(x)
    assert gamma_half.x(i) <= x < gamma_half.x(i + 1)


def test_shift_identity(gamma_half):
    assert ap.shift_point_set(gamma_half, 0) is gamma_half


def test_shift_example(gamma_half):
    i = np.arange(-50, 51)
    got = ap.shift_point_set(gamma_half, 1).x(i)
    want = i + 0.5 * np.sin(i + 1.0) - 0.5 * math.sin(1.0)
    assert np.allclose(got, want, atol=1e-14, rtol=0)


@given(st.integers(-300, 300), st.integers(-300, 300))
def test_point_set_group_law_exact(t1, t2):
    g = ap.sine_lattice(0.5)
    i = np.arange(-40, 41)
    lhs = g.shifted(t1).shifted(t2).x(i)
    rhs = g.shifted(t1 + t2).x(i)
    assert np.array_equal(lhs, rhs)


@given(st.integers(-200, 200), st.integers(-200, 200))
def test_potential_group_law_exact(t1, t2):
    p = make(
        q=ap.trig_potential([(1.0, 1.0), (0.5, math.sqrt(2.0), 0.3)]),
        v=ap.sine_sequence(1.0),
        gamma=ap.sine_lattice(0.5),
    )
    a = ap.shift_potential(ap.shift_potential(p, t2), t1)
    b = ap.shift_potential(p, t1 + t2)
    i = np.arange(-20, 21)
    xs = np.linspace(-15.0, 15.0, 301)
    assert np.array_equal(a.gamma.x(i), b.gamma.x(i))
    assert np.array_equal(a.V(i), b.V(i))
    assert np.array_equal(a.q_at(xs), b.q_at(xs))


def test_shift_potential_cos_example():
    p = make(q=ap.trig_potential([(1.0, 1.0)]))
    s = ap.shift_potential(p, 3)
    xs = np.linspace(-5, 5, 41)
    assert np.allclose(s.q_at(xs), np.cos(xs + 3), atol=1e-15)


def test_shift_piecewise_follows_gap_index(gamma_half):
    p = make(q=ap.piecewise_constant_potential(ap.alternating_sequence(1.0)), gamma=gamma_half)
    s = ap.shift_potential(p, 3)
    mids = 0.5 * (s.gamma.window(0, 10)[:-1] + s.gamma.window(0, 10)[1:])
    assert np.array_equal(s.q_at(mids), np.where(np.arange(3, 13) % 2 == 0, 1.0, -1.0))


def test_dist_identical(gamma_half):
    assert ap.point_set_dist(gamma_half, gamma_half, 100) == 0.0


def test_dist_integer_vs_sine():
    g = ap.sine_lattice(0.1)
    z = ap.periodic_lattice(1.0)
    d = ap.point_set_dist(z, g, 10_000)
    # brute force oracle: windowed sup of the index-matched offsets
    i = np.arange(-10_000, 10_001)
    brute = np.max(np.abs(0.1 * np.sin(i)))
    assert d == pytest.approx(brute, abs=1e-12)
    assert abs(d - 0.1) < 1e-3


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9), st.floats(0.1, 2.0))
def test_dist_bounded_by_half_max_spacing(a1, a2, w):
    g1 = ap.sine_lattice(a1 / max(w, 1.0), w)
    g2 = ap.sine_lattice(a2 / max(w, 1.0), w, 0.7)
    d = ap.point_set_dist(g1, g2, 300)
    assert d <= max(g1.M, g2.M) / 2 + 1e-12
    m = min(g1.m, g2.m)
    if d < m / 2:
        i = np.arange(-300, 301)
        assert d == pytest.approx(np.max(np.abs(g1.x(i) - g2.x(i))), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_dist_metric_axioms(a, b, c):
    gs = [ap.sine_lattice(x) for x in (a, b, c)]
    d = lambda u, v: ap.point_set_dist(u, v, 200)
    assert d(gs[0], gs[1]) == d(gs[1], gs[0])
    assert d(gs[0], gs[2]) <= d(gs[0], gs[1]) + d(gs[1], gs[2]) + 1e-12


def test_shift_contraction():
    z = ap.periodic_lattice(1.0)
    g = ap.sine_lattice(0.1)
    assert ap.shift_contraction_check(z, g, range(-100, 101), 1000)
    assert ap.shift_contraction_check(g, g, [0, 5, -7], 100)


def test_shift_contraction_precondition():
    z = ap.periodic_lattice(1.0)
    with pytest.raises(ap.PreconditionError):
        ap.shift_contraction_check(z, ap.periodic_lattice(2.0), [1], 10)


def test_entourage_diagonal_and_symmetry(quasi):
    assert ap.entourage_contains(quasi, quasi, 1e-9, 50)
    other = ap.shift_potential(quasi, 44)
    for r in (0.01, 0.05, 0.3, 1.0):
        assert ap.entourage_contains(quasi, other, r, 50) == ap.entourage_contains(other, quasi, r, 50)


def test_entourage_function_clause_ignores_neighbourhood():
    # q differs by 1 only within 0.1 of the lattice; excluded for r = 0.2
    z = ap.periodic_lattice(1.0)
    bumps = ap.PotentialSampler(ap._PositionOnly(_Bumps()), 1.0, "custom")
    p1 = make(gamma=z)
    p2 = make(q=bumps, gamma=z)
    assert ap.entourage_contains(p1, p2, 0.2, 30)
    assert not ap.entourage_contains(p1, p2, 0.05, 30)


class _Bumps:
    def __call__(self, x):
        d = np.abs(x - np.round(x))
        return np.where(d < 0.1, 1.0, 0.0)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.floats(-0.05, 0.05), min_size=3, max_size=3),
    st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
    st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
)
def test_entourage_semigroup(a, c, v):
    r = 0.2  # below m/2 for every lattice used here
    ps = [
        make(
            q=ap.trig_potential([(c[k] * 0.1, 1.0)]),
            v=ap.constant_sequence(v[k] * 0.1),
            gamma=ap.sine_lattice(a[k]),
        )
        for k in range(3)
    ]
    if ap.entourage_contains(ps[0], ps[1], r / 2, 60) and ap.entourage_contains(ps[1], ps[2], r / 2, 60):
        assert ap.entourage_contains(ps[0], ps[2], r, 60)


def test_entourage_gap_dyadic(quasi):
    other = make(q=quasi.q, v=ap.alternating_sequence(1.0 + 0.01), gamma=quasi.gamma)
    r = ap.entourage_gap(quasi, other, 30)
    assert r == 2.0 ** -6  # 0.01 < 2^-6 but not < 2^-7


def test_epsilon_periods_periodic():
    p = make(v=ap.constant_sequence(1.0))
    rep = ap.epsilon_periods(p, 1e-6, 30, 50)
    assert rep.found_periods == list(range(-30, 31))
    assert rep.window_bound == 1


def test_epsilon_periods_finds_44(gamma_half):
    p = make(gamma=gamma_half)
    rep = ap.epsilon_periods(p, 0.05, 200, 500)
    assert 44 in rep.found_periods
    # brute-force oracle for tau = 44 with matched indices
    i = np.arange(-500, 501)
    brute = np.max(np.abs(gamma_half.x(i + 44) - gamma_half.x(44) - gamma_half.x(i)))
    assert brute < 0.05
    assert all(
        np.max(np.abs(gamma_half.x(i + t) - gamma_half.x(t) - gamma_half.x(i))) < 0.05 for t in rep.found_periods
    )


def test_epsilon_periods_large_eps(gamma_half):
    p = make(gamma=gamma_half)
    rep = ap.epsilon_periods(p, gamma_half.M / 2 + 0.01, 20, 100)
    assert rep.found_periods == list(range(-20, 21))


def test_epsilon_periods_requires_positive_eps(free):
    with pytest.raises(ap.PreconditionError):
        ap.epsilon_periods(free, 0.0, 5, 5)


def test_relative_denseness():
    assert ap._relative_denseness([0], -3, 3) == 4
    assert ap._relative_denseness([-3, 0, 3], -3, 3) == 3
    assert ap._relative_denseness([], -3, 3) is None


def test_density_examples(gamma_half):
    assert ap.density(ap.periodic_lattice(1.0), 37) == 1.0
    assert ap.density(ap.periodic_lattice(2.0), 100) == 0.5
    assert abs(ap.density(gamma_half, 10_000) - 1.0) < 1e-4


@given(st.integers(1, 5000), st.floats(-0.9, 0.9))
def test_density_bounds(n, a):
    g = ap.sine_lattice(a)
    assert 1 / g.M - 1e-12 <= ap.density(g, n) <= 1 / g.m + 1e-12


def test_mean_value_seq_examples():
    assert ap.mean_value_seq(ap.alternating_sequence(1.0), 0, 1000) == 0.0
    assert ap.mean_value_seq(ap.constant_sequence(2.5), -7, 13) == 2.5
    assert abs(ap.mean_value_seq(ap.sine_sequence(1.0), 0, 100_000)) < 1e-4


def test_mean_value_potential_examples(gamma_half):
    p = make(q=ap.constant_potential(1.0), gamma=gamma_half)
    assert ap.mean_value_potential(p, -3.3, 41.7) == pytest.approx(1.0, abs=1e-13)
    p = make(v=ap.constant_sequence(1.0))
    assert ap.mean_value_potential(p, 0.0, 250.0) == pytest.approx(1.0, abs=1e-15)


def test_mean_value_potential_quadrature():
    p = make(q=ap.trig_potential([(1.0, 1.0)]), gamma=ap.sine_lattice(0.5))
    z1, z2 = -2.0, 31.0
    exact = (math.sin(z2) - math.sin(z1)) / (z2 - z1)
    # composite Simpson bound: (z2 - z1) h^4 / 180 with h <= 1.5 / 32
    assert ap.mean_value_potential(p, z1, z2, 33) == pytest.approx(exact, abs=(1.5 / 32) ** 4 / 180)


def test_mean_value_piecewise_constant(gamma_half):
    vals = ap.alternating_sequence(1.0)
    p = make(q=ap.piecewise_constant_potential(vals), gamma=gamma_half)
    n = 200
    xs = gamma_half.window(0, n)
    exact = math.fsum(np.diff(xs) * vals.window(0, n - 1)) / xs[-1]
    assert ap.mean_value_potential(p, 0.0, xs[-1]) == pytest.approx(exact, abs=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_mean_value_linear(a, b, c, d):
    g = ap.sine_lattice(0.3)
    q1, q2 = ap.trig_potential([(1.0, 1.0)]), ap.trig_potential([(1.0, 2.0)], c0=0.5)
    v1, v2 = ap.alternating_sequence(1.0), ap.sine_sequence(1.0)
    combo = make(
        q=ap.trig_potential([(a, 1.0), (b, 2.0)], c0=0.5 * b),
        v=ap.BiSequenceModel(lambda i: c * v1.rule(i) + d * v2.rule(i), 2.0),
        gamma=g,
    )
    parts = [make(q=q1, gamma=g), make(q=q2, gamma=g), make(v=v1, gamma=g), make(v=v2, gamma=g)]
    m = lambda p: ap.mean_value_potential(p, -5.0, 40.0)
    want = a * m(parts[0]) + b * m(parts[1]) + c * m(parts[2]) + d * m(parts[3])
    assert m(combo) == pytest.approx(want, abs=1e-9)


def test_mean_value_decomposition():
    from aprotnum.cli import decompose_sides

    p = make(
        q=ap.trig_potential([(1.0, 1.0), (1.0, math.sqrt(2.0))]),
        v=ap.alternating_sequence(1.0),
        gamma=ap.sine_lattice(0.5),
    )
    lhs, rhs = decompose_sides(p, 10_000.0)
    assert abs(lhs - rhs) < 1e-3
