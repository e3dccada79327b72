"""Invariants checked over generated laws, states and seeds."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from genurn import (
    FertilitySpec,
    ReplicatorSpec,
    Stop,
    fertility_law,
    make_uniforms,
    mean_vector_field,
    normalize,
    polya_law,
    replicator_field,
    replicator_law,
    simulate,
)

law_text = st.one_of(
    st.integers(-1, 3).map(lambda c: f"const {c}"),
    st.tuples(st.integers(-1, 2), st.integers(0, 2)).map(lambda t: f"uniform {t[0]} {t[0] + t[1]}"),
    st.lists(st.floats(0.05, 1.0), min_size=2, max_size=4).map(
        lambda ws: "table " + ",".join(f"{v - 1}:{w / sum(ws)!r}" for v, w in enumerate(ws))),
)


@st.composite
def replicator_specs(draw, k_max=3):
    k = draw(st.integers(2, k_max))
    grid = lambda: [[draw(law_text) for _ in range(k)] for _ in range(k)]
    return ReplicatorSpec.build(grid(), grid(), [draw(law_text) for _ in range(k)])


@st.composite
def states(draw, k, lo=0, hi=40):
    z = draw(st.lists(st.integers(lo, hi), min_size=k, max_size=k))
    if sum(z) == 0:
        z[0] = 1
    return z


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=6))
def test_normalize_sums_to_one(z):
    x = normalize(z)
    if sum(z) == 0:
        assert not x.any()
    else:
        assert math.isclose(x.sum(), 1.0, rel_tol=0, abs_tol=1e-12)
        assert np.all(x >= 0)


@settings(max_examples=30, deadline=None)
@given(replicator_specs(), st.data(), st.integers(0, 2**32 - 1))
def test_clock_identity_and_jump_bound(spec, data, seed):
    law = replicator_law(spec)
    z0 = data.draw(states(spec.k, hi=20))
    traj = simulate(law, z0, Stop(max_steps=300), seed=seed)
    sizes, taus = traj.sizes, traj.taus
    expected = np.where(sizes[:-1] > 0, 1.0 / np.maximum(sizes[:-1], 1), 1.0)
    assert np.allclose(np.diff(taus), expected, rtol=0, atol=1e-12)
    assert np.all(np.diff(taus) > 0)
    jumps = np.abs(np.diff(traj.z, axis=0)).sum(axis=1)
    assert np.all(jumps <= law.m)
    assert traj.z.min() >= 0


def test_clock_accumulation_over_a_million_steps():
    traj = simulate(polya_law(2), [1, 1], Stop(max_steps=1_000_000), seed=0, record_stride=10**6)
    exact = sum(1.0 / n for n in range(2, 1_000_002))
    assert abs(traj.tau_max - exact) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(replicator_specs(), st.integers(0, 2**32 - 1))
def test_determinism(spec, seed):
    law = replicator_law(spec)
    a = simulate(law, [5] * spec.k, Stop(max_steps=500), seed=seed)
    b = simulate(law, [5] * spec.k, Stop(max_steps=500), seed=seed)
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.taus, b.taus)


@settings(max_examples=25, deadline=None)
@given(replicator_specs(k_max=4), st.integers(0, 2**32 - 1))
def test_keystone_mean_field(spec, seed):
    rng = np.random.default_rng(seed)
    f = mean_vector_field(replicator_law(spec))
    g = replicator_field(spec.mean_matrix())
    for _ in range(20):
        x = rng.dirichlet(np.ones(spec.k))
        assert np.abs(f(x) - g(x)).max() <= 1e-10
        assert abs(f(x).sum()) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(replicator_specs(), st.data())
def test_martingale_null(spec, data):
    law = replicator_law(spec)
    z = np.array(data.draw(states(spec.k, lo=5, hi=30)))
    x = z / z.sum()
    W, p = law.kernel(z)
    nxt = z[None, :] + W
    expected = p @ (nxt / nxt.sum(axis=1, keepdims=True) - x)
    R = 400
    u = make_uniforms(data.draw(st.integers(0, 2**32 - 1)))
    total = np.zeros(spec.k)
    for _ in range(R):
        z1 = np.array(law.sample(z.tolist(), u))
        x1 = normalize(z1)
        total += (x1 - x - expected) * z.sum()
    assert np.linalg.norm(total / R) <= 5 * 4 * law.m / math.sqrt(R)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
def test_fertility_conventions(g11, g12, g22, seed):
    law = fertility_law(FertilitySpec.additive([[g11, g12], [g12, g22]]))
    z0 = law.state_from_counts({(0, 0): 3, (0, 1): 4, (1, 1): 3})
    traj = simulate(law, z0, Stop(max_steps=200), seed=seed)
    Z = traj.z.reshape(-1, 2, 2)
    assert np.all(Z == Z.transpose(0, 2, 1))
    assert np.all(Z[:, [0, 1], [0, 1]] % 2 == 0)
    small = traj.sizes[:-1] < 4
    assert np.all(traj.sizes[1:][small] == 0)
