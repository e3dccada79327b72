import math

import numpy as np
import pytest

from genurn import (
    FertilitySpec,
    IntLaw,
    MutationMatrix,
    ReplicatorSpec,
    Stop,
    fertility_law,
    make_uniforms,
    mean_vector_field,
    mutation_fertility_law,
    replicator_law,
    simulate,
)
from genurn.models import genotypes, replicator_mean_matrix


def _support_dict(W, p):
    return {tuple(int(c) for c in w): float(q) for w, q in zip(W, p) if q > 0}


# -- integer laws ------------------------------------------------------------


def test_intlaw_descriptors():
    assert IntLaw.parse("const 3").mean == 3
    assert IntLaw.parse("uniform 0 1").mean == pytest.approx(0.5)
    t = IntLaw.parse("table -1:0.25, 2:0.75")
    assert t.mean == pytest.approx(1.25)
    assert (t.low, t.high) == (-1, 2)
    assert IntLaw.two_point(1.3).mean == pytest.approx(1.3)
    with pytest.raises(ValueError):
        IntLaw.parse("poisson 3")
    with pytest.raises(ValueError):
        IntLaw.parse("table 1:0.5")


def test_intlaw_draw_matches_mean():
    law = IntLaw.parse("table -1:0.2,0:0.1,1:0.3,3:0.4")
    u = make_uniforms(3)
    n = 1_000_000
    values = np.fromiter((law.draw(u) for _ in range(n)), dtype=float, count=n)
    sd = math.sqrt(sum(p * (v - law.mean) ** 2 for v, p in law.items()))
    assert abs(values.mean() - law.mean) <= 5 * sd / math.sqrt(n)


# -- replicator ------------------------------------------------------------------


def test_frozen_replicator_has_no_moves():
    law = replicator_law(ReplicatorSpec.deterministic([[0, 0], [0, 0]]))
    W, p = law.mean_support([0.3, 0.7])
    assert np.all(p == 0)


def test_single_payoff_entry_enumeration():
    # only R^{12} = 1: only the ordered (1, 2) draw adds a strategy-1 individual
    law = replicator_law(ReplicatorSpec.deterministic([[0, 1], [0, 0]]))
    d = _support_dict(*law.mean_support([0.5, 0.5]))
    assert d == {(1, 0): pytest.approx(0.25)}


def test_single_payoff_entry_both_orders():
    # a strategy-1 individual gains one offspring against strategy 2 whichever is drawn first
    spec = ReplicatorSpec.deterministic([[0, 1], [0, 0]], Rt=[[0, 1], [0, 0]])
    d = _support_dict(*replicator_law(spec).mean_support([0.5, 0.5]))
    assert d == {(1, 0): pytest.approx(0.5)}
    assert spec.mean_matrix()[0, 1] == 2


def test_replicator_total_probability():
    rng = np.random.default_rng(0)
    spec = ReplicatorSpec.build(
        [["table -1:0.2,1:0.5,2:0.3", "uniform 0 2"], ["const 1", "table -1:0.5,0:0.5"]],
        Rt=[["uniform -1 1", "const 0"], ["table 0:0.4,2:0.6", "const 1"]],
        r=["const 1", "const -1"])
    law = replicator_law(spec)
    for _ in range(100):
        x = rng.dirichlet(np.ones(2))
        W, p = law.mean_support(x)
        assert np.all(p >= 0)
        assert p.sum() <= 1 + 1e-12
        assert np.abs(W).sum(axis=1).max() <= law.m


def test_jump_bound_is_twice_max_progeny():
    spec = ReplicatorSpec.build([["table 0:0.5,3:0.5", "const 1"], ["const 0", "const 2"]])
    assert replicator_law(spec).m == 6


def test_mean_matrix_examples():
    M = [[1, 2], [0, 3]]
    spec = ReplicatorSpec.deterministic(M, Rt=M)
    assert np.array_equal(replicator_mean_matrix(spec), 2 * np.array(M))
    spec = ReplicatorSpec.build([["uniform 0 1"] * 2] * 2)
    assert np.allclose(replicator_mean_matrix(spec), 0.5)


def test_mean_matrix_monte_carlo():
    spec = ReplicatorSpec.build([["table -1:0.3,2:0.7", "uniform 0 3"], ["const 1", "table 0:0.9,1:0.1"]],
                                Rt=[["const 0", "table -1:0.5,1:0.5"], ["uniform 1 2", "const 2"]])
    A = replicator_mean_matrix(spec)
    u = make_uniforms(9)
    n = 1_000_000
    i, j = 0, 0
    draws = np.fromiter((spec.R[i][j].draw(u) + spec.Rt[i][j].draw(u) for _ in range(n)),
                        dtype=float, count=n)
    assert abs(draws.mean() - A[i, j]) <= 5 * draws.std() / math.sqrt(n)


def test_replicator_mean_field_keystone():
    rng = np.random.default_rng(1)
    spec = ReplicatorSpec.build([["table -1:0.1,0:0.2,1:0.4,2:0.3", "table -1:0.4,0:0.5,1:0.1"],
                                 ["uniform 0 2", "const -1"]],
                                Rt=[["const 1", "uniform -1 1"], ["table 0:0.3,2:0.7", "const 0"]])
    A = spec.mean_matrix()
    field = mean_vector_field(replicator_law(spec))
    for _ in range(200):
        x = rng.dirichlet(np.ones(2))
        assert np.allclose(field(x), x * (A @ x) - (x @ A @ x) * x, atol=1e-10, rtol=0)


def _empirical_agreement(law, z, draws, seed):
    u = make_uniforms(seed)
    z = list(z)
    W, p = law.mean_support(np.asarray(z) / sum(z))
    counts = {}
    for _ in range(draws):
        w = tuple(a - b for a, b in zip(law.sample(list(z), u), z))
        counts[w] = counts.get(w, 0) + 1
    for w, q in zip(W, p):
        f = counts.get(tuple(int(c) for c in w), 0) / draws
        sigma = math.sqrt(max(q * (1 - q), 1e-12) / draws)
        assert abs(f - q) <= 5 * sigma + 1e-3, (w, f, q)


def test_replicator_sampler_matches_mean_support():
    spec = ReplicatorSpec.build([["table -1:0.1,0:0.2,1:0.4,2:0.3", "table -1:0.4,0:0.5,1:0.1"],
                                 ["table -1:0.4,0:0.5,1:0.1", "uniform 0 2"]])
    _empirical_agreement(replicator_law(spec), [6000, 4000], 100_000, seed=2)


# -- fertility -----------------------------------------------------------------


def test_fertility_single_individual_goes_extinct():
    law = fertility_law(FertilitySpec.uniform(2, "const 2"))
    z = law.state_from_counts({(0, 1): 1})
    assert sum(z) == 2
    assert law.sample(list(z), make_uniforms(0)) == [0, 0, 0, 0]
    W, p = law.kernel(z)
    assert p.tolist() == [1.0]
    assert W[0].tolist() == [-c for c in z]


def test_fertility_extinction_below_two_individuals():
    law = fertility_law(FertilitySpec.uniform(2, "const 3"))
    for z in ([2, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 2]):
        assert law.sample(list(z), make_uniforms(1)) == [0, 0, 0, 0]


def test_single_allele_replacement_keeps_size():
    law = fertility_law(FertilitySpec.uniform(1, "const 2"))
    traj = simulate(law, [20], Stop(max_steps=500), seed=0)
    assert np.all(traj.sizes == 20)


def test_forced_heterozygote_offspring():
    law = fertility_law(FertilitySpec.uniform(2, "const 5"))
    z = law.state_from_counts({(0, 0): 1, (1, 1): 1})
    out = law.sample(list(z), make_uniforms(4))
    assert out == law.state_from_counts({(0, 1): 5})


def test_genotype_conventions_preserved():
    law = fertility_law(FertilitySpec.additive([[1.0, 1.3], [1.3, 0.8]]))
    traj = simulate(law, law.state_from_counts({(0, 1): 30, (0, 0): 5}),
                    Stop(max_steps=3000), seed=1)
    Z = traj.z.reshape(-1, 2, 2)
    assert np.all(Z == Z.transpose(0, 2, 1))
    assert np.all(Z[:, 0, 0] % 2 == 0)
    assert np.all(Z[:, 1, 1] % 2 == 0)
    assert np.all(traj.sizes % 2 == 0)


def test_fertility_sampler_matches_mean_support():
    law = fertility_law(FertilitySpec.additive([[0.6, 0.9], [0.9, 0.4]]))
    z = law.state_from_counts({(0, 0): 1500, (0, 1): 2500, (1, 1): 1000})
    _empirical_agreement(law, z, 100_000, seed=5)


def test_identity_mutation_is_draw_for_draw_identical():
    spec = FertilitySpec.additive([[1.0, 1.4], [1.4, 0.7]])
    z0 = fertility_law(spec).state_from_counts({(0, 1): 40})
    a = simulate(fertility_law(spec), z0, Stop(max_steps=2000), seed=3)
    b = simulate(mutation_fertility_law(spec, MutationMatrix.identity(2)), z0,
                 Stop(max_steps=2000), seed=3)
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.taus, b.taus)


def test_absorbing_mutation_yields_homozygotes():
    G = len(genotypes(2))
    M = np.zeros((G, G))
    M[:, 0] = 1.0
    law = mutation_fertility_law(FertilitySpec.uniform(2, "const 4"), MutationMatrix(2, M))
    z = law.state_from_counts({(0, 1): 1, (1, 1): 1})
    out = law.sample(list(z), make_uniforms(6))
    assert out == law.state_from_counts({(0, 0): 4})


def test_mutation_mean_field_converges_linearly():
    spec = FertilitySpec.additive([[1.0, 1.5], [1.5, 0.5]])
    base = mean_vector_field(fertility_law(spec))
    rng = np.random.default_rng(2)
    xs = [fertility_law(spec).random_composition(rng) for _ in range(20)]
    defects = []
    for eps in (1e-2, 1e-3, 1e-4):
        f = mean_vector_field(mutation_fertility_law(spec, MutationMatrix.uniform_rate(2, eps)))
        defects.append(max(np.abs(f(x) - base(x)).max() for x in xs))
    assert defects[0] > defects[1] > defects[2] > 0
    assert defects[0] / defects[1] == pytest.approx(10, rel=0.05)
    assert defects[1] / defects[2] == pytest.approx(10, rel=0.05)


def test_mutation_matrix_validation():
    with pytest.raises(ValueError):
        MutationMatrix(2, np.full((3, 3), 0.5))
    with pytest.raises(ValueError):
        MutationMatrix(2, np.eye(2))
