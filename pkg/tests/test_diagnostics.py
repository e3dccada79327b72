import numpy as np

from genurn import (
    FertilitySpec,
    RateLaw,
    ReplicatorSpec,
    Stop,
    fertility_law,
    noise_decomposition,
    polya_law,
    replicator_law,
    simulate,
    validate_assumptions,
)

COORD = ReplicatorSpec.build([["table -1:0.1,0:0.2,1:0.4,2:0.3", "table -1:0.4,0:0.5,1:0.1"],
                              ["table -1:0.4,0:0.5,1:0.1", "table -1:0.1,0:0.2,1:0.4,2:0.3"]])


def test_deterministic_law_has_no_noise():
    # always add one ball of colour 1
    law = RateLaw([(1, 0)], lambda x: [1.0])
    traj = simulate(law, [50, 50], Stop(max_steps=2000))
    rep = noise_decomposition(traj, law)
    assert rep.max_noise == 0.0


def test_noise_within_jump_bound():
    for law, z0 in [(replicator_law(COORD), [10, 10]),
                    (polya_law(3), [1, 1, 1])]:
        traj = simulate(law, z0, Stop(max_steps=10_000), seed=1)
        rep = noise_decomposition(traj, law)
        assert rep.within_bound
        assert len(rep.U) > 0


def test_polya_bias_constant_is_bounded():
    law = polya_law(2)
    short = noise_decomposition(simulate(law, [1, 1], Stop(max_steps=5000), seed=2), law)
    long = noise_decomposition(simulate(law, [1, 1], Stop(max_steps=10_000), seed=2), law)
    # the Polya composition is a martingale and its field is zero, so b is pure rounding
    assert short.bias_constant <= 1e-6
    assert long.bias_constant <= 1e-6


def test_replicator_bias_constant_stable_under_doubling():
    law = replicator_law(COORD)
    short = noise_decomposition(simulate(law, [10, 10], Stop(max_steps=5000), seed=3), law)
    long = noise_decomposition(simulate(law, [10, 10], Stop(max_steps=10_000), seed=3), law)
    assert 0 < short.bias_constant <= long.bias_constant <= 2 * short.bias_constant


def test_replicator_passes_assumptions():
    law = replicator_law(COORD)
    rep = validate_assumptions(law, sample_pairs=100, seed=0)
    assert law.m == 4
    assert rep.ok
    assert rep.to_dict()["jump_ok"]


def test_step_rates_are_flagged():
    law = RateLaw([(1, 0), (0, 1)], lambda x: [0.5, 0.0] if x[0] < 0.5 else [0.0, 0.5], name="step")
    rep = validate_assumptions(law, sample_pairs=100, seed=0)
    assert not rep.lipschitz_ok
    assert not rep.ok


def test_fertility_a2_fit():
    law = fertility_law(FertilitySpec.additive([[1.0, 1.2], [1.2, 0.8]]))
    rep = validate_assumptions(law, sample_pairs=50, seed=1)
    assert set(rep.a2_fits) == {20, 200, 2000}
    assert rep.a2_ok
    assert max(rep.a2_fits.values()) <= law.a2_constant


def test_jump_violation_reported():
    law = RateLaw([(2, 0)], lambda x: [0.5], m=2)
    law.m = 1
    rep = validate_assumptions(law, sample_pairs=20, seed=0)
    assert not rep.jump_ok
    x, w = rep.jump_violations[0]
    assert tuple(w) == (2, 0)
