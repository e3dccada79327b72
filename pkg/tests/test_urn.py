import io
import math

import numpy as np
import pytest

from genurn import (
    OutOfRangeError,
    RateLaw,
    Stop,
    alpha_and_l1,
    interpolate,
    make_uniforms,
    normalize,
    polya_law,
    pure_death_law,
    read_ndjson,
    simulate,
    step,
    write_ndjson,
)
from genurn.urn import replicate_seed_sequence


@pytest.mark.parametrize("w, expected", [
    ((1, -1, 0), (0, 2)),
    ((2, 3), (5, 5)),
    ((0, 0, 0, 0), (0, 0)),
])
def test_alpha_and_l1(w, expected):
    assert alpha_and_l1(w) == expected


def test_normalize_examples():
    assert np.array_equal(normalize([0, 0, 0]), [0.0, 0.0, 0.0])
    assert np.allclose(normalize([2, 2]), [0.5, 0.5])
    assert np.allclose(normalize([1, 0, 3]), [0.25, 0.0, 0.75])


def test_step_from_null_state_is_absorbing():
    u = make_uniforms(0)
    z, tau = step(polya_law(3), [0, 0, 0], 2.5, u)
    assert z == [0, 0, 0]
    assert tau == 3.5


def test_step_polya_adds_one_ball():
    u = make_uniforms(1)
    z, tau = step(polya_law(2), [3, 5], 0.0, u)
    assert sum(z) == 9
    assert tau == pytest.approx(1 / 8)


def test_step_empirical_frequency_matches_composition():
    # p_(+1,0) = x^1 = 0.75 at z = (3, 1); binomial 3-sigma band
    law = polya_law(2)
    u = make_uniforms(11)
    draws = 100_000
    hits = sum(step(law, [3, 1], 0.0, u)[0][0] == 4 for _ in range(draws))
    sigma = math.sqrt(0.75 * 0.25 / draws)
    assert abs(hits / draws - 0.75) <= 3 * sigma


def test_simulate_from_null_state():
    traj = simulate(polya_law(2), [0, 0], Stop(max_steps=10))
    assert traj.extinct
    assert traj.n_steps == 0
    assert len(traj.steps) == 1


def test_pure_death_goes_extinct_monotonically():
    traj = simulate(pure_death_law(3), [2, 1, 2], Stop(max_steps=1000), seed=5)
    assert traj.extinct
    assert traj.n_steps == 5
    assert np.all(np.diff(traj.sizes) <= 0)


def test_polya_growth_is_deterministic():
    traj = simulate(polya_law(2), [1, 1], Stop(max_steps=10_000), seed=2, record_stride=100)
    assert traj.sizes[-1] == 2 + 10_000
    assert traj.final_state.sum() == 10_002


def test_stop_on_clock():
    traj = simulate(polya_law(2), [5, 5], Stop(max_clock=3.0), seed=0)
    assert traj.tau_max >= 3.0
    assert traj.taus[-2] < 3.0


def test_hard_cap_sets_truncation_flag():
    traj = simulate(polya_law(2), [1, 1], Stop(max_clock=1e9, hard_cap=500), seed=0)
    assert traj.truncated
    assert traj.n_steps == 500


def test_stride_keeps_final_state():
    traj = simulate(polya_law(2), [1, 1], Stop(max_steps=105), record_stride=10)
    assert traj.steps[-1] == 105
    assert traj.steps[-2] == 100
    assert len(traj.sizes) == 106


def test_simulate_rejects_bad_input():
    with pytest.raises(ValueError):
        simulate(polya_law(2), [1, 1, 1])
    with pytest.raises(ValueError):
        simulate(polya_law(2), [-1, 2])
    with pytest.raises(ValueError):
        simulate(polya_law(2), [1, 1], record_stride=0)


def test_stop_that_never_fires_is_rejected():
    with pytest.raises(ValueError):
        Stop(on_extinction=False)


def test_interpolate_is_right_open():
    traj = simulate(polya_law(3), [2, 1, 1], Stop(max_steps=20), seed=3)
    assert np.array_equal(interpolate(traj, 0.0), traj.x[0])
    assert np.array_equal(interpolate(traj, traj.taus[3]), traj.x[3])
    mid = 0.5 * (traj.taus[3] + traj.taus[4])
    assert np.array_equal(interpolate(traj, mid), traj.x[3])
    with pytest.raises(OutOfRangeError):
        interpolate(traj, traj.tau_max + 1.0)
    with pytest.raises(OutOfRangeError):
        interpolate(traj, -0.1)


def test_infeasible_draw_folds_into_zero_increment():
    # always try to remove a colour-1 ball, even when none is left
    law = RateLaw([(-1, 0)], lambda x: [1.0])
    traj = simulate(law, [1, 3], Stop(max_steps=10), seed=0)
    assert traj.final_state.tolist() == [0, 3]
    W, p = law.kernel([0, 3])
    assert p.tolist() == [0.0]


def test_replicate_streams_differ_and_repeat():
    a = replicate_seed_sequence(7, 0).generate_state(4)
    b = replicate_seed_sequence(7, 1).generate_state(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, replicate_seed_sequence(7, 0).generate_state(4))


def test_ndjson_round_trip():
    traj = simulate(polya_law(2), [2, 3], Stop(max_steps=30), seed=4, record_stride=7)
    buf = io.StringIO()
    write_ndjson(traj, buf, model="polya")
    buf.seek(0)
    header, records = read_ndjson(buf)
    assert header == {"k": 2, "m": 1, "seed": 4, "model": "polya"}
    assert [r["n"] for r in records] == traj.steps.tolist()
    assert records[-1]["z"] == traj.final_state.tolist()
    assert records[2]["tau"] == traj.taus[14]
