import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from ansv2x.channel import freeze
from ansv2x.delay import DelayBreakdown
from ansv2x.metrics import moving_average
from ansv2x.model import AppClass
from ansv2x.scenario import Density, generate
from ansv2x.solvers import LearnConfig, reward, sinr_bin, solve_bnb, solve_qlearn, train
from ansv2x.solvers.qlearn import greedy_choices, load_tables, save_tables

from helpers import dominant_fixture


@pytest.mark.parametrize("db, b", [(15.0, 2), (-10.0, 0), (40.0, 4), (5.0, 1), (4.999, 0), (35.0, 4), (24.9, 2)])
def test_sinr_bins(db, b):
    assert sinr_bin(db) == b


def test_reward_anchors():
    budget = 0.05
    assert reward(DelayBreakdown.of(0.05, 0.0, 0.0), True, budget) == 0.0
    assert reward(DelayBreakdown.of(0.025, 0.0, 0.0), True, budget) == 0.5
    assert reward(DelayBreakdown.of(0.0, 0.0, 0.0), True, budget) == 1.0
    assert reward(DelayBreakdown.of(1.0, 0.0, 0.0), True, budget) == -1.0
    assert reward(DelayBreakdown.of(0.01, 0.0, 0.0), False, budget) == -1.0
    assert reward(None, True, budget) == -1.0


@pytest.mark.parametrize(
    "kw", [dict(learning_rate=0.0), dict(discount=1.0), dict(epsilon_end=0.95), dict(episodes=-1), dict(horizon=0)]
)
def test_config_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        LearnConfig(**kw)


def test_epsilon_decays_exponentially_between_endpoints():
    cfg = LearnConfig(episodes=101)
    eps = np.array([cfg.epsilon(e) for e in range(101)])
    assert eps[0] == pytest.approx(0.9) and eps[-1] == pytest.approx(0.05)
    ratios = eps[1:] / eps[:-1]
    assert np.allclose(ratios, ratios[0])


def test_zero_episodes_gives_zero_tables_and_lowest_id():
    s = dominant_fixture(3)
    res = train(s, LearnConfig(episodes=0))
    assert all(not t.q for t in res.tables)
    assert greedy_choices(freeze(s), res.tables) == [0, 0, 0]


def test_dominant_network_is_learned():
    s = dominant_fixture(1)
    r = solve_qlearn(s, LearnConfig(rng_seed=4))
    assert r.assignment.choices() == [1]
    assert r.assignment == solve_bnb(s).assignment
    assert r.episodes == 500


def test_multi_vehicle_dominant_fixture_matches_exact():
    s = dominant_fixture(3)
    assert solve_qlearn(s).assignment == solve_bnb(s).assignment


def test_training_is_deterministic():
    s = generate(Density.Medium, 0.05, 3, seed=1)
    a = train(s, LearnConfig(episodes=80, rng_seed=9))
    b = train(s, LearnConfig(episodes=80, rng_seed=9))
    assert np.array_equal(a.rewards, b.rewards)
    assert [t.to_dict() for t in a.tables] == [t.to_dict() for t in b.tables]
    ra = solve_qlearn(s, trained=a)
    rb = solve_qlearn(s, trained=b)
    assert ra.assignment == rb.assignment and ra.total_delay == rb.total_delay


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32), gamma=st.floats(0.0, 0.95), lr=st.floats(0.05, 1.0))
def test_q_values_bounded(seed, gamma, lr):
    s = generate(Density.High, 0.03, 3, seed=seed)
    res = train(s, LearnConfig(episodes=60, discount=gamma, learning_rate=lr, rng_seed=seed))
    bound = (1 + 1.0) / (1 - gamma)
    for t in res.tables:
        for vals in t.q.values():
            assert np.all(np.isfinite(vals)) and np.all(np.abs(vals) <= bound)


def test_greedy_policy_stable_under_further_training():
    s = dominant_fixture(1)
    first = train(s, LearnConfig(rng_seed=2))
    ch = freeze(s)
    before = greedy_choices(ch, first.tables)
    more = train(s, LearnConfig(episodes=200, epsilon_start=0.0, epsilon_end=0.0, rng_seed=3), init=first.tables)
    assert greedy_choices(ch, more.tables) == before == [1]
    assert np.all(np.diff(more.greedy_rewards) == 0)


def test_warm_start_shape_checked():
    tables = train(dominant_fixture(1), LearnConfig(episodes=5)).tables
    with pytest.raises(ValueError):
        train(dominant_fixture(2), LearnConfig(episodes=5), init=tables)


def test_behaviour_reward_rises_on_generated_scenario():
    s = generate(Density.Medium, 0.05, 3, seed=0)
    res = train(s, LearnConfig(rng_seed=0))
    assert len(res.rewards) == len(res.greedy_rewards) == 500
    assert res.rewards[-50:].mean() > res.rewards[:50].mean()


def test_greedy_curve_non_decreasing_over_final_half():
    s = dominant_fixture(1)
    ok = 0
    for seed in range(20):
        res = train(s, LearnConfig(rng_seed=seed))
        ma = moving_average(res.greedy_rewards[250:], 50)
        ok += bool(np.all(np.diff(ma) >= -1e-12))
    assert ok >= 18


def test_inference_much_cheaper_than_training():
    s = generate(Density.Medium, 0.05, 3, seed=0)
    r = solve_qlearn(s)
    assert r.diagnostics["inference_runtime"] * 10 <= r.diagnostics["train_runtime"]
    assert r.solver_runtime == pytest.approx(r.diagnostics["train_runtime"] + r.diagnostics["inference_runtime"])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_repaired_output_always_valid(seed):
    s = generate(Density.High, 0.04, 3, seed=seed)
    s = replace(s, networks=(s.networks[0],) + tuple(replace(n, bandwidth_total=n.bandwidth_total / 4) for n in s.networks[1:]))
    r = solve_qlearn(s, LearnConfig(episodes=40, rng_seed=seed))
    assert r.feasible, r.diagnostics.get("violations")


def test_tables_persist(tmp_path):
    s = generate(Density.Medium, 0.05, 2, seed=4)
    res = train(s, LearnConfig(episodes=30))
    save_tables(res.tables, tmp_path / "q.json")
    back = load_tables(tmp_path / "q.json")
    assert [t.to_dict() for t in back] == [t.to_dict() for t in res.tables]
    warm = train(s, LearnConfig(episodes=0), init=back)
    assert [t.to_dict() for t in warm.tables] == [t.to_dict() for t in res.tables]


def test_safety_and_app_in_state():
    s = dominant_fixture(2)
    res = train(s, LearnConfig(episodes=20))
    apps = {st_[0] for t in res.tables for st_ in t.q}
    assert apps == {AppClass.Safety, AppClass.Infotainment}
