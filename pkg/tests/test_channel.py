"""The vectorised per-epoch delay table against the scalar delay functions."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ansv2x.channel import expected_mode, freeze
from ansv2x.delay import InfeasiblePair, computation_time, handover_delay, transmission_time
from ansv2x.model import HandoverModel
from ansv2x.radio import data_rate, link_state
from ansv2x.scenario import Density, generate


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**40), n=st.integers(1, 5))
def test_table_agrees_with_scalar_route(seed, n):
    s = generate(Density.Medium, 0.04, n, seed=seed)
    ch = freeze(s)
    for i, node in enumerate(s.networks):
        for k, v in enumerate(s.vehicles):
            link = link_state(node, v, s.radio, seed=s.rng_seed, epoch=s.epoch)
            assert link == ch.links[i][k]
            rate = data_rate(v.bandwidth_demand, link.sinr, s.radio.shannon_efficiency)
            assert ch.rate[i, k] == pytest.approx(rate, rel=1e-13)
            t_trans = transmission_time(
                v.data_size, rate, node.base_latency, node.idle_power, node.idle_window_s,
                node.compute_power, node.compute_service_time, node.stable_tx_power,
            )
            assert ch.delays.t_trans[i, k] == pytest.approx(t_trans, rel=1e-13)
            assert ch.delays.t_comp[i, k] == computation_time(v.compute_demand, v.compute_grant_demand)
            ho = handover_delay(v.current_network, i, s.handover, seed=s.rng_seed, vehicle=v.id, epoch=s.epoch)
            assert ch.handover[i, k] == ho


def test_screened_pair_raises_on_delay():
    s = generate(Density.Medium, 0.5, 3, seed=1)
    ch = freeze(s)
    blocked = np.argwhere(~ch.mask.allowed)
    assert len(blocked)
    i, k = blocked[0]
    with pytest.raises(InfeasiblePair):
        ch.delay(int(i), int(k))


def test_digest_tracks_draws():
    s = generate(Density.Medium, 0.05, 3, seed=2)
    assert freeze(s).digest() == freeze(s).digest()
    assert freeze(s).digest() != freeze(s, epoch=1).digest()


def test_epoch_override_changes_draws_only():
    s = generate(Density.Medium, 0.05, 3, seed=2)
    a, b = freeze(s), freeze(s, epoch=4)
    assert b.epoch == 4 and a.scenario is b.scenario
    assert not np.array_equal(a.switch_cost, b.switch_cost)


def test_expected_handover_is_mean_off_current():
    s = generate(Density.Medium, 0.05, 3, seed=2)
    eh = freeze(s).expected_handover()
    assert np.all(eh[0] == 0.0) and np.all(eh[1:] == 0.020)
    assert expected_mode(HandoverModel()).mode.value == "expected"


def test_arrays_are_read_only():
    ch = freeze(generate(seed=0))
    for arr in (ch.switch_cost, ch.handover, ch.rate, ch.mask.allowed, ch.alignment):
        with pytest.raises(ValueError):
            arr[0, 0] = 1
