import numpy as np
import pytest

from _gen import h2
from relsec import channels as ch
from relsec.errors import ConfigurationError, ValidationError
from relsec.optimize import OptimizerConfig, optimize_design, sweep, wiretap_baseline
from relsec.prob import ChannelSpec, validate_design

FAST = OptimizerConfig(restarts=1, max_iters=150)


def test_baseline_bit_flip_eve():
    spec = ch.wiretap(np.eye(2), ch.bsc(0.2))
    assert abs(wiretap_baseline(spec) - h2(0.2)) < 1e-6
    assert h2(0.2) == pytest.approx(0.7219280948873623, abs=1e-15)


def test_baseline_equal_channels_zero():
    k = ch.bsc(0.1)
    assert wiretap_baseline(ch.wiretap(k, k)) == pytest.approx(0.0, abs=1e-12)


def test_baseline_blind_eve():
    assert wiretap_baseline(ch.wiretap(np.eye(2), np.full((2, 2), 0.5))) == pytest.approx(1.0, abs=1e-9)


def test_useless_relay_matches_baseline():
    rng = np.random.default_rng(4)
    bob, eve = rng.dirichlet(np.ones(2), 3), rng.dirichlet(np.ones(3), 3)
    relay = ch.constant(3, 2, [0.3, 0.7])
    spec = ch.compose(relay, ch.from_x1(bob, 2), ch.from_x1(eve, 2))
    res = optimize_design(spec, FAST)
    assert abs(res.rate.r1 - wiretap_baseline(spec)) < 1e-3


def test_blind_eve_reaches_log_alphabet():
    spec = ch.wiretap(np.eye(3), np.full((3, 2), 0.5))
    res = optimize_design(spec, FAST)
    assert abs(res.rate.r1 - np.log2(3)) < 1e-3


def test_deterministic_and_valid():
    rng = np.random.default_rng(8)
    spec = ch.random_channel(rng, dict(x1=2, x2=2, y2=2, y3=2, z=2))
    cfg = OptimizerConfig(restarts=2, max_iters=100, comp_size_max=2, seed=9)
    a, b = optimize_design(spec, cfg), optimize_design(spec, cfg)
    assert a == b
    assert validate_design(a.design, spec) == []
    assert all(v <= a.rate.r1 + 1e-12 for _, v in a.trace)
    assert a.rate.r1 >= wiretap_baseline(spec) - 2e-2


def test_config_validation():
    with pytest.raises(ConfigurationError):
        OptimizerConfig(restarts=0)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(comp_size_max=0)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(objective="gradient")
    with pytest.raises(ValidationError):
        optimize_design(ChannelSpec(np.full((2, 1, 1, 2, 2), 0.3)), FAST)
    spec = ChannelSpec(np.full((8, 8, 8, 8, 8), 1 / 512))
    with pytest.raises(ConfigurationError):
        optimize_design(spec, OptimizerConfig(comp_size_max=1024))


def test_oracle_objective_runs():
    spec = ch.wiretap(np.eye(2), ch.bsc(0.2))
    res = optimize_design(spec, OptimizerConfig(restarts=1, max_iters=40, objective="oracle", oracle_grid=0.05))
    assert res.rate.r1 == pytest.approx(h2(0.2), abs=0.06)


def eve_flip(p):
    return ch.wiretap(ch.bsc(0.05), ch.bsc(p))


def test_sweep_monotone_in_eve_noise():
    rows = sweep(eve_flip, [0.0, 0.1, 0.2, 0.3, 0.4, 0.5], FAST)
    assert [r.param for r in rows] == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    r1 = [r.r1 for r in rows]
    assert all(b >= a - 2e-2 for a, b in zip(r1, r1[1:]))
    assert all(r.status == "ok" for r in rows)


def test_sweep_edge_cases():
    assert sweep(eve_flip, [], FAST) == []
    (row,) = sweep(eve_flip, [0.3], FAST)
    assert row.r1 == optimize_design(eve_flip(0.3), FAST).rate.r1

    def broken(p):
        if p > 0.5:
            raise ValueError("flip above one half")
        return eve_flip(p)

    rows = sweep(broken, [0.2, 0.9, 0.3], FAST)
    assert [r.status for r in rows][::2] == ["ok", "ok"]
    assert rows[1].status.startswith("failed") and np.isnan(rows[1].r1)
