from __future__ import annotations

import csv

import numpy as np
import pytest

from swarmfield.agents import (
    AgentScenario,
    constant_velocity,
    dirac_consistency_check,
    dirac_scenario,
    homing,
    simulate_agents,
)
from swarmfield.attrition import AttritionParams
from swarmfield.errors import ConfigurationError

ATT = AttritionParams(1.0, 5.0)
HVU = AttritionParams(2.0, 5.0)


def scenario(**kw):
    base = dict(s0=[(0.0, 0.0)], x0=[(2.0, 0.0)], s_hvu=(1.0, 0.0), att=ATT, hvu=HVU, dt=0.01, T=2.0)
    return AgentScenario(**(base | kw))


def test_stationary_pair_matches_exponential():
    tr = simulate_agents(scenario())
    rate = ATT.rate(4.0)
    assert np.allclose(tr.q[:, 0], np.exp(-rate * tr.times), rtol=1e-12)


def test_two_attackers_against_hand_computation():
    scn = scenario(s0=[(0.0, 0.0), (0.0, 3.0)], x0=[(1.0, 0.0)], s_hvu=(0.0, 1.0), dt=1e-3)
    tr = simulate_agents(scn)
    a = ATT.rate(np.array([1.0, 10.0]))
    h = HVU.rate(np.array([1.0, 4.0]))
    t = tr.times
    p = np.exp(-((h / a) * (1.0 - np.exp(-np.outer(t, a)))).sum(axis=1))
    assert np.allclose(tr.q, np.exp(-np.outer(t, a)), rtol=1e-12)
    assert np.max(np.abs(tr.p - p) / p) < 1e-6


def test_attacker_survival_is_product_over_defenders():
    tr = simulate_agents(scenario(x0=[(2.0, 0.0), (0.0, 1.0), (-3.0, 0.0)]))
    assert np.allclose(tr.q[:, 0], tr.q_pair[:, 0, :].prod(axis=1), rtol=1e-12)


def test_extra_defender_never_hurts():
    one = simulate_agents(scenario())
    two = simulate_agents(scenario(x0=[(2.0, 0.0), (0.5, 0.5)]))
    assert np.all(two.q[:, 0] <= one.q[:, 0])
    assert np.all(two.p >= one.p)


def test_survival_is_monotone_with_motion():
    scn = scenario(
        attacker_drift=homing((1.0, 0.0), 0.5), defender_control=constant_velocity((-0.4, 0.1)), T=5.0
    )
    tr = simulate_agents(scn)
    assert np.all(np.diff(tr.q, axis=0) <= 0) and np.all(np.diff(tr.p) <= 0)
    assert np.all((tr.p > 0) & (tr.p <= 1))


def test_noise_is_reproducible_per_seed():
    a = simulate_agents(scenario(noise=0.3, seed=7))
    b = simulate_agents(scenario(noise=0.3, seed=7))
    c = simulate_agents(scenario(noise=0.3, seed=8))
    assert np.array_equal(a.s, b.s) and np.array_equal(a.p, b.p)
    assert not np.array_equal(a.s, c.s)


def test_zero_attrition_keeps_everyone_alive():
    zero = AttritionParams(0.0, 1.0)
    tr = simulate_agents(scenario(att=zero, hvu=zero))
    assert np.all(tr.q == 1.0) and np.all(tr.p == 1.0)


@pytest.mark.parametrize("bad", [dict(dt=0.0), dict(T=-1.0), dict(noise=-0.1), dict(s0=[(1.0, 2.0, 3.0)])])
def test_invalid_scenarios(bad):
    with pytest.raises(ConfigurationError):
        scenario(**bad)


def test_trace_files(tmp_path):
    tr = simulate_agents(scenario(x0=[(2.0, 0.0), (0.0, 2.0)], T=0.05))
    paths = tr.write(tmp_path, "run")
    assert [p.name for p in paths] == ["run_positions.csv", "run_Q.csv", "run_P.csv"]
    with open(paths[0]) as fh:
        rows = [r for r in csv.reader(fh) if not r[0].startswith("#")]
    assert rows[0] == ["t", "kind", "id", "x", "y"]
    assert len(rows) - 1 == len(tr.times) * 3


@pytest.mark.parametrize("name", ["stationary", "coincident", "diverging"])
def test_pair_agrees_with_population_pipeline(name):
    params, scn = dirac_scenario(name)
    rep = dirac_consistency_check(params, scn)
    assert rep.max_relative_deviation < 0.03
    assert np.allclose(rep.r2_population, rep.r2_agent, atol=1e-3)


def test_dirac_check_rejects_crowds():
    params, scn = dirac_scenario("stationary")
    with pytest.raises(ConfigurationError):
        dirac_consistency_check(params, AgentScenario(**(scn.__dict__ | {"x0": [(1.0, 0.0), (2.0, 0.0)]})))
