import numpy as np
import pytest

from gridmdp.scoring import (
    EpisodeCosts,
    ScenarioRefs,
    check_blackout_dominance,
    episode_costs,
    leaderboard,
    normalize_score,
    run_do_nothing,
    scenario_refs,
)


def make_info(losses=0.0, redispatch=None, storage=None, curtailed=0.0, blackout=0.0):
    return {
        "losses_mw": losses,
        "redispatch_mwh": redispatch or {},
        "storage_mwh": storage or {},
        "curtailed_mwh": curtailed,
        "blackout_energy_mwh": blackout,
    }


def test_zero_episode_zero_cost(grid):
    infos = [make_info() for _ in range(10)]
    costs = episode_costs(infos, grid)
    assert costs.total == 0.0


def test_losses_cost_arithmetic(grid):
    # 1 MW of losses over 288 five-minute steps at price 70: 1 * 24h * 70 = 1680
    infos = [make_info(losses=1.0) for _ in range(288)]
    costs = episode_costs(infos, grid, price_mwh=70.0)
    assert costs.losses_cost == pytest.approx(1680.0, abs=1e-9)
    assert costs.operation_cost == 0.0
    assert costs.blackout_cost == 0.0


def test_operation_cost_uses_unit_prices(grid):
    # GEN_THM1 marginal cost 85, BAT1 cost 5, curtailment at the MWh price
    infos = [make_info(redispatch={"GEN_THM1": 2.0}, storage={"BAT1": 3.0},
                       curtailed=1.5)]
    costs = episode_costs(infos, grid, price_mwh=70.0)
    assert costs.operation_cost == pytest.approx(2.0 * 85.0 + 3.0 * 5.0 + 1.5 * 70.0)


def test_blackout_cost_beta(grid):
    infos = [make_info(blackout=100.0)]
    costs = episode_costs(infos, grid, price_mwh=70.0, blackout_beta=2.0)
    assert costs.blackout_cost == pytest.approx(100.0 * 70.0 * 2.0)


def test_costs_total_is_sum():
    c = EpisodeCosts(losses_cost=1.0, operation_cost=2.0, blackout_cost=3.0)
    assert c.total == 6.0


def test_scenario_refs_ordering(grid, week_scenario):
    refs = scenario_refs(grid, week_scenario)
    assert refs.c_best < refs.c_dn < refs.c_worst
    assert refs.c_worst / refs.c_dn > 10.0
    # deterministic
    again = scenario_refs(grid, week_scenario)
    assert (again.c_dn, again.c_best, again.c_worst) == (refs.c_dn, refs.c_best, refs.c_worst)


def test_blackout_dominates_achievable_costs(grid, week_scenario):
    refs = scenario_refs(grid, week_scenario)
    infos = run_do_nothing(grid, week_scenario)
    dn_total = episode_costs(infos, grid).total
    # an immediate blackout costs more than the whole do-nothing week
    assert refs.c_worst > dn_total
    assert check_blackout_dominance(grid, week_scenario)


def test_normalize_anchors():
    refs = ScenarioRefs(c_dn=100.0, c_best=60.0, c_worst=1000.0)
    assert normalize_score(100.0, refs) == 0.0
    assert normalize_score(60.0, refs) == 100.0
    assert normalize_score(1000.0, refs) == -100.0
    # interior points, monotone
    assert normalize_score(80.0, refs) == pytest.approx(50.0)
    assert normalize_score(550.0, refs) == pytest.approx(-50.0)
    # clamps outside the anchors
    assert normalize_score(0.0, refs) == 100.0
    assert normalize_score(1e9, refs) == -100.0


def test_normalize_monotone():
    refs = ScenarioRefs(c_dn=100.0, c_best=60.0, c_worst=1000.0)
    costs = np.linspace(0, 1200, 200)
    scores = [normalize_score(c, refs) for c in costs]
    assert all(a >= b for a, b in zip(scores, scores[1:]))
    assert all(-100.0 <= s <= 100.0 for s in scores)


def test_normalize_degenerate_refs():
    refs = ScenarioRefs(c_dn=50.0, c_best=50.0, c_worst=500.0)
    assert normalize_score(50.0, refs) == 0.0
    assert normalize_score(10.0, refs) == 100.0
    assert normalize_score(275.0, refs) == -50.0


def test_leaderboard_sorting():
    rows = leaderboard({"b": [10.0, 20.0], "a": [15.0, 15.0], "c": [-5.0, 5.0]})
    assert [r[0] for r in rows] == ["a", "b", "c"]  # tie at 15 broken by name
    assert rows[0][1] == pytest.approx(15.0)
    single = leaderboard({"only": [42.0]})
    assert single == [("only", 42.0, 1)]


def test_leaderboard_survivor_outranks_blackout(grid, week_scenario):
    refs = scenario_refs(grid, week_scenario)
    infos = run_do_nothing(grid, week_scenario)
    survivor_total = episode_costs(infos, grid).total * 1.5  # clumsy but alive
    worst_survivor = normalize_score(survivor_total, refs)
    # blackout after one step: nearly all demand unserved
    blackout_mwh = float(week_scenario.load_p[2:].sum()) / 12.0
    dead_total = episode_costs(
        [make_info(losses=3.0, blackout=blackout_mwh)], grid).total
    dead_score = normalize_score(dead_total, refs)
    assert worst_survivor > dead_score
