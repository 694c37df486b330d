"""Tests for the look-ahead scheduling MILP."""

import numpy as np
import pytest

from degradesched.milp import (
    Bess,
    Generator,
    InfeasibleCaseError,
    MicrogridCase,
    UsageCap,
    build_model,
    operation_cost,
    solve,
    validate_schedule,
)
from oracle_milp import brute_force_optimum, random_micro_case


def single_interval_case(load=100.0, buy=0.20, sell=0.05, p_grid=150.0, gen=True):
    return MicrogridCase(
        generators=[Generator(p_min=0, p_max=180, ramp=200, cost_energy=0.10)]
        if gen
        else [],
        bess=[],
        p_grid_max=p_grid,
        reserve_fraction=0.0,
        dt_hours=1.0,
        load=np.array([load]),
        wind=np.array([0.0]),
        solar=np.array([0.0]),
        price_buy=np.array([buy]),
        price_sell=np.array([sell]),
        temps=np.array([25.0]),
    )


def day_case(**overrides):
    """A 24-interval case shaped like the bundled testbed."""
    hours = np.arange(24)
    fields = dict(
        generators=[Generator(p_min=0, p_max=180, ramp=120, cost_energy=0.30)],
        bess=[
            Bess(
                e_min=30,
                e_max=300,
                e_initial=150,
                p_min=0,
                p_max=150,
                eta_charge=0.9,
                eta_discharge=0.9,
            )
        ],
        p_grid_max=500.0,
        reserve_fraction=0.10,
        dt_hours=1.0,
        load=600 + 300 * np.sin((hours - 6) * np.pi / 12).clip(0),
        wind=np.full(24, 150.0),
        solar=(500 * np.sin((hours - 6) * np.pi / 12).clip(0)),
        price_buy=0.05 + 0.25 * np.exp(-((hours - 18.0) ** 2) / 8),
        price_sell=0.8 * (0.05 + 0.25 * np.exp(-((hours - 18.0) ** 2) / 8)),
        temps=20 + 8 * np.sin((hours - 9) * np.pi / 12),
    )
    fields.update(overrides)
    return MicrogridCase(**fields)


class TestBuildModel:
    def test_binary_count_one_gen_one_bess(self):
        problem = build_model(day_case())
        assert problem.n_binaries == 24 * 6

    def test_zero_cap_forces_idle_battery(self):
        sched = solve(build_model(day_case(), cap=UsageCap(0.0)))
        assert np.allclose(sched.p_char, 0.0, atol=1e-9)
        assert np.allclose(sched.p_disc, 0.0, atol=1e-9)

    def test_zero_bdc_rate_matches_plain_model(self):
        case = day_case()
        plain = solve(build_model(case))
        zero_rate = solve(build_model(case, linear_bdc_rate=0.0))
        assert zero_rate.objective == pytest.approx(plain.objective, abs=1e-6)

    def test_overload_reported_before_solve(self):
        with pytest.raises(InfeasibleCaseError, match="power_balance"):
            build_model(single_interval_case(load=10_000.0))

    def test_sell_above_buy_rejected(self):
        with pytest.raises(ValueError, match="sell price"):
            single_interval_case(buy=0.10, sell=0.20)


class TestSolveToyCases:
    def test_generator_cheaper_than_grid(self):
        sched = solve(build_model(single_interval_case(buy=0.20)))
        assert sched.p_gen[0, 0] == pytest.approx(100.0, abs=1e-6)
        assert sched.objective == pytest.approx(10.0, abs=1e-6)

    def test_grid_cheaper_than_generator(self):
        sched = solve(build_model(single_interval_case(buy=0.05)))
        assert sched.p_buy[0] == pytest.approx(100.0, abs=1e-6)
        assert sched.objective == pytest.approx(5.0, abs=1e-6)

    def test_nothing_to_do_costs_nothing(self):
        sched = solve(build_model(single_interval_case(load=0.0)))
        assert sched.objective == pytest.approx(0.0, abs=1e-9)
        assert validate_schedule(single_interval_case(load=0.0), sched) == []

    def test_day_case_solves_and_validates(self):
        case = day_case()
        sched = solve(build_model(case))
        assert validate_schedule(case, sched) == []
        assert sched.energy[0, -1] == pytest.approx(case.bess[0].e_initial, abs=1e-6)

    def test_deterministic_resolve(self):
        case = day_case()
        a = solve(build_model(case))
        b = solve(build_model(case))
        assert np.array_equal(a.p_gen, b.p_gen)
        assert np.array_equal(a.p_char, b.p_char)
        assert a.objective == b.objective


class TestOracleEquivalence:
    @pytest.mark.parametrize("engine", ["highs", "bnb"])
    def test_micro_cases_match_enumeration(self, engine):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 12:
            case = random_micro_case(rng)
            problem = build_model(case)
            assert problem.n_binaries <= 12
            expected, _ = brute_force_optimum(problem)
            sched = solve(problem, engine=engine)
            assert expected is not None
            scale = max(1.0, abs(expected))
            assert abs(sched.objective - expected) <= 1e-6 * scale
            assert validate_schedule(case, sched) == []
            checked += 1

    def test_engines_agree_on_day_case(self):
        case = day_case(
            bess=[],
            generators=[
                Generator(p_min=0, p_max=180, ramp=120, cost_energy=0.30),
            ],
            load=np.linspace(100, 400, 24),
        )
        fast = solve(build_model(case), engine="highs")
        slow = solve(build_model(case), engine="bnb")
        assert slow.objective == pytest.approx(fast.objective, abs=1e-6)


class TestUsageCap:
    def test_cap_never_reduces_cost(self):
        case = day_case()
        free = solve(build_model(case))
        tau = free.bess_throughput_kwh(case)
        for fraction in (0.5, 0.2, 0.0):
            capped = solve(build_model(case, cap=UsageCap(fraction * tau)))
            assert capped.objective >= free.objective - 1e-6
            assert capped.bess_throughput_kwh(case) <= fraction * tau + 1e-6
            assert validate_schedule(case, capped, cap=UsageCap(fraction * tau)) == []


class TestValidateSchedule:
    def test_solver_output_is_clean(self):
        case = day_case()
        assert validate_schedule(case, solve(build_model(case))) == []

    def test_terminal_energy_violation_detected(self):
        case = day_case()
        sched = solve(build_model(case))
        sched.energy[0, -1] += 5.0
        families = {v.family for v in validate_schedule(case, sched)}
        assert "eq17_terminal_energy" in families

    def test_simultaneous_trade_detected(self):
        case = day_case()
        sched = solve(build_model(case))
        sched.u_buy[3] = 1
        sched.u_sell[3] = 1
        families = {v.family for v in validate_schedule(case, sched)}
        assert "eq9_trade_exclusivity" in families

    def test_fractional_binary_detected(self):
        case = day_case()
        sched = solve(build_model(case))
        sched.u_gen = sched.u_gen.astype(float)
        sched.u_gen[0, 0] = 0.5
        families = {v.family for v in validate_schedule(case, sched)}
        assert "binary_integrality" in families


class TestOperationCost:
    def test_idle_schedule_is_free(self):
        case = single_interval_case(load=0.0)
        sched = solve(build_model(case))
        assert operation_cost(sched, case)["total"] == pytest.approx(0.0, abs=1e-9)

    def test_matches_toy_objective(self):
        case = single_interval_case(buy=0.20)
        sched = solve(build_model(case))
        cost = operation_cost(sched, case)
        assert cost["total"] == pytest.approx(10.0, abs=1e-6)
        assert cost["generation"] == pytest.approx(10.0, abs=1e-6)

    def test_sale_contributes_negative(self):
        case = single_interval_case(load=0.0, gen=True, buy=0.20, sell=0.10)
        # Force a profitable sale: free wind, sellable at 0.10.
        case = MicrogridCase(
            generators=[],
            bess=[],
            p_grid_max=150.0,
            reserve_fraction=0.0,
            dt_hours=1.0,
            load=np.array([0.0]),
            wind=np.array([50.0]),
            solar=np.array([0.0]),
            price_buy=np.array([0.20]),
            price_sell=np.array([0.10]),
            temps=np.array([25.0]),
        )
        sched = solve(build_model(case))
        cost = operation_cost(sched, case)
        assert cost["sale_revenue"] == pytest.approx(5.0, abs=1e-6)
        assert cost["total"] == pytest.approx(-5.0, abs=1e-6)

    def test_total_matches_solver_objective_with_bdc(self):
        case = day_case()
        rate = 0.05
        sched = solve(build_model(case, linear_bdc_rate=rate))
        cost = operation_cost(sched, case)
        bdc = rate * sched.bess_throughput_kwh(case)
        assert cost["total"] + bdc == pytest.approx(sched.objective, abs=1e-6)
