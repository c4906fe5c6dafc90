import math

import numpy as np
import pytest

from duogame.errors import ParameterError
from duogame.supply_chain import (
    EPS_COVERAGE,
    FlowLedger,
    NoiseDraws,
    PricingState,
    SDParams,
    SDState,
    fulfillment_ratio,
    price_multipliers,
    smooth_adjust,
    stationary_market_price,
    steady_state,
    step_company,
    step_logistics,
    step_pricing,
    step_production,
)

DT = 0.25


def random_params(rng):
    """Params with the decision variables drawn from the experiment ranges."""
    return SDParams(
        vac_creation_time=rng.uniform(1, 5),
        layoff_time=rng.uniform(3, 7),
        labor_fulfillment_time=rng.uniform(4, 12),
        wip_fulfillment_time=rng.uniform(1, 3),
        inv_fulfillment_time=rng.uniform(2, 14),
        rm_lead_time=rng.uniform(1, 7),
        safety_stock_cov=rng.uniform(2, 14),
        rm_inventory_cov=rng.uniform(1, 7),
        price_sens_cost=rng.uniform(0.1, 0.9),
        price_sens_invcov=rng.uniform(-0.9, -0.1),
        mfg_price=rng.uniform(1, 2),
    ).validate()


class TestSmoothAdjust:
    def test_fixed_point_when_desired_equals_actual(self):
        assert smooth_adjust(10.0, 10.0, 3.0, 0.0, 0.5) == 0.0

    def test_full_weight_discards_history(self):
        assert smooth_adjust(10.0, 0.0, 2.0, 99.0, 1.0) == 5.0

    def test_half_weight_blends(self):
        # 0.5 * (10 - 4) / 3 + 0.5 * 2 = 2.0
        assert smooth_adjust(10.0, 4.0, 3.0, 2.0, 0.5) == pytest.approx(2.0)

    def test_nonpositive_fulfill_time_rejected(self):
        with pytest.raises(ParameterError):
            smooth_adjust(1.0, 0.0, 0.0, 0.0, 0.5)
        with pytest.raises(ParameterError):
            smooth_adjust(1.0, 0.0, -2.0, 0.0, 0.5)


class TestFulfillmentRatio:
    def test_full_coverage(self):
        assert fulfillment_ratio(100.0, 100.0) == 1.0

    def test_empty(self):
        assert fulfillment_ratio(0.0, 50.0) == 0.0

    def test_partial(self):
        assert fulfillment_ratio(40.0, 100.0) == pytest.approx(0.4)

    def test_overfull_clamps(self):
        assert fulfillment_ratio(500.0, 100.0) == 1.0

    def test_nonpositive_desired_rejected(self):
        with pytest.raises(ParameterError):
            fulfillment_ratio(10.0, 0.0)


class TestFixedPoint:
    def test_steady_state_is_stationary_one_step(self):
        p = SDParams().validate()
        s0 = steady_state(p, order_rate=100.0)
        s1 = step_company(s0, p, order_rate=100.0, dt=DT)
        for name, before in s0.stocks().items():
            assert abs(getattr(s1, name) - before) <= 1e-9, name

    def test_steady_state_is_stationary_many_steps(self):
        p = SDParams().validate()
        s = steady_state(p, order_rate=80.0)
        ref = s.stocks()
        for _ in range(200):
            s = step_company(s, p, order_rate=80.0, dt=DT)
        for name, before in ref.items():
            assert abs(getattr(s, name) - before) <= 1e-7, name

    def test_all_desired_equal_actual_with_negligible_attrition(self):
        # with an effectively infinite employment time the stationary point
        # has every stock at its desired value and all adjusters at zero
        p = SDParams(employment_time=1e12).validate()
        s0 = steady_state(p, order_rate=100.0)
        assert s0.a_prod == pytest.approx(0.0, abs=1e-9)
        assert s0.a_wip == pytest.approx(0.0, abs=1e-9)
        assert s0.inv == pytest.approx(s0.d_inv, rel=1e-9)
        s1 = step_company(s0, p, order_rate=100.0, dt=DT)
        for name, before in s0.stocks().items():
            assert abs(getattr(s1, name) - before) <= 1e-9, name


class TestStepProduction:
    def test_zero_labor_means_zero_production(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        s.labor = 0.0
        s1 = step_production(s, p, order_rate=100.0, dt=DT)
        assert s1.prod_br == 0.0

    def test_material_rate_bottleneck(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        s1 = step_production(s, p, order_rate=100.0, material_rate=7.0, dt=DT)
        assert s1.prod_br == pytest.approx(7.0)

    def test_dt_must_be_positive(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        with pytest.raises(ParameterError):
            step_production(s, p, 100.0, dt=0.0)

    def test_hand_computed_euler_step(self):
        """Straight-line re-evaluation of one sub-step from a documented seed state."""
        p = SDParams().validate()
        s = SDState(wip=200.0, inv=600.0, labor=20.0, vac=2.0, backlog=30.0,
                    rm_inv=500.0, rm_transit=400.0,
                    a_wip=1.0, a_prod=2.0, a_labor=0.5, a_vac=0.1,
                    prod_cr=90.0, prod_br=95.0, d_prod_br=100.0, price=1.5)
        order = 100.0
        out = step_company(s, p, order_rate=order, dt=DT)

        # independent transcription of the update rules
        d_inv = (p.order_processing_time + p.safety_stock_cov) * order      # 10*100
        a_prod = 0.5 * (d_inv - 600.0) / 8.0 + 0.5 * 2.0                    # 26.0
        d_wip = (a_prod + order) * 3.0                                      # 378.0
        a_wip = 0.5 * (d_wip - 200.0) / 2.0 + 0.5 * 1.0                     # 45.0
        d_prod_br = a_wip + a_prod + order                                  # 171.0
        rm_desired = 4.0 * d_prod_br                                        # 684.0
        rm_f = min(1.0, 500.0 / rm_desired)
        msr = min(d_prod_br * rm_f, 500.0 / DT)
        capacity = 20.0 * 4.0                                               # 80.0
        prod_br = max(0.0, min(capacity, msr, d_prod_br))                   # 80.0
        prod_cr = min(200.0 / 3.0, 200.0 / DT)
        rm_order = max(0.0, prod_br + (rm_desired - 500.0) / 4.0)
        rm_arrival = min(400.0 / 4.0, 400.0 / DT)
        d_labor = d_prod_br / 4.0
        a_labor = 0.5 * (d_labor - 20.0) / 8.0 + 0.5 * 0.5
        d_vac = max(0.0, 5.0 * a_labor)
        a_vac = 0.5 * (d_vac - 2.0) / 3.0 + 0.5 * 0.1
        vac_br = max(0.0, a_labor + a_vac)
        hire = 2.0 / 5.0
        retire = 20.0 / 200.0
        layoff = min(max(0.0, -a_labor), 20.0 / 5.0)
        fulfill = min(1.0, 600.0 / d_inv)
        ship = (order + 30.0 / 2.0) * fulfill

        assert out.d_inv == pytest.approx(d_inv)
        assert out.a_prod == pytest.approx(a_prod)
        assert out.d_wip == pytest.approx(d_wip)
        assert out.a_wip == pytest.approx(a_wip)
        assert out.d_prod_br == pytest.approx(d_prod_br)
        assert out.msr == pytest.approx(msr)
        assert out.prod_br == pytest.approx(prod_br)
        assert out.prod_cr == pytest.approx(prod_cr)
        assert out.rm_order_r == pytest.approx(rm_order)
        assert out.rm_arrival_r == pytest.approx(rm_arrival)
        assert out.a_labor == pytest.approx(a_labor)
        assert out.a_vac == pytest.approx(a_vac)
        assert out.vac_br == pytest.approx(vac_br)
        assert out.hire_r == pytest.approx(hire)
        assert out.retire_r == pytest.approx(retire)
        assert out.layoff_r == pytest.approx(layoff)
        assert out.ship_r == pytest.approx(ship)
        assert out.wip == pytest.approx(200.0 + DT * (prod_br - prod_cr))
        assert out.inv == pytest.approx(600.0 + DT * (prod_cr - ship))
        assert out.labor == pytest.approx(20.0 + DT * (hire - retire - layoff))
        assert out.vac == pytest.approx(2.0 + DT * (vac_br - hire))
        assert out.backlog == pytest.approx(30.0 + DT * (order - ship))
        assert out.rm_inv == pytest.approx(500.0 + DT * (rm_arrival - prod_br))
        assert out.rm_transit == pytest.approx(400.0 + DT * (rm_order - rm_arrival))


class TestStepLogistics:
    def test_no_orders_no_backlog_ships_nothing(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        s.backlog = 0.0
        s1 = step_logistics(s, p, order_rate=0.0, dt=DT)
        assert s1.ship_r == 0.0
        assert s1.inv == pytest.approx(s.inv + DT * s.prod_cr)

    def test_full_inventory_ships_orders(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        s.inv = s.d_inv * 2.0
        s.backlog = 0.0
        s1 = step_logistics(s, p, order_rate=100.0, dt=DT)
        assert s1.ship_r == pytest.approx(100.0)

    def test_half_inventory_ships_half(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        d_inv = (p.order_processing_time + p.safety_stock_cov) * 100.0
        s.inv = 0.5 * d_inv
        s.backlog = 0.0
        s1 = step_logistics(s, p, order_rate=100.0, dt=DT)
        assert s1.ship_r == pytest.approx(50.0)

    def test_idle_line_coverage_pegged(self):
        p = SDParams().validate()
        s = steady_state(p, 100.0)
        s.backlog = 0.0
        s1 = step_logistics(s, p, order_rate=0.0, dt=DT)
        assert s1.inv_cov == p.max_inv_cov


class TestStepPricing:
    def test_neutral_multipliers_give_market_price(self):
        p = SDParams(price_sens_cost=0.0).validate()
        shared = PricingState(mp=1.5)
        prices, _ = step_pricing((1.5, 1.5), shared, (p, p),
                                 (p.max_inv_cov, p.max_inv_cov), dt=DT)
        assert prices[0] == pytest.approx(1.5)
        assert prices[1] == pytest.approx(1.5)

    def test_half_coverage_doubles_price(self):
        p = SDParams(price_sens_cost=0.0, price_sens_invcov=-1.0).validate()
        shared = PricingState(mp=1.5)
        prices, _ = step_pricing((1.5, 1.5), shared, (p, p),
                                 (p.max_inv_cov / 2.0, p.max_inv_cov), dt=DT)
        assert prices[0] == pytest.approx(3.0)
        assert prices[1] == pytest.approx(1.5)

    def test_market_price_stationary_when_prices_match(self):
        p = SDParams().validate()
        cov = 10.0
        mp = stationary_market_price(p, cov)
        shared = PricingState(mp=mp)
        prices, new_shared = step_pricing((mp, mp), shared, (p, p), (cov, cov), dt=DT)
        assert prices[0] == pytest.approx(mp)
        assert new_shared.price_cr == pytest.approx(0.0, abs=1e-12)
        assert new_shared.mp == pytest.approx(mp)

    def test_monotone_in_coverage_and_cost(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            p = random_params(rng)
            mp = rng.uniform(0.5, 3.0)
            covs = sorted(rng.uniform(EPS_COVERAGE, 40.0, size=2))
            _, fi_low = price_multipliers(p, mp, covs[0])
            _, fi_high = price_multipliers(p, mp, covs[1])
            # price non-increasing in coverage
            assert fi_low >= fi_high - 1e-12
            costs = sorted(rng.uniform(0.1, 2.0, size=2))
            p_low = SDParams(**{**p.__dict__, "unit_cost": costs[0]})
            p_high = SDParams(**{**p.__dict__, "unit_cost": costs[1]})
            fc_low, _ = price_multipliers(p_low, mp, covs[0])
            fc_high, _ = price_multipliers(p_high, mp, covs[0])
            if p.price_sens_cost > 0:
                assert fc_high >= fc_low - 1e-12


class TestInvariants:
    def test_conservation_random_runs(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            p = random_params(rng)
            s = steady_state(p, 100.0)
            start = s.stocks()
            ledger = FlowLedger()
            for day in range(100):
                noise = NoiseDraws(wip=rng.normal(0, 5), prod=rng.normal(0, 5),
                                   order=rng.normal(0, 8), inv=rng.normal(0, 5))
                for _ in range(4):
                    s = step_company(s, p, order_rate=rng.uniform(50, 150),
                                     noise=noise, dt=DT, ledger=ledger)
            for name, x0 in start.items():
                xt = getattr(s, name)
                scale = max(abs(xt), abs(x0), 1.0)
                assert abs((xt - x0) - ledger.flows[name]) / scale < 1e-9, name

    def test_non_negativity_fuzz(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = random_params(rng)
            s = steady_state(p, 100.0)
            for _ in range(200):
                noise = NoiseDraws(wip=rng.normal(0, 20), prod=rng.normal(0, 20),
                                   order=rng.normal(0, 30), inv=rng.normal(0, 20))
                s = step_company(s, p, order_rate=rng.uniform(0, 200),
                                 noise=noise, dt=DT)
                for name, v in s.stocks().items():
                    assert v >= 0.0, name
                for rate in (s.prod_br, s.prod_cr, s.ship_r, s.order_r, s.hire_r,
                             s.retire_r, s.layoff_r, s.vac_br, s.msr):
                    assert rate >= 0.0

    def test_bottleneck_bound(self):
        rng = np.random.default_rng(11)
        p = random_params(rng)
        s = steady_state(p, 100.0)
        for _ in range(400):
            labor_before = s.labor
            s = step_company(s, p, order_rate=rng.uniform(0, 250),
                             noise=NoiseDraws(order=rng.normal(0, 30)), dt=DT)
            # rates are computed from beginning-of-step stocks
            assert s.prod_br <= labor_before * p.daily_capacity_per_worker + 1e-9
            assert s.prod_br <= s.msr + 1e-9
            assert s.prod_br <= max(0.0, s.d_prod_br) + 1e-9
