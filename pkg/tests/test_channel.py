import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from aeronet.channel import (
    LinkBudget, McsTable, budget_constant_db, distance_for_rx_power, distance_for_snr, link_available,
    mcs_rate_for_snr, min_snr_for_demand, rx_power_dbm, shannon_capacity_bps, shannon_from_snr_db, snr_db,
)
from aeronet.errors import InfeasibleDemandError, InvalidInputError, ParseError, SchemaError

mp.mp.dps = 40


def oracle_k(freq="5250e6", noise="-85"):
    return -20 * mp.log10(4 * mp.pi / mp.mpf("3e8")) - 20 * mp.log10(mp.mpf(freq)) - mp.mpf(noise)


K_ORACLE = float(oracle_k())


def test_budget_constant_matches_oracle():
    assert budget_constant_db() == pytest.approx(K_ORACLE, abs=1e-12)
    assert K_ORACLE == pytest.approx(38.15504174583, abs=1e-10)


def test_rx_power_at_one_meter():
    b = LinkBudget(tx_power_dbm=22)
    assert rx_power_dbm(b, 1.0) == pytest.approx(float(22 + oracle_k() - 85), abs=1e-9)
    assert rx_power_dbm(b, 1.0) == pytest.approx(-24.84496, abs=1e-5)


def test_doubling_distance_costs_6db():
    b = LinkBudget()
    assert rx_power_dbm(b, 10) - rx_power_dbm(b, 20) == pytest.approx(20 * math.log10(2), abs=1e-12)


def test_inversion_for_35db_at_22dbm():
    b = LinkBudget(tx_power_dbm=22)
    d = distance_for_snr(b, 35)
    assert d == pytest.approx(float(mp.power(10, (oracle_k() + 22 - 35) / 20)), rel=1e-12)
    # scan oracle: first grid point below 35 dB
    grid = np.arange(1.0, 100.0, 1e-4)
    below = grid[snr_db(b, grid) < 35][0]
    assert abs(below - d) < 2e-4


def test_snr_examples():
    b = LinkBudget()
    assert snr_db(b, 4.3) == pytest.approx(float(oracle_k() - 20 * mp.log10(mp.mpf("4.3"))), abs=1e-9)
    assert snr_db(b, 10.0) == pytest.approx(18.15504, abs=1e-5)
    assert LinkBudget().snr_threshold_linear == pytest.approx(3.1623, abs=1e-4)


def test_snr_monotone_and_rejects_nonpositive():
    b = LinkBudget()
    d = np.logspace(-3, 3, 200)
    assert np.all(np.diff(snr_db(b, d)) < 0)
    with pytest.raises(InvalidInputError):
        snr_db(b, 0.0)


def test_link_threshold_is_strict():
    b = LinkBudget()
    d5 = distance_for_snr(b, 5.0)
    assert not link_available(LinkBudget(snr_threshold_db=float(snr_db(b, d5))), d5)
    assert link_available(b, distance_for_snr(b, 5.01))
    assert not link_available(b, 1e6)


def test_shannon_at_threshold():
    assert shannon_from_snr_db(160e6, 5.0) / 1e6 == pytest.approx(329.2, abs=0.5)
    assert float(shannon_from_snr_db(160e6, 5.0)) == pytest.approx(
        float(160e6 * mp.log(1 + mp.power(10, mp.mpf("0.5")), 2)), rel=1e-12)
    assert float(shannon_from_snr_db(160e6, -400)) == pytest.approx(0.0, abs=1e-20)


def test_capacity_decreases_with_distance():
    b = LinkBudget()
    c = shannon_capacity_bps(b, np.linspace(1, 200, 500))
    assert np.all(np.diff(c) < 0)


@given(st.floats(0.1, 1000))
def test_round_trip_inversion(d):
    b = LinkBudget(tx_power_dbm=7)
    assert distance_for_rx_power(b, rx_power_dbm(b, d)) == pytest.approx(d, rel=1e-6)


@given(st.floats(0.1, 500))
def test_gates_agree(d):
    b = LinkBudget()
    gate = shannon_capacity_bps(b, d) > b.bandwidth_hz * math.log2(1 + b.snr_threshold_linear)
    assert link_available(b, d) == gate


def test_mcs_rows():
    t = McsTable.default()
    assert mcs_rate_for_snr(t, 35) == 702e6
    assert mcs_rate_for_snr(t, 35) / 4 == 175.5e6
    assert mcs_rate_for_snr(t, 20) == 234e6
    assert mcs_rate_for_snr(t, 20) / 4 == 58.5e6
    assert mcs_rate_for_snr(t, 12) == 58.5e6
    assert mcs_rate_for_snr(t, 37) == 780e6
    assert mcs_rate_for_snr(t, 11.9) == 0


@given(st.floats(-10, 60), st.floats(-10, 60))
def test_mcs_monotone(a, b):
    t = McsTable.default()
    lo, hi = sorted((a, b))
    assert mcs_rate_for_snr(t, lo) <= mcs_rate_for_snr(t, hi)


def test_min_snr_for_demand():
    t = McsTable.default()
    assert min_snr_for_demand(t, 48.75e6, 4) == 20
    assert min_snr_for_demand(t, 146.25e6, 4) == 35
    assert min_snr_for_demand(t, 0, 4) == 12
    with pytest.raises(InfeasibleDemandError):
        min_snr_for_demand(t, 200e6, 4)


def test_mcs_csv_round_trip_and_errors():
    t = McsTable.default()
    assert McsTable.from_csv_text(t.to_csv()) == t
    with pytest.raises(SchemaError):
        McsTable.from_csv_text("snr,rate\n12,1\n")
    with pytest.raises(ParseError) as e:
        McsTable.from_csv_text("min_snr_db,phy_rate_bps\n12,58.5e6\nabc,1\n")
    assert e.value.lineno == 3
    with pytest.raises(InvalidInputError):
        McsTable([(20, 1.0), (12, 2.0)])
