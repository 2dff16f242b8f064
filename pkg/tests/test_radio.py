"""Radio energy formulas and the channel-quality model."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egscfo.config import scenario_from_parser, read_config_text
from egscfo.radio import ChannelModel, Position, RadioParams

TABLE = RadioParams()  # hardware-table defaults in SI units


def test_crossover_distance_value():
    assert TABLE.crossover_distance == pytest.approx(87.7058, abs=1e-4)


def test_crossover_unit_ratio():
    params = RadioParams(eps_fs=1e-12, eps_amp=1e-12)
    assert params.crossover_distance == pytest.approx(1.0)


def test_tx_branch_continuity_at_crossover():
    d0 = TABLE.crossover_distance
    near = TABLE.e_elec + TABLE.eps_fs * d0 ** 2
    far = TABLE.e_elec + TABLE.eps_amp * d0 ** 4
    assert abs(near - far) / far <= 1e-12


def test_tx_energy_near_field():
    assert TABLE.tx_energy(3000, 50.0) == pytest.approx(2.25e-4)


def test_tx_energy_far_field():
    assert TABLE.tx_energy(3000, 100.0) == pytest.approx(5.4e-4)


def test_tx_energy_zero_bits():
    assert TABLE.tx_energy(0, 123.0) == 0.0


def test_rx_energy_value():
    assert TABLE.rx_energy(3000) == pytest.approx(1.65e-4)
    assert TABLE.rx_energy(0) == 0.0


def test_rx_cheaper_than_far_tx():
    d0 = TABLE.crossover_distance
    assert TABLE.rx_energy(3000) < TABLE.tx_energy(3000, d0)


def test_monitor_energy_not_overheard():
    assert TABLE.monitor_energy(None, 3000) == pytest.approx(1.0e-7)


def test_monitor_energy_overheard():
    assert TABLE.monitor_energy(1.0, 3000) == pytest.approx(1.501e-5)


def test_monitor_energy_limit_case():
    assert TABLE.monitor_energy(1e-9, 0) == pytest.approx(0.0, abs=1e-15)


def test_monitor_energy_domain_error():
    with pytest.raises(ValueError):
        TABLE.monitor_energy(TABLE.d_max_overhear + 0.1, 3000)
    with pytest.raises(ValueError):
        TABLE.monitor_energy(-0.5, 3000)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 100000), st.floats(0, 500, allow_nan=False))
def test_tx_energy_nonnegative_and_monotone_in_bits(bits, d):
    assert TABLE.tx_energy(bits, d) >= 0.0
    assert TABLE.tx_energy(bits + 1, d) >= TABLE.tx_energy(bits, d)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 400, allow_nan=False), st.floats(0, 100, allow_nan=False))
def test_tx_energy_monotone_in_distance(d, delta):
    assert TABLE.tx_energy(1000, d + delta) >= TABLE.tx_energy(1000, d) - 1e-18


def test_tx_linear_in_bits():
    assert TABLE.tx_energy(6000, 70.0) == pytest.approx(2 * TABLE.tx_energy(3000, 70.0))
    assert TABLE.rx_energy(6000) == pytest.approx(2 * TABLE.rx_energy(3000))


def test_params_must_be_positive():
    with pytest.raises(ValueError):
        RadioParams(e_elec=0.0)


# -- channel model ------------------------------------------------------------------


def test_stationary_probabilities():
    ch = ChannelModel(alpha_bad=3.0, alpha_good=7.0)
    assert ch.p_bad == pytest.approx(0.3)
    assert ch.p_good == pytest.approx(0.7)
    assert ch.p_bad + ch.p_good == 1.0


def test_symmetric_rates():
    ch = ChannelModel(alpha_bad=5.0, alpha_good=5.0)
    assert ch.p_bad == pytest.approx(0.5)


def test_channel_rates_positive():
    with pytest.raises(ValueError):
        ChannelModel(alpha_bad=0.0)


def test_channel_empirical_frequency():
    ch = ChannelModel()
    rng = np.random.default_rng(123)
    bad = sum(1 for _ in range(10**6) if ch.sample(rng)[0] == "bad")
    assert abs(bad / 10**6 - 0.3) < 0.005


def test_holding_times_positive():
    ch = ChannelModel()
    rng = np.random.default_rng(5)
    for _ in range(100):
        state, hold = ch.sample(rng)
        assert state in ("bad", "good")
        assert hold > 0.0


# -- geometry and unit loading ----------------------------------------------------------


def test_position_distance():
    assert Position(0.0, 0.0).distance_to(Position(3.0, 4.0)) == pytest.approx(5.0)


def test_table_units_convert_to_si():
    cp = read_config_text("""
[radio]
E_elec_nJ_per_bit = 50
eps_fs_pJ_per_bit_m2 = 10
eps_amp_pJ_per_bit_m4 = 0.0013
E_DA_nJ_per_bit = 5
E_h_nJ_per_bit = 5
E_m_nJ_per_s = 10
D_m_s = 10
""")
    config = scenario_from_parser(cp)
    defaults = RadioParams()
    for name in ("e_elec", "eps_fs", "eps_amp", "e_da", "e_h", "e_m",
                 "d_max_overhear"):
        assert getattr(config.radio, name) == pytest.approx(
            getattr(defaults, name), rel=1e-12)
