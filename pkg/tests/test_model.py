import math

import numpy as np
import pytest

from aoiharvest.model import (
    HarvesterModel,
    InvalidConfigError,
    NetworkConfig,
    NetworkRealization,
    NoInterfererError,
    db_to_watt,
    energy_activation_power,
    harvested_energy,
    received_power,
    sir,
    sir_threshold,
    watt_to_db,
)


def make_realization(d, g):
    return NetworkRealization(distances=np.asarray(d, float), gains=np.asarray(g, float))


def test_defaults_match_reference_settings():
    cfg = NetworkConfig()
    assert cfg.e_th == 0.010
    assert cfg.alpha == 3.0
    assert cfg.sigma_bits == 10.0
    assert cfg.eta == 0.9
    assert cfg.xi == 0.4
    assert cfg.tau == 1.0
    assert cfg.density == 0.003
    assert cfg.radius == 60.0
    assert cfg.bandwidth == 1e4
    assert cfg.harvester.kind == "linear"


@pytest.mark.parametrize("kwargs", [
    {"xi": 1.5}, {"xi": 1.0}, {"xi": -0.1},
    {"alpha": 2.0}, {"alpha": 1.5},
    {"p_a": 0.0}, {"p_a": 1.2},
    {"eta": 0.0}, {"eta": 1.1},
    {"p_t": 0.0}, {"tau": -1.0}, {"radius": 0.0}, {"density": -1e-3},
    {"bandwidth": 0.0}, {"e_th": -1.0}, {"sigma_bits": -1.0},
])
def test_config_invariants_rejected(kwargs):
    with pytest.raises(InvalidConfigError):
        NetworkConfig(**kwargs)


def test_harvester_model_validation():
    with pytest.raises(InvalidConfigError):
        HarvesterModel(kind="other")
    with pytest.raises(InvalidConfigError):
        HarvesterModel(kind="nonlinear", pr_min=2.0, pr_max=1.0)
    with pytest.raises(InvalidConfigError):
        HarvesterModel(kind="nonlinear", pr_min=-0.5, pr_max=1.0)


def test_realization_validation():
    with pytest.raises(InvalidConfigError):
        make_realization([2.0, 1.0], [1.0, 1.0])   # not sorted
    with pytest.raises(InvalidConfigError):
        make_realization([0.0, 1.0], [1.0, 1.0])   # nonpositive distance
    with pytest.raises(InvalidConfigError):
        make_realization([1.0, 2.0], [1.0, 0.0])   # nonpositive gain
    with pytest.raises(InvalidConfigError):
        make_realization([1.0, 2.0], [1.0])        # length mismatch


def test_harvested_energy_zero_phase():
    cfg = NetworkConfig(xi=0.0)
    re = make_realization([1.0, 2.0], [1.0, 1.0])
    assert harvested_energy(re, cfg) == 0.0


def test_harvested_energy_linear_hand_value():
    # single transmitter at 2 m, unit gain: 0.9 * 0.4 * 1 * 1 * 2^-3
    cfg = NetworkConfig(p_t=1.0)
    re = make_realization([2.0], [1.0])
    assert harvested_energy(re, cfg) == pytest.approx(0.045, rel=1e-12)


def test_harvested_energy_nonlinear_branches():
    # below the activation threshold: nothing harvested
    cfg = NetworkConfig(p_t=1.0, harvester=HarvesterModel(kind="nonlinear", pr_min=1.0, pr_max=2.0))
    re = make_realization([1.0], [0.5])            # Pr = 0.5 W
    assert received_power(re, cfg) == pytest.approx(0.5)
    assert harvested_energy(re, cfg) == 0.0
    # saturated: eta*xi*tau*pr_max
    cfg = NetworkConfig(p_t=1.0, harvester=HarvesterModel(kind="nonlinear", pr_min=0.0, pr_max=1.0))
    re = make_realization([1.0], [5.0])            # Pr = 5 W
    assert harvested_energy(re, cfg) == pytest.approx(0.36, rel=1e-12)


def test_nonlinear_energy_trichotomy():
    rng = np.random.default_rng(7)
    cfg_nl = NetworkConfig(p_t=2.0, harvester=HarvesterModel(kind="nonlinear", pr_min=0.01, pr_max=0.05))
    cfg_lin = NetworkConfig(p_t=2.0)
    cap = cfg_nl.eta * cfg_nl.xi * cfg_nl.tau * cfg_nl.harvester.pr_max
    for _ in range(200):
        k = rng.integers(1, 6)
        d = np.sort(rng.uniform(1.0, 60.0, k))
        g = rng.exponential(1.0, k)
        re = make_realization(d, g)
        nl = harvested_energy(re, cfg_nl)
        lin = harvested_energy(re, cfg_lin)
        assert nl in (0.0, lin, cap)
        assert nl <= max(lin, cap)


@pytest.mark.parametrize("field", ["eta", "xi", "tau", "p_t"])
def test_linear_energy_scales_in_each_factor(field):
    base = NetworkConfig(eta=0.5, xi=0.25, tau=2.0, p_t=3.0)
    re = make_realization([1.5, 3.0, 7.0], [0.7, 1.2, 0.1])
    e0 = harvested_energy(re, base)
    import dataclasses
    scaled = dataclasses.replace(base, **{field: getattr(base, field) * 1.75})
    assert harvested_energy(re, scaled) == pytest.approx(1.75 * e0, rel=1e-12)


def test_sir_symmetric_single_interferer():
    cfg = NetworkConfig()
    re = make_realization([5.0, 5.0], [1.0, 1.0])
    assert sir(re, cfg) == 1.0


def test_sir_hand_value():
    cfg = NetworkConfig()
    re = make_realization([1.0, 1.0, 1.0], [2.0, 1.0, 1.0])
    assert sir(re, cfg) == pytest.approx(1.0, rel=1e-15)


def test_sir_independent_of_transmit_power():
    rng = np.random.default_rng(3)
    d = np.sort(rng.uniform(1, 50, 8))
    g = rng.exponential(1.0, 8)
    re = make_realization(d, g)
    v1 = sir(re, NetworkConfig(p_t=1.0))
    v2 = sir(re, NetworkConfig(p_t=2.0))
    assert v1 == v2  # P_t cancels exactly


def test_sir_requires_interferer():
    re = make_realization([2.0], [1.0])
    with pytest.raises(NoInterfererError):
        sir(re, NetworkConfig())


def test_sir_threshold_values():
    assert sir_threshold(NetworkConfig(sigma_bits=0.0)) == 0.0
    beta = sir_threshold(NetworkConfig())
    assert beta == pytest.approx(2.0 ** (10.0 / 6000.0) - 1.0, rel=1e-15)
    assert beta == pytest.approx(1.1562e-3, rel=1e-3)
    assert sir_threshold(NetworkConfig(sigma_bits=6000.0)) == 1.0


def test_sir_threshold_monotone():
    betas_xi = [sir_threshold(NetworkConfig(xi=x)) for x in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(b2 > b1 for b1, b2 in zip(betas_xi, betas_xi[1:]))
    betas_sigma = [sir_threshold(NetworkConfig(sigma_bits=s)) for s in (1.0, 10.0, 100.0, 1000.0)]
    assert all(b2 > b1 for b1, b2 in zip(betas_sigma, betas_sigma[1:]))
    assert all(b > 0 for b in betas_xi)


def test_sir_threshold_overflows_to_inf():
    assert sir_threshold(NetworkConfig(xi=1 - 1e-9)) == math.inf


def test_energy_activation_power():
    # received power at which one slot's linear harvest exactly meets e_th
    cfg = NetworkConfig()
    c_star = energy_activation_power(cfg)
    assert c_star == pytest.approx(0.010 / (0.9 * 0.4 * 1.0), rel=1e-12)
    re = make_realization([1.0], [c_star * 1.0000001])  # Pr just above c*
    assert harvested_energy(re, NetworkConfig(p_t=1.0)) > cfg.e_th
    assert energy_activation_power(NetworkConfig(xi=0.0)) == math.inf


def test_db_conversions():
    assert db_to_watt(10.0) == pytest.approx(10.0)
    assert db_to_watt(0.0) == 1.0
    assert watt_to_db(db_to_watt(7.3)) == pytest.approx(7.3, rel=1e-12)
    with pytest.raises(InvalidConfigError):
        watt_to_db(0.0)
