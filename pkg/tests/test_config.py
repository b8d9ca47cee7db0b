import math

import pytest

from trapgate.config import DEFAULTS, ConfigError, merge, parse_config_text, to_experiment, to_text


def test_defaults_build_reference_device():
    cfg = to_experiment(merge())
    assert cfg.params.bias == pytest.approx(140.0)
    assert cfg.T2_star == 1e5 and cfg.tau_rtn == 1e6
    assert cfg.sampling.expected_in_area == pytest.approx(2.0)
    assert cfg.geometry.center_R == (17.5, 0.0)


def test_parse_with_comments_and_types():
    flat = parse_config_text("tc_ueV = 0.5   # weaker coupling\nseed = 12\npoint_mode = yes\ngate = composite\n")
    assert flat == {"tc_ueV": 0.5, "seed": 12, "point_mode": True, "gate": "composite"}


def test_layers_later_wins_and_none_ignored():
    flat = merge({"tc_ueV": 0.5, "seed": 3}, {"tc_ueV": None, "seed": "9"})
    assert flat["tc_ueV"] == 0.5 and flat["seed"] == 9


def test_unknown_and_bad_values_rejected():
    with pytest.raises(ConfigError):
        parse_config_text("nonsense = 1\n")
    with pytest.raises(ConfigError):
        parse_config_text("tc_ueV = fast\n")
    with pytest.raises(ConfigError):
        to_experiment(merge({"tc_ueV": 20.0}))
    with pytest.raises(ConfigError):
        to_experiment(merge({"composite_order": "sideways"}))


def test_infinite_t2_allowed():
    cfg = to_experiment(merge({"t2star_us": math.inf}))
    assert cfg.sigma_B == (0.0, 0.0)


def test_text_round_trip():
    flat = merge({"tc_ueV": 0.75, "gate": "composite"})
    assert merge(parse_config_text(to_text(flat))) == flat
    assert set(parse_config_text(to_text(flat))) == set(DEFAULTS)
