"""Flat ``key = value`` configuration with unit-suffixed keys.

Example::

    # built-in defaults
    tc_ueV = 1.0
    bias_ueV = 140        # U0 - eps at the gate bias point
    t2star_us = 100
    nit_per_cm2 = 2e10
    sigma_nm = 10
    z_setback_nm = 12

Values from a file override the built-in defaults; command-line flags
override both.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .device import DeviceParams
from .stats import ExperimentConfig
from .traps import DotGeometry, SamplingSpec


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, object] = {
    "BL_T": 0.50,
    "BR_T": 0.40,
    "gL": 2.00,
    "gR": 2.00,
    "tc_ueV": 1.0,
    "U0_ueV": 10_000.0,
    "U0p_ueV": 10_000.0,
    "bias_ueV": 140.0,
    "eps_off_ueV": 0.0,
    "nit_per_cm2": 2e10,
    "L0_nm": 100.0,
    "margin_nm": 0.0,
    "dot_sep_nm": 35.0,
    "sigma_nm": 10.0,
    "z_setback_nm": 12.0,
    "point_mode": False,
    "t2star_us": 100.0,
    "tau_rtn_ms": 1.0,
    "gate": "cz",
    "devices": 1000,
    "trajectories": 200,
    "seed": 0,
    "bins": 40,
    "subtract_ensemble_mean": False,
    "pulse_shape": "adiabatic",
    "rx_frame": "rotating",
    "composite_order": "forward",
}

_SECTION = "trapgate"


def _coerce(key: str, raw) -> object:
    default = DEFAULTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(default, bool):
            if isinstance(raw, bool):
                return raw
            lowered = str(raw).lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            value = int(float(raw)) if isinstance(raw, str) and "e" in raw.lower() else int(raw)
            return value
        if isinstance(default, float):
            return float(raw)
        return str(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key}: {raw!r}") from None


def parse_config_text(text: str) -> dict[str, object]:
    """Parse flat key-value text into a dict of known, typed keys."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n{text}")
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for key, raw in parser.items(_SECTION):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config_file(path: str | Path) -> dict[str, object]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return parse_config_text(text)


def merge(*layers: dict[str, object]) -> dict[str, object]:
    """Later layers win; ``None`` values are ignored."""
    merged = dict(DEFAULTS)
    for layer in layers:
        for key, value in layer.items():
            if value is None:
                continue
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _coerce(key, value)
    return merged


def to_experiment(flat: dict[str, object]) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a merged flat mapping."""
    try:
        params = DeviceParams(
            B_L=flat["BL_T"], B_R=flat["BR_T"], g_L=flat["gL"], g_R=flat["gR"],
            t_c=flat["tc_ueV"], U0=flat["U0_ueV"], U0p=flat["U0p_ueV"],
            epsilon_on=flat["U0_ueV"] - flat["bias_ueV"], epsilon_off=flat["eps_off_ueV"],
        )
        sampling = SamplingSpec(flat["nit_per_cm2"], flat["L0_nm"], flat["margin_nm"])
        geometry = DotGeometry.symmetric(flat["dot_sep_nm"], sigma=flat["sigma_nm"],
                                         z_setback=flat["z_setback_nm"], point_mode=flat["point_mode"])
        if flat["composite_order"] not in ("forward", "reversed"):
            raise ValueError(f"composite_order must be 'forward' or 'reversed', got {flat['composite_order']!r}")
        return ExperimentConfig(
            params=params,
            sampling=sampling,
            geometry=geometry,
            gate=flat["gate"],
            n_devices=flat["devices"],
            n_trajectories=flat["trajectories"],
            T2_star=flat["t2star_us"] * 1e3,
            tau_rtn=flat["tau_rtn_ms"] * 1e6,
            master_seed=flat["seed"],
            bins=flat["bins"],
            subtract_ensemble_mean=flat["subtract_ensemble_mean"],
            pulse_shape=flat["pulse_shape"],
            rx_frame=flat["rx_frame"],
            reverse_composite=flat["composite_order"] == "reversed",
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def to_text(flat: dict[str, object]) -> str:
    return "".join(f"{key} = {flat[key]}\n" for key in DEFAULTS)
