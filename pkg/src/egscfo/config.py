"""Scenario parameters and their text-file format.

A scenario file is INI-style with one section per parameter block.
Hardware-table spellings with unit suffixes (``E_elec_nJ_per_bit``,
``P_DP``, ``N_NCH``, ...) are accepted alongside the plain SI field
names; everything is converted to joules/metres/seconds at load time.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace

from .outliers import OutlierThresholds
from .radio import ChannelModel, Position, RadioParams

NANO = 1e-9
PICO = 1e-12


class ConfigError(ValueError):
    """A scenario or plan file failed to parse or validate."""


@dataclass(frozen=True)
class AttackProfile:
    """Malicious-head behaviour: drop, else delay, else forward."""

    p_dp: float = 0.2
    p_dl: float = 0.2
    d_max: float = 10.0

    def validate(self) -> list[str]:
        problems = []
        if not 0.0 <= self.p_dp <= 1.0 or not 0.0 <= self.p_dl <= 1.0:
            problems.append("attack probabilities must lie in [0, 1]")
        if self.p_dp + self.p_dl > 1.0:
            problems.append("p_dp + p_dl must not exceed 1")
        if self.d_max <= 0.0:
            problems.append("maximum malicious delay must be positive")
        return problems


@dataclass(frozen=True)
class NoiseProfile:
    """Bad-channel monitoring uncertainty for honest forwards."""

    p_los: float = 0.2
    p_del: float = 0.2

    def validate(self) -> list[str]:
        if not 0.0 <= self.p_los <= 1.0 or not 0.0 <= self.p_del <= 1.0:
            return ["noise probabilities must lie in [0, 1]"]
        return []


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one simulation run needs besides its random seed."""

    node_count: int = 100
    area_width: float = 100.0
    area_height: float = 100.0
    malicious_fraction: float = 0.2
    bs_offset: float = 25.0
    packet_bits: int = 3000
    control_bits: int = 300
    n_nch: int = 2
    p_int: float = 0.07
    w: float = 6.0
    initial_energy: float = 2.0
    rounds_per_cycle: int = 50
    seed: int = 1
    max_rounds: int = 500_000
    evidence_horizon: int = 0  # rounds before unrefreshed counters expire; 0 = keep forever
    broadcast_distance: float | None = None
    radio: RadioParams = field(default_factory=RadioParams)
    channel: ChannelModel = field(default_factory=ChannelModel)
    thresholds: OutlierThresholds = field(default_factory=OutlierThresholds)
    attack: AttackProfile = field(default_factory=AttackProfile)
    noise: NoiseProfile = field(default_factory=NoiseProfile)
    fuzzy_sets: str | None = None

    @property
    def bs_position(self) -> Position:
        """Base station east of the deployment area, vertically centred."""
        return Position(self.area_width + self.bs_offset, self.area_height / 2.0)

    @property
    def effective_broadcast_distance(self) -> float:
        if self.broadcast_distance is not None:
            return self.broadcast_distance
        return math.hypot(self.area_width, self.area_height)

    def validate(self) -> list[str]:
        problems = []
        if self.node_count < 4:
            problems.append("node_count must be at least 4")
        if not 0.0 <= self.malicious_fraction < 1.0:
            problems.append("malicious_fraction must lie in [0, 1)")
        if self.area_width <= 0.0 or self.area_height <= 0.0:
            problems.append("area dimensions must be positive")
        if self.packet_bits <= 0 or self.control_bits <= 0:
            problems.append("packet sizes must be positive")
        if self.n_nch < 1:
            problems.append("candidate count must be at least 1")
        if not 0.0 < self.p_int < 1.0:
            problems.append("p_int must lie in (0, 1)")
        if self.w <= 1.0:
            problems.append("w must exceed 1")
        if self.initial_energy <= 0.0:
            problems.append("initial energy must be positive")
        if self.rounds_per_cycle < 1:
            problems.append("rounds_per_cycle must be at least 1")
        if self.max_rounds < 1:
            problems.append("max_rounds must be at least 1")
        if self.evidence_horizon < 0:
            problems.append("evidence_horizon must be non-negative")
        problems.extend(self.attack.validate())
        problems.extend(self.noise.validate())
        return problems

    def check(self) -> "ScenarioConfig":
        problems = self.validate()
        if problems:
            raise ConfigError("invalid scenario: " + "; ".join(problems))
        return self


# -- INI parsing ---------------------------------------------------------------

# key -> (field, converter); verbatim table spellings and SI names.
_SCENARIO_KEYS = {
    "node_count": ("node_count", int),
    "N": ("node_count", int),
    "area_width": ("area_width", float),
    "area_height": ("area_height", float),
    "malicious_fraction": ("malicious_fraction", float),
    "bs_offset": ("bs_offset", float),
    "packet_bits": ("packet_bits", int),
    "packet_size": ("packet_bits", int),
    "control_bits": ("control_bits", int),
    "control_packet_size": ("control_bits", int),
    "n_nch": ("n_nch", int),
    "N_NCH": ("n_nch", int),
    "p_int": ("p_int", float),
    "w": ("w", float),
    "initial_energy": ("initial_energy", float),
    "E0_J": ("initial_energy", float),
    "E0": ("initial_energy", float),
    "rounds_per_cycle": ("rounds_per_cycle", int),
    "seed": ("seed", int),
    "max_rounds": ("max_rounds", int),
    "broadcast_distance": ("broadcast_distance", float),
    "evidence_horizon": ("evidence_horizon", int),
}

_RADIO_KEYS = {
    "e_elec": ("e_elec", 1.0),
    "E_elec_nJ_per_bit": ("e_elec", NANO),
    "eps_fs": ("eps_fs", 1.0),
    "eps_fs_pJ_per_bit_m2": ("eps_fs", PICO),
    "eps_amp": ("eps_amp", 1.0),
    "eps_amp_pJ_per_bit_m4": ("eps_amp", PICO),
    "e_da": ("e_da", 1.0),
    "E_DA_nJ_per_bit": ("e_da", NANO),
    "e_h": ("e_h", 1.0),
    "E_h_nJ_per_bit": ("e_h", NANO),
    "e_m": ("e_m", 1.0),
    "E_m_nJ_per_s": ("e_m", NANO),
    "d_max_overhear": ("d_max_overhear", 1.0),
    "D_m_s": ("d_max_overhear", 1.0),
    "D_m": ("d_max_overhear", 1.0),
}

_CHANNEL_KEYS = {
    "alpha_bad": "alpha_bad",
    "alpha_0": "alpha_bad",
    "alpha_good": "alpha_good",
    "alpha_1": "alpha_good",
}

_OUTLIER_KEYS = {
    "d_m": ("d_m", float),
    "d_mbg": ("d_mbg", float),
    "t_s": ("t_s", int),
    "T_s": ("t_s", int),
}

_ATTACK_KEYS = {
    "p_dp": "p_dp",
    "P_DP": "p_dp",
    "p_dl": "p_dl",
    "P_DL": "p_dl",
    "d_max": "d_max",
    "D_m": "d_max",
}

_NOISE_KEYS = {
    "p_los": "p_los",
    "P_LOS": "p_los",
    "p_del": "p_del",
    "P_DEL": "p_del",
}

_SECTION_ALIASES = {
    "scenario": "scenario",
    "ScenarioConfig": "scenario",
    "radio": "radio",
    "RadioParams": "radio",
    "channel": "channel",
    "ChannelModel": "channel",
    "outlier": "outlier",
    "OutlierThresholds": "outlier",
    "attack": "attack",
    "AttackProfile": "attack",
    "noise": "noise",
    "NoiseProfile": "noise",
}


def _section_fields(section, items, key_map, label):
    out = {}
    for key, raw in items:
        if key not in key_map:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        spec = key_map[key]
        try:
            if isinstance(spec, tuple) and callable(spec[1]):
                name, conv = spec
                out[name] = conv(raw)
            elif isinstance(spec, tuple):
                name, scale = spec
                out[name] = float(raw) * scale
            else:
                out[spec] = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} in [{section}]: {exc}") from exc
    return out


def read_config_text(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # table spellings are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    return cp


def scenario_from_parser(cp: configparser.ConfigParser, *, allow_extra=()) -> ScenarioConfig:
    """Assemble a ScenarioConfig from parsed sections.

    Sections in ``allow_extra`` are ignored (the plan parser owns them).
    Fuzzy set definitions ([input.*] / [output.*]) are carried verbatim
    for the engine to compile.
    """
    scenario_kwargs = {}
    radio_kwargs = {}
    channel_kwargs = {}
    outlier_kwargs = {}
    attack_kwargs = {}
    noise_kwargs = {}
    fuzzy_lines = []
    for section in cp.sections():
        if section in allow_extra:
            continue
        if section.startswith("input.") or section.startswith("output."):
            fuzzy_lines.append(f"[{section}]")
            for key, raw in cp.items(section):
                fuzzy_lines.append(f"{key} = {raw}")
            continue
        kind = _SECTION_ALIASES.get(section)
        if kind is None:
            raise ConfigError(f"unknown section [{section}]")
        items = cp.items(section)
        if kind == "scenario":
            if "area" in dict(items):
                raw = dict(items).pop("area")
                w, _, h = raw.lower().partition("x")
                scenario_kwargs["area_width"] = float(w)
                scenario_kwargs["area_height"] = float(h)
                items = [(k, v) for k, v in items if k != "area"]
            scenario_kwargs.update(_section_fields(section, items, _SCENARIO_KEYS, kind))
        elif kind == "radio":
            radio_kwargs.update(_section_fields(section, items, _RADIO_KEYS, kind))
        elif kind == "channel":
            channel_kwargs.update(_section_fields(section, items, _CHANNEL_KEYS, kind))
        elif kind == "outlier":
            outlier_kwargs.update(_section_fields(section, items, _OUTLIER_KEYS, kind))
        elif kind == "attack":
            attack_kwargs.update(_section_fields(section, items, _ATTACK_KEYS, kind))
        elif kind == "noise":
            noise_kwargs.update(_section_fields(section, items, _NOISE_KEYS, kind))

    try:
        config = ScenarioConfig(
            radio=RadioParams(**radio_kwargs),
            channel=ChannelModel(**channel_kwargs),
            thresholds=OutlierThresholds(**outlier_kwargs),
            attack=AttackProfile(**attack_kwargs),
            noise=NoiseProfile(**noise_kwargs),
            fuzzy_sets="\n".join(fuzzy_lines) or None,
            **scenario_kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config.check()


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_parser(read_config_text(fh.read()))


def with_overrides(config: ScenarioConfig, **kwargs) -> ScenarioConfig:
    return replace(config, **kwargs)
