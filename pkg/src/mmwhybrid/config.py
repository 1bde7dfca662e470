"""Declarative run configuration: YAML parsing, defaults, validation.

A config file is a YAML mapping with up to six sections (``array``,
``channel``, ``ba``, ``se``, ``power``, ``run``), each optional; an
empty file reproduces the default link setup (32-antenna 2-chain BS,
16-antenna single-chain UEs, the three-path profile, 40 GHz carrier,
0.8 GHz bandwidth).  Unknown keys are rejected with their full dotted
path so typos fail loudly instead of silently running defaults.

Numeric fields accept YAML numbers or number-like strings ("0.8e9"),
since plain-YAML exponent literals without a sign parse as strings.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import yaml

from .arrays import Architecture, ArrayConfig
from .channel import Scenario
from .evaluate import PrecodingScheme
from .power import PAModel, default_radiated_grid, watts_to_dbm

OUT_DIR_ENV = "MMWHYBRID_OUT"

DEFAULT_BA_SLOTS = tuple(range(10, 101, 10))
DEFAULT_SE_SNR_DB = tuple(float(s) for s in range(-30, 41, 10))
DEFAULT_SE_SCHEMES = ("bst", "bzf_p1", "bzf_p2", "bzf_p3")


class ConfigError(ValueError):
    """Malformed, mistyped, or physically inconsistent configuration."""


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got a boolean")
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected an integer, got {value!r}") from None
    if isinstance(value, float) and value != out:
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return out


def _as_float(value, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got a boolean")
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{path}: expected a finite number, got {value!r}")
    return out


def _as_list(value, path: str) -> list:
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{path}: expected a list, got {value!r}")
    return list(value)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated run configuration with defaults applied."""

    # array
    bs_antennas: int = 32
    bs_rf_chains: int = 2
    ue_antennas: int = 16
    ue_rf_chains: int = 1
    architecture: Architecture | None = None  # None = sweep both

    # channel
    profile: tuple = ((1.0, 100.0), (0.6, 10.0), (0.6, 0.0))
    carrier_hz: float = 40e9
    bandwidth_hz: float = 0.8e9
    noise_psd: float = 1.25e-9
    angle_mode: str | None = None  # None = per-command default
    min_aod_separation: int | None = None
    beacon_coherence_blocks: int = 3
    delay_spread_s: float = 1e-7

    # ba sweep
    ba_slots: tuple = DEFAULT_BA_SLOTS
    ba_snr_db: float = -20.0
    ba_trials: int = 200

    # se sweep
    se_snr_db: tuple = DEFAULT_SE_SNR_DB
    se_schemes: tuple = DEFAULT_SE_SCHEMES
    se_trials: int = 500

    # power sweep
    pa_p_max_w: float = 4.0e-3
    pa_eta_max: float = 0.3
    power_p_rad0_dbm: tuple = tuple(watts_to_dbm(w) for w in default_radiated_grid())
    power_options: tuple = (1, 2)

    # run
    seed: int = 1
    out_dir: str | None = None
    threads: int = 1

    @property
    def architectures(self) -> tuple[Architecture, ...]:
        if self.architecture is not None:
            return (self.architecture,)
        return (Architecture.FC, Architecture.OSPS)

    @property
    def pa_model(self) -> PAModel:
        return PAModel(p_max=self.pa_p_max_w, eta_max=self.pa_eta_max)

    def array_config(self, architecture: Architecture) -> ArrayConfig:
        return ArrayConfig(bs_antennas=self.bs_antennas, bs_rf_chains=self.bs_rf_chains,
                           ue_antennas=self.ue_antennas, ue_rf_chains=self.ue_rf_chains,
                           architecture=architecture)

    def scenario(self, architecture, angle_mode: str) -> Scenario:
        """Materialize the physical scenario for one architecture.

        ``angle_mode`` is the caller's default (training uses the beam
        grid, data sweeps draw continuous angles) and is overridden by
        an explicit ``channel.angle_mode``.
        """
        return Scenario(config=self.array_config(Architecture(architecture)),
                        profile=self.profile,
                        angle_mode=self.angle_mode or angle_mode,
                        min_aod_separation=self.min_aod_separation,
                        carrier_hz=self.carrier_hz,
                        bandwidth_hz=self.bandwidth_hz,
                        noise_psd=self.noise_psd,
                        beacon_coherence_blocks=self.beacon_coherence_blocks,
                        delay_spread_s=self.delay_spread_s)

    def resolve_out_dir(self, cli_out: str | None = None) -> str:
        return cli_out or self.out_dir or os.environ.get(OUT_DIR_ENV) or os.getcwd()


_SECTION_KEYS = {
    "array": {"bs_antennas", "bs_rf_chains", "ue_antennas", "ue_rf_chains", "architecture"},
    "channel": {"profile", "carrier_hz", "bandwidth_hz", "noise_psd", "angle_mode",
                "min_aod_separation", "beacon_coherence_blocks", "delay_spread_s"},
    "ba": {"slots", "snr_bbf_db", "trials"},
    "se": {"snr_bbf_db", "schemes", "trials", "users"},
    "power": {"p_max_w", "eta_max", "p_rad0_dbm", "options"},
    "run": {"seed", "out_dir", "threads"},
}


def _check_keys(mapping: dict, allowed, path: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}{key}'")


def _parse_profile(raw, path: str) -> tuple:
    pairs = []
    for i, entry in enumerate(_as_list(raw, path)):
        entry = _as_list(entry, f"{path}[{i}]")
        if len(entry) != 2:
            raise ConfigError(f"{path}[{i}]: expected a [strength, rice_factor] pair")
        strength = _as_float(entry[0], f"{path}[{i}][0]")
        rice = math.inf if entry[1] in ("inf", ".inf") else _as_float(entry[1], f"{path}[{i}][1]")
        _require(strength > 0, f"{path}[{i}]: path strength must be positive")
        _require(rice >= 0, f"{path}[{i}]: rice factor must be non-negative")
        pairs.append((strength, rice))
    _require(bool(pairs), f"{path}: profile needs at least one path")
    return tuple(pairs)


def config_from_mapping(raw: dict | None) -> ScenarioConfig:
    """Validate a parsed YAML mapping and fill in defaults."""
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping of sections")
    _check_keys(raw, _SECTION_KEYS, "")
    sections = {}
    for name in _SECTION_KEYS:
        section = raw.get(name) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        _check_keys(section, _SECTION_KEYS[name], f"{name}.")
        sections[name] = section

    kw = {}
    arr = sections["array"]
    for key in ("bs_antennas", "bs_rf_chains", "ue_antennas", "ue_rf_chains"):
        if key in arr:
            kw[key] = _as_int(arr[key], f"array.{key}")
    if arr.get("architecture") is not None:
        try:
            kw["architecture"] = Architecture(arr["architecture"])
        except ValueError:
            raise ConfigError(f"array.architecture: expected 'FC' or 'OSPS', got {arr['architecture']!r}") from None

    ch = sections["channel"]
    if "profile" in ch:
        kw["profile"] = _parse_profile(ch["profile"], "channel.profile")
    for key in ("carrier_hz", "bandwidth_hz", "noise_psd", "delay_spread_s"):
        if key in ch:
            value = _as_float(ch[key], f"channel.{key}")
            _require(value > 0, f"channel.{key}: must be positive")
            kw[key] = value
    if ch.get("angle_mode") is not None:
        mode = ch["angle_mode"]
        _require(mode in ("grid", "continuous"),
                 f"channel.angle_mode: expected 'grid' or 'continuous', got {mode!r}")
        kw["angle_mode"] = mode
    if ch.get("min_aod_separation") is not None:
        sep = _as_int(ch["min_aod_separation"], "channel.min_aod_separation")
        _require(sep >= 0, "channel.min_aod_separation: must be non-negative")
        kw["min_aod_separation"] = sep
    if "beacon_coherence_blocks" in ch:
        blocks = _as_int(ch["beacon_coherence_blocks"], "channel.beacon_coherence_blocks")
        _require(blocks >= 1, "channel.beacon_coherence_blocks: must be positive")
        kw["beacon_coherence_blocks"] = blocks

    ba = sections["ba"]
    if "slots" in ba:
        slots = tuple(_as_int(t, "ba.slots[]") for t in _as_list(ba["slots"], "ba.slots"))
        _require(all(t > 0 for t in slots) and slots, "ba.slots: need positive slot counts")
        kw["ba_slots"] = slots
    if "snr_bbf_db" in ba:
        kw["ba_snr_db"] = _as_float(ba["snr_bbf_db"], "ba.snr_bbf_db")
    if "trials" in ba:
        kw["ba_trials"] = _as_int(ba["trials"], "ba.trials")
        _require(kw["ba_trials"] > 0, "ba.trials: must be positive")

    se = sections["se"]
    if "snr_bbf_db" in se:
        grid = tuple(_as_float(s, "se.snr_bbf_db[]") for s in _as_list(se["snr_bbf_db"], "se.snr_bbf_db"))
        _require(bool(grid), "se.snr_bbf_db: need at least one point")
        kw["se_snr_db"] = grid
    if "schemes" in se:
        labels = []
        for s in _as_list(se["schemes"], "se.schemes"):
            try:
                labels.append(PrecodingScheme.from_label(str(s)).label)
            except ValueError as exc:
                raise ConfigError(f"se.schemes: {exc}") from None
        _require(bool(labels), "se.schemes: need at least one scheme")
        kw["se_schemes"] = tuple(labels)
    if "trials" in se:
        kw["se_trials"] = _as_int(se["trials"], "se.trials")
        _require(kw["se_trials"] > 0, "se.trials: must be positive")
    if se.get("users") is not None:
        users = _as_int(se["users"], "se.users")
        chains = kw.get("bs_rf_chains", 2)
        _require(users == chains,
                 "se.users: only full scheduling (users == bs_rf_chains) is implemented")

    pw = sections["power"]
    if "p_max_w" in pw:
        kw["pa_p_max_w"] = _as_float(pw["p_max_w"], "power.p_max_w")
        _require(kw["pa_p_max_w"] > 0, "power.p_max_w: must be positive")
    if "eta_max" in pw:
        kw["pa_eta_max"] = _as_float(pw["eta_max"], "power.eta_max")
        _require(0 < kw["pa_eta_max"] <= 1, "power.eta_max: must be in (0, 1]")
    if "p_rad0_dbm" in pw:
        kw["power_p_rad0_dbm"] = tuple(_as_float(p, "power.p_rad0_dbm[]")
                                       for p in _as_list(pw["p_rad0_dbm"], "power.p_rad0_dbm"))
        _require(bool(kw["power_p_rad0_dbm"]), "power.p_rad0_dbm: need at least one point")
    if "options" in pw:
        options = tuple(_as_int(o, "power.options[]") for o in _as_list(pw["options"], "power.options"))
        _require(options and all(o in (1, 2) for o in options), "power.options: subset of [1, 2]")
        kw["power_options"] = options

    run = sections["run"]
    if "seed" in run:
        kw["seed"] = _as_int(run["seed"], "run.seed")
        _require(kw["seed"] >= 0, "run.seed: must be non-negative")
    if run.get("out_dir") is not None:
        _require(isinstance(run["out_dir"], str), "run.out_dir: expected a path string")
        kw["out_dir"] = run["out_dir"]
    if "threads" in run:
        kw["threads"] = _as_int(run["threads"], "run.threads")
        _require(kw["threads"] >= 1, "run.threads: must be at least 1")

    config = ScenarioConfig(**kw)
    # Cross-field physics checks; constructing the array surfaces
    # divisibility violations with the offending numbers in the message.
    try:
        for arch in config.architectures:
            config.array_config(arch)
        config.pa_model
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def parse_config(path: str | None) -> ScenarioConfig:
    """Load and validate a config file; ``None`` means all defaults."""
    if path is None:
        return config_from_mapping({})
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    return config_from_mapping(raw)
