"""Experiment configuration: TOML in user units, validated into model objects.

Every key has a default, so an empty file describes the standard setup: one
macrocell user and two femtocell users, 1 MHz, -110 dBm noise, 10 dBm
circuit power, power levels {20, 25, 30} dBm and SINR targets of 3 dB
(macrocell) and 5 dB (femtocell). Decibel fields carry a ``_db``/``_dbm``
suffix and are converted to linear units here.
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..learning import LearningConfig
from ..learning.runners import NONCOOP, RLHPA1, RLHPA2
from ..masking import MASK_POLICIES, NO_MASK, masked_scenario
from ..oracle import SELECTORS
from ..scenario import ScenarioError, load_scenario, tomllib
from ..topology import GeometryParams, RadioParams, generate_topology
from ..units import db_to_linear, dbm_to_watt

ORACLE = "oracle"
COOPERATIVE = "cooperative"
LEARNERS = (RLHPA1, RLHPA2, NONCOOP)
REGIMES = (*LEARNERS, ORACLE, COOPERATIVE)
OUTPUT_ENV = "FEMTOLEARN_OUT"
DEFAULT_OUTPUT = "results"
GENERATE = "generate"
FROM_FILE = "file"


class ConfigError(ValueError):
    pass


# kind, default
SCHEMA = {
    "scenario": {
        "source": ("str", GENERATE),
        "path": ("opt_str", None),
        "num_femtocells": ("int", 2),
        "macro_radius_m": ("float", 500.0),
        "femto_radius_m": ("float", 20.0),
        "pathloss_exponent": ("float", 4.0),
        "min_distance_m": ("float", 1.0),
        "shadowing_std_db": ("float", 0.0),
        "mask_policy": ("str", NO_MASK),
    },
    "radio": {
        "bandwidth_hz": ("float", 1e6),
        "noise_dbm": ("float", -110.0),
        "circuit_power_dbm": ("float", 10.0),
        "leader_levels_dbm": ("floats", [20.0, 25.0, 30.0]),
        "follower_levels_dbm": ("floats", [20.0, 25.0, 30.0]),
        "leader_min_sinr_db": ("float", 3.0),
        "follower_min_sinr_db": ("float", 5.0),
        "power_mask_dbm": ("opt_float", None),
    },
    "learning": {
        "num_episodes": ("int", 2000),
        "episode_length": ("int", 100),
        "temperature": ("opt_float_or_floats", None),
        "temperature_scale": ("float", 0.02),
        "leader_rate_init": ("float", 0.9),
        "follower_rate_init": ("float", 0.9),
        "rate_decay": ("float", 1.1),
        "rate_schedule": ("str", "geometric"),
        "follower_clock": ("str", "episode"),
        "belief_factor": ("float_or_floats", 2.0),
        "q_init": ("float_or_str", "optimistic"),
        "final_fraction": ("float", 0.1),
    },
    "experiment": {
        "regimes": ("strs", list(REGIMES)),
        "seeds": ("ints", [0]),
        "output_dir": ("opt_str", None),
        "write_traces": ("bool", True),
        "ne_selector": ("str", "max_sum"),
        "drift_window": ("int", 200),
        "drift_tolerance": ("float", 1e-2),
    },
    "sweep": {
        "parameter": ("opt_str", None),
        "values": ("floats", []),
    },
}
SWEEPABLE = ("scenario", "radio", "learning")


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _check_kind(path, kind, value):
    ok = {
        "str": lambda v: isinstance(v, str),
        "opt_str": lambda v: v is None or isinstance(v, str),
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "float": _is_num,
        "opt_float": lambda v: v is None or _is_num(v),
        "bool": lambda v: isinstance(v, bool),
        "floats": lambda v: isinstance(v, list) and all(_is_num(x) for x in v),
        "ints": lambda v: isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool)
                                                      for x in v),
        "strs": lambda v: isinstance(v, list) and all(isinstance(x, str) for x in v),
        "float_or_floats": lambda v: _is_num(v) or (isinstance(v, list) and all(map(_is_num, v))),
        "opt_float_or_floats": lambda v: v is None or _is_num(v) or (
            isinstance(v, list) and all(map(_is_num, v))),
        "float_or_str": lambda v: _is_num(v) or isinstance(v, str),
    }[kind]
    if not ok(value):
        raise ConfigError(f"{path}: expected {kind.replace('_', ' ')}, got {value!r}")
    if kind in ("float", "opt_float") and value is not None:
        return float(value)
    if kind in ("floats",):
        return [float(x) for x in value]
    return value


def resolve_key(name):
    """``section.key`` or a bare key that exists in exactly one section."""
    if "." in name:
        section, key = name.split(".", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown parameter {name!r}")
        return section, key
    hits = [s for s in SCHEMA if name in SCHEMA[s]]
    if len(hits) != 1:
        raise ConfigError(f"unknown or ambiguous parameter {name!r}")
    return hits[0], name


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``values`` holds every setting in user units."""

    values: dict
    base_dir: Path = Path(".")

    def __post_init__(self):
        self._validate()

    # -- access ---------------------------------------------------------
    def section(self, name):
        return self.values[name]

    @property
    def regimes(self):
        return list(self.values["experiment"]["regimes"])

    @property
    def seeds(self):
        return list(self.values["experiment"]["seeds"])

    @property
    def sweep(self):
        sw = self.values["sweep"]
        if sw["parameter"] is None:
            return None
        return resolve_key(sw["parameter"]), list(sw["values"])

    @property
    def write_traces(self):
        return self.values["experiment"]["write_traces"]

    def output_dir(self, override=None):
        if override:
            return Path(override)
        if self.values["experiment"]["output_dir"]:
            return self.base_dir / self.values["experiment"]["output_dir"]
        return Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))

    def with_value(self, section, key, value):
        return ExperimentConfig(_replaced(self.values, section, key, value), self.base_dir)

    def with_sweep(self, parameter, values):
        section, key = resolve_key(parameter)
        out = copy.deepcopy(self.values)
        out["sweep"] = {"parameter": f"{section}.{key}",
                        "values": _check_kind("sweep.values", "floats", list(values))}
        return ExperimentConfig(out, self.base_dir)

    def with_overrides(self, **experiment):
        values = copy.deepcopy(self.values)
        for key, value in experiment.items():
            values["experiment"][key] = _check_kind(f"experiment.{key}", SCHEMA["experiment"][key][0],
                                                    value)
        return ExperimentConfig(values, self.base_dir)

    # -- model objects --------------------------------------------------
    def geometry(self, seed) -> GeometryParams:
        s = self.values["scenario"]
        return GeometryParams(macro_radius=s["macro_radius_m"], femto_radius=s["femto_radius_m"],
                              num_femtocells=s["num_femtocells"],
                              pathloss_exponent=s["pathloss_exponent"], seed=seed,
                              min_distance=s["min_distance_m"],
                              shadowing_std_db=s["shadowing_std_db"])

    def radio(self) -> RadioParams:
        r = self.values["radio"]
        mask = r["power_mask_dbm"]
        return RadioParams(
            bandwidth=r["bandwidth_hz"],
            noise_power=dbm_to_watt(r["noise_dbm"]),
            circuit_power=dbm_to_watt(r["circuit_power_dbm"]),
            leader_levels=tuple(dbm_to_watt(p) for p in r["leader_levels_dbm"]),
            follower_levels=tuple(dbm_to_watt(p) for p in r["follower_levels_dbm"]),
            leader_min_sinr=db_to_linear(r["leader_min_sinr_db"]),
            follower_min_sinr=db_to_linear(r["follower_min_sinr_db"]),
            power_mask=None if mask is None else dbm_to_watt(mask),
        )

    def learning(self, seed, record_slots=None) -> LearningConfig:
        kw = dict(self.values["learning"])
        if record_slots is None:
            record_slots = self.write_traces
        return LearningConfig(rng_seed=seed, record_slots=record_slots, **kw)

    def scenario(self, seed):
        """Scenario for one seed after the mask policy. Returns ``(scenario, followers_active)``."""
        s = self.values["scenario"]
        if s["source"] == FROM_FILE:
            sc = load_scenario(self.base_dir / s["path"])
        else:
            sc = generate_topology(self.geometry(seed), self.radio())
        return masked_scenario(sc, s["mask_policy"])

    # -- validation -----------------------------------------------------
    def _validate(self):
        s, e = self.values["scenario"], self.values["experiment"]
        if s["source"] not in (GENERATE, FROM_FILE):
            raise ConfigError(f"scenario.source: expected 'generate' or 'file', got {s['source']!r}")
        if s["source"] == FROM_FILE and not s["path"]:
            raise ConfigError("scenario.path: required when scenario.source = 'file'")
        if s["mask_policy"] not in MASK_POLICIES:
            raise ConfigError(f"scenario.mask_policy: expected one of {MASK_POLICIES}")
        if not e["regimes"]:
            raise ConfigError("experiment.regimes: at least one regime is required")
        bad = [r for r in e["regimes"] if r not in REGIMES]
        if bad:
            raise ConfigError(f"experiment.regimes: unknown regimes {bad}; choose from {list(REGIMES)}")
        if len(set(e["regimes"])) != len(e["regimes"]):
            raise ConfigError("experiment.regimes: duplicates")
        if not e["seeds"]:
            raise ConfigError("experiment.seeds: at least one seed is required")
        if len(set(e["seeds"])) != len(e["seeds"]):
            raise ConfigError("experiment.seeds: duplicates")
        if e["ne_selector"] not in SELECTORS:
            raise ConfigError(f"experiment.ne_selector: expected one of {list(SELECTORS)}")
        if e["drift_window"] < 1 or not e["drift_tolerance"] > 0:
            raise ConfigError("experiment.drift_window must be >= 1 and drift_tolerance > 0")
        sw = self.values["sweep"]
        points = [None]
        if sw["parameter"] is not None:
            section, key = resolve_key(sw["parameter"])
            if section not in SWEEPABLE:
                raise ConfigError(f"sweep.parameter: cannot sweep {section}.{key}")
            if not sw["values"]:
                raise ConfigError("sweep.values: at least one value is required")
            if s["source"] == FROM_FILE and section != "learning":
                raise ConfigError("sweep.parameter: a scenario read from file only allows "
                                  "sweeping learning parameters")
            points = [(section, key, v) for v in sw["values"]]
        for point in points:
            cfg = self.values if point is None else _replaced(self.values, *point)
            self._build_objects(cfg, point)

    def _build_objects(self, values, point):
        where = "" if point is None else f" (sweep {point[0]}.{point[1]} = {point[2]})"
        probe = ExperimentConfig.__new__(ExperimentConfig)
        probe.values, probe.base_dir = values, self.base_dir
        nf = values["scenario"]["num_femtocells"]
        for section, build in (("scenario", lambda: probe.geometry(0)),
                               ("radio", lambda: probe.radio().users(nf)),
                               ("learning", lambda: probe.learning(0, False))):
            if section != "learning" and values["scenario"]["source"] == FROM_FILE:
                continue
            try:
                build()
            except (ValueError, ScenarioError) as err:
                raise ConfigError(f"{section}: {err}{where}") from None


def _replaced(values, section, key, value):
    out = copy.deepcopy(values)
    kind = SCHEMA[section][key][0]
    if kind == "int" and isinstance(value, float):
        if float(value) != int(value):
            raise ConfigError(f"{section}.{key}: expected an integer, got {value}")
        value = int(value)
    out[section][key] = _check_kind(f"{section}.{key}", kind, value)
    return out


def config_from_dict(raw: dict, base_dir=Path(".")) -> ExperimentConfig:
    values = {}
    unknown = [s for s in raw if s not in SCHEMA]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}; expected {list(SCHEMA)}")
    for section, fields in SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{section}: expected a table")
        extra = [k for k in given if k not in fields]
        if extra:
            raise ConfigError(f"{section}: unknown key(s) {extra}")
        values[section] = {}
        for key, (kind, default) in fields.items():
            if key in given:
                values[section][key] = _check_kind(f"{section}.{key}", kind, given[key])
            else:
                values[section][key] = copy.deepcopy(default)
    return ExperimentConfig(values, Path(base_dir))


def loads_config(text, base_dir=Path(".")) -> ExperimentConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"not valid TOML: {err}") from None
    return config_from_dict(raw, base_dir)


def load_config(path: Optional[os.PathLike] = None) -> ExperimentConfig:
    """Read an experiment file. ``None`` gives the default experiment."""
    if path is None:
        return config_from_dict({})
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    return loads_config(path.read_text(), path.parent)
