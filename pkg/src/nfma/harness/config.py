"""INI experiment configuration.

Example::

    [scenario]
    M = 16
    K = 4
    side_lambda = 50
    distribution = annulus

    [experiment]
    trials = 50
    seed = 7
    architectures = digital
    schemes = ma_instant, dense_upa, upper_bound

    [optimizer]
    max_iters = 300

Every key is optional; see ``SCHEMA`` for names, types and defaults.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from ..arrays import BENCHMARK_KINDS
from ..digital import OptimizerConfig
from ..exceptions import BadDistributionParams, ConfigError
from .scenario import Scenario

__all__ = ["SCHEMES", "ARCHITECTURES", "SCHEMA", "ExperimentConfig", "load_config",
           "parse_config"]

SCHEMES = ("ma_instant", "ma_statistical") + BENCHMARK_KINDS + ("upper_bound",)
ARCHITECTURES = ("digital", "analog")


def _csv_list(v: str) -> list[str]:
    return [s.strip() for s in v.split(",") if s.strip()]


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


# section -> key -> (parser, default)
SCHEMA = {
    "scenario": {
        "M": (int, 64), "K": (int, 32), "nx": (int, 1), "ny": (int, 1),
        "carrier_ghz": (float, 30.0), "wavelength": (float, None),
        "power_dbm": (float, 20.0), "noise_dbm": (float, -80.0),
        "side_lambda": (float, 100.0), "side_m": (float, None), "d_min": (float, None),
        "bs_height": (float, 15.0), "distribution": (str, "annulus"),
        "r_min": (float, None), "r_max": (float, None),
        "hotspot_x": (float, None), "hotspot_z": (float, None),
        "hotspot_radius": (float, None),
        "nlos": (int, 0), "nlos_gain": (float, 0.3),
    },
    "experiment": {
        "trials": (int, 500), "seed": (int, 0),
        "architectures": (_csv_list, list(ARCHITECTURES)),
        "schemes": (_csv_list, list(SCHEMES)),
        "stat_realizations": (int, 50),
        "digital_init_scale": (float, 0.5), "analog_init_scale": (float, 0.1),
        "workers": (int, 1), "traces": (_bool, False), "geometries": (_bool, False),
    },
    "optimizer": {
        "max_iters": (int, 300), "tol": (float, 1e-5), "init_step_lambda": (float, 10.0),
        "shrink": (float, 0.5), "armijo": (float, 0.1), "max_backtracks": (int, 30),
    },
}

_DIST_KEYS = ("r_min", "r_max", "hotspot_x", "hotspot_z", "hotspot_radius")


@dataclass
class ExperimentConfig:
    scenario: Scenario = field(default_factory=Scenario)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    trials: int = 500
    seed: int = 0
    architectures: list = field(default_factory=lambda: list(ARCHITECTURES))
    schemes: list = field(default_factory=lambda: list(SCHEMES))
    stat_realizations: int = 50
    digital_init_scale: float = 0.5
    analog_init_scale: float = 0.1
    workers: int = 1
    traces: bool = False
    geometries: bool = False


def _error_line(e: configparser.Error):
    if isinstance(e, configparser.ParsingError) and e.errors:
        return e.errors[0][0]
    return getattr(e, "lineno", None)


def _line_index(text: str) -> dict:
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    idx, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            idx.setdefault((section, None), i)
        elif line and line[0] not in "#;" and section is not None:
            key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            idx.setdefault((section, key.lower()), i)
    return idx


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; errors carry the offending line."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e).splitlines()[0], line=_error_line(e)) from None
    lines = _line_index(text)
    values: dict[str, dict] = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section; expected one of {sorted(SCHEMA)}",
                              section=sec, line=lines.get((sec, None)))
        lower = {k.lower(): k for k in SCHEMA[sec]}
        for key, raw in cp.items(sec):
            line = lines.get((sec, key.lower()))
            if key.lower() not in lower:
                raise ConfigError("unknown key", section=sec, key=key, line=line)
            name = lower[key.lower()]
            parser = SCHEMA[sec][name][0]
            try:
                values.setdefault(sec, {})[name] = parser(raw)
            except ValueError as e:
                raise ConfigError(f"bad value {raw!r}: {e}", section=sec, key=key,
                                  line=line) from None

    def get(sec, key):
        return values.get(sec, {}).get(key, SCHEMA[sec][key][1])

    def fail(sec, key, msg):
        return ConfigError(msg, section=sec, key=key, line=lines.get((sec, key.lower())))

    sc = {k: get("scenario", k) for k in SCHEMA["scenario"]}
    wavelength = sc["wavelength"]
    lam = wavelength if wavelength is not None else 299792458.0 / (sc["carrier_ghz"] * 1e9)
    side = sc["side_m"] if sc["side_m"] is not None else sc["side_lambda"] * lam
    dist_params = {k: sc[k] for k in _DIST_KEYS if sc[k] is not None}
    try:
        scenario = Scenario(
            M=sc["M"], K=sc["K"], nx=sc["nx"], ny=sc["ny"], carrier_hz=sc["carrier_ghz"] * 1e9,
            wavelength_override=wavelength, power_dbm=sc["power_dbm"],
            noise_dbm=sc["noise_dbm"], side_A=side, d_min_override=sc["d_min"],
            bs_height=sc["bs_height"], distribution=sc["distribution"],
            dist_params=dist_params, nlos=sc["nlos"], nlos_gain=sc["nlos_gain"])
        scenario.region
    except BadDistributionParams as e:
        key = "distribution" if "unknown distribution" in str(e) else None
        raise fail("scenario", key or next(iter(dist_params), "distribution"), str(e)) from None
    except ValueError as e:
        raise ConfigError(str(e), section="scenario", line=lines.get(("scenario", None))) \
            from None

    op = {k: get("optimizer", k) for k in SCHEMA["optimizer"]}
    try:
        optimizer = OptimizerConfig(max_iters=op["max_iters"], tol=op["tol"],
                                    init_step=op["init_step_lambda"] * lam, shrink=op["shrink"],
                                    armijo=op["armijo"], max_backtracks=op["max_backtracks"])
    except ValueError as e:
        raise ConfigError(str(e), section="optimizer", line=lines.get(("optimizer", None))) \
            from None

    ex = {k: get("experiment", k) for k in SCHEMA["experiment"]}
    for key in ("trials", "stat_realizations", "workers"):
        if ex[key] < 1:
            raise fail("experiment", key, "must be >= 1")
    for key in ("digital_init_scale", "analog_init_scale"):
        if not 0 < ex[key] <= 1:
            raise fail("experiment", key, "must be in (0, 1]")
    bad = [s for s in ex["schemes"] if s not in SCHEMES]
    if bad or not ex["schemes"]:
        raise fail("experiment", "schemes", f"unknown or empty schemes {bad}; known: {SCHEMES}")
    bad = [a for a in ex["architectures"] if a not in ARCHITECTURES]
    if bad or not ex["architectures"]:
        raise fail("experiment", "architectures",
                   f"unknown or empty architectures {bad}; known: {ARCHITECTURES}")
    return ExperimentConfig(scenario=scenario, optimizer=optimizer, **ex)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
