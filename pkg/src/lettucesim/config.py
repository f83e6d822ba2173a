"""Scenario configuration files.

One flat INI-style file fully determines a scenario: plant parameters,
field layout and season, environment constants, control policy, and the
actuation schedule. Unknown sections or keys are errors so typos fail
loudly, and serialize/parse round-trips to an equal configuration.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace
from importlib import resources

from .control import ActuationSchedule, ControlPolicy, SaturationSpec
from .field import (
    ConfigError,
    DEFAULT_LIGHT,
    DEFAULT_TEMPERATURE,
    DEFAULT_U_BAR,
    FieldConfig,
)
from .integrator import EnvSchedule
from .model import NOMINAL_PARAMS, PARAM_NAMES, PlantParams, PlantState

BUILTIN_PREFIX = "builtin:"

_SCHEMA = {
    "scenario": ("name", "seed"),
    "params": PARAM_NAMES,
    "field": (
        "n_plants",
        "grid_rows",
        "grid_cols",
        "perturbation_frac",
        "season_days",
        "dt",
        "b0",
        "c0",
        "n0",
        "u_bar",
        "rejection_percentile",
        "threshold_g",
    ),
    "env": ("T", "I"),
    "control": ("variant", "gain", "u_range", "noise_frac"),
    "schedule": ("interval_days", "first_application_day"),
    "output": ("out_dir",),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """A parsed scenario: field setup plus policy, schedule, and output hints."""

    name: str
    field: FieldConfig
    policy: ControlPolicy
    schedule: ActuationSchedule
    out_dir: str = "."
    threshold_g: float = None


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (T_op, I)
    return parser


def parse_config(text: str) -> ScenarioConfig:
    """Parse scenario text, validating every section and key."""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")

    def get(section, key, cast, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return cast(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {section}.{key}: {raw!r}") from exc

    name = get("scenario", "name", str, "scenario")
    seed = get("scenario", "seed", int, 0)

    params = {name: getattr(NOMINAL_PARAMS, name) for name in PARAM_NAMES}
    if parser.has_section("params"):
        for key in parser["params"]:
            params[key] = get("params", key, float, None)
    try:
        nominal = PlantParams(**params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    u_bar = get("field", "u_bar", float, DEFAULT_U_BAR)
    env = EnvSchedule.constant(
        get("env", "T", float, DEFAULT_TEMPERATURE),
        get("env", "I", float, DEFAULT_LIGHT),
    )
    try:
        s0 = PlantState(
            b=get("field", "b0", float, 0.005),
            c=get("field", "c0", float, 0.001),
            n=get("field", "n0", float, 0.0001),
        )
        field = FieldConfig(
            n_plants=get("field", "n_plants", int, 100),
            grid_rows=get("field", "grid_rows", int, 10),
            grid_cols=get("field", "grid_cols", int, 10),
            nominal_params=nominal,
            perturbation_frac=get("field", "perturbation_frac", float, 0.05),
            seed=seed,
            s0=s0,
            env=env,
            season_days=get("field", "season_days", float, 50.0),
            dt=get("field", "dt", float, 0.05),
            u_bar=u_bar,
            rejection_percentile=get("field", "rejection_percentile", float, 10.0),
        )
        policy = ControlPolicy(
            variant=get("control", "variant", str, "constant"),
            saturation=SaturationSpec(
                u_bar=u_bar,
                u_range=get("control", "u_range", float, 0.0075),
            ),
            gain=get("control", "gain", float, 0.05),
            noise_frac=get("control", "noise_frac", float, 0.0),
        )
        schedule = ActuationSchedule(
            interval_days=get("schedule", "interval_days", float, 1.0),
            first_application_day=get("schedule", "first_application_day", float, 0.0),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return ScenarioConfig(
        name=name,
        field=field,
        policy=policy,
        schedule=schedule,
        out_dir=get("output", "out_dir", str, "."),
        threshold_g=get("field", "threshold_g", float, None),
    )


def serialize_config(cfg: ScenarioConfig) -> str:
    """Render a config back to text; parsing the result gives an equal config."""
    parser = _parser()
    parser["scenario"] = {"name": cfg.name, "seed": str(cfg.field.seed)}
    parser["params"] = {
        name: repr(float(getattr(cfg.field.nominal_params, name))) for name in PARAM_NAMES
    }
    field_section = {
        "n_plants": str(cfg.field.n_plants),
        "grid_rows": str(cfg.field.grid_rows),
        "grid_cols": str(cfg.field.grid_cols),
        "perturbation_frac": repr(cfg.field.perturbation_frac),
        "season_days": repr(cfg.field.season_days),
        "dt": repr(cfg.field.dt),
        "b0": repr(cfg.field.s0.b),
        "c0": repr(cfg.field.s0.c),
        "n0": repr(cfg.field.s0.n),
        "u_bar": repr(cfg.field.u_bar),
        "rejection_percentile": repr(cfg.field.rejection_percentile),
    }
    if cfg.threshold_g is not None:
        field_section["threshold_g"] = repr(cfg.threshold_g)
    parser["field"] = field_section
    parser["env"] = {
        "T": repr(cfg.field.env.temperature.values[0]),
        "I": repr(cfg.field.env.light.values[0]),
    }
    parser["control"] = {
        "variant": cfg.policy.variant,
        "gain": repr(cfg.policy.gain),
        "u_range": repr(cfg.policy.saturation.u_range),
        "noise_frac": repr(cfg.policy.noise_frac),
    }
    parser["schedule"] = {
        "interval_days": repr(cfg.schedule.interval_days),
        "first_application_day": repr(cfg.schedule.first_application_day),
    }
    parser["output"] = {"out_dir": cfg.out_dir}
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def apply_overrides(text: str, overrides) -> str:
    """Apply `section.key=value` overrides to raw config text."""
    parser = _parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override key must be section.key, got {target!r}")
        section, key = target.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override target {target!r}")
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, value)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def load_config(path: str, overrides=()) -> ScenarioConfig:
    """Load a config from a file path or a builtin (``builtin:ideal``)."""
    if str(path).startswith(BUILTIN_PREFIX):
        name = str(path)[len(BUILTIN_PREFIX):]
        ref = resources.files("lettucesim").joinpath(f"configs/{name}.cfg")
        if not ref.is_file():
            raise ConfigError(f"no builtin config named {name!r}")
        text = ref.read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if overrides:
        text = apply_overrides(text, overrides)
    return parse_config(text)


def builtin_config_names() -> list:
    out = []
    for entry in resources.files("lettucesim").joinpath("configs").iterdir():
        if entry.name.endswith(".cfg"):
            out.append(entry.name[:-4])
    return sorted(out)


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, field=replace(cfg.field, seed=seed))
