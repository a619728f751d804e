"""Mission configuration: shipped presets, user files and dotted overrides.

A resolved configuration is a plain nested dict.  Layers apply in the order
preset, file, command line; each layer may only touch keys that the preset
defines, and each value must keep the preset's type.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from contextlib import contextmanager
from importlib import resources
from pathlib import Path

import yaml

from .constants import AU, DAY, M_EARTH, YEAR
from .errors import ConfigError, RelclockError
from .noise import FLICKER_FM, RANDOM_WALK_FM, WHITE_FM, AccelerometerModel, ClockModel, LinkNoiseModel

PRESETS = ("aces", "sagas")
MISSIONS = PRESETS + ("custom",)
SEED_LIMIT = 1 << 64


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot (``1e-13``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _load(text: str):
    return yaml.load(text, Loader=_Loader)


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("relclock").joinpath("presets", f"{name}.yaml").read_text()


def _line_map(text: str) -> dict[str, int]:
    """Dotted path -> 1-based line for every mapping key in a YAML document."""
    lines: dict[str, int] = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                path = f"{prefix}.{k.value}" if prefix else str(k.value)
                lines[path] = k.start_mark.line + 1
                walk(v, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{prefix}.{i}")

    try:
        root = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError:
        return lines
    walk(root, "")
    return lines


def parse_yaml(text: str, source: str = "") -> tuple[dict, dict[str, int]]:
    try:
        doc = _load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"malformed YAML: {problem}", line=mark.line + 1 if mark else None,
                          source=source) from None
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping", source=source)
    return doc, _line_map(text)


def load_preset(name: str) -> dict:
    return parse_yaml(preset_text(name), f"{name}.yaml")[0]


def _same_kind(template, value) -> bool:
    if isinstance(template, bool) or isinstance(value, bool):
        return isinstance(template, bool) and isinstance(value, bool)
    if isinstance(template, (int, float)) and template is not None:
        return isinstance(value, (int, float))
    if isinstance(template, str):
        return isinstance(value, str)
    if isinstance(template, list):
        return isinstance(value, list)
    if isinstance(template, dict):
        return isinstance(value, dict)
    return True


def _merge(base: dict, layer: dict, prefix: str, where) -> None:
    for key, value in layer.items():
        path = f"{prefix}.{key}" if prefix else str(key)
        if key not in base:
            raise where("unknown field", path)
        if path == "seed":
            base[key] = value
            continue
        if not _same_kind(base[key], value):
            raise where(f"expected {type(base[key]).__name__}, got {type(value).__name__}", path)
        if isinstance(base[key], dict):
            _merge(base[key], value, path, where)
        else:
            base[key] = value


def _parse_override(item: str) -> tuple[str, object]:
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {item!r} must look like dotted.path=value")
    try:
        value = _load(raw)
    except yaml.YAMLError:
        raise ConfigError(f"cannot parse override value {raw!r}", field=key) from None
    return key, value


def _nest(path: str, value) -> dict:
    out = value
    for part in reversed(path.split(".")):
        out = {part: out}
    return out


def _split_spec(spec: str) -> tuple[str | None, Path | None]:
    """Preset name (``sagas``, ``sagas.preset``) or a file path."""
    stem = spec[:-len(".preset")] if spec.endswith(".preset") else spec
    if stem in PRESETS and not Path(spec).is_file():
        return stem, None
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"config {spec!r} is neither a preset ({', '.join(PRESETS)}) nor a readable file")
    return None, path


def resolve_config(spec: str, overrides=(), seed: int | None = None) -> dict:
    """Resolve ``spec`` plus ``overrides`` (``dotted.path=value`` strings) and
    an explicit ``seed``; later layers win.  Raises ``ConfigError``."""
    preset, path = _split_spec(spec)
    lines, source, flagged = {}, "", set()
    if path is None:
        cfg = load_preset(preset)
    else:
        source = str(path)
        doc, lines = parse_yaml(path.read_text(), source)

        def where(msg, field):
            return ConfigError(msg, field, lines.get(field), source)

        mission = doc.get("mission")
        base = doc.get("base", mission) if mission == "custom" else mission
        if mission not in MISSIONS:
            raise where(f"mission must be one of {', '.join(MISSIONS)}", "mission")
        if base not in PRESETS:
            raise where(f"custom missions need base: one of {', '.join(PRESETS)}", "base")
        cfg = load_preset(base)
        cfg["mission"] = mission
        layer = {k: v for k, v in doc.items() if k not in ("mission", "base")}
        _merge(cfg, layer, "", where)

    def flag_error(msg, field):
        return ConfigError(msg + " (command-line override)", field)

    for item in overrides:
        key, value = _parse_override(item)
        if key in ("mission", "base"):
            raise flag_error("cannot be overridden", key)
        _merge(cfg, _nest(key, value), "", flag_error)
        flagged.add(key)
    if seed is not None:
        cfg["seed"] = seed
        flagged.add("seed")
    try:
        validate(cfg)
    except ConfigError as exc:
        f = exc.field
        if any(f == k or f.startswith(k + ".") or k.startswith(f + ".") for k in flagged):
            raise ConfigError(str(exc) + " (command-line override)") from None
        if f in lines and exc.line is None:
            raise ConfigError(exc.message, f, lines[f], source) from None
        raise
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# --- validation -------------------------------------------------------------------

def _get(cfg: dict, path: str):
    node = cfg
    for part in path.split("."):
        node = node[part]
    return node


def _num(cfg, path, lo=-math.inf, hi=math.inf, lo_open=False) -> float:
    v = _get(cfg, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError("expected a finite number", path)
    if v < lo or (lo_open and v == lo) or v > hi:
        bracket = "(" if lo_open else "["
        raise ConfigError(f"value {v} outside {bracket}{lo}, {hi}]", path)
    return float(v)


def _pair(cfg, path, positive=True):
    v = _get(cfg, path)
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v)):
        raise ConfigError("expected a [start, end] pair of numbers", path)
    if not v[0] < v[1] or (positive and v[0] < 0):
        raise ConfigError("need 0 <= start < end", path)
    return float(v[0]), float(v[1])


@contextmanager
def _section(path: str):
    """Report a model's own precondition failure against the config section."""
    try:
        yield
    except ConfigError:
        raise
    except RelclockError as exc:
        raise ConfigError(str(exc), path) from None


def validate(cfg: dict) -> None:
    seed = cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (use --seed or set seed in the config file)", "seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < SEED_LIMIT:
        raise ConfigError("seed must be an integer in [0, 2**64)", "seed")
    for name in cfg["clock"]:
        for key in ("white_fm", "flicker_fm", "random_walk_fm", "accuracy"):
            _num(cfg, f"clock.{name}.{key}", 0.0)
        clock_model(cfg, name)
    _num(cfg, "ground_floor", 0.0)
    _num(cfg, "bin_days", 0.0, lo_open=True)
    for key in ("replicas", "workers"):
        v = _get(cfg, f"estimate.{key}")
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError("expected a positive integer", f"estimate.{key}")
    if cfg["mission"] == "sagas" or cfg.get("profile"):
        _validate_sagas(cfg)
    else:
        _validate_aces(cfg)


def _validate_sagas(cfg):
    _num(cfg, "profile.duration_years", 0.0, lo_open=True)
    _num(cfg, "profile.flyby_distance_m", 0.0, lo_open=True)
    _num(cfg, "profile.inclination_deg", -90.0, 90.0)
    dur = cfg["profile"]["duration_years"]
    for key in cfg["windows"]:
        lo, hi = _pair(cfg, f"windows.{key}")
        if hi > dur:
            raise ConfigError("window ends after the mission", f"windows.{key}")
    _num(cfg, "accelerometer.level", 0.0)
    _num(cfg, "accelerometer.bias", 0.0)
    _num(cfg, "link.turbulence", 0.0)
    _num(cfg, "physics.alpha_sensitivity", 0.0, lo_open=True)
    _num(cfg, "physics.a_p", 0.0)
    _num(cfg, "physics.onset_radius_au", 0.0)
    _num(cfg, "physics.v_sun", 0.0)
    _num(cfg, "kuiper.mass_earth", 0.0, 1.0)
    _num(cfg, "kbo.gm", 0.0)
    _num(cfg, "kbo.approach_au", 0.0, lo_open=True)
    _num(cfg, "gw.span_years", 0.0, lo_open=True)
    _num(cfg, "propagate.step_days", 0.0, lo_open=True)
    _pair(cfg, "gw.band_hz")
    for key in ("spacecraft_radius_au", "min_impact_solar_radii", "half_span_days", "bin_s"):
        _num(cfg, f"conjunction.{key}", 0.0, lo_open=True)
    with _section("profile"):
        escape_profile(cfg).escape
    with _section("kuiper"):
        kuiper_model(cfg)


def _validate_aces(cfg):
    _num(cfg, "orbit.altitude_m", 1e5, 1e8)
    _num(cfg, "orbit.inclination_deg", 0.0, 180.0)
    _num(cfg, "station.latitude_deg", -90.0, 90.0)
    _num(cfg, "span_days", 0.0, lo_open=True)
    _num(cfg, "schedule.mask_deg", 0.0, 60.0)
    _num(cfg, "schedule.span_days", 0.0, lo_open=True)
    _num(cfg, "propagate.span_s", 0.0, lo_open=True)
    _num(cfg, "propagate.step_s", 0.0, lo_open=True)
    _num(cfg, "drift.years", 0.0, lo_open=True)
    _num(cfg, "drift.interval_days", 0.0, lo_open=True)
    _num(cfg, "drift.resolution", 0.0, lo_open=True)
    _num(cfg, "link.turbulence", 0.0)
    if cfg["span_days"] < cfg["bin_days"]:
        raise ConfigError("span shorter than one bin", "span_days")
    with _section("network"):
        network(cfg)
    with _section("link"):
        LinkNoiseModel(spec=tuple(map(tuple, cfg["link"]["spec"])))


# --- builders ---------------------------------------------------------------------

def clock_model(cfg: dict, name: str) -> ClockModel:
    if name not in cfg["clock"]:
        raise ConfigError(f"no clock named {name!r}; configured: {', '.join(cfg['clock'])}", "clock")
    d = cfg["clock"][name]
    terms = tuple((mu, float(d[k])) for mu, k in
                  ((WHITE_FM, "white_fm"), (FLICKER_FM, "flicker_fm"), (RANDOM_WALK_FM, "random_walk_fm"))
                  if d[k] > 0)
    with _section(f"clock.{name}"):
        return ClockModel(terms, float(d["accuracy"]), name)


def accelerometer_model(cfg: dict) -> AccelerometerModel:
    a = cfg["accelerometer"]
    return AccelerometerModel(float(a["level"]), float(a["bias"]))


def escape_profile(cfg: dict):
    from .dynamics import EscapeProfile

    p = cfg["profile"]
    wp = p["waypoints"]
    if not (isinstance(wp, list) and len(wp) == 2 and all(isinstance(w, list) and len(w) == 2 for w in wp)):
        raise ConfigError("expected two [epoch_years, radius_au] pairs", "profile.waypoints")
    return EscapeProfile(waypoints=tuple((float(t) * YEAR, float(r) * AU) for t, r in wp),
                         duration=float(p["duration_years"]) * YEAR,
                         flyby_distance=float(p["flyby_distance_m"]),
                         inclination=math.radians(p["inclination_deg"]))


def sagas_scenario(cfg: dict):
    from .science.scenarios import SagasScenario

    return SagasScenario(profile=escape_profile(cfg), clock=clock_model(cfg, "space"),
                         ground_clock=clock_model(cfg, "ground"), accelerometer=accelerometer_model(cfg),
                         turbulence=float(cfg["link"]["turbulence"]), floor=float(cfg["ground_floor"]),
                         sensitivity=float(cfg["physics"]["alpha_sensitivity"]),
                         v_sun=float(cfg["physics"]["v_sun"]), tau=float(cfg["bin_days"]) * DAY)


def link_model(cfg: dict) -> LinkNoiseModel:
    link = cfg["link"]
    if "spec" in link:
        with _section("link"):
            return LinkNoiseModel.calibrate(tuple(map(tuple, link["spec"])), float(link["turbulence"]))
    return LinkNoiseModel(turbulence=float(link["turbulence"]))


def aces_scenario(cfg: dict):
    from .science.scenarios import AcesScenario

    return AcesScenario(altitude=float(cfg["orbit"]["altitude_m"]),
                        inclination=math.radians(cfg["orbit"]["inclination_deg"]),
                        station_latitude=math.radians(cfg["station"]["latitude_deg"]),
                        station_longitude=math.radians(cfg["station"]["longitude_deg"]),
                        span=float(cfg["span_days"]) * DAY, space_clock=clock_model(cfg, "pharao"),
                        ground_clock=clock_model(cfg, "ground"), link=link_model(cfg),
                        floor=float(cfg["ground_floor"]), tau=float(cfg["bin_days"]) * DAY)


def network(cfg: dict):
    from .schedule import Station

    out = []
    for i, s in enumerate(cfg["network"]):
        if not (isinstance(s, dict) and {"id", "latitude_deg", "longitude_deg"} <= set(s)):
            raise ConfigError("station needs id, latitude_deg and longitude_deg", f"network.{i}")
        out.append(Station(str(s["id"]), math.radians(s["latitude_deg"]), math.radians(s["longitude_deg"])))
    if len({s.id for s in out}) != len(out):
        raise ConfigError("station ids must be unique", "network")
    return out


def kuiper_model(cfg: dict):
    from .science.kuiper import KuiperBeltModel

    k = cfg["kuiper"]
    return KuiperBeltModel(distribution=k["distribution"], mass=float(k["mass_earth"]) * M_EARTH,
                           inclination=math.radians(k["inclination_deg"]), radius=float(k["radius_au"]) * AU,
                           r1=float(k["r1_au"]) * AU, r2=float(k["r2_au"]) * AU,
                           radius2=float(k["radius2_au"]) * AU, fraction=float(k["fraction"]))
