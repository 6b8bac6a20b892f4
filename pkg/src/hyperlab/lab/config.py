"""Experiment configuration: schema, defaults and validation.

A config file is a JSON object::

    {"schema_version": 1, "scenario": "pinch-sweep", "seed": 0,
     "params": {"h": 0.1, "ells": [0.5, 0.25, 0.1, 0.05]}}

``scenario`` is optional; when present it must agree with the command line.
Every parameter not given takes the scenario default.  Surfaces are written
as ``{"preset": "bolza"}``, as ``{"decomposition": "theta", "lengths": [...],
"twists": [...]}`` or as the full Fenchel-Nielsen JSON of a point.
"""
import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from ..errors import ConfigError, LabError
from ..geometry.teichmuller import STANDARD, FNPoint, fn_point

SCHEMA_VERSION = 1
PROBE_BUDGET = 4096

PINCHED = {"decomposition": "theta", "lengths": [0.1, 0.1, 0.1], "twists": [0.0, 0.0, 0.0]}

DEFAULTS = {
    "bolza": {
        "point": {"preset": "bolza"}, "h": 0.15, "levels": 3, "k": 6, "tol": 1e-8,
        "gap_factor": 1.0,
    },
    "pinch-sweep": {
        "point": {"decomposition": "theta", "lengths": [2.0, 2.0, 2.0], "twists": [0.0, 0.0, 0.0]},
        "curves": ["c0", "c1", "c2"], "ells": [0.5, 0.25, 0.1, 0.05], "h": 0.1, "k": 4,
        "tol": 1e-8,
    },
    "nodal-atlas": {
        "surfaces": [
            {"name": "pants-pinch", "point": PINCHED},
            {"name": "torus-pinch", "point": {"decomposition": "dumbbell",
                                              "lengths": [2.0, 2.0, 0.1],
                                              "twists": [0.0, 0.0, 0.0]}},
            {"name": "sphere4", "point": {"decomposition": "sphere4", "lengths": [0.5],
                                          "twists": [0.0]}},
            {"name": "torus2", "point": {"decomposition": "torus2", "lengths": [0.3, 0.3],
                                         "twists": [0.0, 0.0]}},
        ],
        "h": 0.15, "k": 4, "tol": 1e-8, "Y": 20.0, "indices": [1],
    },
    "branch-run": {
        "path": {"kind": "linear", "from": PINCHED, "to": {"preset": "bolza"}},
        "k": 6, "steps": 11, "h": 0.2, "tol": 1e-8, "max_depth": 3, "lift": None,
    },
    "cover-audit": {
        "random_samples": 10, "length_range": [1.0, 3.0], "g": 3, "k": 6, "h": 0.15,
        "tol": 1e-8, "cutoff": 1.0, "cut": 2,
        "pinched": {"point": PINCHED, "cut": "dual-c1"},
    },
    "appendix-path": {
        "from": {"decomposition": "theta", "lengths": [0.1, 2.0, 2.5], "twists": [0.0, 0.5, 1.0]},
        "to": {"decomposition": "theta", "lengths": [2.0, 0.1, 3.0], "twists": [1.0, 0.0, 0.2]},
        "c1": "c0", "c2": "c1", "eps": 0.2, "samples": 101, "word_bound": 6,
    },
    "cusp-audit": {
        "surfaces": [
            {"name": "sphere4", "point": {"decomposition": "sphere4", "lengths": [0.5],
                                          "twists": [0.0]}},
            {"name": "sphere5", "point": {"decomposition": "sphere5", "lengths": [0.5, 0.5],
                                          "twists": [0.0, 0.0]}},
        ],
        "h": 0.1, "Y": 20.0, "k": 4, "tol": 1e-8, "J": 4, "arc_tol": 1e-5,
    },
    "probe-b2": {
        "decomposition": "theta",
        "lengths": [[0.3, 3.0, 10.0], [0.3, 1.0], [0.3, 1.0]],
        "twists": [[0.0], [0.0], [0.0]],
        "h": 0.25, "k": 3, "tol": 1e-8, "budget": PROBE_BUDGET, "systole_bound": 6,
    },
}

SCENARIOS = tuple(DEFAULTS)
TOP_KEYS = {"schema_version", "scenario", "seed", "params"}


@dataclass
class ExperimentConfig:
    scenario: str
    params: dict
    seed: int = 0
    raw: dict = field(default_factory=dict)

    def canonical(self):
        """Canonical JSON of the effective configuration."""
        return json.dumps({"schema_version": SCHEMA_VERSION, "scenario": self.scenario,
                           "seed": self.seed, "params": self.params},
                          sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_preset(name):
    try:
        text = resources.files("hyperlab").joinpath("presets", f"{name}.json").read_text()
    except (FileNotFoundError, OSError) as e:
        raise ConfigError(f"unknown preset {name!r}") from e
    return FNPoint.from_json(json.loads(text)["point"])


def resolve_point(spec):
    """FNPoint from a point spec (see module docstring)."""
    if isinstance(spec, FNPoint):
        return spec
    if not isinstance(spec, dict):
        raise ConfigError(f"point spec must be an object, got {type(spec).__name__}")
    try:
        if "preset" in spec:
            if set(spec) != {"preset"}:
                raise ConfigError("a preset spec takes no other keys")
            return load_preset(spec["preset"])
        if "pants" in spec:
            return FNPoint.from_json(spec)
        extra = set(spec) - {"decomposition", "lengths", "twists"}
        if extra or "decomposition" not in spec or "lengths" not in spec:
            raise ConfigError(f"bad point spec keys {sorted(spec)}")
        if spec["decomposition"] not in STANDARD:
            raise ConfigError(f"unknown decomposition {spec['decomposition']!r}")
        return fn_point(spec["decomposition"], _floats(spec["lengths"], "lengths"),
                        None if spec.get("twists") is None else _floats(spec["twists"], "twists"))
    except ConfigError:
        raise
    except (LabError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid point: {e}") from e


def _floats(x, name):
    if not isinstance(x, (list, tuple)) or not all(_is_num(v) for v in x):
        raise ConfigError(f"{name} must be a list of numbers")
    return [float(v) for v in x]


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _num(params, key, lo=None, hi=None, integer=False):
    v = params[key]
    if not _is_num(v) or (integer and int(v) != v):
        raise ConfigError(f"{key} must be {'an integer' if integer else 'a number'}, got {v!r}")
    if lo is not None and v < lo or hi is not None and v > hi:
        raise ConfigError(f"{key} = {v} outside [{lo}, {hi}]")
    return int(v) if integer else float(v)


def _curve(p, cid, what):
    try:
        p.decomposition.curve_index(cid)
    except (LabError, KeyError, ValueError) as e:
        raise ConfigError(f"{what}: curve {cid!r} not in decomposition "
                          f"{p.decomposition.name!r}") from e


def _surfaces(params, key):
    items = params[key]
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{key} must be a non-empty list")
    names = set()
    for it in items:
        if not isinstance(it, dict) or set(it) != {"name", "point"}:
            raise ConfigError(f"each entry of {key} needs exactly 'name' and 'point'")
        if it["name"] in names:
            raise ConfigError(f"duplicate surface name {it['name']!r}")
        names.add(it["name"])
        resolve_point(it["point"])


def _check_common(params):
    for key, lo, hi, integer in (("h", 1e-3, 2.0, False), ("k", 1, 200, True),
                                 ("tol", 1e-12, 1e-4, False)):
        if key in params:
            _num(params, key, lo, hi, integer)


def _check_path(spec):
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("path must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "linear":
        if set(spec) != {"kind", "from", "to"}:
            raise ConfigError("linear path takes 'from' and 'to'")
        a, b = resolve_point(spec["from"]), resolve_point(spec["to"])
        if a.decomposition.to_dict() != b.decomposition.to_dict():
            raise ConfigError("path endpoints must share a decomposition")
    elif kind == "pinch":
        if set(spec) != {"kind", "from", "curves", "end_length"}:
            raise ConfigError("pinch path takes 'from', 'curves' and 'end_length'")
        p = resolve_point(spec["from"])
        if not isinstance(spec["curves"], list) or not spec["curves"]:
            raise ConfigError("pinch curves must be a non-empty list")
        for c in spec["curves"]:
            _curve(p, c, "pinch path")
        end = _num(spec, "end_length", 1e-6)
        for c in spec["curves"]:
            if not end < p.lengths[p.decomposition.curve_index(c)]:
                raise ConfigError(f"end_length {end} not below the length of {c}")
    else:
        raise ConfigError(f"unknown path kind {kind!r}")


def _check_scenario(name, params):
    _check_common(params)
    if name == "bolza":
        resolve_point(params["point"])
        _num(params, "levels", 3, 6, True)
        _num(params, "gap_factor", 0.0)
    elif name == "pinch-sweep":
        p = resolve_point(params["point"])
        if not isinstance(params["curves"], list) or not params["curves"]:
            raise ConfigError("curves must be a non-empty list")
        for c in params["curves"]:
            _curve(p, c, "pinch-sweep")
        ells = _floats(params["ells"], "ells")
        if not ells or min(ells) <= 0:
            raise ConfigError("ells must be positive")
        if p.punctures:
            raise ConfigError("pinch-sweep runs on closed surfaces")
    elif name == "nodal-atlas":
        _surfaces(params, "surfaces")
        idx = params["indices"]
        if not isinstance(idx, list) or not idx or not all(isinstance(i, int) and i >= 1 for i in idx):
            raise ConfigError("indices must be a list of integers >= 1")
        if max(idx) >= params["k"]:
            raise ConfigError("every index must be below k")
        _num(params, "Y", 2.0)
    elif name == "branch-run":
        _check_path(params["path"])
        _num(params, "steps", 2, 10001, True)
        _num(params, "max_depth", 0, 10, True)
        lift = params["lift"]
        if lift is not None:
            if not isinstance(lift, dict) or set(lift) != {"g", "cut"}:
                raise ConfigError("lift must be null or {'g': int, 'cut': curve index or cycle name}")
            _num(lift, "g", 3, 12, True)
            if not isinstance(lift["cut"], (int, str)) or isinstance(lift["cut"], bool):
                raise ConfigError("lift cut must be an integer or a string")
    elif name == "cover-audit":
        _num(params, "random_samples", 0, 1000, True)
        lr = _floats(params["length_range"], "length_range")
        if len(lr) != 2 or not 0 < lr[0] < lr[1]:
            raise ConfigError("length_range must be [lo, hi] with 0 < lo < hi")
        _num(params, "g", 3, 12, True)
        _num(params, "cutoff", 0.0)
        pin = params["pinched"]
        if pin is not None:
            if not isinstance(pin, dict) or set(pin) != {"point", "cut"}:
                raise ConfigError("pinched must be null or {'point': ..., 'cut': ...}")
            q = resolve_point(pin["point"])
            if q.genus != 2 or q.punctures:
                raise ConfigError("pinched sample must be closed of genus 2")
    elif name == "appendix-path":
        a, b = resolve_point(params["from"]), resolve_point(params["to"])
        if a.decomposition.to_dict() != b.decomposition.to_dict():
            raise ConfigError("endpoints must share a decomposition")
        _curve(a, params["c1"], "appendix-path")
        _curve(a, params["c2"], "appendix-path")
        eps = _num(params, "eps", 1e-6)
        i1 = a.decomposition.curve_index(params["c1"])
        i2 = a.decomposition.curve_index(params["c2"])
        if not (a.lengths[i1] < eps and b.lengths[i2] < eps):
            raise ConfigError("endpoints must have the chosen curves shorter than eps")
        _num(params, "samples", 2, 100001, True)
        _num(params, "word_bound", 1, 20, True)
    elif name == "cusp-audit":
        _surfaces(params, "surfaces")
        for it in params["surfaces"]:
            q = resolve_point(it["point"])
            if q.genus != 0 or q.punctures < 4:
                raise ConfigError("cusp-audit runs on punctured spheres with n >= 4")
        _num(params, "Y", 2.0)
        _num(params, "J", 1, 64, True)
        _num(params, "arc_tol", 0.0, 1.0)
    elif name == "probe-b2":
        dec = params["decomposition"]
        if dec not in STANDARD:
            raise ConfigError(f"unknown decomposition {dec!r}")
        p0 = STANDARD[dec]()
        if p0.genus != 2 or p0.punctures:
            raise ConfigError("probe-b2 runs in a genus-2 chart")
        m = len(p0.curves)
        for key in ("lengths", "twists"):
            axes = params[key]
            if not isinstance(axes, list) or len(axes) != m:
                raise ConfigError(f"{key} must list {m} axes")
            for ax in axes:
                vals = _floats(ax, key)
                if key == "lengths" and any(v <= 0 for v in vals):
                    raise ConfigError("lengths must be positive")
        _num(params, "budget", 0, 10 ** 6, True)
        _num(params, "systole_bound", 1, 20, True)


def validate(raw, scenario):
    """ExperimentConfig from a decoded JSON object; raises ConfigError."""
    if scenario not in DEFAULTS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - TOP_KEYS
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    if "scenario" in raw and raw["scenario"] != scenario:
        raise ConfigError(f"config is for scenario {raw['scenario']!r}, not {scenario!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    given = raw.get("params", {})
    if not isinstance(given, dict):
        raise ConfigError("params must be an object")
    unknown = set(given) - set(DEFAULTS[scenario])
    if unknown:
        raise ConfigError(f"unknown parameters for {scenario}: {sorted(unknown)}")
    params = copy.deepcopy(DEFAULTS[scenario])
    params.update(copy.deepcopy(given))
    _check_scenario(scenario, params)
    return ExperimentConfig(scenario, params, seed, raw)


def load_config(path, scenario):
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror or e}") from e
    except ValueError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return validate(raw, scenario)
