"""Experiment configuration: one JSON document with an explicit schema version."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from .ceiling import MIN_WIDTH, ToleranceSchema, parse_amplitude
from .cfrac import parse_schedule
from .errors import ConfigError

SCHEMA = "experiment-config/1"


@dataclass
class CensusConfig:
    samples: int = 10000
    levels: int = 2


@dataclass
class MixingConfig:
    t_min: float = 1e2
    t_max: float = 1e5
    count: int = 60
    grid: list | None = None          # None: chosen from the active harmonics
    tolerance: float = 0.02           # refinement agreement
    activity: float = 1e-3            # layers below this Birkhoff size are not resolved
    spearman_max: float = -0.5
    control_min: float = -0.2


@dataclass
class GordonConfig:
    points: int = 20
    observable: str = "smooth"
    k_cap: int = 20
    contrast_ratio: float = 10.0


@dataclass
class SpectrumConfig:
    size: int = 401        # sites in the truncation, 2N + 1
    points: int = 20


@dataclass
class BlockConfig:
    cases: int = 1000
    period: int = 7
    k: int = 7


@dataclass
class RecurrenceConfig:
    grid: int = 64
    y_grid: int = 16
    direct_points: int = 4


@dataclass
class ExperimentConfig:
    schedule: str = "cubic"
    seed_quotients: list = field(default_factory=lambda: [[0, 5], [0]])
    amplitude: str = "poly"
    levels: int = 2
    n0: int = 32
    harmonic_cap: int = 4096
    seed: int = 0
    tolerances: ToleranceSchema = field(default_factory=ToleranceSchema)
    recurrence: RecurrenceConfig = field(default_factory=RecurrenceConfig)
    census: CensusConfig = field(default_factory=CensusConfig)
    mixing: MixingConfig = field(default_factory=MixingConfig)
    gordon: GordonConfig = field(default_factory=GordonConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    block: BlockConfig = field(default_factory=BlockConfig)
    output: str = "runs/out"
    schema: str = SCHEMA

    def to_json(self) -> dict:
        d = asdict(self)
        d["seed_quotients"] = [list(s) for s in self.seed_quotients]
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def digest(self, keys=None) -> str:
        d = self.to_json()
        d.pop("output", None)
        if keys is not None:
            d = {k: d[k] for k in keys}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def seeds(self) -> tuple:
        return tuple(tuple(s) for s in self.seed_quotients)


_SECTIONS = {"tolerances": ToleranceSchema, "recurrence": RecurrenceConfig, "census": CensusConfig,
             "mixing": MixingConfig, "gordon": GordonConfig, "spectrum": SpectrumConfig,
             "block": BlockConfig}

PRESETS = {
    "desk-small": dict(schedule="cubic", seed_quotients=[[0, 5], [0]], amplitude="poly", levels=2, n0=32),
    # three levels fit in double range only with a small first quotient
    "desk-large": dict(schedule="cubic", seed_quotients=[[0, 2], [0]], amplitude="poly", levels=3, n0=32,
                       census={"samples": 20000, "levels": 3}),
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; known: {sorted(PRESETS)}"])
    raw = copy.deepcopy(PRESETS[name])
    raw["schema"] = SCHEMA
    base = ExperimentConfig().to_json()
    for k, v in raw.items():
        if isinstance(v, dict):
            base[k].update(v)
        else:
            base[k] = v
    out = validate_config(json.dumps(base))
    if isinstance(out, list):
        raise ConfigError(out)
    return out


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _section(name, cls, raw, errors):
    if not isinstance(raw, dict):
        errors.append(f"{name}: expected an object")
        return None
    known = {f.name: f for f in fields(cls)}
    for k in raw:
        if k not in known:
            errors.append(f"{name}.{k}: unknown field")
    for k in known:
        if k not in raw:
            errors.append(f"{name}.{k}: missing (every value must be explicit)")
    kw = {k: raw[k] for k in known if k in raw}
    for k, v in kw.items():
        default = getattr(cls(), k)
        if default is None:
            if v is not None and not (isinstance(v, list) and len(v) == 2 and all(_is_int(a) and a > 0 for a in v)):
                errors.append(f"{name}.{k}: expected null or two positive integers")
        elif isinstance(default, bool):
            if not isinstance(v, bool):
                errors.append(f"{name}.{k}: expected a boolean")
        elif isinstance(default, int) and not _is_int(v):
            errors.append(f"{name}.{k}: expected an integer")
        elif isinstance(default, float) and not _is_num(v):
            errors.append(f"{name}.{k}: expected a number")
        elif isinstance(default, str) and not isinstance(v, str):
            errors.append(f"{name}.{k}: expected a string")
    try:
        return cls(**kw) if len(kw) == len(known) else None
    except TypeError as e:
        errors.append(f"{name}: {e}")
        return None


def validate_config(raw: str):
    """Parse a JSON config; returns an ExperimentConfig or the full list of violations."""
    errors: list[str] = []
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as e:
        return [f"not valid JSON: {e}"]
    if not isinstance(doc, dict):
        return ["top level must be an object"]
    top = {f.name for f in fields(ExperimentConfig)}
    for k in doc:
        if k not in top:
            errors.append(f"{k}: unknown field")
    for k in sorted(top):
        if k not in doc:
            errors.append(f"{k}: missing")
    if doc.get("schema", SCHEMA) != SCHEMA and "schema" in doc:
        errors.append(f"schema: expected {SCHEMA!r}, got {doc['schema']!r}")

    if "schedule" in doc:
        try:
            parse_schedule(doc["schedule"])
        except Exception as e:
            errors.append(f"schedule: {e}")
    if "amplitude" in doc:
        try:
            parse_amplitude(doc["amplitude"])
        except Exception as e:
            errors.append(f"amplitude: {e}")
    if "levels" in doc and not (_is_int(doc["levels"]) and doc["levels"] >= 1):
        errors.append("levels: expected an integer >= 1")
    if "n0" in doc:
        if not _is_int(doc["n0"]):
            errors.append("n0: expected an integer")
        elif doc["n0"] < MIN_WIDTH:
            errors.append(f"n0: {doc['n0']} < {MIN_WIDTH}; the plateau of the step layer is empty below this width")
    if "harmonic_cap" in doc and not (_is_int(doc["harmonic_cap"]) and doc["harmonic_cap"] >= 16):
        errors.append("harmonic_cap: expected an integer >= 16")
    if "seed" in doc and not _is_int(doc["seed"]):
        errors.append("seed: expected an integer")
    if "output" in doc and not isinstance(doc["output"], str):
        errors.append("output: expected a string")
    sq = doc.get("seed_quotients")
    if "seed_quotients" in doc:
        ok = (isinstance(sq, list) and len(sq) == 2 and all(isinstance(s, list) and s and all(_is_int(a) for a in s) for s in sq)
              and all(a >= 1 for s in sq for a in s[1:]) and all(a >= 0 for s in sq for a in s[:1]))
        if not ok:
            errors.append("seed_quotients: expected two lists [a0, a1, ...] with a_i >= 1 for i >= 1")

    secs = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            secs[name] = _section(name, cls, doc[name], errors)
    if isinstance(secs.get("census"), CensusConfig) and _is_int(doc.get("levels")):
        c = secs["census"]
        if c.levels > doc["levels"]:
            errors.append("census.levels: exceeds levels")
        if c.samples < 100:
            errors.append("census.samples: at least 100 required")
    if isinstance(secs.get("spectrum"), SpectrumConfig):
        sp = secs["spectrum"]
        if sp.size < 401 or sp.size % 2 == 0:
            errors.append("spectrum.size: odd number of sites, at least 401 required")
        if sp.points < 20:
            errors.append("spectrum.points: at least 20 required")
    if isinstance(secs.get("gordon"), GordonConfig) and secs["gordon"].observable not in ("smooth", "holder"):
        errors.append("gordon.observable: expected 'smooth' or 'holder'")

    if errors:
        return errors
    kw = {k: doc[k] for k in top if k not in _SECTIONS}
    kw.update(secs)
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        out = validate_config(fh.read())
    if isinstance(out, list):
        raise ConfigError(out)
    return out
