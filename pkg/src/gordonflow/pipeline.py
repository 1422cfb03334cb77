"""Staged pipeline: design pair, ceiling, verification, flow and spectral experiments.

Each stage writes its files once into the run directory. A stage is skipped when
its key (config sections it reads plus the digests of its inputs) and the
digests of its outputs match the previous manifest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .birkhoff import recurrence_estimate
from .ceiling import CeilingFunction, build_ceiling, constant_ceiling, load_pair, verify_properties
from .cfrac import FrequencyPair, design_pair, parse_schedule
from .config import ExperimentConfig
from .diagnostics import (control_trace, correlation_decay, cos_x, localization_contrast,
                          mixing_times, recurrence_census, write_json)
from .errors import GordonFlowError
from .flow import FlowMap, MeasureSampler
from .schrodinger import (PotentialTrace, auto_candidates, cayley_hamilton_check, gordon_block_bound,
                          gordon_check, holder_observable, localization_metrics, sample_potential,
                          smooth_observable, truncated_spectrum, write_spectrum_csv)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def file_digest(path) -> str:
    h = hashlib.sha256()
    p = Path(path)
    if p.is_dir():
        for f in sorted(p.rglob("*")):
            if f.is_file():
                h.update(str(f.relative_to(p)).encode())
                h.update(file_digest(f).encode())
        return h.hexdigest()
    with open(p, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class StageRecord:
    name: str
    key: str
    outputs: dict
    seconds: float
    cached: bool
    status: str = "ok"
    detail: dict = field(default_factory=dict)


@dataclass
class RunManifest:
    config_hash: str
    versions: dict
    stages: dict = field(default_factory=dict)
    status: str = "running"
    failed_stage: str | None = None

    def to_json(self) -> dict:
        return {"schema": "run-manifest/1", "config_hash": self.config_hash, "versions": self.versions,
                "status": self.status, "failed_stage": self.failed_stage,
                "stages": {k: vars(v) for k, v in self.stages.items()}}

    def write(self, directory):
        with open(Path(directory) / MANIFEST, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def read(cls, directory):
        p = Path(directory) / MANIFEST
        if not p.exists():
            return None
        doc = json.loads(p.read_text())
        m = cls(doc["config_hash"], doc["versions"], status=doc["status"], failed_stage=doc["failed_stage"])
        m.stages = {k: StageRecord(**v) for k, v in doc["stages"].items()}
        return m


def versions() -> dict:
    import mpmath
    import scipy
    return {"gordonflow": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "mpmath": mpmath.__version__}


STAGES = ("design", "ceiling", "verify", "recurrence", "census", "mixing", "gordon", "spectrum",
          "block", "contrast")

# config sections read by each stage, on top of its upstream files
_READS = {
    "design": ("schedule", "seed_quotients", "levels"),
    "ceiling": ("amplitude", "n0", "harmonic_cap"),
    "verify": ("tolerances",),
    "recurrence": ("tolerances", "recurrence"),
    "census": ("tolerances", "census", "seed"),
    "mixing": ("mixing", "seed"),
    "gordon": ("gordon", "tolerances", "seed"),
    "spectrum": ("spectrum", "seed"),
    "block": ("block", "seed"),
    "contrast": ("spectrum", "seed"),
}
_UPSTREAM = {"design": (), "ceiling": ("design",)}


class _Context:
    def __init__(self, cfg: ExperimentConfig, out: Path):
        self.cfg, self.out = cfg, out
        self._pair = self._ceiling = None

    @property
    def pair(self) -> FrequencyPair:
        if self._pair is None:
            self._pair = load_pair(self.out / "ceiling")
        return self._pair

    @property
    def ceiling(self) -> CeilingFunction:
        if self._ceiling is None:
            self._ceiling = CeilingFunction.load(self.out / "ceiling")
        return self._ceiling

    @property
    def flow(self) -> FlowMap:
        return FlowMap(self.pair, self.ceiling)

    def observable(self):
        return smooth_observable() if self.cfg.gordon.observable == "smooth" else holder_observable()


# ---------------------------------------------------------------- stages

def _stage_design(ctx):
    cfg = ctx.cfg
    pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
    with open(ctx.out / "pair.json", "w") as fh:
        json.dump(pair.to_json(), fh, indent=1, sort_keys=True)
    return ["pair.json"], {}


def _stage_ceiling(ctx):
    cfg = ctx.cfg
    with open(ctx.out / "pair.json") as fh:
        pair = FrequencyPair.from_json(json.load(fh))
    c = build_ceiling(pair, cfg.amplitude, cfg.n0, harmonic_cap=cfg.harmonic_cap)
    d = ctx.out / "ceiling"
    if d.exists():
        shutil.rmtree(d)
    c.save(d, pair)
    return ["ceiling"], {}


def _stage_verify(ctx):
    rep = verify_properties(ctx.ceiling, ctx.pair, ctx.cfg.tolerances)
    write_json(ctx.out / "properties.json", rep.to_json())
    return ["properties.json"], {"passed": rep.passed()}


def _stage_recurrence(ctx):
    cfg = ctx.cfg
    out = []
    ok = True
    for inf in ctx.ceiling.info:
        rep = recurrence_estimate(ctx.ceiling, ctx.pair, inf.level, cfg.recurrence.grid, cfg.recurrence.y_grid,
                                  cfg.tolerances, cfg.recurrence.direct_points)
        out.append(rep.to_json())
        ok = ok and rep.passed
    write_json(ctx.out / "recurrence.json", {"schema": "recurrence/1", "levels": out})
    return ["recurrence.json"], {"passed": ok}


def _stage_census(ctx):
    cfg = ctx.cfg
    cs = recurrence_census(ctx.flow, MeasureSampler(cfg.seed), cfg.census.levels, cfg.census.samples,
                           cfg.tolerances)
    cs.to_csv(ctx.out / "census.csv")
    s = cs.summary()
    write_json(ctx.out / "census.json", s)
    return ["census.csv", "census.json"], {"witness_fraction": s["witness_fraction"]}


def _stage_mixing(ctx):
    m = ctx.cfg.mixing
    times = mixing_times(m.t_min, m.t_max, m.count, ctx.cfg.seed)
    grid = tuple(m.grid) if m.grid else None
    full = correlation_decay(ctx.flow, cos_x, cos_x, times, grid, m.tolerance, activity=m.activity)
    ctrl = correlation_decay(FlowMap(ctx.pair, constant_ceiling()), cos_x, cos_x, times, grid, m.tolerance,
                             activity=m.activity)
    full.to_csv(ctx.out / "mixing.csv")
    ctrl.to_csv(ctx.out / "mixing_control.csv")
    s = {"spearman": full.spearman(), "control_spearman": ctrl.spearman(), "converged": full.converged,
         "control_converged": ctrl.converged, "grid": list(full.grid), "cov0": full.cov0,
         "passed": full.converged and ctrl.converged and full.spearman() <= m.spearman_max
         and ctrl.spearman() > m.control_min}
    write_json(ctx.out / "mixing.json", s)
    return ["mixing.csv", "mixing_control.csv", "mixing.json"], {"passed": s["passed"]}


def gordon_study(flow, obs, points, pair, ceiling, k_cap=20, seed=0):
    """Structured vs matched i.i.d. Gordon defects at the auto candidates that fit a trace."""
    t1 = pair.t(ceiling.info[0].level)
    W = 2 * t1
    cands = auto_candidates(pair, ceiling, W, multiples=(1,))
    ks = [k for k, _ in cands]
    idx = [n for _, n in cands]
    rng = np.random.default_rng(seed + 7)
    rows = []
    for i, p in enumerate(points):
        tr = sample_potential(flow, obs, p, W)
        s = gordon_check(tr, ks, indices=idx, k_cap=k_cap)
        c = gordon_check(control_trace(tr, rng), ks, indices=idx, k_cap=k_cap)
        rows.append({"point": i, "k": ks, "structured": s.defects, "control": c.defects,
                     "threshold": s.thresholds, "ambiguous": tr.ambiguous})
    st = np.array([r["structured"][0] for r in rows])
    ct = np.array([r["control"][0] for r in rows])
    return {"schema": "gordon-study/1", "W": W, "candidates": [str(k) for k in ks], "rows": rows,
            "median_structured": float(np.median(st)), "median_control": float(np.median(ct)),
            "ratio": float(np.median(ct) / max(np.median(st), 1e-300))}


def _stage_gordon(ctx):
    g = ctx.cfg.gordon
    pts = MeasureSampler(ctx.cfg.seed + 1).sample(g.points, ctx.ceiling)
    doc = gordon_study(ctx.flow, ctx.observable(), pts, ctx.pair, ctx.ceiling, g.k_cap, ctx.cfg.seed)
    doc["passed"] = doc["ratio"] >= g.contrast_ratio
    write_json(ctx.out / "gordon.json", doc)
    return ["gordon.json"], {"ratio": doc["ratio"], "passed": doc["passed"]}


def _stage_spectrum(ctx):
    N = (ctx.cfg.spectrum.size - 1) // 2
    p = MeasureSampler(ctx.cfg.seed + 2).sample(1, ctx.ceiling)[0]
    tr = sample_potential(ctx.flow, ctx.observable(), p, N)
    ev, vecs = truncated_spectrum(tr, N)
    write_spectrum_csv(ctx.out / "spectrum.csv", ev, localization_metrics(vecs))
    tr.to_csv(ctx.out / "trace.csv")
    return ["spectrum.csv", "trace.csv"], {}


def block_study(cases: int, period: int, k: int, seed: int):
    """Gordon block bound over exactly periodic potentials with random (E, Phi)."""
    rng = np.random.default_rng(seed)
    hits, agree, worst = 0, 0, 0.0
    for _ in range(cases):
        base = rng.uniform(-2, 2, period)
        kk = k * period
        W = 2 * kk + 1
        tr = PotentialTrace.from_values(base[np.arange(-W, W + 1) % period])
        E = rng.uniform(-4, 4)
        Phi = rng.normal(size=(1, 2))
        bb = gordon_block_bound(tr, E, kk, Phi)
        res, verdict = cayley_hamilton_check(tr, E, kk, Phi)
        hits += int(bb.satisfied.all())
        agree += int(bool(verdict.all()) == bool(bb.satisfied.all()))
        worst = max(worst, res)
    return {"schema": "block-bound/1", "cases": cases, "satisfied": hits, "fraction": hits / cases,
            "cayley_hamilton_agree": agree, "cayley_hamilton_residual": worst}


def _stage_block(ctx):
    b = ctx.cfg.block
    doc = block_study(b.cases, b.period, b.k, ctx.cfg.seed)
    write_json(ctx.out / "block.json", doc)
    return ["block.json"], {"fraction": doc["fraction"]}


def _stage_contrast(ctx):
    s = ctx.cfg.spectrum
    rep = localization_contrast(ctx.flow, ctx.observable(), s.points, (s.size - 1) // 2, ctx.cfg.seed)
    doc = rep.to_json()
    write_json(ctx.out / "contrast.json", doc)
    med = rep.medians("ipr")
    return ["contrast.json"], {"ipr_structured": med[0], "ipr_control": med[1]}


_RUN = {"design": _stage_design, "ceiling": _stage_ceiling, "verify": _stage_verify,
        "recurrence": _stage_recurrence, "census": _stage_census, "mixing": _stage_mixing,
        "gordon": _stage_gordon, "spectrum": _stage_spectrum, "block": _stage_block,
        "contrast": _stage_contrast}


def _stage_key(cfg: ExperimentConfig, name: str, inputs: dict) -> str:
    h = hashlib.sha256(name.encode())
    h.update(cfg.digest(_READS[name]).encode())
    for k in sorted(inputs):
        h.update(f"{k}={inputs[k]}".encode())
    return h.hexdigest()


def run_pipeline(cfg: ExperimentConfig, out=None, stages=STAGES) -> RunManifest:
    out = Path(out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps())
    old = RunManifest.read(out)
    man = RunManifest(cfg.digest(), versions())
    ctx = _Context(cfg, out)
    produced: dict[str, str] = {}
    for name in STAGES:
        if name not in stages:
            continue
        ups = _UPSTREAM.get(name, ("design", "ceiling"))
        inputs = {}
        for u in ups:
            rec = man.stages.get(u) or (old.stages.get(u) if old else None)
            if rec:
                inputs.update(rec.outputs)
        key = _stage_key(cfg, name, inputs)
        prev = old.stages.get(name) if old else None
        if prev and prev.key == key and prev.status == "ok" and all(
                (out / f).exists() and file_digest(out / f) == d for f, d in prev.outputs.items()):
            man.stages[name] = StageRecord(name, key, prev.outputs, 0.0, True, "ok", prev.detail)
            log.info("stage %s: cached", name)
            continue
        t0 = time.perf_counter()
        try:
            files, detail = _RUN[name](ctx)
        except GordonFlowError as e:
            man.stages[name] = StageRecord(name, key, {}, time.perf_counter() - t0, False, "failed",
                                           {"error": str(e), "type": type(e).__name__})
            man.status, man.failed_stage = "partial", name
            man.write(out)
            raise
        if name in ("design", "ceiling"):
            ctx._pair = ctx._ceiling = None
        outputs = {f: file_digest(out / f) for f in files}
        man.stages[name] = StageRecord(name, key, outputs, time.perf_counter() - t0, False, "ok",
                                       json.loads(json.dumps(detail, default=str)))
        log.info("stage %s: %.1fs", name, man.stages[name].seconds)
        man.write(out)
    man.status = "complete"
    man.write(out)
    return man
