"""Localization contrast: structured traces vs variance-matched i.i.d. controls."""
import json

from gordonflow.ceiling import build_ceiling
from gordonflow.cfrac import design_pair, parse_schedule
from gordonflow.config import preset
from gordonflow.diagnostics import localization_contrast
from gordonflow.flow import FlowMap
from gordonflow.schrodinger import smooth_observable

cfg = preset("desk-small")
pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
flow = FlowMap(pair, build_ceiling(pair, cfg.amplitude, cfg.n0))
rep = localization_contrast(flow, smooth_observable(), cfg.spectrum.points, (cfg.spectrum.size - 1) // 2, cfg.seed)
print(json.dumps(rep.summary(), indent=1))
