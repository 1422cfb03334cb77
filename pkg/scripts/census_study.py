"""Recurrence census on desk-small: C-set measures, witnesses and alpha-hat."""
import json
import sys

from gordonflow.ceiling import build_ceiling
from gordonflow.cfrac import design_pair, parse_schedule
from gordonflow.config import preset
from gordonflow.diagnostics import recurrence_census
from gordonflow.flow import FlowMap, MeasureSampler

samples = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = preset("desk-small")
pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
flow = FlowMap(pair, build_ceiling(pair, cfg.amplitude, cfg.n0))
cen = recurrence_census(flow, MeasureSampler(cfg.seed), cfg.census.levels, samples, cfg.tolerances)
print(json.dumps(cen.summary(), indent=1))
