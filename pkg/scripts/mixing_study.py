"""Correlation decay of cos(2 pi x) for the full ceiling and the flat control.

Writes plot-ready CSVs and prints the Spearman statistics.
"""
import sys
from pathlib import Path

from gordonflow.ceiling import build_ceiling, constant_ceiling
from gordonflow.cfrac import design_pair, parse_schedule
from gordonflow.config import preset
from gordonflow.diagnostics import correlation_decay, cos_x, mixing_times
from gordonflow.flow import FlowMap

out = Path(sys.argv[1] if len(sys.argv) > 1 else "runs/mixing")
out.mkdir(parents=True, exist_ok=True)
cfg = preset("desk-small")
m = cfg.mixing
pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
times = mixing_times(m.t_min, m.t_max, m.count, cfg.seed)
for name, ceiling in (("full", build_ceiling(pair, cfg.amplitude, cfg.n0)), ("flat", constant_ceiling())):
    s = correlation_decay(FlowMap(pair, ceiling), cos_x, cos_x, times, tolerance=m.tolerance, activity=m.activity)
    s.to_csv(out / f"mixing_{name}.csv")
    print(f"{name}: spearman {s.spearman():.3f}, grid {s.grid}, converged {s.converged}")
