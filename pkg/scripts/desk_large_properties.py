"""Build the desk-large ceiling and print the property report level by level."""
import time

from gordonflow.ceiling import build_ceiling, verify_properties
from gordonflow.cfrac import design_pair, parse_schedule
from gordonflow.config import preset

cfg = preset("desk-large")
t0 = time.time()
pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
for i in range(1, cfg.levels + 1):
    print(f"level {i}: q={pair.q(i)}  q'={pair.q_prime(i):.3e}")
c = build_ceiling(pair, cfg.amplitude, cfg.n0, harmonic_cap=cfg.harmonic_cap)
rep = verify_properties(c, pair, cfg.tolerances)
for e in rep.entries:
    r = "" if e.r is None else f" r={e.r}"
    print(f"prop {e.prop} level {e.level}{r}: {'PASS' if e.passed else 'FAIL'} "
          f"measured {e.measured:.3e} bound {e.bound:.3e}")
print(f"all passed: {rep.passed()}  ({time.time() - t0:.1f}s)")
