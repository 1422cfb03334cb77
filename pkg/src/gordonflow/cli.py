"""Command line entry point.

Exit codes: 0 success, 2 configuration error, 3 stage failure, 4 insufficient precision.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config, preset
from .errors import ConfigError, GordonFlowError, PreconditionError

log = logging.getLogger("gordonflow")


def _cfg(args) -> ExperimentConfig:
    if args.config:
        cfg = preset(args.config) if args.config in ("desk-small", "desk-large") else load_config(args.config)
    else:
        cfg = preset("desk-small")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out:
        cfg.output = args.out
    return cfg


def _out(args, cfg) -> Path:
    p = Path(args.out or cfg.output)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args, cfg):
    """Pair and ceiling from --ceiling, or built from the config."""
    from .ceiling import CeilingFunction, build_ceiling, load_pair
    from .cfrac import design_pair, parse_schedule

    if getattr(args, "ceiling", None):
        return load_pair(args.ceiling), CeilingFunction.load(args.ceiling)
    pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
    return pair, build_ceiling(pair, cfg.amplitude, cfg.n0, harmonic_cap=cfg.harmonic_cap)


def _dump(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True, default=str)
    print(path)


# ---------------------------------------------------------------- commands

def cmd_design_frequency(args, cfg):
    from .cfrac import design_pair, parse_schedule

    levels = args.levels or cfg.levels
    pair = design_pair(parse_schedule(args.schedule or cfg.schedule), levels, cfg.seeds())
    _dump(_out(args, cfg) / "pair.json", pair.to_json())
    for i in range(1, levels + 1):
        print(f"level {i}: q={pair.q(i)} q'={pair.q_prime(i)}")
    return 0


def cmd_build_ceiling(args, cfg):
    from .ceiling import build_ceiling
    from .cfrac import FrequencyPair, design_pair, parse_schedule

    if args.pair:
        with open(args.pair) as fh:
            pair = FrequencyPair.from_json(json.load(fh))
    else:
        pair = design_pair(parse_schedule(cfg.schedule), cfg.levels, cfg.seeds())
    c = build_ceiling(pair, args.amplitude or cfg.amplitude, args.n0 or cfg.n0, levels=args.levels,
                      harmonic_cap=cfg.harmonic_cap)
    d = _out(args, cfg) / "ceiling"
    c.save(d, pair)
    print(d)
    return 0


def cmd_verify_properties(args, cfg):
    from .ceiling import verify_properties

    pair, c = _load(args, cfg)
    rep = verify_properties(c, pair, cfg.tolerances)
    path = Path(args.report) if args.report else _out(args, cfg) / "properties.json"
    _dump(path, rep.to_json())
    for e in rep.entries:
        print(f"prop {e.prop} level {e.level}{'' if e.r is None else f' r={e.r}'}: "
              f"{'PASS' if e.passed else 'FAIL'} measured={e.measured:.3e} bound={e.bound:.3e}")
    return 0 if rep.passed() else 3


def _num(s):
    return Fraction(s)


def cmd_orbit(args, cfg):
    from .flow import FlowMap, FlowPoint

    pair, c = _load(args, cfg)
    F = FlowMap(pair, c)
    p = F.canonical(_num(args.x), _num(args.y), float(args.s))
    path = _out(args, cfg) / "orbit.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t", "x", "y", "s", "ambiguous"))
        for t in args.times.split(","):
            q = F.advance(p, Fraction(t))
            w.writerow((t, repr(float(q.x)), repr(float(q.y)), repr(q.s), int(q.ambiguous)))
    print(path)
    return 0


def cmd_recurrence_scan(args, cfg):
    from .birkhoff import recurrence_estimate, stretch_profile, stretch_window

    pair, c = _load(args, cfg)
    out = _out(args, cfg)
    levels = [args.level] if args.level else [i.level for i in c.info]
    docs, ok = [], True
    for lv in levels:
        rep = recurrence_estimate(c, pair, lv, cfg.recurrence.grid, cfg.recurrence.y_grid, cfg.tolerances,
                                  cfg.recurrence.direct_points)
        rep.to_csv(out / f"recurrence_{lv}.csv")
        docs.append(rep.to_json())
        ok = ok and rep.passed
        print(f"level {lv}: max deviation {rep.max_deviation:.3e} tolerance {rep.tolerance:.3e} "
              f"{'PASS' if rep.passed else 'FAIL'}")
        if args.stretch:
            for axis in ("x", "y"):
                lo, hi = stretch_window(pair, c, lv, axis)
                m = int(math.ceil(lo))
                if m <= hi:
                    prof = stretch_profile(c, pair, lv, m, axis)
                    prof.to_csv(out / f"stretch_{lv}_{axis}.csv")
                    print(f"  stretch {axis} m={m}: pass fraction {prof.pass_fraction:.3f}")
    _dump(out / "recurrence.json", {"schema": "recurrence/1", "levels": docs})
    return 0 if ok else 3


def cmd_census(args, cfg):
    from .diagnostics import recurrence_census
    from .flow import FlowMap, MeasureSampler

    pair, c = _load(args, cfg)
    out = _out(args, cfg)
    cs = recurrence_census(FlowMap(pair, c), MeasureSampler(cfg.seed), args.levels or cfg.census.levels,
                           args.samples or cfg.census.samples, cfg.tolerances)
    cs.to_csv(out / "census.csv")
    s = cs.summary()
    _dump(out / "census.json", s)
    print(f"witness fraction {s['witness_fraction']:.4f}; union {s['union_fraction']:.4f} "
          f"vs independence {s['independence_prediction']:.4f}")
    return 0


def cmd_mixing_corr(args, cfg):
    from .ceiling import constant_ceiling
    from .diagnostics import correlation_decay, cos_x, mixing_times
    from .flow import FlowMap

    pair, c = _load(args, cfg)
    m = cfg.mixing
    if args.times == "auto":
        times = mixing_times(m.t_min, m.t_max, m.count, cfg.seed)
    else:
        times = np.array([float(t) for t in args.times.split(",")])
    grid = None
    if args.grid and args.grid != "auto":
        a, _, b = args.grid.partition("x")
        grid = (int(a), int(b or a))
    elif m.grid:
        grid = tuple(m.grid)
    out = _out(args, cfg)
    full = correlation_decay(FlowMap(pair, c), cos_x, cos_x, times, grid, m.tolerance, activity=m.activity)
    ctrl = correlation_decay(FlowMap(pair, constant_ceiling()), cos_x, cos_x, times, grid, m.tolerance,
                             activity=m.activity)
    full.to_csv(out / "mixing.csv")
    ctrl.to_csv(out / "mixing_control.csv")
    print(f"spearman full {full.spearman():.3f} (converged {full.converged}); "
          f"control {ctrl.spearman():.3f} (converged {ctrl.converged}); grid {full.grid}")
    return 0


def cmd_gordon_scan(args, cfg):
    from .flow import FlowMap, MeasureSampler
    from .pipeline import gordon_study
    from .schrodinger import holder_observable, smooth_observable

    pair, c = _load(args, cfg)
    obs = smooth_observable() if cfg.gordon.observable == "smooth" else holder_observable()
    pts = MeasureSampler(cfg.seed + 1).sample(args.points or cfg.gordon.points, c)
    doc = gordon_study(FlowMap(pair, c), obs, pts, pair, c, cfg.gordon.k_cap, cfg.seed)
    _dump(_out(args, cfg) / "gordon.json", doc)
    print(f"median defect structured {doc['median_structured']:.3e} control {doc['median_control']:.3e} "
          f"ratio {doc['ratio']:.1f}")
    return 0


def cmd_spectrum(args, cfg):
    from .flow import FlowMap, MeasureSampler
    from .schrodinger import (PotentialTrace, localization_metrics, sample_potential, smooth_observable,
                              truncated_spectrum, write_spectrum_csv)

    N = ((args.size or cfg.spectrum.size) - 1) // 2
    if args.trace:
        tr = PotentialTrace.from_csv(args.trace)
        N = min(N, tr.W)
    else:
        pair, c = _load(args, cfg)
        p = MeasureSampler(cfg.seed + 2).sample(1, c)[0]
        tr = sample_potential(FlowMap(pair, c), smooth_observable(), p, N)
    ev, vecs = truncated_spectrum(tr, N)
    path = _out(args, cfg) / "spectrum.csv"
    write_spectrum_csv(path, ev, localization_metrics(vecs))
    print(path)
    return 0


def cmd_block_bound(args, cfg):
    from .pipeline import block_study

    doc = block_study(args.cases or cfg.block.cases, cfg.block.period, cfg.block.k, cfg.seed)
    _dump(_out(args, cfg) / "block.json", doc)
    print(f"bound held in {doc['satisfied']}/{doc['cases']} cases")
    return 0 if doc["fraction"] == 1.0 else 3


def cmd_contrast(args, cfg):
    from .diagnostics import localization_contrast
    from .flow import FlowMap
    from .schrodinger import smooth_observable

    pair, c = _load(args, cfg)
    rep = localization_contrast(FlowMap(pair, c), smooth_observable(), args.samples or cfg.spectrum.points,
                                ((args.size or cfg.spectrum.size) - 1) // 2, cfg.seed)
    _dump(_out(args, cfg) / "contrast.json", rep.to_json())
    s, ctl = rep.medians("ipr")
    stat, p = rep.ranksum("ipr")
    print(f"median IPR structured {s:.4f} control {ctl:.4f}; rank-sum {stat:.2f} (p={p:.3g})")
    return 0


def cmd_run(args, cfg):
    from .pipeline import STAGES, run_pipeline

    stages = STAGES if not args.stages else tuple(args.stages.split(","))
    bad = [s for s in stages if s not in STAGES]
    if bad:
        raise ConfigError([f"unknown stage {s!r}" for s in bad])
    man = run_pipeline(cfg, args.out, stages)
    for name, rec in man.stages.items():
        print(f"{name}: {'cached' if rec.cached else f'{rec.seconds:.1f}s'} {rec.detail or ''}")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file or preset name (desk-small, desk-large)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="gordonflow", description=__doc__.splitlines()[0],
                                 epilog="global flags go after the subcommand")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, parents=[common], **kw)
        p.set_defaults(func=fn)
        return p

    p = add("design-frequency", cmd_design_frequency)
    p.add_argument("--schedule")
    p.add_argument("--levels", type=int)
    p = add("build-ceiling", cmd_build_ceiling)
    p.add_argument("--pair")
    p.add_argument("--levels", type=int)
    p.add_argument("--amplitude")
    p.add_argument("--n0", type=int)
    p = add("verify-properties", cmd_verify_properties)
    p.add_argument("--ceiling")
    p.add_argument("--report")
    p = add("orbit", cmd_orbit)
    p.add_argument("--ceiling")
    p.add_argument("--x", default="0")
    p.add_argument("--y", default="0")
    p.add_argument("--s", default="0")
    p.add_argument("--times", default="1,10,100")
    p = add("recurrence-scan", cmd_recurrence_scan)
    p.add_argument("--ceiling")
    p.add_argument("--level", type=int)
    p.add_argument("--stretch", action="store_true")
    p = add("census", cmd_census)
    p.add_argument("--ceiling")
    p.add_argument("--samples", type=int)
    p.add_argument("--levels", type=int)
    p = add("mixing-corr", cmd_mixing_corr)
    p.add_argument("--ceiling")
    p.add_argument("--times", default="auto")
    p.add_argument("--grid", default="auto", help="auto, R or RxS")
    p = add("gordon-scan", cmd_gordon_scan)
    p.add_argument("--ceiling")
    p.add_argument("--points", type=int)
    p = add("spectrum", cmd_spectrum)
    p.add_argument("--ceiling")
    p.add_argument("--trace")
    p.add_argument("--size", type=int, help="sites in the truncation (odd)")
    p = add("block-bound", cmd_block_bound)
    p.add_argument("--cases", type=int)
    p = add("contrast", cmd_contrast)
    p.add_argument("--ceiling")
    p.add_argument("--samples", type=int)
    p.add_argument("--size", type=int, help="sites in the truncation (odd)")
    p = add("run", cmd_run)
    p.add_argument("--stages", help="comma separated subset")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _cfg(args)
        if args.threads:
            from threadpoolctl import threadpool_limits
            threadpool_limits(args.threads)
        return args.func(args, cfg)
    except ConfigError as e:
        for v in e.violations:
            print(f"config error: {v}", file=sys.stderr)
        return 2
    except GordonFlowError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
