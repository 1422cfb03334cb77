"""Run the full staged pipeline for a preset or config file.

    python scripts/run_preset.py desk-small runs/desk-small
"""
import argparse
import logging
import time

from gordonflow.config import PRESETS, load_config, preset
from gordonflow.pipeline import run_pipeline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", nargs="?", default="desk-small", help="preset name or config file")
    ap.add_argument("out", nargs="?", default=None)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = preset(args.config) if args.config in PRESETS else load_config(args.config)
    t0 = time.time()
    man = run_pipeline(cfg, args.out or f"runs/{args.config}")
    for name, rec in man.stages.items():
        print(f"{name:11s} {'cached' if rec.cached else f'{rec.seconds:7.1f}s'}  {rec.detail}")
    print(f"status {man.status} in {time.time() - t0:.0f}s")


if __name__ == "__main__":
    main()
