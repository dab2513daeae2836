#!/usr/bin/env python3
"""Paired fixed-vs-adaptive benchmark over the configured step counts.

Usage: python scripts/few_step_benchmark.py [--config configs/mixture.cfg]
Writes bench.csv, curve.csv, metrics.json and per-run traces into the
config's output directory. Set ADADIFFUSE_THREADS to fan runs out.
"""
import argparse
import sys

from adadiffuse.cli import main


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/mixture.cfg")
    args = ap.parse_args()
    sys.exit(main(["benchmark", "--config", args.config]))
