#!/usr/bin/env python3
"""Evaluate the trained estimator's accuracy curve over the alpha-bar grid.

Usage: python scripts/estimator_curve.py [--config configs/mixture.cfg]
Writes curve.csv into the config's output directory.
"""
import argparse
import sys

from adadiffuse.cli import main


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/mixture.cfg")
    args = ap.parse_args()
    sys.exit(main(["eval-estimator", "--config", args.config]))
