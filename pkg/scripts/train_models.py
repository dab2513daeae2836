#!/usr/bin/env python3
"""Train the denoiser and the noise-level estimator for one config.

Usage: python scripts/train_models.py [--config configs/mixture.cfg]
"""
import argparse
import sys

from adadiffuse.cli import main


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="configs/mixture.cfg")
    args = ap.parse_args()
    rc = main(["train-denoiser", "--config", args.config])
    if rc == 0:
        rc = main(["train-estimator", "--config", args.config])
    sys.exit(rc)
