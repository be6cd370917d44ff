#!/usr/bin/env python3
"""Explanation-quality metrics: deletion fidelity, stability, timing.

Deletion fidelity replaces the most-important pixels (per explainer) with
gray and tracks the calibrated confidence in the original prediction:
lower is better, and a value stuck at the calibration target means the
ranking never found decisive pixels.  Stability measures how much the
normalized map moves under small input noise.
"""

import tempfile

import numpy as np

from lmmx import (TrainConfig, calibrate_temperature, init_params, integrated_gradients,
                  pixel_fragility, select_medoids, shapley_sampling, synth_dataset, train)
from lmmx.metrics import compute_report

n_pixels = 16
rng = np.random.default_rng(8)
base = rng.uniform(0.35, 0.65, n_pixels)
c0, c1 = base.copy(), base.copy()
planted = [2, 7, 11]
c0[planted] = 0.2
c1[planted] = 0.8
centers = np.stack([c0, c1])

train_data = synth_dataset(n_pixels, 150, centers, 0.08, seed=1, split="train")
val_data = synth_dataset(n_pixels, 50, centers, 0.08, seed=2, split="val")
test_data = synth_dataset(n_pixels, 50, centers, 0.08, seed=3, split="test")

params = init_params(select_medoids(train_data, 6, seed=0), 1.0)
params, _ = train(params, train_data, val_data, TrainConfig(epochs=25, seed=0))
calibrate_temperature(params, val_data, 0.8)

explainers = {
    "fragility": lambda p, x: pixel_fragility(p, x),
    "intgrad": lambda p, x: integrated_gradients(p, x, steps=50),
    "shapley": lambda p, x: shapley_sampling(p, x, permutations=100, seed=0),
}

report = compute_report(params, test_data, explainers,
                        steps=8, sigma=0.05, m=10, seed=0, timing_images=10)
print(report.format_table())
print("\nreading the numbers: fidelity well below the 0.8 calibration target"
      "\nmeans the explainer finds pixels the model actually relies on.")

out = tempfile.mktemp(suffix=".txt", prefix="lmmx_report_")
with open(out, "w", encoding="utf-8") as fh:
    fh.write("\n".join(report.key_value_lines()) + "\n")
print(f"\nmachine-readable report written to {out}")
