"""Identify a piecewise-constant log-conductivity from point observations.

Ten sequential updates with three point loads cycling; the error decays and
then levels off at the floor set by the fixed observation noise, leaving
residual uncertainty in the posterior.
"""

import json
import os
from pathlib import Path

import numpy as np

from pcebayes import cli

HERE = Path(__file__).resolve().parent
os.environ.setdefault(cli.OUTPUT_ROOT_ENV, str(HERE / "output"))

out = cli.run(HERE.parent / "configs" / "diffusion1d_smoke.json")
manifest = json.loads((out / "manifest.json").read_text())
_, err = cli.read_csv(out / "error.csv")
print("update   rmse(log-conductivity)")
for step, rmse in err:
    print(f"{int(step):>6}   {rmse:.4f}")
q_true = np.array(manifest["truth_value"])
q_post = np.array(manifest["posterior_mean"])
print("\npatch   true q   posterior mean")
for i, (qt, qp) in enumerate(zip(q_true, q_post)):
    print(f"{i:>5}   {qt:+.3f}   {qp:+.3f}")
