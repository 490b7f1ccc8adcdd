"""Scalar identification experiments through the declarative runner.

Runs the Gaussian smoke config (posterior variance must shrink every step)
and the bimodal-truth config with the quadratic update, then reports where
the output files live.  Point the plots package at the CSVs afterwards:

    pceplots render demos/specs/scalar_pdf.json
"""

import json
import os
from pathlib import Path

from pcebayes import cli

HERE = Path(__file__).resolve().parent
os.environ.setdefault(cli.OUTPUT_ROOT_ENV, str(HERE / "output"))

for name in ("scalar_smoke", "scalar_bimodal"):
    out = cli.run(HERE.parent / "configs" / f"{name}.json")
    manifest = json.loads((out / "manifest.json").read_text())
    cols, hist = cli.read_csv(out / "history.csv")
    trace = hist[:, cols.index("cov_trace")]
    print(f"{name}: truth {manifest['truth_value'][0]:+.4f}, "
          f"posterior mean {manifest['posterior_mean'][0]:+.4f}, "
          f"variance {trace[0]:.4f} -> {trace[-1]:.4f} over {len(trace)} updates")
    print(f"  outputs in {out}")
