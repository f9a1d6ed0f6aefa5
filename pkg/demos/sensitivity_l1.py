"""
How the optimal expansion radius moves with the expansion height l1.

    python3 demos/sensitivity_l1.py
"""
from pathlib import Path

import numpy as np

from spurfilter.config import RunConfig
from spurfilter.optimize import Engine, design_filter

cfg = RunConfig.load(Path(__file__).resolve().parent.parent / "configs" / "filter_40khz.json")
target, air, mic, sc = cfg.target(), cfg.air(), cfg.mic(), cfg.solve_config()
base = cfg.geometry(require_a1=False)

print(f"{'l1 (mm)':>8} {'a1* FEM':>9} {'TL* FEM':>9} {'a1* TMM':>9}")
for l1 in np.arange(1.0, 1.81, 0.2) * 1e-3:
    template = type(base)(a0=base.a0, l0=base.l0, a1=None, l1=float(l1), d_ch=base.d_ch)
    fem_res = design_filter(target.f0, template, target.a1_bounds, air, mic, sc, jobs=4)
    tmm_res = design_filter(target.f0, template, target.a1_bounds, air, mic, sc, engine=Engine.TMM)
    print(f"{l1 * 1e3:8.2f} {fem_res.a1_star * 1e3:9.4f} {fem_res.tl_star:9.2f} {tmm_res.a1_star * 1e3:9.4f}")
