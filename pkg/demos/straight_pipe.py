"""
Closed straight pipe: where the FEM puts the half-wave resonance.

    python3 demos/straight_pipe.py

Compares the FEM and transfer-matrix TL of a rigid-ended 2.858 mm pipe
with the analytic ``20 log10 |cos kL|`` around ``c / 2L``.
"""
import math
import warnings
from pathlib import Path

import numpy as np

from spurfilter.config import RunConfig
from spurfilter.fem import tl_spectrum
from spurfilter.tmm import DuctLoss, tl_tmm

cfg = RunConfig.load(Path(__file__).resolve().parent.parent / "configs" / "straight_pipe.json")
geom, air = cfg.geometry(), cfg.air()
freqs = np.linspace(40e3, 80e3, 9)

fem_curve = tl_spectrum(geom, air, None, cfg.solve_config(), freqs)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # 2*a0 exceeds lambda/2 above ~57 kHz
    tmm_curve = tl_tmm(geom, air, None, DuctLoss.NONE, freqs)
length = geom.total_length
print(f"c/2L = {air.sound_speed / (2 * length):.0f} Hz")
print(f"{'f (Hz)':>8} {'FEM':>9} {'TMM':>9} {'analytic':>9}")
for f, a, b in zip(freqs, fem_curve.tl, tmm_curve.tl):
    exact = 20 * math.log10(abs(math.cos(2 * math.pi * f / air.sound_speed * length)))
    print(f"{f:8.0f} {a:9.3f} {b:9.3f} {exact:9.3f}")
