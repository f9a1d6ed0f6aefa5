"""
Design the 40 kHz filter and look at its TL spectrum.

    python3 demos/design_40khz.py [out_dir]

Optimizes the expansion radius with the FEM engine, sweeps 1-100 kHz and
writes ``design_history.csv`` and ``tl_40khz.csv`` to ``out_dir``.
"""
import sys
from pathlib import Path

from spurfilter.config import RunConfig
from spurfilter.curves import write_curve
from spurfilter.fem import tl_spectrum
from spurfilter.optimize import design_filter

HERE = Path(__file__).resolve().parent
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_out")
out.mkdir(parents=True, exist_ok=True)

cfg = RunConfig.load(HERE.parent / "configs" / "filter_40khz.json")
target, air, mic, sc = cfg.target(), cfg.air(), cfg.mic(), cfg.solve_config()
template = cfg.geometry(require_a1=False).with_a1(None)

res = design_filter(target.f0, template, target.a1_bounds, air, mic, sc, jobs=4)
(out / "design_history.csv").write_text(res.history_csv())
print(f"a1* = {res.a1_star * 1e3:.4f} mm after {res.evaluations} solves, TL(40 kHz) = {res.tl_star:.2f} dB")

curve = tl_spectrum(res.geometry, air, mic, sc, cfg.sweep().frequencies(), jobs=4)
write_curve(curve, out / "tl_40khz.csv")
f_peak, tl_peak = curve.peak()
print(f"sweep peak {tl_peak:.2f} dB at {f_peak:.0f} Hz")
for level in (40.0, 30.0, 20.0):
    band = curve.band_above(level, around=target.f0)
    text = "none on this grid" if band is None else f"{band[0] / 1e3:.2f}-{band[1] / 1e3:.2f} kHz"
    print(f"  TL >= {level:.0f} dB: {text}")
