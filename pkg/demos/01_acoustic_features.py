"""Walk through the lite acoustic feature set on a synthetic tone.

Run with ``python demos/01_acoustic_features.py``.
"""

import numpy as np
from scipy.signal import sawtooth

from warmth.acoustic import LITE_FEATURE_NAMES, FrameConfig, Signal, compute_llds, functionals

sr = 16000
t = np.arange(2 * sr) / sr

# a 180 Hz sawtooth with a slow loudness wobble, then half a second of silence
voice = 0.4 * sawtooth(2 * np.pi * 180 * t) * (1 - 0.3 * np.sin(2 * np.pi * 3 * t))
x = np.r_[voice, np.zeros(sr // 2)]
sig = Signal(x, sr)

cfg = FrameConfig()
llds = compute_llds(sig, cfg)
print(f"{len(llds)} frames of {cfg.window_s * 1000:.0f} ms every {cfg.hop_s * 1000:.0f} ms")
print("voiced fraction:", round(llds.voiced_mask.mean(), 3))

f0 = llds.columns["f0"]
print("median F0 while voiced:", round(np.median(f0[llds.voiced_mask]), 2), "Hz")
print("log-energy, first vs last frame:", llds.columns["log_energy"][[0, -1]].round(2))

# pool over the voiced stretch only; F0 stats ignore unvoiced frames anyway
vec = functionals(llds, [(0.0, 2.0)])
for name, v in list(zip(LITE_FEATURE_NAMES, vec))[:8]:
    print(f"  {name:<24} {v: .4f}")
print("  ...", len(vec), "features in all")

# scaling the waveform moves energy but leaves pitch alone
loud = compute_llds(Signal(3 * x, sr), cfg)
print("F0 unchanged under x3 gain:", np.allclose(loud.columns["f0"], f0))
print("log-energy shift:", round(float(np.median(loud.columns["log_energy"] - llds.columns["log_energy"])), 4),
      "expected", round(2 * np.log10(3), 4))
