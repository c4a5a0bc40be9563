"""Received power versus element count for small and large elements.

Small elements keep every element inside one far-field spot, so power grows
as M squared.  Large elements spill into new spots and the growth drops to M.
"""
import numpy as np

from starris.core_em import BoxVolume, SignalParams
from starris.gain_single import loglog_slope, scaling_sweep

p = SignalParams.from_wavelength(0.01)
rx = BoxVolume.centered((0.05, 0.05, 0.01), (0, 0, 0.7))
M = np.arange(1, 17)
powers = scaling_sweep(p, [0.01, 0.03, 0.1], M, rx, width_z=0.0025)
for a, P in powers.items():
    print(f"element {a * 100:4.0f} cm: slope {loglog_slope(M, P):.2f}, "
          f"P(16)/P(1) = {P[-1] / P[0]:.0f}")
