"""Where does the radiating near field end for a half-metre surface?

Prints the field boundary and reactive radius across carriers, then
classifies a receiver as it walks away from the surface.
"""
from starris.core_em import BoxVolume, SignalParams
from starris.regions import boundary_row, classify

ris = BoxVolume.centered((0.5, 0.5, 0.01))
rx = BoxVolume.centered((0.1, 0.1, 0.01))

print(f"{'carrier':>10} {'r_b [m]':>10} {'r_r [m]':>10}")
for ghz in (1, 5, 10, 28, 60):
    row = boundary_row(f"{ghz} GHz", SignalParams.from_frequency(ghz * 1e9), ris, rx)
    print(f"{row.label:>10} {row.boundary_rb_m:10.3f} {row.reactive_rr_m:10.3f}")

p = SignalParams.from_frequency(28e9)
for d in (0.3, 1.0, 3.0, 10.0, 30.0):
    rep = classify(p, ris, BoxVolume.centered((0.1, 0.1, 0.01), (0, 0, d)), d)
    print(f"28 GHz, {d:5.1f} m: {rep.region.value}, {rep.dof} spatial modes")
