"""Indoor coverage behind a window, with and without a STAR surface in it.

Writes three rasters to the working directory and prints zone averages.
"""
from starris.hybrid import CoverageMode, RoomScene, coverage_grid, write_raster, zone_bounds
from starris.star_multiuser import StrategyConfig

scene = RoomScene()
zone = zone_bounds(scene)
for mode in CoverageMode:
    g = coverage_grid(scene, mode, StrategyConfig("PS"), resolution=20)
    write_raster(f"coverage-{mode.value}.raster", g)
    print(f"{mode.value:>10}: zone mean {g.region_mean_db(*zone):7.1f} dB")
