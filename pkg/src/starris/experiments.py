"""Experiment runners behind the command-line interface.

Each runner takes a validated :class:`ScenarioConfig` and returns the files it
wants written as ``(name, text)`` pairs.  Nothing touches the disk here, so a
failing run never leaves partial output behind.
"""

from __future__ import annotations

import contextlib
import io
import math
from typing import Callable, Optional

import numpy as np

from .core_em import BoxVolume, Point3, SignalParams
from .errors import StarRisError
from .gain_single import (LinkBudget, channel_gain_upper_bound, layout_spots, loglog_slope, partition_tiles,
                          power_scaling)
from .hybrid import (SWEEP_COLUMNS, RoomScene, angle_sweep, coverage_grid, corner_region,
                     hybrid_summary, zone_bounds)
from .kernel import axis_counts, build_kernel_matrix, dominant_eigenpair, effective_dof, wavelength_grid
from .layout import rect_layout, square_layout
from .regions import analytic_dof, boundary_row, field_boundary, region_of, reactive_boundary
from .scenario import ScenarioConfig
from .star_multiuser import StrategyConfig, UserSpec, evaluate_strategy, group_dof, make_grouping

# Default transmit-power-to-noise ratio for sum rates.  With the default
# coupling constant and a unit link budget it puts the grouped strategies of
# the standard two-user sweep between roughly 5 and 20 dB SNR.
DEFAULT_SNR_DB = -21.0


class RunError(StarRisError):
    """A module error raised while running a scenario, with file context."""


@contextlib.contextmanager
def _context(config: ScenarioConfig, *path):
    try:
        yield
    except StarRisError as exc:
        if isinstance(exc, RunError):
            raise
        line = config.line_of(*path)
        where = f"{config.source}:{line}" if line else config.source
        field = ".".join(str(p) for p in path) or config.experiment
        raise RunError(f"{where}: while evaluating '{field}': {type(exc).__name__}: {exc}") from exc


# ---------------------------------------------------------------- csv helpers

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "NaN"
    return f"{v:.9g}"


def fmt_db(v) -> str:
    v = float(v)
    return "NaN" if math.isnan(v) else ("-inf" if v == -math.inf else f"{v:.2f}")


def csv_text(columns, rows, db_columns=()) -> str:
    out = io.StringIO()
    out.write(",".join(columns) + "\n")
    for row in rows:
        cells = [fmt_db(v) if c in db_columns else fmt(v) for c, v in zip(columns, row)]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def header_text(title: str, columns: dict) -> str:
    lines = [f"# {title}", "# column: meaning [unit]"]
    lines += [f"{k}: {v}" for k, v in columns.items()]
    return "\n".join(lines) + "\n"


def _table(name, title, columns: dict, rows, db_columns=()):
    cols = list(columns)
    return [(f"{name}.csv", csv_text(cols, rows, db_columns)),
            (f"{name}.columns.txt", header_text(title, columns))]


def _box(extents, center=(0.0, 0.0, 0.0)) -> BoxVolume:
    return BoxVolume(Point3.of(center), *extents)


def _budget(spec) -> LinkBudget:
    if spec is None:
        return LinkBudget.unity()
    return LinkBudget(spec["directivity"], spec["distance"], spec["aperture"])


# ---------------------------------------------------------------- runners

def run_boundary_table(cfg: ScenarioConfig):
    rows = []
    for i, r in enumerate(cfg.body["rows"]):
        with _context(cfg, "rows", i):
            p = cfg.signal(r["signal"])
            row = boundary_row(r["label"], p, _box(r["ris"]), _box(r["receiver"]))
            rows.append((row.label, row.frequency_hz, row.wavelength_m, row.boundary_rb_m,
                         row.reactive_rr_m, row.degenerate))
    cols = {
        "label": "row label",
        "frequency_hz": "carrier frequency [Hz]",
        "wavelength_m": "wavelength [m]",
        "boundary_rb_m": "radiating near/far-field boundary [m]",
        "reactive_rr_m": "reactive near-field radius [m]",
        "degenerate": "true when the reactive radius is not inside the boundary",
    }
    return _table("boundary-table", "Field boundaries", cols, rows)


def run_scaling_sweep(cfg: ScenarioConfig):
    b = cfg.body
    with _context(cfg, "signal"):
        p = cfg.signal()
    d = b["distance"]
    rx = _box(b["receiver"], (0.0, 0.0, d))
    dz = b["element_thickness"] or p.wavelength_m / 4
    counts = b["sweep"].values()
    rows, slopes = [], []
    with _context(cfg, "element_sides"):
        spot = (p.wavelength_m * d / (2 * rx.extent_x)) * (p.wavelength_m * d / (2 * rx.extent_y)) * 2
        for a in b["element_sides"]:
            powers, n_spots = [], []
            for M in counts:
                lay = square_layout(int(M), a, dz)
                spots = layout_spots(p, lay, rx)
                P = power_scaling(p, lay.element_volume, spots, rx.volume())
                powers.append(P)
                n_spots.append(len(spots))
                rows.append((a, int(M), len(spots), P, 10 * np.log10(P)))
            slope = loglog_slope(counts, powers) if len(counts) > 1 else float("nan")
            crossover = spot / (a * a)
            split = [int(M) for M, n in zip(counts, n_spots) if n > 1]
            slopes.append((a, slope, crossover, math.floor(crossover + 1e-9) + 1, split[0] if split else -1,
                           int(counts[0]), int(counts[-1])))
    cols = {
        "element_side_m": "element side length [m]",
        "elements": "number of elements M",
        "spots": "number of far-field spots the elements occupy",
        "power": "received power per unit incident power, coupling constant included [W/W]",
        "power_db": "received power [dB]",
    }
    scols = {
        "element_side_m": "element side length [m]",
        "loglog_slope": "least-squares slope of log power against log M",
        "crossover_elements": "element count at which the surface fills one far-field spot",
        "predicted_split": "smallest integer element count above the crossover",
        "first_split": "first swept element count spread over more than one spot (-1 if none)",
        "m_min": "smallest M in the fit",
        "m_max": "largest M in the fit",
    }
    return (_table("scaling-sweep", "Power versus element count", cols, rows, {"power_db"})
            + _table("scaling-slopes", "Log-log slopes of the scaling sweep", scols, slopes))


def run_gain_vs_distance(cfg: ScenarioConfig):
    b = cfg.body
    with _context(cfg, "signal"):
        p = cfg.signal()
    tx = _box(b["ris"])
    budget = _budget(b["budget"])
    rows = []
    for d in b["sweep"].values():
        with _context(cfg, "sweep"):
            rx = _box(b["receiver"], (0.0, 0.0, d))
            r = float(d)
            r_b = field_boundary(p, tx, rx)
            region = region_of(r, reactive_boundary(p, tx), r_b).value
            part = partition_tiles(p, tx, rx)
            g = channel_gain_upper_bound(p, budget, part, rx)
            row = [r, region, len(part), analytic_dof(p, tx, rx, r), g, 10 * np.log10(g)]
            if b["kernel_oracle"]:
                spw = cfg.samples_per_wavelength
                n_tx = int(np.prod(axis_counts(tx, p.wavelength_m, spw)))
                if n_tx <= b["oracle_max_size"]:
                    tg = wavelength_grid(tx, p.wavelength_m, spw)
                    rg = wavelength_grid(rx, p.wavelength_m, spw)
                    K = build_kernel_matrix(p, tg, rx, rg)
                    lam, _ = dominant_eigenpair(K)
                    row += [budget.illumination * lam, effective_dof(K)]
                else:
                    row += [float("nan"), -1]
            rows.append(row)
    cols = {
        "distance_m": "surface-centre to receiver-centre distance [m]",
        "region": "Reactive, RadiatingNearField or FarField",
        "tiles": "number of far-field tiles",
        "dof": "analytic number of spatial modes",
        "gain": "channel gain upper bound [W/W]",
        "gain_db": "channel gain upper bound [dB]",
    }
    if b["kernel_oracle"]:
        cols["oracle_gain"] = "largest kernel eigenvalue times illumination [W/W]; NaN when skipped"
        cols["oracle_dof"] = "eigenvalues above 1% of the largest; -1 when skipped"
    return _table("gain-vs-distance", "Gain bound versus distance", cols, rows, {"gain_db"})


def run_multiuser(cfg: ScenarioConfig):
    b = cfg.body
    with _context(cfg, "signal"):
        p = cfg.signal()
    budget = _budget(b["budget"])
    snr_db = DEFAULT_SNR_DB if b["snr_db"] is None else b["snr_db"]
    snr = 10 ** (snr_db / 10)
    ex, ey, ez = b["element"]
    with _context(cfg, "users"):
        users = [UserSpec.at(pos, b["receiver"]) for pos in b["users"]]
    U = len(users)
    rows = []
    for L in b["sweep"].values():
        with _context(cfg, "sweep"):
            lay = rect_layout(L, L, ex, ey, ez)
            full_dof = [group_dof(p, lay, u) for u in users]
            for kind in b["strategies"]:
                seeds = [cfg.seed] if kind != "REG" else [cfg.seed + s for s in range(b["reg_seeds"])]
                reports, dofs = [], []
                for s in seeds:
                    sc = StrategyConfig(kind, rng_seed=s if kind == "REG" else None)
                    reports.append(evaluate_strategy(p, budget, lay, users, sc, snr, 1.0))
                    if kind == "PS":
                        dofs = full_dof
                    else:
                        g = np.asarray(make_grouping(kind, lay, users, s))
                        dofs = [group_dof(p, lay, u, np.flatnonzero(g == i)) for i, u in enumerate(users)]
                gains = np.mean([r.per_user_gain for r in reports], axis=0)
                rate = float(np.mean([r.sum_rate_bps_hz for r in reports]))
                rows.append((L, len(lay), kind, *gains, *(10 * np.log10(gains)), rate, *dofs))
    cols = {"ris_size_m": "surface side length [m]", "elements": "number of elements", "strategy": "PS, REG or SEG"}
    cols.update({f"gain_u{i}": f"gain of user {i} [W/W]" for i in range(U)})
    cols.update({f"gain_u{i}_db": f"gain of user {i} [dB]" for i in range(U)})
    cols["sum_rate_bps_hz"] = f"sum rate at {snr_db:g} dB transmit SNR [bit/s/Hz]"
    cols.update({f"dof_u{i}": f"analytic modes between user {i} and its serving elements" for i in range(U)})
    dbc = {f"gain_u{i}_db" for i in range(U)}
    return _table("multiuser-sumrate", "Multi-user strategies versus surface size", cols, rows, dbc)


def _scene(spec: dict, cfg: ScenarioConfig) -> RoomScene:
    kw = {}
    names = {"room_width": "room_width_m", "room_height": "room_height_m", "window_center_y": "window_center_y",
             "window_size": "window_size_m", "star_thickness": "star_thickness_m",
             "user_aperture": "user_aperture_m2", "user_depth": "user_depth_m", "r_sn": "r_sn_m",
             "r_sf": "r_sf_m", "zone_size": "zone_size_m", "element_size": "element_size_m", "target": "target"}
    for k, v in spec.items():
        if k in names:
            kw[names[k]] = v
    if "signal" in spec:
        kw["params"] = spec["signal"].build(cfg.beta_magnitude)
    elif cfg.beta_magnitude is not None:
        kw["params"] = SignalParams.from_wavelength(0.0099, beta_magnitude=cfg.beta_magnitude)
    return RoomScene(**kw)


def run_hybrid_coverage(cfg: ScenarioConfig):
    b = cfg.body
    with _context(cfg, "scene"):
        scene = _scene(b["scene"], cfg)
    strategy = StrategyConfig(b["strategy"], rng_seed=cfg.seed if b["strategy"] == "REG" else None)
    out, rows = [], []
    zone = zone_bounds(scene)
    corner = corner_region(scene)
    for m in b["modes"]:
        with _context(cfg, "modes"):
            grid = coverage_grid(scene, m, strategy if m == "StarRis" else None, b["resolution"],
                                 cfg.samples_per_wavelength)
        buf = io.StringIO()
        ny, nx = grid.values.shape
        buf.write(f"{nx} {ny} {grid.cell_size:.9g} {grid.reference_db:.2f}\n")
        for row in grid.values:
            buf.write(" ".join(fmt_db(v) for v in row) + "\n")
        out.append((f"coverage-{m}.raster", buf.getvalue()))
        xmin, ymin = grid.argmin()
        xmax, ymax = grid.argmax()
        in_corner = corner[0] <= xmin <= corner[1] and corner[2] <= ymin <= corner[3]
        rows.append((m, grid.region_mean_db(*zone), xmin, ymin, in_corner, xmax, ymax,
                     float(np.nanmean(grid.values))))
    summary = hybrid_summary(scene)
    cols = {
        "mode": "NoWindow, OpenWindow or StarRis",
        "zone_mean_db": "power averaged (linearly) over the target zone [dB re incident plane wave]",
        "min_x_m": "x of the weakest cell [m]",
        "min_y_m": "y of the weakest cell [m]",
        "min_in_corner": "weakest cell lies in the top-left corner region",
        "max_x_m": "x of the strongest cell [m]",
        "max_y_m": "y of the strongest cell [m]",
        "mean_db": "mean of the dB map over unmasked cells [dB]",
    }
    out += _table("coverage-summary", "Coverage summary", cols, rows, {"zone_mean_db", "mean_db"})
    scols = {"quantity": "name", "value": "value in SI units"}
    srows = sorted(summary.items())
    out += _table("hybrid-regions", "Field boundary and modes of the case-study surface", scols, srows)
    return out


def run_hybrid_angle(cfg: ScenarioConfig):
    b = cfg.body
    with _context(cfg, "scene"):
        scene = _scene(b["scene"], cfg)
    with _context(cfg, "sweep"):
        table = angle_sweep(scene, b["sweep"].values())
    cols = {
        "theta_deg": "user angle [deg]",
        "gain_F_noStar_db": "outdoor user, direct link [dB, relative]",
        "gain_N_noStar_db": "indoor user, edge diffraction [dB re incident plane wave]",
        "gain_F_PS_db": "outdoor user via STAR-RIS with power splitting [dB]",
        "gain_N_PS_db": "indoor user via STAR-RIS with power splitting [dB]",
    }
    assert tuple(cols) == SWEEP_COLUMNS
    rows = [tuple(r) for r in table]
    return _table("hybrid-angle-sweep", "Gains versus user angle", cols, rows, set(SWEEP_COLUMNS[1:]))


RUNNERS: dict = {
    "boundary-table": run_boundary_table,
    "scaling-sweep": run_scaling_sweep,
    "gain-vs-distance": run_gain_vs_distance,
    "multiuser-sumrate": run_multiuser,
    "hybrid-coverage": run_hybrid_coverage,
    "hybrid-angle-sweep": run_hybrid_angle,
}


def run_experiment(cfg: ScenarioConfig):
    """Compute every output of a scenario in memory; returns ``[(filename, text), ...]``."""
    fn: Optional[Callable] = RUNNERS.get(cfg.experiment)
    if fn is None:
        raise RunError(f"unknown experiment {cfg.experiment!r}")
    with _context(cfg, "experiment"):
        return fn(cfg)


__all__ = ["RUNNERS", "RunError", "run_experiment", "csv_text", "fmt", "fmt_db", "DEFAULT_SNR_DB"]
