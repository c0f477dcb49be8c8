"""Per-step injection time series ("chronics") at 5-minute resolution.

Generation pipeline:

1. load curves: seasonal x weekly x daily template, modulated per-load by a
   bounded autocorrelated noise factor;
2. solar potential: clear-sky sine bell between the configured night hours,
   scaled by a slow cloud process and a seasonal amplitude;
3. wind potential: discretized mean-reverting process (correlation time of a
   few hours), clipped to [0, p_max];
4. dispatch: merit-order allocation of the dispatchable units (ascending
   marginal cost) under p_min/p_max and ramp constraints, renewables taken
   at full potential first;
5. oversupply: when renewables exceed what the committed units can make room
   for, renewable output is curtailed proportionally at generation time.

Storage units are agent-controlled and excluded from the generated balance:
at every step the dispatched generation equals the total load.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .grid import Grid

STEP_MINUTES = 5
STEPS_PER_DAY = 24 * 60 // STEP_MINUTES  # 288


class ChronicsError(ValueError):
    """Malformed chronics directory or configuration."""


class DispatchInfeasibleError(RuntimeError):
    """Demand cannot be met at some step even with every unit at its limit."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass
class ChronicsConfig:
    """Knobs for the generator.  Defaults give a plausible temperate-climate
    system with a winter demand peak and winter-leaning wind."""

    days: int = 7
    start: str = "2025-04-07T00:00"      # ISO, start of the scenario
    load_weights: dict | None = None     # load id -> base MW; None = equal split
    total_base_load_mw: float = 260.0    # used when load_weights is None

    # load shape
    seasonal_amplitude: float = 0.15     # winter-peaking cosine
    seasonal_peak_doy: int = 15
    weekend_factor: float = 0.90
    load_noise_std: float = 0.02
    load_noise_phi: float = 0.97

    # solar
    night_start_hour: float = 20.0       # potential is exactly 0 in [start, end)
    night_end_hour: float = 6.0
    cloud_tau_hours: float = 2.0
    cloud_floor: float = 0.15
    solar_summer_boost: float = 0.35     # seasonal swing of the clear-sky amplitude

    # wind
    wind_tau_hours: float = 6.0
    wind_mean: float = 0.34              # fraction of p_max, annual mean
    wind_seasonal_amplitude: float = 0.14
    wind_std: float = 0.22

    # maintenance windows: (line_id, start_step, n_steps)
    maintenance: list = field(default_factory=list)


@dataclass
class Chronics:
    """Generated or loaded injection schedule.  Column order follows the
    canonical (id-sorted) grid order captured in the id lists."""

    n_steps: int
    load_ids: list
    gen_ids: list
    renewable_ids: list
    gen_types: dict                  # gen id -> type
    load_p: np.ndarray               # (n_steps, n_load) MW
    renewable_potential: np.ndarray  # (n_steps, n_renewable) MW
    dispatch_p: np.ndarray           # (n_steps, n_gen) MW
    maintenance: dict                # line id -> list of (start_step, n_steps)
    meta: dict                       # seed, start, step_minutes

    @property
    def start_datetime(self) -> datetime:
        return datetime.fromisoformat(self.meta["start"])

    def datetimes(self) -> list:
        t0 = self.start_datetime
        return [t0 + timedelta(minutes=STEP_MINUTES * k) for k in range(self.n_steps)]

    def maintenance_active(self, step: int) -> set:
        """Line ids whose maintenance window covers the given step."""
        out = set()
        for line_id, windows in self.maintenance.items():
            for start, dur in windows:
                if start <= step < start + dur:
                    out.add(line_id)
        return out


def _daily_shape(minute_of_day: np.ndarray) -> np.ndarray:
    # base plateau with a morning and a stronger evening bump
    morning = np.exp(-0.5 * ((minute_of_day - 510.0) / 120.0) ** 2)
    evening = np.exp(-0.5 * ((minute_of_day - 1140.0) / 150.0) ** 2)
    return 0.80 + 0.16 * morning + 0.26 * evening


def _ar1(rng: np.random.Generator, n: int, cols: int, phi: float, std: float) -> np.ndarray:
    """Stationary AR(1) noise, one column per element."""
    innov_std = std * np.sqrt(1.0 - phi * phi)
    eps = rng.normal(0.0, innov_std, size=(n, cols))
    out = np.empty((n, cols))
    out[0] = rng.normal(0.0, std, size=cols)
    for t in range(1, n):
        out[t] = phi * out[t - 1] + eps[t]
    return out


def generate_chronics(grid: Grid, config: ChronicsConfig, seed: int) -> Chronics:
    """Deterministically generate a scenario for ``grid``."""
    rng = np.random.default_rng(seed)
    n_steps = config.days * STEPS_PER_DAY
    start = datetime.fromisoformat(config.start)

    load_ids = [l.id for l in grid.loads]
    gen_ids = [g.id for g in grid.generators]
    renewables = [g for g in grid.generators if g.renewable]
    renewable_ids = [g.id for g in renewables]
    dispatchables = [g for g in grid.generators if not g.renewable]

    minutes = np.arange(n_steps) * STEP_MINUTES
    stamps = [start + timedelta(minutes=int(m)) for m in minutes]
    minute_of_day = np.array([s.hour * 60 + s.minute for s in stamps], dtype=float)
    day_of_year = np.array([s.timetuple().tm_yday for s in stamps], dtype=float)
    weekend = np.array([s.weekday() >= 5 for s in stamps], dtype=float)

    # 1. loads
    if config.load_weights is not None:
        missing = [i for i in load_ids if i not in config.load_weights]
        if missing:
            raise ChronicsError(f"load_weights missing entries for {missing}")
        base = np.array([float(config.load_weights[i]) for i in load_ids])
    else:
        base = np.full(len(load_ids), config.total_base_load_mw / max(1, len(load_ids)))
    seasonal = 1.0 + config.seasonal_amplitude * np.cos(
        2 * np.pi * (day_of_year - config.seasonal_peak_doy) / 365.25)
    weekly = 1.0 - (1.0 - config.weekend_factor) * weekend
    daily = _daily_shape(minute_of_day)
    shape = seasonal * weekly * daily
    noise = np.clip(1.0 + _ar1(rng, n_steps, len(load_ids),
                               config.load_noise_phi, config.load_noise_std), 0.9, 1.1)
    load_p = base[None, :] * shape[:, None] * noise

    # 2./3. renewable potential
    potential = np.zeros((n_steps, len(renewables)))
    sunrise = config.night_end_hour * 60.0
    sunset = config.night_start_hour * 60.0
    day_frac = np.clip((minute_of_day - sunrise) / max(sunset - sunrise, 1e-9), 0.0, 1.0)
    bell = np.sin(np.pi * day_frac) ** 2
    night = (minute_of_day >= sunset) | (minute_of_day < sunrise)
    bell[night] = 0.0
    solar_season = 1.0 - config.solar_summer_boost * 0.5 * (
        1.0 - np.cos(2 * np.pi * (day_of_year - 192.0) / 365.25))
    wind_mu = config.wind_mean + config.wind_seasonal_amplitude * np.cos(
        2 * np.pi * (day_of_year - 15.0) / 365.25)

    for j, g in enumerate(renewables):
        if g.gen_type == "solar":
            cloud_phi = np.exp(-STEP_MINUTES / (config.cloud_tau_hours * 60.0))
            raw = _ar1(rng, n_steps, 1, cloud_phi, 1.0)[:, 0]
            cloud = config.cloud_floor + (1.0 - config.cloud_floor) / (1.0 + np.exp(-(1.2 + raw)))
            potential[:, j] = g.p_max * solar_season * bell * cloud
        else:  # wind
            theta = STEP_MINUTES / (config.wind_tau_hours * 60.0)
            sigma = config.wind_std * np.sqrt(2.0 * theta)
            eps = rng.normal(0.0, sigma, size=n_steps)
            z = np.empty(n_steps)
            z[0] = np.clip(wind_mu[0] + rng.normal(0.0, config.wind_std), 0.0, 1.0)
            for t in range(1, n_steps):
                z[t] = z[t - 1] + theta * (wind_mu[t] - z[t - 1]) + eps[t]
                z[t] = min(max(z[t], 0.0), 1.0)
            potential[:, j] = g.p_max * z
        potential[:, j] = np.clip(potential[:, j], 0.0, g.p_max)

    # 4./5. dispatch
    order = sorted(range(len(dispatchables)),
                   key=lambda k: (dispatchables[k].marginal_cost, dispatchables[k].id))
    p_min = np.array([g.p_min for g in dispatchables])
    p_max = np.array([g.p_max for g in dispatchables])
    ramp = np.array([g.ramp_rate for g in dispatchables])
    total_load = load_p.sum(axis=1)

    dispatch_disp = np.zeros((n_steps, len(dispatchables)))
    renewable_dispatch = potential.copy()
    prev = None
    for t in range(n_steps):
        lo = p_min.copy() if prev is None else np.maximum(p_min, prev - ramp)
        hi = p_max.copy() if prev is None else np.minimum(p_max, prev + ramp)
        pot_t = float(potential[t].sum())
        residual = total_load[t] - pot_t
        lo_sum, hi_sum = float(lo.sum()), float(hi.sum())
        if residual < lo_sum:
            # oversupply: shrink renewables so committed minimums still fit
            room = total_load[t] - lo_sum
            if room < -1e-9 or (room > 1e-12 and pot_t <= 0.0):
                raise DispatchInfeasibleError(
                    t, f"demand {total_load[t]:.2f} MW below committed minimum {lo_sum:.2f} MW")
            factor = 0.0 if pot_t <= 0.0 else max(room, 0.0) / pot_t
            renewable_dispatch[t] = potential[t] * factor
            residual = total_load[t] - float(renewable_dispatch[t].sum())
        if residual > hi_sum + 1e-9:
            raise DispatchInfeasibleError(
                t, f"residual demand {residual:.2f} MW exceeds dispatchable ceiling {hi_sum:.2f} MW")
        alloc = lo.copy()
        remaining = residual - float(lo.sum())
        for k in order:
            if remaining <= 0:
                break
            take = min(remaining, hi[k] - lo[k])
            alloc[k] += take
            remaining -= take
        dispatch_disp[t] = alloc
        prev = alloc

    dispatch_p = np.zeros((n_steps, len(gen_ids)))
    ren_pos = {g.id: j for j, g in enumerate(renewables)}
    disp_pos = {g.id: j for j, g in enumerate(dispatchables)}
    for j, gid in enumerate(gen_ids):
        if gid in ren_pos:
            dispatch_p[:, j] = renewable_dispatch[:, ren_pos[gid]]
        else:
            dispatch_p[:, j] = dispatch_disp[:, disp_pos[gid]]

    maintenance: dict = {}
    for line_id, start_step, dur in config.maintenance:
        if line_id not in grid.line_index:
            raise ChronicsError(f"maintenance names unknown line {line_id!r}")
        maintenance.setdefault(line_id, []).append((int(start_step), int(dur)))

    return Chronics(
        n_steps=n_steps,
        load_ids=load_ids,
        gen_ids=gen_ids,
        renewable_ids=renewable_ids,
        gen_types={g.id: g.gen_type for g in grid.generators},
        load_p=load_p,
        renewable_potential=potential,
        dispatch_p=dispatch_p,
        maintenance=maintenance,
        meta={"seed": int(seed), "start": config.start, "step_minutes": STEP_MINUTES},
    )


def energy_mix(chronics: Chronics) -> dict:
    """Share of total generated energy per generator type.

    share(type) = sum over that type's generators and steps of the dispatched
    injection, divided by the same sum over all generators.
    """
    totals = {t: 0.0 for t in ("hydro", "nuclear", "solar", "thermal", "wind")}
    per_gen = chronics.dispatch_p.sum(axis=0)
    for j, gid in enumerate(chronics.gen_ids):
        totals[chronics.gen_types[gid]] += float(per_gen[j])
    grand = sum(totals.values())
    if grand <= 0:
        raise ChronicsError("energy mix undefined: total generation is zero")
    return {t: v / grand for t, v in totals.items()}


# -- persistence ---------------------------------------------------------

def _write_matrix(path: Path, ids: list, matrix: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ids)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def _read_matrix(path: Path):
    if not path.exists():
        raise ChronicsError(f"missing {path.name}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            ids = next(reader)
        except StopIteration:
            raise ChronicsError(f"{path.name} is empty") from None
        rows = []
        for row in reader:
            if len(row) != len(ids):
                raise ChronicsError(f"{path.name}: row width does not match header")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ChronicsError(f"{path.name}: {exc}") from exc
    matrix = np.array(rows) if rows else np.zeros((0, len(ids)))
    return ids, matrix


def save_chronics(chronics: Chronics, directory) -> Path:
    """Write a scenario directory (CSV matrices + maintenance + meta)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_matrix(directory / "load_p.csv", chronics.load_ids, chronics.load_p)
    _write_matrix(directory / "renewable_potential.csv",
                  chronics.renewable_ids, chronics.renewable_potential)
    _write_matrix(directory / "dispatch_p.csv", chronics.gen_ids, chronics.dispatch_p)
    with open(directory / "maintenance.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["line_id", "start_step", "n_steps"])
        for line_id in sorted(chronics.maintenance):
            for start, dur in chronics.maintenance[line_id]:
                writer.writerow([line_id, start, dur])
    meta = dict(chronics.meta)
    meta["step_minutes"] = STEP_MINUTES
    meta["gen_types"] = chronics.gen_types
    with open(directory / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return directory


def load_chronics(directory) -> Chronics:
    directory = Path(directory)
    if not directory.is_dir():
        raise ChronicsError(f"scenario directory not found: {directory}")
    meta_path = directory / "meta.json"
    if not meta_path.exists():
        raise ChronicsError(f"not a scenario directory (no meta.json): {directory}")
    with open(meta_path) as fh:
        meta = json.load(fh)
    gen_types = meta.pop("gen_types", {})
    load_ids, load_p = _read_matrix(directory / "load_p.csv")
    ren_ids, potential = _read_matrix(directory / "renewable_potential.csv")
    gen_ids, dispatch_p = _read_matrix(directory / "dispatch_p.csv")
    n_steps = load_p.shape[0]
    if potential.shape[0] != n_steps or dispatch_p.shape[0] != n_steps:
        raise ChronicsError("CSV matrices disagree on the number of steps")
    maintenance: dict = {}
    maint_path = directory / "maintenance.csv"
    if maint_path.exists():
        with open(maint_path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                maintenance.setdefault(row["line_id"], []).append(
                    (int(row["start_step"]), int(row["n_steps"])))
    return Chronics(
        n_steps=n_steps,
        load_ids=load_ids,
        gen_ids=gen_ids,
        renewable_ids=ren_ids,
        gen_types=gen_types,
        load_p=load_p,
        renewable_potential=potential,
        dispatch_p=dispatch_p,
        maintenance=maintenance,
        meta=meta,
    )


def check_chronics_against_grid(chronics: Chronics, grid: Grid):
    """Raise when the scenario columns do not match the grid elements."""
    if chronics.load_ids != [l.id for l in grid.loads]:
        raise ChronicsError("scenario load columns do not match the grid")
    if chronics.gen_ids != [g.id for g in grid.generators]:
        raise ChronicsError("scenario generator columns do not match the grid")
    if chronics.renewable_ids != grid.renewable_ids:
        raise ChronicsError("scenario renewable columns do not match the grid")
    for line_id in chronics.maintenance:
        if line_id not in grid.line_index:
            raise ChronicsError(f"maintenance names unknown line {line_id!r}")
