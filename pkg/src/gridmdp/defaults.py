"""Built-in fixtures: the default 14-substation grid and its scenario config."""

from __future__ import annotations

import json
from importlib import resources

from .chronics import Chronics, ChronicsConfig, generate_chronics
from .grid import Grid, parse_grid

# IEEE-14-proportioned base demand per load, MW
DEFAULT_LOAD_WEIGHTS = {
    "LD02": 21.7, "LD03": 94.2, "LD04": 47.8, "LD05": 7.6, "LD06": 11.2,
    "LD09": 29.5, "LD10": 9.0, "LD11": 3.5, "LD12": 6.1, "LD13": 13.5,
    "LD14": 14.9,
}


def default_grid() -> Grid:
    text = resources.files("gridmdp.data").joinpath("default_grid.json").read_text()
    return parse_grid(text)


def default_grid_coords() -> dict:
    text = resources.files("gridmdp.data").joinpath("default_grid_coords.json").read_text()
    return json.loads(text)


def default_chronics_config(days: int = 7, **overrides) -> ChronicsConfig:
    cfg = ChronicsConfig(days=days, load_weights=dict(DEFAULT_LOAD_WEIGHTS))
    for key, value in overrides.items():
        if not hasattr(cfg, key):
            raise TypeError(f"unknown chronics config field {key!r}")
        setattr(cfg, key, value)
    return cfg


def default_scenario(days: int = 7, seed: int = 42, **overrides) -> Chronics:
    return generate_chronics(default_grid(), default_chronics_config(days, **overrides), seed)
