"""gridmdp: a power-network operation MDP with DC power flow, synthetic
injection chronics, cascading overload dynamics, a three-cost normalized
score, and a PPO baseline agent stack."""

from .grid import (
    BusGraph,
    Generator,
    Grid,
    GridFormatError,
    Line,
    Load,
    Storage,
    Substation,
    TopologyState,
    effective_buses,
    load_grid,
    parse_grid,
    save_grid,
    serialize_grid,
)
from .powerflow import FlowResult, InjectionVector, PowerFlowError, compute_losses, solve_dc
from .chronics import (
    Chronics,
    ChronicsConfig,
    ChronicsError,
    DispatchInfeasibleError,
    energy_mix,
    generate_chronics,
    load_chronics,
    save_chronics,
)
from .defaults import default_chronics_config, default_grid, default_scenario
from .actions import (
    Action,
    Composite,
    Curtail,
    DoNothing,
    SetBusbar,
    SetLineStatus,
    SetStorage,
)
from .env import EnvConfig, Environment, Observation, StepResult, observation_length

__version__ = "0.1.0"
