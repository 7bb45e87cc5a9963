"""Distributed Nash-equilibrium learning for stochastic parallel Gaussian
interference channels: SDLA-I / SDLA-II, iterative water-filling, the exact
strategy-set projection and convergence diagnostics."""

__version__ = "0.1.0"

from .channel import (  # noqa: E402
    ChannelDistribution,
    ConfigError,
    NetworkConfig,
    gamma_matrix,
    gradient,
    rate,
    sample_realization,
    signal_fraction,
    sinr,
    tau,
)
from .projection import ProjectionError, project_profile, project_user  # noqa: E402
from .learners import NoiseModel, RunLog, StepSchedule, iwfa_run, run_sdla  # noqa: E402
from .analysis import nse, solve_ne  # noqa: E402
from .scenario import Scenario, load_scenario  # noqa: E402

__all__ = [
    "__version__",
    "ChannelDistribution", "ConfigError", "NetworkConfig", "gamma_matrix", "gradient", "rate",
    "sample_realization", "signal_fraction", "sinr", "tau",
    "ProjectionError", "project_profile", "project_user",
    "NoiseModel", "RunLog", "StepSchedule", "iwfa_run", "run_sdla",
    "nse", "solve_ne", "Scenario", "load_scenario",
]
