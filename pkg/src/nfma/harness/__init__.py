"""Scenario generation, Monte Carlo experiments, beam patterns and the CLI."""

from .beam import BeamGrid, GridSpec, beam_pattern, focused_weights, parse_grid_spec
from .config import ARCHITECTURES, SCHEMES, ExperimentConfig, load_config, parse_config
from .experiment import (ExperimentResult, OrderingReport, TrialRecord, compare_schemes,
                         run_experiment, run_trial)
from .scenario import Scenario, dbm_to_mw, hotspot_centers, mw_to_dbm, sample_users

__all__ = [
    "BeamGrid", "GridSpec", "beam_pattern", "focused_weights", "parse_grid_spec",
    "ARCHITECTURES", "SCHEMES", "ExperimentConfig", "load_config", "parse_config",
    "ExperimentResult", "OrderingReport", "TrialRecord", "compare_schemes",
    "run_experiment", "run_trial",
    "Scenario", "dbm_to_mw", "hotspot_centers", "mw_to_dbm", "sample_users",
]
