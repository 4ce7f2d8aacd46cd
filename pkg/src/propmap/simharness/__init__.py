"""Synthetic trotting quadruped producing telemetry with ground truth."""

from .groundtruth import GroundTruth, SlipRecord, read_groundtruth, write_groundtruth
from .scenario import (
    GaitParams,
    InjectedSlip,
    NoiseParams,
    PowerModel,
    ScenarioSpec,
    crater_scenario,
    flat_scenario,
    load_scenario,
    ramp_scenario,
    save_scenario,
    sweep,
)
from .terrain import CraterField, FlatTerrain, RampTestbed
from .walker import Generated, ScenarioError, Walker, generate, plan_slips

__all__ = [
    "CraterField",
    "FlatTerrain",
    "GaitParams",
    "Generated",
    "GroundTruth",
    "InjectedSlip",
    "NoiseParams",
    "PowerModel",
    "RampTestbed",
    "ScenarioError",
    "ScenarioSpec",
    "SlipRecord",
    "Walker",
    "crater_scenario",
    "flat_scenario",
    "generate",
    "load_scenario",
    "plan_slips",
    "ramp_scenario",
    "read_groundtruth",
    "save_scenario",
    "sweep",
    "write_groundtruth",
]
