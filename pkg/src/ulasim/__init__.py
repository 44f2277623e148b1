"""Deterministic packet-level simulator of ULA-segmented IoT networks
under Mirai-style botnet attack, with a defense-on/off comparison
harness."""

from .metrics import RunSummary
from .runner import RunResult, Simulation, compare_scenarios, run_scenario
from .scenario import (
    InvalidScenario,
    IoFailure,
    ScenarioDoc,
    parse_scenario,
    validate_scenario,
)

__all__ = [
    "InvalidScenario",
    "IoFailure",
    "RunResult",
    "RunSummary",
    "ScenarioDoc",
    "Simulation",
    "compare_scenarios",
    "parse_scenario",
    "run_scenario",
    "validate_scenario",
]

__version__ = "0.1.0"
