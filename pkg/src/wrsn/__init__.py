"""Charging-scheme optimization for wireless rechargeable sensor networks."""
from .evaluation import ChargingSchedule, EvaluationReport, Evaluator, evaluate_schedule
from .instances import GeneratorSpec, generate_instance
from .model import ChargerConfig, NetworkInstance, SensorNode, load_instance, save_instance
from .solvers import SolveResult, SolverConfig, greedy_baseline, mlsga_run, mtbcs_run, solve

__all__ = [
    "ChargerConfig", "ChargingSchedule", "EvaluationReport", "Evaluator", "GeneratorSpec",
    "NetworkInstance", "SensorNode", "SolveResult", "SolverConfig", "evaluate_schedule",
    "generate_instance", "greedy_baseline", "load_instance", "mlsga_run", "mtbcs_run",
    "save_instance", "solve",
]
