"""Online driver, metrics, scenarios and command line interface."""

from tempo.runner.metrics import RunTrace, compute_metrics, fixed_point_residual, regret, tracking_error
from tempo.runner.online import OnlineConfig, OptimumOracle, run_correction_only, run_distributed_online, run_online
from tempo.runner.scenarios import (BenchmarkConfig, RegressionConfig, SCENARIOS, scenario_benchmark,
                                    scenario_distributed_regression)
