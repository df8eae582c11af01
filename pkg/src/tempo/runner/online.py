"""
Online prediction-correction driver.

At each sampling time ``t_k`` the driver

1. *corrects*: applies ``n_corr`` solver steps to the sampled cost
   ``F(.; t_k)``, warm-started at the prediction ``x_hat_k``, giving ``x_k``;
2. *predicts*: updates the prediction with the information up to ``t_k``
   and applies ``n_pred`` solver steps to it, warm-started at ``x_k``,
   giving ``x_hat_{k+1}``.

Without a prediction (or with ``n_pred = 0``) the method is correction-only;
``n_corr = 0`` gives the usual online learning scheme.
"""

from dataclasses import dataclass, field

import numpy as np

from tempo import costs, distributed, prediction, solvers
from tempo.errors import ConfigError, ConvergenceError, HistoryError
from tempo.runner.metrics import RunTrace


# name -> (solver, name of its step parameter)
SOLVERS = {
    "gradient": (solvers.gradient, "step"),
    "proximal_point": (solvers.proximal_point, "penalty"),
    "forward_backward": (solvers.forward_backward, "step"),
    "peaceman_rachford": (solvers.peaceman_rachford, "penalty"),
    "douglas_rachford": (solvers.douglas_rachford, "penalty"),
}

DISTRIBUTED_SOLVERS = {
    "dgd": distributed.dgd,
    "dpgm": distributed.dpgm,
    "gradient_tracking": distributed.gradient_tracking,
}

PREDICTIONS = ("extrapolation", "taylor")


@dataclass
class OnlineConfig:
    """
    Parameters of an online run. `solver_params` are passed to the solver
    (e.g. ``{"step": 0.2}``); `horizon` defaults to the whole time grid.
    """

    n_pred: int = 0
    n_corr: int = 1
    solver: str = "gradient"
    solver_params: dict = field(default_factory=dict)
    prediction: str = None
    prediction_order: int = 2
    horizon: int = None
    ts: float = None
    seed: int = 0

    def __post_init__(self):

        if self.n_pred < 0 or self.n_corr < 0:
            raise ConfigError("the numbers of prediction and correction steps must be non-negative")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}, choose from {sorted(SOLVERS)}")
        if self.prediction is not None and self.prediction not in PREDICTIONS:
            raise ConfigError(f"unknown prediction {self.prediction!r}, choose from {PREDICTIONS}")
        if self.n_pred > 0 and self.prediction is None:
            raise ConfigError("prediction steps require a prediction strategy")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("the horizon must be positive")


def make_solver(name, params):
    """Return ``solve(problem, x_0, num_iter)`` for a centralized solver."""

    fn, _ = SOLVERS[name]

    def solve(problem, x_0, num_iter):
        return fn(problem, x_0=x_0, num_iter=num_iter, **params)

    return solve


def make_prediction(cost, config):

    if config.prediction is None or config.n_pred == 0:
        return None
    if config.prediction == "extrapolation":
        return prediction.ExtrapolationPrediction(cost, config.prediction_order)
    return prediction.TaylorPrediction(cost)


def _horizon(cost, config):

    grid = cost.time
    if config.ts is not None and not np.isclose(config.ts, grid.ts, rtol=1e-12, atol=0):
        raise ConfigError(f"configured sampling time {config.ts} differs from the cost's {grid.ts}")

    K = grid.num_samples if config.horizon is None else config.horizon
    if K > grid.num_samples:
        raise ConfigError(f"horizon {K} exceeds the {grid.num_samples} samples of the cost")
    return K


#%% OPTIMA

class OptimumOracle:
    """
    Source of the optimal trajectory ``x*(t_k)``, either an analytic map
    ``t -> x*(t)`` or a per-sample Newton solve.
    """

    def __init__(self, fn):
        self.fn = fn

    @classmethod
    def analytic(cls, fn):
        return cls(fn)

    @classmethod
    def newton(cls, cost, x_0=0, tol=1e-12, max_iter=50):
        """Newton's method on each sample, warm-started at the previous optimum."""

        state = {"x": solvers.initial_condition(cost.dom, x_0)}

        def fn(t):

            try:
                x = costs.newton(lambda z: cost.gradient(z, t), lambda z: cost.hessian(z, t), state["x"],
                                 tol=tol, max_iter=max_iter, gtol=0.1 * tol)
            except ConvergenceError as e:
                raise ConvergenceError(f"optimum at t = {t} not found: {e}") from e

            state["x"] = x
            return x

        return cls(fn)

    def trajectory(self, times):
        return np.array([np.ravel(self.fn(t)) for t in times])


def _values(cost, g, xs, times):

    def value(x, t):
        v = cost.function(x, t)
        return v + (0.0 if g is None else g.function(x, t))

    return np.array([value(x.reshape(cost.shape), t) for x, t in zip(xs, times)])


def _trace(cost, g, xs, times, optimum, name):

    optima = values = opt_values = None
    xs = np.array([np.ravel(x) for x in xs])
    if optimum is not None:
        optima = optimum if isinstance(optimum, np.ndarray) else optimum.trajectory(times)
        values = _values(cost, g, xs, times)
        opt_values = _values(cost, g, optima, times)
    return RunTrace.build(times, xs, optima, values, opt_values, name=name)


#%% DRIVERS

def run_online(cost, config, x_0=0, g=None, optimum=None, name=""):
    """
    Run the prediction-correction scheme on the dynamic cost `cost` (plus
    the optional cost `g`, used by splitting solvers).

    Prediction starts as soon as enough samples are available; before
    that the steps are correction-only.

    Parameters
    ----------
    cost : costs.Cost
        The dynamic cost to track.
    config : OnlineConfig
        The parameters of the run.
    x_0 : array_like, optional
        The initial condition.
    g : costs.Cost, optional
        Second term of a composite problem (not predicted).
    optimum : OptimumOracle or ndarray, optional
        The optimal trajectory, required for tracking error and regret.
    name : str, optional
        Label of the trace.

    Returns
    -------
    trace : RunTrace
    """

    K = _horizon(cost, config)
    grid = cost.time
    solve = make_solver(config.solver, config.solver_params)
    predictor = make_prediction(cost, config)

    times = np.array([grid.time(k) for k in range(K)])
    x_hat = solvers.initial_condition(cost.dom, x_0)
    xs = []

    for t in times:

        # correction
        p = {"f": cost.sample(t)}
        if g is not None:
            p["g"] = g.sample(t)
        x = solve(p, x_hat, config.n_corr)
        xs.append(x)

        # prediction
        x_hat = x
        if predictor is not None:
            try:
                if config.prediction == "taylor":
                    predictor.update(t, x)
                else:
                    predictor.update(t)
            except HistoryError:
                continue
            p = dict(p, f=predictor)
            x_hat = solve(p, x, config.n_pred)

    return _trace(cost, g, xs, times, optimum, name)


def run_correction_only(cost, solver, solver_params, n_corr, x_0=0, horizon=None, g=None, optimum=None, name=""):
    """
    Correction-only online solver: `n_corr` steps on each sampled cost,
    warm-started at the previous solution.
    """

    K = cost.time.num_samples if horizon is None else horizon
    solve = make_solver(solver, solver_params)
    times = np.array([cost.time.time(k) for k in range(K)])

    x = solvers.initial_condition(cost.dom, x_0)
    xs = []
    for t in times:
        p = {"f": cost.sample(t)}
        if g is not None:
            p["g"] = g.sample(t)
        x = solve(p, x, n_corr)
        xs.append(x)

    return _trace(cost, g, xs, times, optimum, name)


def run_distributed_online(cost, network, solver="dgd", solver_params=None, num_iter=1, x_0=0,
                           horizon=None, g=None, optimum=None, name=""):
    """
    Online distributed solver: `num_iter` steps of a distributed solver on
    each sampled separable cost. For `dgd` and `dpgm` a diminishing
    step-size schedule continues across samples.
    """

    if solver not in DISTRIBUTED_SOLVERS:
        raise ConfigError(f"unknown distributed solver {solver!r}, choose from {sorted(DISTRIBUTED_SOLVERS)}")
    fn, params = DISTRIBUTED_SOLVERS[solver], dict(solver_params or {})

    K = cost.time.num_samples if horizon is None else horizon
    times = np.array([cost.time.time(k) for k in range(K)])
    x = solvers.initial_condition(cost.dom, x_0)
    xs = []

    for k, t in enumerate(times):

        p = {"f": cost.sample(t), "network": network}
        if g is not None:
            p["g"] = g.sample(t)
        if solver in ("dgd", "dpgm") and params.get("step_decay", 0):
            params["iter_offset"] = k * num_iter
        x = fn(p, x_0=x, num_iter=num_iter, **params)
        xs.append(x)

    if optimum is not None:
        optima = optimum if isinstance(optimum, np.ndarray) else optimum.trajectory(times)
        values = np.array([cost.total(x, t) for x, t in zip(xs, times)])
        opt_values = np.array([cost.total(o.reshape(cost.shape), t) for o, t in zip(optima, times)])
        return RunTrace.build(times, [np.ravel(x) for x in xs], optima, values, opt_values, name=name)
    return RunTrace.build(times, [np.ravel(x) for x in xs], name=name)
