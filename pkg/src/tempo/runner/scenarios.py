r"""
The two numerical scenarios.

* ``benchmark``: the scalar cost
  :math:`F(x; t) = (x - \cos(\omega t))^2 / 2 + \epsilon \log(1 + e^{\varphi x})`
  tracked by the gradient method, correction-only vs extrapolation-based
  prediction-correction.
* ``distributed-regression``: `N` agents tracking a sinusoidal signal from
  noisy scaled measurements with DGD, over several graph topologies.

Each scenario returns a dictionary ``{variant name: RunTrace}``.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from tempo import costs, networks, sets
from tempo.distributed import SeparableCost
from tempo.errors import ConfigError
from tempo.runner.online import OnlineConfig, OptimumOracle, run_correction_only, run_distributed_online, run_online


def from_dict(cls, data):
    """Build the dataclass `cls` from `data`, rejecting unknown keys."""

    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(str(e)) from e


#%% BENCHMARK

@dataclass
class BenchmarkConfig:

    ts: float = 0.1
    t_max: float = 1e4
    n_pred: int = 5
    n_corr: int = 5
    step: float = 0.2
    x_0: float = 0.0
    omega: float = 0.02 * math.pi
    eps: float = 7.5
    phi: float = 1.75
    prediction: str = "extrapolation"
    prediction_order: int = 2
    horizon: int = None
    seed: int = 0

    def __post_init__(self):

        if not self.ts > 0 or not self.t_max >= self.ts:
            raise ConfigError("need 0 < ts <= t_max")
        if not self.step > 0:
            raise ConfigError("the step-size must be positive")


def scenario_benchmark(config=None, **overrides):
    """
    Run the benchmark, returning the ``correction_only`` and the
    ``prediction_correction`` traces.
    """

    cfg = config or BenchmarkConfig()
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    f = costs.BenchmarkCost1D(cfg.ts, cfg.t_max, cfg.omega, cfg.eps, cfg.phi)
    K = f.time.num_samples if cfg.horizon is None else cfg.horizon
    times = [f.time.time(k) for k in range(K)]
    optima = OptimumOracle.newton(f, cfg.x_0).trajectory(times)
    params = {"step": cfg.step}

    out = {}
    out["correction_only"] = run_correction_only(f, "gradient", params, cfg.n_corr, cfg.x_0, K,
                                                 optimum=optima, name="correction_only")

    online = OnlineConfig(n_pred=cfg.n_pred, n_corr=cfg.n_corr, solver="gradient", solver_params=params,
                          prediction=cfg.prediction, prediction_order=cfg.prediction_order,
                          horizon=K, ts=cfg.ts, seed=cfg.seed)
    out["prediction_correction"] = run_online(f, online, cfg.x_0, optimum=optima, name="prediction_correction")

    return out


#%% DISTRIBUTED REGRESSION

DEFAULT_TOPOLOGIES = [
    {"kind": "random", "p": 0.5},
    {"kind": "circulant", "degree": 1},
    {"kind": "circulant", "degree": 2},
    {"kind": "complete"},
]


def topology_name(topo):

    if "name" in topo:
        return topo["name"]
    if topo["kind"] == "circulant":
        return f"circulant{topo.get('degree', 1)}"
    if topo["kind"] == "csv":
        return "csv"
    return topo["kind"]


@dataclass
class RegressionConfig:
    """
    `topologies` is a list of graph descriptions ``{"kind": ...}`` with
    kind ``random`` (``p``), ``circulant`` (``degree``), ``complete`` or
    ``csv`` (``path`` to an adjacency matrix); an optional ``name`` labels
    the trace. `channel` is ``{"kind": ..., parameter: value}``.
    `frequency` defaults to one period every 400 samples.
    """

    n_agents: int = 25
    ts: float = 0.1
    num_samples: int = 2000
    amplitude: float = 1.0
    frequency: float = None
    noise_var: float = 1e-2
    a_min: float = 0.1
    step: float = 0.1
    step_decay: float = 0.0
    num_iter: int = 5
    x_0: float = 0.0
    topologies: list = field(default_factory=lambda: [dict(t) for t in DEFAULT_TOPOLOGIES])
    channel: dict = field(default_factory=lambda: {"kind": "lossless"})
    seed: int = 0

    def __post_init__(self):

        if self.n_agents < 2:
            raise ConfigError("at least 2 agents are required")
        if not self.ts > 0 or self.num_samples < 1 or self.num_iter < 1:
            raise ConfigError("need ts > 0, num_samples >= 1 and num_iter >= 1")
        if self.noise_var < 0 or not self.a_min >= 0:
            raise ConfigError("noise variance and a_min must be non-negative")
        if not self.step > 0:
            raise ConfigError("the step-size must be positive")
        if not self.topologies:
            raise ConfigError("at least one topology is required")
        for t in self.topologies:
            if not isinstance(t, dict) or t.get("kind") not in ("random", "circulant", "complete", "csv"):
                raise ConfigError(f"invalid topology {t!r}")
            if t["kind"] == "csv" and "path" not in t:
                raise ConfigError("csv topologies need a path")
        names = [topology_name(t) for t in self.topologies]
        if len(set(names)) != len(names):
            raise ConfigError(f"topology names must be unique, got {names} (add a 'name' key)")
        if not isinstance(self.channel, dict) or self.channel.get("kind") not in networks.CHANNELS:
            raise ConfigError(f"invalid channel {self.channel!r}")

    @property
    def signal_frequency(self):
        return 1 / (400 * self.ts) if self.frequency is None else self.frequency


def regression_data(cfg):
    """
    Scales `a` (standard normal, magnitudes clipped to at least `a_min`),
    signal `y(t_k)` and measurements ``b[k, i] = a_i y(t_k) + e_i(t_k)``.
    """

    rng = np.random.default_rng([cfg.seed, 0])
    a = rng.standard_normal(cfg.n_agents)
    a = np.where(a >= 0, 1, -1) * np.maximum(np.abs(a), cfg.a_min)

    t = cfg.ts * np.arange(cfg.num_samples)
    y = cfg.amplitude * np.sin(2 * np.pi * cfg.signal_frequency * t)
    e = rng.normal(0.0, math.sqrt(cfg.noise_var), (cfg.num_samples, cfg.n_agents))

    return a, y, a * y[:, None] + e


def regression_cost(a, b, ts):
    """Separable cost with local costs ``(a_i x_i - b_i(t_k))^2 / 2``."""

    grid = sets.TimeGrid(ts, b.shape[0])

    def local(i):
        def factory(t):
            k = grid.nearest(t)
            return costs.Quadratic([[a[i]**2]], [-a[i] * b[k, i]], 0.5 * b[k, i]**2)
        return costs.ParametricCost(factory, grid)

    return SeparableCost([local(i) for i in range(len(a))])


def make_topology(topo, n, seed):

    if topo["kind"] == "csv":
        try:
            g = networks.load_adjacency_csv(topo["path"])
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot load the graph in {topo['path']}: {e}") from e
        if g.n != n:
            raise ConfigError(f"the graph in {topo['path']} has {g.n} nodes, expected {n}")
        return g
    params = {k: v for k, v in topo.items() if k not in ("kind", "name")}
    try:
        return networks.make_graph(topo["kind"], n, seed=seed, **params)
    except (ValueError, TypeError) as e:
        raise ConfigError(f"invalid topology {topo!r}: {e}") from e


def scenario_distributed_regression(config=None, **overrides):
    """Run DGD over each topology, one trace per topology."""

    cfg = config or RegressionConfig()
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    a, y, b = regression_data(cfg)
    f = regression_cost(a, b, cfg.ts)
    optima = np.repeat(((b @ a) / (a @ a))[:, None], cfg.n_agents, axis=1)

    channel = {k: v for k, v in cfg.channel.items() if k != "kind"}
    solver_params = {"step": cfg.step, "step_decay": cfg.step_decay}

    out = {}
    for idx, topo in enumerate(cfg.topologies):
        graph = make_topology(topo, cfg.n_agents, seed=[cfg.seed, 1, idx])
        if not graph.is_connected:
            raise ConfigError(f"the topology {topology_name(topo)} is not connected")
        try:
            net = networks.make_network(graph, cfg.channel["kind"], seed=cfg.seed, **channel)
        except (ValueError, TypeError) as e:
            raise ConfigError(f"invalid channel {cfg.channel!r}: {e}") from e

        name = topology_name(topo)
        out[name] = run_distributed_online(f, net, "dgd", solver_params, cfg.num_iter, cfg.x_0,
                                           optimum=optima, name=name)

    return out


SCENARIOS = {
    "benchmark": (BenchmarkConfig, scenario_benchmark),
    "distributed-regression": (RegressionConfig, scenario_distributed_regression),
}
