import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tempo import costs, networks, sets, solvers
from tempo.errors import ConfigError
from tempo.runner import cli, metrics
from tempo.runner.online import OnlineConfig, OptimumOracle, run_correction_only, run_online
from tempo.runner.scenarios import (RegressionConfig, regression_cost, regression_data,
                                    scenario_benchmark, scenario_distributed_regression)


def quad(center, curvature=1.0):
    c = np.atleast_1d(np.asarray(center, dtype=float))
    return costs.Quadratic(curvature * np.eye(c.size), -curvature * c, 0.5 * curvature * c @ c)


def moving_quadratic(num_samples=50, ts=0.1):
    # (x - sin(t))^2 / 2 on a grid of num_samples
    return costs.DiscreteDynamicCost([quad(math.sin(ts * k)) for k in range(num_samples)], ts=ts)


#%% metrics

def test_optimal_play():
    xs = np.random.default_rng(0).normal(size=(10, 2))
    v = np.arange(10.0)
    m = metrics.compute_metrics(xs, xs, v, v)
    assert np.all(m["tracking_error"] == 0) and np.all(m["regret"] == 0)


def test_constant_iterates():
    r = metrics.fixed_point_residual(np.ones((5, 3)))
    assert np.isnan(r[0]) and np.all(r[1:] == 0)


def test_regret_example():
    f = quad(0)
    xs = np.array([[0.0], [1.0]])
    values = [f.function(x) for x in xs]
    r = metrics.regret(values, [0.0, 0.0])
    assert r[1] == 0.25


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40))
def test_regret_brute_force(gaps):
    r = metrics.regret(np.array(gaps) + 1.0, np.ones(len(gaps)))
    for k in range(len(gaps)):
        assert abs(r[k] - math.fsum(gaps[:k + 1]) / (k + 1)) <= 1e-12 * (1 + max(map(abs, gaps)))


@given(st.integers(2, 20), st.integers(0, 10**6))
@settings(max_examples=30)
def test_metric_causality(n, seed):
    rng = np.random.default_rng(seed)
    xs, opt, v, w = rng.normal(size=(n, 2)), rng.normal(size=(n, 2)), rng.normal(size=n), rng.normal(size=n)
    full = metrics.compute_metrics(xs, opt, v, w)
    k = rng.integers(1, n + 1)
    part = metrics.compute_metrics(xs[:k], opt[:k], v[:k], w[:k])
    for key in full:
        assert np.array_equal(full[key][:k], part[key], equal_nan=True)


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    tr = metrics.RunTrace.build(np.arange(6) * 0.1, rng.normal(size=(6, 3)) * 1e-7, rng.normal(size=(6, 3)),
                                rng.normal(size=6), rng.normal(size=6))
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,time,tracking_error,fixed_point_residual,regret,x_0,x_1,x_2"
    assert lines[1].split(",")[3] == "NaN" and len(lines) == 7
    assert tr.equals(metrics.RunTrace.from_csv(path))


def test_trace_without_optima():
    tr = metrics.RunTrace.build([0.0, 1.0], [[1.0], [2.0]])
    assert np.all(np.isnan(tr.tracking_error)) and np.all(np.isnan(tr.regret))
    assert tr.fixed_point_residual[1] == 1


#%% online driver

def test_ablation_matches_plain_loop():
    f = moving_quadratic()
    cfg = OnlineConfig(n_pred=0, n_corr=3, solver_params={"step": 0.4}, prediction="extrapolation")
    tr = run_online(f, cfg, x_0=1.0)
    x, xs = np.array([1.0]), []
    for k in range(50):
        x = solvers.gradient({"f": f.sample(f.time.time(k))}, 0.4, x_0=x, num_iter=3)
        xs.append(x)
    assert np.array_equal(tr.iterates, np.array(xs))
    ref = run_correction_only(f, "gradient", {"step": 0.4}, 3, x_0=1.0)
    assert tr.equals(ref)


def test_static_cost_converges():
    f = costs.BenchmarkCost1D(ts=0.1, t_max=5, omega=0.0)
    opt = OptimumOracle.newton(f)
    cfg = OnlineConfig(n_corr=200, solver_params={"step": 0.2})
    tr = run_online(f, cfg, optimum=opt)
    assert np.all(tr.tracking_error[1:] < 1e-6)


def test_horizon_one():
    f = moving_quadratic()
    tr = run_online(f, OnlineConfig(n_corr=4, solver_params={"step": 0.5}, horizon=1), x_0=2.0)
    ref = solvers.gradient({"f": f.sample(0.0)}, 0.5, x_0=2.0, num_iter=4)
    assert len(tr) == 1 and np.array_equal(tr.iterates[0], ref)


def test_early_fallback():
    # order 3 extrapolation needs three samples: the first two steps are correction-only
    f = moving_quadratic()
    cfg = OnlineConfig(n_pred=5, n_corr=1, solver_params={"step": 0.3}, prediction="extrapolation", prediction_order=3)
    tr = run_online(f, cfg)
    ref = run_correction_only(f, "gradient", {"step": 0.3}, 1, horizon=3)
    assert np.array_equal(tr.iterates[:3], ref.iterates)
    assert not np.array_equal(tr.iterates[3], run_correction_only(f, "gradient", {"step": 0.3}, 1, horizon=4).iterates[3])


@pytest.mark.parametrize("prediction", ["extrapolation", "taylor"])
def test_prediction_improves_tracking(prediction):
    f = costs.BenchmarkCost1D(ts=0.1, t_max=200)
    opt = OptimumOracle.newton(f).trajectory(f.time.time(k) for k in range(f.time.num_samples))
    base = run_correction_only(f, "gradient", {"step": 0.2}, 5, optimum=opt)
    cfg = OnlineConfig(n_pred=5, n_corr=5, solver_params={"step": 0.2}, prediction=prediction)
    tr = run_online(f, cfg, optimum=opt)
    half = len(tr) // 2
    assert tr.tracking_error[half:].mean() < 0.5 * base.tracking_error[half:].mean()


def test_online_learning_variant():
    # n_corr = 0: the iterate at t_k is the prediction made at t_{k-1}
    f = moving_quadratic()
    cfg = OnlineConfig(n_pred=2, n_corr=0, solver_params={"step": 0.5}, prediction="extrapolation")
    tr = run_online(f, cfg, x_0=0.3)
    assert tr.iterates[0, 0] == 0.3 and tr.iterates[1, 0] == 0.3 and tr.iterates[2, 0] != 0.3


def test_splitting_solver_online():
    f = moving_quadratic()
    g = costs.Indicator(sets.Box(-0.2, 0.2, (1,)))
    cfg = OnlineConfig(n_corr=30, solver="forward_backward", solver_params={"step": 0.5})
    tr = run_online(f, cfg, g=g)
    assert np.allclose(tr.iterates[:, 0], np.clip(np.sin(0.1 * np.arange(50)), -0.2, 0.2), atol=1e-8)


@pytest.mark.parametrize("kwargs", [
    {"n_pred": 1}, {"n_corr": -1}, {"solver": "newton"}, {"prediction": "oracle"}, {"horizon": 0}])
def test_online_config_errors(kwargs):
    with pytest.raises(ConfigError):
        OnlineConfig(**kwargs)


def test_horizon_and_ts_checked():
    f = moving_quadratic()
    with pytest.raises(ConfigError):
        run_online(f, OnlineConfig(horizon=51))
    with pytest.raises(ConfigError):
        run_online(f, OnlineConfig(ts=0.2))


def test_newton_oracle_accuracy():
    f = costs.BenchmarkCost1D(ts=0.1, t_max=100)
    oracle = OptimumOracle.newton(f)
    for k in range(0, 1000, 7):
        t = f.time.time(k)
        assert abs(f.gradient(oracle.fn(t), t).item()) < 1e-10


def test_analytic_oracle():
    o = OptimumOracle.analytic(lambda t: np.array([math.sin(t)]))
    assert np.array_equal(o.trajectory([0.0, 1.0]), [[0.0], [math.sin(1.0)]])


#%% scenarios

def test_benchmark_small():
    out = scenario_benchmark(t_max=50)
    assert set(out) == {"correction_only", "prediction_correction"}
    assert all(len(tr) == 500 for tr in out.values())
    half = slice(250, None)
    assert out["prediction_correction"].tracking_error[half].mean() < out["correction_only"].tracking_error[half].mean()


def test_benchmark_static():
    out = scenario_benchmark(t_max=30, omega=0.0)
    for tr in out.values():
        assert tr.tracking_error[-1] < 1e-6


def test_regression_data():
    cfg = RegressionConfig(num_samples=400)
    a, y, b = regression_data(cfg)
    assert a.shape == (25,) and np.all(np.abs(a) >= 0.1) and b.shape == (400, 25)
    assert y[0] == 0 and abs(y[100] - 1) < 1e-12
    assert abs(np.var(b - a * y[:, None]) - 1e-2) < 2e-3
    a2, _, b2 = regression_data(cfg)
    assert np.array_equal(a, a2) and np.array_equal(b, b2)


def test_regression_cost_optimum():
    cfg = RegressionConfig(num_samples=5)
    a, y, b = regression_data(cfg)
    f = regression_cost(a, b, cfg.ts)
    xs = np.full((1, 25), (b[3] @ a) / (a @ a))
    assert abs(np.sum(f.gradient(xs, 0.3))) < 1e-12


def test_regression_small():
    out = scenario_distributed_regression(num_samples=40)
    assert list(out) == ["random", "circulant1", "circulant2", "complete"]
    assert all(len(tr) == 40 and tr.iterates.shape[1] == 25 for tr in out.values())


def test_regression_static_complete():
    out = scenario_distributed_regression(num_samples=400, frequency=0.0, noise_var=0.0, step_decay=0.5,
                                          topologies=[{"kind": "complete"}])
    assert out["complete"].fixed_point_residual[-1] < 1e-6


def test_regression_channels():
    base = scenario_distributed_regression(num_samples=30, topologies=[{"kind": "circulant", "degree": 2}])
    lossy = scenario_distributed_regression(num_samples=30, topologies=[{"kind": "circulant", "degree": 2}],
                                            channel={"kind": "lossy", "p_drop": 0.3})
    again = scenario_distributed_regression(num_samples=30, topologies=[{"kind": "circulant", "degree": 2}],
                                            channel={"kind": "lossy", "p_drop": 0.3})
    assert not base["circulant2"].equals(lossy["circulant2"]) and lossy["circulant2"].equals(again["circulant2"])


@pytest.mark.parametrize("kwargs", [
    {"topologies": [{"kind": "star"}]}, {"topologies": [{"kind": "complete"}, {"kind": "complete"}]},
    {"channel": {"kind": "pigeon"}}, {"n_agents": 1}, {"topologies": [{"kind": "csv"}]}])
def test_regression_config_errors(kwargs):
    with pytest.raises(ConfigError):
        RegressionConfig(**kwargs)


#%% CLI

def run_cli(*args, env=None):
    return subprocess.run([sys.executable, "-m", "tempo", *args], capture_output=True, text=True, env=env)


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    assert capsys.readouterr().out.split() == ["benchmark", "distributed-regression"]


def test_cli_determinism(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"t_max": 20}))
    for d in ("a", "b"):
        assert cli.main(["run", "--scenario", "benchmark", "--config", str(cfg), "--seed", "1",
                         "--out", str(tmp_path / d)]) == 0
    for name in ("benchmark_correction_only.csv", "benchmark_prediction_correction.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_missing_out():
    r = run_cli("run", "--scenario", "benchmark")
    assert r.returncode == 2 and "--out" in r.stderr and "usage" in r.stderr


@pytest.mark.parametrize("content", ['{"t_max": 20, "bogus": 1}', "{not json", "[1, 2]"])
def test_cli_bad_config(tmp_path, capsys, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    assert cli.main(["run", "--scenario", "benchmark", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "tempo: error" in capsys.readouterr().err


def test_cli_unknown_scenario(tmp_path, capsys):
    assert cli.main(["run", "--scenario", "nope", "--out", str(tmp_path)]) == 1


def test_cli_unwritable_out(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", "--scenario", "benchmark", "--out", str(blocker / "sub")]) == 1


def test_cli_compare(tmp_path):
    a, b = tmp_path / "fast.json", tmp_path / "ring.json"
    a.write_text(json.dumps({"scenario": "benchmark", "t_max": 5}))
    b.write_text(json.dumps({"scenario": "distributed-regression", "num_samples": 10,
                             "topologies": [{"kind": "circulant", "degree": 1}]}))
    assert cli.main(["compare", "--configs", str(a), str(b), "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "compare.csv").read_text().splitlines()
    assert lines[0] == "config,variant,step,time,tracking_error,fixed_point_residual,regret"
    assert len(lines) == 1 + 2 * 50 + 10
    assert {l.split(",")[0] for l in lines[1:]} == {"fast", "ring"}
    b.write_text(json.dumps({"num_samples": 10}))
    assert cli.main(["compare", "--configs", str(b), "--out", str(tmp_path / "o")]) == 1


def test_cli_seed_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"num_samples": 10, "topologies": [{"kind": "random", "p": 0.5}], "seed": 3}))

    def run(out, *extra):
        assert cli.main(["run", "--scenario", "distributed-regression", "--config", str(cfg),
                         "--out", str(tmp_path / out), *extra]) == 0
        return (tmp_path / out / "distributed-regression_random.csv").read_bytes()

    from_config = run("c")
    monkeypatch.setenv("TEMPO_SEED", "3")
    assert run("e") == from_config
    monkeypatch.setenv("TEMPO_SEED", "4")
    from_env = run("e4")
    assert from_env != from_config
    assert run("f", "--seed", "3") == from_config
    monkeypatch.setenv("TEMPO_SEED", "x")
    assert cli.main(["run", "--scenario", "benchmark", "--out", str(tmp_path)]) == 1


def test_cli_csv_topology(tmp_path):
    g = networks.circulant_graph(25, 1)
    networks.save_adjacency_csv(tmp_path / "g.csv", g)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"num_samples": 10, "topologies": [{"kind": "csv", "path": str(tmp_path / "g.csv")},
                                                                 {"kind": "circulant", "degree": 1}]}))
    assert cli.main(["run", "--scenario", "distributed-regression", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 0
    a = (tmp_path / "o" / "distributed-regression_csv.csv").read_text().splitlines()
    b = (tmp_path / "o" / "distributed-regression_circulant1.csv").read_text().splitlines()
    assert a == b
    cfg.write_text(json.dumps({"topologies": [{"kind": "csv", "path": str(tmp_path / "missing.csv")}]}))
    assert cli.main(["run", "--scenario", "distributed-regression", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 1
