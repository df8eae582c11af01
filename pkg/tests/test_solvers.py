import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize

from tempo import costs, sets, solvers
from tempo.errors import DivergenceError

from oracles import random_spd


def quad(center, curvature=1.0):
    # curvature/2 (x - center)^2 as a Quadratic
    c = np.atleast_1d(np.asarray(center, dtype=float))
    n = c.size
    return costs.Quadratic(curvature * np.eye(n), -curvature * c, 0.5 * curvature * c @ c)


#%% primal methods

def test_gradient_one_step():
    assert solvers.gradient({"f": quad(3)}, 1, x_0=0, num_iter=1).item() == pytest.approx(3)


def test_gradient_contraction_example():
    assert solvers.gradient({"f": quad(0)}, 0.5, x_0=1, num_iter=2).item() == 0.25


@pytest.mark.parametrize("solver, param", [
    (solvers.gradient, 0.1), (solvers.proximal_point, 1.0)])
def test_zero_budget(solver, param):
    x0 = np.array([1.5, -2.0])
    assert np.array_equal(solver({"f": quad([0, 0])}, param, x_0=x0, num_iter=0), x0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gradient_linear_rate(seed):
    rng = np.random.default_rng(seed)
    Q = random_spd(rng, 4, mu=0.5, L=3.0)
    b = rng.normal(size=4)
    f = costs.Quadratic(Q, b)
    x_star = np.linalg.solve(Q, -b)
    ev = np.linalg.eigvalsh(Q)
    alpha = 0.5
    q = max(abs(1 - alpha * ev[0]), abs(1 - alpha * ev[-1])) + 1e-12
    x0 = rng.normal(size=4)
    x = x0
    for k in range(1, 30):
        x = solvers.gradient({"f": f}, alpha, x_0=x, num_iter=1)
        assert np.linalg.norm(x - x_star) <= q**k * np.linalg.norm(x0 - x_star) + 1e-13


def test_divergence_guard():
    with pytest.raises(DivergenceError):
        solvers.gradient({"f": quad(0)}, 3.0, x_0=1, num_iter=500)


def test_proximal_point_examples():
    assert solvers.proximal_point({"f": quad(0)}, 1, x_0=4, num_iter=1).item() == pytest.approx(2)
    box = costs.Indicator(sets.Box(0, 1))
    assert solvers.proximal_point({"f": box}, 1, x_0=3, num_iter=1).item() == 1


def test_forward_backward_examples():
    x = solvers.forward_backward({"f": quad(2), "g": costs.Norm1()}, 1, x_0=0, num_iter=1)
    assert x.item() == pytest.approx(1)
    box = costs.Indicator(sets.Box(0, 1))
    assert solvers.forward_backward({"f": quad(3), "g": box}, 1, x_0=0, num_iter=1).item() == 1


def test_forward_backward_requires_g():
    with pytest.raises(KeyError):
        solvers.forward_backward({"f": quad(2)}, 1, num_iter=1)


@given(st.floats(-10, 10), st.floats(0.05, 1.9), st.integers(0, 20))
def test_forward_backward_zero_weight_is_gradient(x0, step, n):
    f = quad(1.5)
    a = solvers.forward_backward({"f": f, "g": costs.Norm1(1, 0.0)}, step, x_0=x0, num_iter=n)
    b = solvers.gradient({"f": f}, step, x_0=x0, num_iter=n)
    assert np.array_equal(a, b)


def test_forward_backward_fixed_point():
    rng = np.random.default_rng(4)
    Q = random_spd(rng, 5)
    f, g = costs.Quadratic(Q, rng.normal(size=5)), costs.Norm1(5, 0.3)
    alpha = 0.2
    x = solvers.forward_backward({"f": f, "g": g}, alpha, num_iter=2000)
    assert np.linalg.norm(x - g.proximal(x - alpha * f.gradient(x), penalty=alpha)) < 1e-8


#%% splitting methods

def test_peaceman_rachford_contraction():
    p = {"f": quad(0), "g": quad(0)}
    z = np.array([3.0])
    xs = []
    for _ in range(10):
        x, z = solvers.peaceman_rachford(p, 1, x_0=z, num_iter=1, full_state=True)
        xs.append(abs(x.item()))
    # prox_f(z) = z / 2, the reflection of 0 is 0: the first step lands on the solution
    assert xs[0] == 0 and all(v == 0 for v in xs)
    # Douglas-Rachford halves the auxiliary variable at every step
    z = np.array([3.0])
    for k in range(10):
        x, z_new = solvers.douglas_rachford(p, 1, x_0=z, num_iter=1, full_state=True)
        assert z_new.item() == pytest.approx(0.5 * z.item())
        assert abs(x.item()) <= (1 - 0.9) * abs(z.item()) or abs(x.item()) == pytest.approx(0.25 * z.item())
        z = z_new


def test_peaceman_rachford_zero_budget():
    p = {"f": quad(1), "g": quad(-1)}
    assert solvers.peaceman_rachford(p, 1, x_0=5, num_iter=0).item() == pytest.approx(3)


@pytest.mark.parametrize("relaxation", [1.0, 0.5, 0.8])
def test_splitting_fixed_point(relaxation):
    p = {"f": quad(1), "g": quad(-1)}
    x = solvers.peaceman_rachford(p, 0.7, x_0=4, num_iter=200, relaxation=relaxation)
    assert x.item() == pytest.approx(0, abs=1e-10)
    assert (quad(1) + quad(-1)).gradient(0.0).item() == 0


def test_splitting_invalid():
    with pytest.raises(ValueError):
        solvers.peaceman_rachford({"f": quad(1), "g": quad(-1)}, 1, relaxation=1.5)
    with pytest.raises(KeyError):
        solvers.douglas_rachford({"f": quad(1)}, 1)


def test_douglas_rachford_composite():
    # lasso-type problem, compare against forward-backward
    rng = np.random.default_rng(6)
    Q = random_spd(rng, 4)
    f, g = costs.Quadratic(Q, rng.normal(size=4)), costs.Norm1(4, 0.5)
    a = solvers.douglas_rachford({"f": f, "g": g}, 0.5, num_iter=3000)
    b = solvers.forward_backward({"f": f, "g": g}, 0.2, num_iter=3000)
    assert np.allclose(a, b, atol=1e-8)


#%% budget semantics

@given(st.integers(0, 15), st.integers(0, 15))
@settings(max_examples=30)
def test_budget_composition(a, b):
    f, g = quad([1.0, -2.0], 2.0), costs.Norm1(2, 0.4)
    x0 = np.array([3.0, 3.0])

    for solver, prm in [(solvers.gradient, 0.3), (solvers.proximal_point, 0.5)]:
        one = solver({"f": f}, prm, x_0=x0, num_iter=a + b)
        two = solver({"f": f}, prm, x_0=solver({"f": f}, prm, x_0=x0, num_iter=a), num_iter=b)
        assert np.array_equal(one, two)

    one = solvers.forward_backward({"f": f, "g": g}, 0.3, x_0=x0, num_iter=a + b)
    two = solvers.forward_backward({"f": f, "g": g}, 0.3,
                                   x_0=solvers.forward_backward({"f": f, "g": g}, 0.3, x_0=x0, num_iter=a),
                                   num_iter=b)
    assert np.array_equal(one, two)

    _, z = solvers.peaceman_rachford({"f": f, "g": g}, 0.5, x_0=x0, num_iter=a, full_state=True)
    x1, z1 = solvers.peaceman_rachford({"f": f, "g": g}, 0.5, x_0=z, num_iter=b, full_state=True)
    x2, z2 = solvers.peaceman_rachford({"f": f, "g": g}, 0.5, x_0=x0, num_iter=a + b, full_state=True)
    assert np.array_equal(z1, z2) and np.array_equal(x1, x2)

    p = {"f": quad(1), "g": quad(3), "constraints": (1, -1, 0)}
    for m in solvers.DUAL_METHODS:
        x, y, lam = solvers.dual_solve(m, p, 0.5, num_iter=a)
        one = solvers.dual_solve(m, p, 0.5, x_0=x, y_0=y, dual_0=lam, num_iter=b)
        two = solvers.dual_solve(m, p, 0.5, num_iter=a + b)
        assert all(np.array_equal(u, v) for u, v in zip(one, two))


#%% dual methods

def kkt(Qf, bf, Qg, bg, A, B, c):
    # dense KKT system of min f(x) + g(y) s.t. Ax + By = c
    Qf, bf, Qg, bg, A, B, c = map(np.atleast_1d, map(np.asarray, (Qf, bf, Qg, bg, A, B, c)))
    n, m, p = Qf.shape[0], Qg.shape[0], A.shape[0]
    K = np.zeros((n + m + p, n + m + p))
    K[:n, :n], K[n:n + m, n:n + m] = Qf, Qg
    K[:n, n + m:], K[n:n + m, n + m:] = A.T, B.T
    K[n + m:, :n], K[n + m:, n:n + m] = A, B
    sol = np.linalg.solve(K, np.concatenate([-bf, -bg, c]))
    return sol[:n], sol[n:n + m], sol[n + m:]


STEPS = {"dual_ascent": 0.5, "multipliers": 1.0, "admm": 1.0, "dual_fb": 0.5}


@pytest.mark.parametrize("method", list(solvers.DUAL_METHODS))
def test_dual_methods_consensus(method):
    p = {"f": quad(1), "g": quad(3), "constraints": solvers.LinearConstraint(1, -1, 0)}
    x, y, lam = solvers.dual_solve(method, p, STEPS[method], num_iter=500)
    xs, ys, ls = kkt(np.eye(1), [-1.0], np.eye(1), [-3.0], np.eye(1), -np.eye(1), [0.0])
    assert np.allclose(np.ravel([xs, ys, ls]), [2, 2, -1])
    assert abs(x.item() - 2) < 1e-6 and abs(y.item() - 2) < 1e-6
    assert abs(lam.item() + 1) < 1e-6


@pytest.mark.parametrize("method", list(solvers.DUAL_METHODS))
def test_dual_methods_shifted(method):
    p = {"f": quad(1), "g": quad(3), "constraints": (1, -1, 2)}
    x, y, lam = solvers.dual_solve(method, p, STEPS[method], num_iter=500)
    assert np.allclose([x.item(), y.item(), lam.item()], [3, 1, -2], atol=1e-6)


@pytest.mark.parametrize("method", list(solvers.DUAL_METHODS))
def test_dual_methods_zero_budget(method):
    p = {"f": quad(1), "g": quad(3), "constraints": (1, -1, 0)}
    x, y, lam = solvers.dual_solve(method, p, 1.0, x_0=0.3, y_0=-0.2, dual_0=0.7, num_iter=0)
    assert (x.item(), y.item(), lam.item()) == (0.3, -0.2, 0.7)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("method", list(solvers.DUAL_METHODS))
def test_dual_methods_random_kkt(method, seed):
    rng = np.random.default_rng(seed)
    n, m, p = 3, 2, 2
    Qf, Qg = random_spd(rng, n, 1, 2), random_spd(rng, m, 1, 2)
    bf, bg = rng.normal(size=n), rng.normal(size=m)
    A, B, c = rng.normal(size=(p, n)), rng.normal(size=(p, m)), rng.normal(size=p)
    prob = {"f": costs.Quadratic(Qf, bf), "g": costs.Quadratic(Qg, bg), "constraints": (A, B, c)}
    xs, ys, ls = kkt(Qf, bf, Qg, bg, A, B, c)
    # dual ascent step below 2 / ||[A B]||^2 scaled by the curvature
    L = np.linalg.norm(np.hstack([A, B]), 2)**2
    step = {"dual_ascent": 1 / L, "dual_fb": 1 / L}.get(method, 1.0)
    x, y, lam = solvers.dual_solve(method, prob, step, num_iter=5000)
    assert np.allclose(x, xs, atol=1e-6) and np.allclose(y, ys, atol=1e-6) and np.allclose(lam, ls, atol=1e-6)


def test_admm_residual_decreases():
    p = {"f": quad(1), "g": quad(3), "constraints": (1, -1, 0)}
    state = (0, 0, 0)
    for k in range(500):
        state = solvers.admm(p, 1.0, *state, num_iter=1)
        if np.linalg.norm(solvers.LinearConstraint(1, -1, 0).residual(*state[:2])) < 1e-6:
            break
    assert k < 499


@pytest.mark.parametrize("method", list(solvers.DUAL_METHODS))
def test_dual_methods_numeric_inner_solves(method):
    # f has no closed form argmin: benchmark sample plus quadratic regularization
    f = costs.BenchmarkCost1D().sample(3.0)
    g = quad(-1.0)
    p = {"f": f, "g": g, "constraints": (1, -1, 0)}
    ref = minimize(lambda z: f.function(z) + g.function(z), [0.0], tol=1e-14).x
    x, y, _ = solvers.dual_solve(method, p, 0.5, num_iter=300)
    assert abs(x.item() - ref.item()) < 1e-6 and abs(y.item() - ref.item()) < 1e-6


def test_dual_solve_unknown():
    with pytest.raises(ValueError):
        solvers.dual_solve("primal_dual", {}, 1.0)


def test_argmin_regularized_gradient_fallback():
    # Huber has neither Hessian nor isotropic shortcut with a nondiagonal M
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    q = np.array([1.0, -3.0])
    f = costs.Huber(2, 0.5)
    x = solvers.argmin_regularized(f, q, M, num_iter=2000)
    assert np.linalg.norm(f.gradient(x) + M @ x + q) < 1e-8


#%% oracle independence

class FDBenchmark(costs.Cost):
    """Benchmark sample whose gradient is a central finite difference."""

    def __init__(self, f, h):
        super().__init__(1)
        self.f, self.h = f, h

    def function(self, x, t=None):
        return self.f.function(x)

    def gradient(self, x, t=None):
        x = self.dom.check_input(x)
        return (self.f.function(x + self.h) - self.f.function(x - self.h)) / (2 * self.h) * np.ones(1)


@pytest.mark.parametrize("h", [1e-3, 1e-4])
def test_solver_oracle_independence(h):
    f = costs.BenchmarkCost1D().sample(7.0)
    a = solvers.gradient({"f": f}, 0.05, x_0=1.0, num_iter=50)
    b = solvers.gradient({"f": FDBenchmark(f, h)}, 0.05, x_0=1.0, num_iter=50)
    assert abs(a.item() - b.item()) < 50 * h**2
