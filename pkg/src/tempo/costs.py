r"""
Static and dynamic costs.

A cost :math:`F(\pmb{x}; t)` is defined over the domain ``dom`` (a `Set`)
and, if dynamic, over the sampling times ``time`` (a `TimeGrid`). Costs
expose the oracles `function`, `gradient`, `hessian` and `proximal`; dynamic
costs add `time_derivative` (backward finite differences) and `sample`,
which freezes the cost at a sampling instant.

Costs support ``+``, ``-``, scaling by scalars, ``*`` between costs and
``**`` by exponents ``p >= 1``.
"""

import math
from numbers import Real

import numpy as np
from numpy import linalg as la
from scipy.special import expit

from tempo import sets
from tempo.errors import ConvergenceError, HistoryError, NotDifferentiableError, ShapeError


# inner proximal solvers
PROX_TOL = 1e-10
PROX_GRADIENT_ITER = 500
PROX_NEWTON_ITER = 20


def _as_domain(dom):

    if isinstance(dom, sets.Set):
        return dom
    if isinstance(dom, (tuple, list)):
        return sets.R(*dom)
    return sets.R(dom)


def backward_difference_weights(order):
    r"""
    Weights :math:`w_0, \ldots, w_p` of the backward difference formula of
    accuracy `order` for a first derivative:
    :math:`f'(t_k) \approx \sum_l w_l f(t_{k-l}) / T_s`.
    """

    if int(order) != order or order < 1:
        raise ValueError("the finite difference order must be a positive integer")
    p = int(order)

    w = [sum(1 / j for j in range(1, p + 1))]
    w += [(-1)**l * math.comb(p, l) / l for l in range(1, p + 1)]
    return np.array(w)


#%% COST TEMPLATE

class Cost:
    """
    Template for a (possibly dynamic) cost function.

    Subclasses override the oracles they support and set the flags
    `has_gradient`, `has_hessian` and `has_prox` (closed form proximal)
    accordingly. Static costs ignore the time argument of the oracles.
    """

    has_gradient = True
    has_hessian = False
    has_prox = False

    def __init__(self, dom, time=None):

        self.dom = _as_domain(dom)
        self.time = time

    @property
    def is_dynamic(self):
        return self.time is not None

    @property
    def shape(self):
        return self.dom.shape

    def _check_time(self, t):

        if self.is_dynamic and t is None:
            raise ValueError("a dynamic cost must be evaluated at a given time")
        return t

    # oracles

    def function(self, x, t=None):
        raise NotImplementedError

    def gradient(self, x, t=None):
        raise NotDifferentiableError(f"{type(self).__name__} does not implement a gradient")

    def hessian(self, x, t=None):
        raise NotDifferentiableError(f"{type(self).__name__} is not twice differentiable")

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        r"""
        Proximal operator
        :math:`\operatorname{prox}_{\rho F(\cdot; t)}(\pmb{x})` with
        :math:`\rho` = `penalty`.

        The template solves the (strongly convex) proximal problem
        numerically, with Newton's method if the Hessian is available and
        with a gradient method otherwise; costs with a closed form proximal
        override it.

        Parameters
        ----------
        x : array_like
            The point where the proximal is evaluated.
        t : float, optional
            The time, required by dynamic costs.
        penalty : float, optional
            The penalty :math:`\rho > 0`.
        method : str, optional
            Inner solver, ``"auto"``, ``"newton"`` or ``"gradient"``.

        Returns
        -------
        y : ndarray
            The proximal point.

        Raises
        ------
        ConvergenceError
            If the inner solver does not meet the tolerance in its budget.
        """

        check_penalty(penalty)
        x = self.dom.check_input(x)

        if method == "auto":
            method = "newton" if self.has_hessian else "gradient"
        if method == "newton":
            return _prox_newton(self, x, t, penalty)
        if method == "gradient":
            return _prox_gradient(self, x, t, penalty)
        raise ValueError(f"unknown inner proximal method {method!r}")

    def time_derivative(self, x, t, of="value", order=1):
        """
        Backward finite difference approximation of the time derivative of
        the cost (``of="value"``), its gradient or its Hessian at the
        sampling instant nearest to `t`, with accuracy `order`.
        """

        oracles = {"value": self.function, "gradient": self.gradient, "hessian": self.hessian}
        if of not in oracles:
            raise ValueError(f"cannot differentiate {of!r}, use 'value', 'gradient' or 'hessian'")

        w = backward_difference_weights(order)
        if not self.is_dynamic:
            return 0 * oracles[of](x)

        k = self.time.nearest(t)
        if k < order:
            raise HistoryError(
                f"a backward difference of order {order} needs {order + 1} samples, "
                f"only {k + 1} available at t = {t}")

        d = sum(w[l] * oracles[of](x, self.time.time(k - l)) for l in range(len(w)))
        return d / self.time.ts

    def sample(self, t):
        """Static cost equal to the cost frozen at the sampling time nearest `t`."""

        if not self.is_dynamic:
            return self
        return SampledCost(self, self.time.time(self.time.nearest(t)))

    # operations

    def __add__(self, other):

        if isinstance(other, Real):
            return self if other == 0 else SumCost(self, Constant(self.dom, other))
        if isinstance(other, Cost):
            return SumCost(self, other)
        return NotImplemented

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return -1 * self

    def __sub__(self, other):
        return self + (-1) * other

    def __rsub__(self, other):
        return (-1) * self + other

    def __mul__(self, other):

        if isinstance(other, Real):
            return ScaledCost(other, self)
        if isinstance(other, Cost):
            return ProductCost(self, other)
        return NotImplemented

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):

        if isinstance(other, Real):
            return (1 / other) * self
        return NotImplemented

    def __pow__(self, p):
        return PowerCost(self, p)


def check_penalty(penalty):

    if not penalty > 0:
        raise ValueError("the proximal penalty must be positive")
    return float(penalty)


def newton(grad, hess, y, tol=PROX_TOL, max_iter=PROX_NEWTON_ITER, gtol=0.0):
    """
    Newton's method on a smooth strongly convex function, damped by halving
    the step until the gradient norm decreases; stops when the Newton step
    is shorter than `tol` (or the gradient shorter than `gtol`).
    """

    y = np.array(y, dtype=float)
    g = grad(y)

    for _ in range(max_iter):

        n0 = la.norm(g)
        if n0 <= gtol:
            return y
        try:
            d = la.solve(np.atleast_2d(hess(y)), g.ravel()).reshape(y.shape)
        except la.LinAlgError as e:
            raise ConvergenceError("singular Hessian in Newton's method") from e

        s = 1.0
        while True:
            y_new = y - s * d
            g_new = grad(y_new)
            if la.norm(g_new) <= (1 - 1e-4 * s) * n0:
                break
            if s < 1e-8:
                # rounding floor: no decrease is measurable, take the full step
                y_new = y - d
                g_new = grad(y_new)
                break
            s /= 2
        y, g = y_new, g_new

        if la.norm(d) < tol:
            return y

    raise ConvergenceError(f"Newton's method did not converge in {max_iter} iterations")


def _prox_newton(f, x, t, penalty):

    eye = np.eye(x.size) / penalty
    try:
        return newton(lambda y: f.gradient(y, t) + (y - x) / penalty, lambda y: f.hessian(y, t) + eye, x)
    except ConvergenceError as e:
        raise ConvergenceError(f"Newton proximal solve failed: {e}") from e


def descent(grad, y, step=None, s_max=1.0, tol=PROX_TOL, max_iter=PROX_GRADIENT_ITER):
    """
    Gradient descent on a smooth strongly convex function, with a fixed
    `step` or, if not given, backtracking from `s_max` on the local
    Lipschitz estimate ``||grad(y+) - grad(y)|| / ||y+ - y||``. Stops when
    the step norm drops below `tol`.
    """

    g, s = grad(y), s_max
    for _ in range(max_iter):

        if step is None:
            s = min(s_max, 2 * s)
            while True:
                y_new = y - s * g
                g_new = grad(y_new)
                if la.norm(g_new - g) <= la.norm(g) or s < 1e-20:
                    break
                s *= 0.5
        else:
            y_new = y - step * g
            g_new = grad(y_new)

        d = y_new - y
        y, g = y_new, g_new

        if la.norm(d) < tol:
            return y

    raise ConvergenceError(f"gradient descent did not converge in {max_iter} iterations")


def _prox_gradient(f, x, t, penalty):

    if f.has_hessian:
        # power iteration for the Lipschitz constant of the gradient
        h, v = f.hessian(x, t), np.ones(x.size)
        for _ in range(10):
            v = h @ v
            v = v / max(la.norm(v), 1e-300)
        step = 1 / (abs(v @ h @ v) + 1 / penalty)
    else:
        step = None

    def grad(z):
        return f.gradient(z, t) + (z - x) / penalty

    return descent(grad, np.array(x), step, s_max=penalty)


def evaluate(cost, x, t=None, what="value"):
    """Evaluate the ``value``, ``gradient`` or ``hessian`` oracle of `cost`."""

    oracles = {"value": cost.function, "gradient": cost.gradient, "hessian": cost.hessian}
    if what not in oracles:
        raise ValueError(f"unknown oracle {what!r}")
    return oracles[what](x, t)


def compose(kind, *operands):
    """
    Combine costs: ``compose("sum", f, g, ...)``, ``compose("scale", a, f)``,
    ``compose("power", p, f)`` or ``compose("product", f, g)``.
    """

    if kind == "sum":
        return SumCost(*operands)
    if kind == "scale":
        a, f = operands
        return a * f
    if kind == "power":
        p, f = operands
        return PowerCost(f, p)
    if kind == "product":
        return ProductCost(*operands)
    raise ValueError(f"unknown composition {kind!r}")


#%% STATIC BUILT-INS

class Quadratic(Cost):
    r"""
    Quadratic cost
    :math:`f(\pmb{x}) = \frac{1}{2} \pmb{x}^\top Q \pmb{x} + \langle \pmb{b}, \pmb{x} \rangle + c`.

    Arrays are flattened (row-major) before applying `Q`. Sums and scalings
    of quadratics are again quadratics.
    """

    has_hessian = True
    has_prox = True

    def __init__(self, Q, b=None, c=0.0):

        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        n = Q.shape[0]

        if Q.shape != (n, n):
            raise ShapeError(f"the quadratic term must be square, got {Q.shape}")
        if n > 1 and np.max(np.abs(Q - Q.T)) > 1e-12 * (1 + np.max(np.abs(Q))):
            raise ValueError("the quadratic term must be symmetric")

        b = np.zeros(n) if b is None else np.atleast_1d(np.asarray(b, dtype=float))
        if b.size != n:
            raise ShapeError(f"linear term of size {b.size} does not match a {n}x{n} quadratic term")

        super().__init__(b.shape)
        self.Q, self.b, self.c = Q, b, float(c)
        self._b = b.ravel()

    def function(self, x, t=None):

        x = self.dom.check_input(x).ravel()
        return float(0.5 * x @ self.Q @ x + self._b @ x + self.c)

    def gradient(self, x, t=None):

        x = self.dom.check_input(x)
        return (self.Q @ x.ravel() + self._b).reshape(self.shape)

    def hessian(self, x=None, t=None):
        return np.array(self.Q)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        check_penalty(penalty)
        x = self.dom.check_input(x).ravel()
        y = la.solve(penalty * self.Q + np.eye(x.size), x - penalty * self._b)
        return y.reshape(self.shape)

    def __add__(self, other):

        if isinstance(other, Quadratic) and other.shape == self.shape:
            return Quadratic(self.Q + other.Q, self.b + other.b, self.c + other.c)
        if isinstance(other, Real):
            return Quadratic(self.Q, self.b, self.c + other)
        return super().__add__(other)

    def __mul__(self, other):

        if isinstance(other, Real):
            return Quadratic(other * self.Q, other * self.b, other * self.c)
        return super().__mul__(other)


class Linear(Quadratic):
    """Affine cost ``<b, x> + c``."""

    def __init__(self, b, c=0.0):

        b = np.atleast_1d(np.asarray(b, dtype=float))
        super().__init__(np.zeros((b.size, b.size)), b, c)


class Constant(Quadratic):
    """Constant cost over `dom`."""

    def __init__(self, dom, c):

        dom = _as_domain(dom)
        super().__init__(np.zeros((dom.size, dom.size)), np.zeros(dom.shape), c)


class Norm1(Cost):
    r"""Weighted :math:`\ell_1` norm :math:`w \|\pmb{x}\|_1`."""

    has_prox = True

    def __init__(self, dom=1, weight=1.0):

        super().__init__(dom)
        if weight < 0:
            raise ValueError("the weight of a norm must be non-negative")
        self.weight = float(weight)

    def function(self, x, t=None):
        return self.weight * float(np.sum(np.abs(self.dom.check_input(x))))

    def gradient(self, x, t=None):
        return self.weight * np.sign(self.dom.check_input(x))

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        check_penalty(penalty)
        x = self.dom.check_input(x)
        return soft_threshold(x, penalty * self.weight)


class NormInf(Cost):
    r"""Weighted :math:`\ell_\infty` norm :math:`w \|\pmb{x}\|_\infty`."""

    has_prox = True

    def __init__(self, dom=1, weight=1.0):

        super().__init__(dom)
        if weight < 0:
            raise ValueError("the weight of a norm must be non-negative")
        self.weight = float(weight)

    def function(self, x, t=None):
        return self.weight * float(np.max(np.abs(self.dom.check_input(x))))

    def gradient(self, x, t=None):

        x = self.dom.check_input(x)
        g = np.zeros(x.shape)
        i = np.unravel_index(np.argmax(np.abs(x)), x.shape)
        g[i] = np.sign(x[i])
        return self.weight * g

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        check_penalty(penalty)
        # Moreau decomposition, the conjugate is the indicator of an l1 ball
        x = self.dom.check_input(x)
        level = penalty * self.weight
        if level == 0:
            return np.array(x)
        return x - level * project_l1_ball(x / level)


class Huber(Cost):
    r"""
    Huber loss :math:`\sum_i h_\delta(x_i)` with :math:`h_\delta(s) = s^2/2`
    for :math:`|s| \leq \delta` and :math:`\delta(|s| - \delta/2)` otherwise.
    """

    has_prox = True

    def __init__(self, dom=1, threshold=1.0):

        super().__init__(dom)
        if not threshold > 0:
            raise ValueError("the Huber threshold must be positive")
        self.threshold = float(threshold)

    def function(self, x, t=None):

        x, d = np.abs(self.dom.check_input(x)), self.threshold
        return float(np.sum(np.where(x <= d, 0.5 * x**2, d * (x - 0.5 * d))))

    def gradient(self, x, t=None):
        return np.clip(self.dom.check_input(x), -self.threshold, self.threshold)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        check_penalty(penalty)
        x, d = self.dom.check_input(x), self.threshold
        return np.where(np.abs(x) <= d * (1 + penalty), x / (1 + penalty), x - penalty * d * np.sign(x))


class Indicator(Cost):
    """
    Indicator function of a set: 0 inside, +inf outside. Its proximal is
    the projection onto the set.
    """

    has_gradient = False
    has_prox = True

    def __init__(self, s):

        super().__init__(s)
        self.set = s

    def function(self, x, t=None):
        return 0.0 if self.set.contains(x) else math.inf

    def gradient(self, x, t=None):
        raise NotDifferentiableError("the indicator function has no gradient, use its proximal")

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        check_penalty(penalty)
        return self.set.projection(x)


def soft_threshold(x, level):
    """Soft-thresholding ``sign(x) * max(|x| - level, 0)``."""

    return np.sign(x) * np.maximum(np.abs(x) - level, 0)


def project_l1_ball(x, radius=1.0):
    """Euclidean projection onto the l1 ball, by sorting."""

    x = np.asarray(x, dtype=float)
    a = np.abs(x).ravel()

    if a.sum() <= radius:
        return np.array(x)

    u = np.sort(a)[::-1]
    cs = np.cumsum(u)
    j = np.arange(1, a.size + 1)
    rho = np.nonzero(u * j > cs - radius)[0][-1]
    theta = (cs[rho] - radius) / (rho + 1)

    return np.sign(x) * np.maximum(np.abs(x) - theta, 0)


#%% DYNAMIC BUILT-INS

class SampledCost(Cost):
    """A dynamic cost frozen at time `t_k`."""

    def __init__(self, cost, t_k):

        super().__init__(cost.dom)
        self.cost, self.t_k = cost, t_k
        self.has_gradient, self.has_hessian = cost.has_gradient, cost.has_hessian

    def function(self, x, t=None):
        return self.cost.function(x, self.t_k)

    def gradient(self, x, t=None):
        return self.cost.gradient(x, self.t_k)

    def hessian(self, x, t=None):
        return self.cost.hessian(x, self.t_k)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        return self.cost.proximal(x, self.t_k, penalty=penalty, method=method)


class ParametricCost(Cost):
    """
    Dynamic cost defined by a family of static costs: ``factory(t)`` returns
    the static cost at time `t`. Sampling returns ``factory(t_k)`` directly.
    """

    def __init__(self, factory, time, dom=None):

        probe = factory(time.t0)
        super().__init__(probe.dom if dom is None else dom, time)
        self.factory = factory
        self.has_gradient, self.has_hessian = probe.has_gradient, probe.has_hessian
        self.has_prox = probe.has_prox

    def function(self, x, t=None):
        return self.factory(self._check_time(t)).function(x)

    def gradient(self, x, t=None):
        return self.factory(self._check_time(t)).gradient(x)

    def hessian(self, x, t=None):
        return self.factory(self._check_time(t)).hessian(x)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        return self.factory(self._check_time(t)).proximal(x, penalty=penalty, method=method)

    def sample(self, t):
        return self.factory(self.time.time(self.time.nearest(t)))


class DiscreteDynamicCost(Cost):
    """
    Dynamic cost defined by a sequence of static costs, one per sampling
    time. Off-grid times resolve to the nearest sample.
    """

    def __init__(self, samples, ts=1.0, t0=0.0):

        samples = list(samples)
        if not samples:
            raise ValueError("at least one sample is required")
        if len({s.shape for s in samples}) != 1:
            raise ShapeError("all the samples must share one domain shape")

        super().__init__(samples[0].dom, sets.TimeGrid(ts, len(samples), t0))
        self.samples = samples
        self.has_gradient = all(s.has_gradient for s in samples)
        self.has_hessian = all(s.has_hessian for s in samples)
        self.has_prox = all(s.has_prox for s in samples)

    def _at(self, t):
        return self.samples[self.time.nearest(self._check_time(t))]

    def function(self, x, t=None):
        return self._at(t).function(x)

    def gradient(self, x, t=None):
        return self._at(t).gradient(x)

    def hessian(self, x, t=None):
        return self._at(t).hessian(x)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        return self._at(t).proximal(x, penalty=penalty, method=method)

    def sample(self, t):
        return self._at(t)


class BenchmarkCost1D(Cost):
    r"""
    Scalar benchmark cost

    .. math:: F(x; t) = (x - \cos(\omega t))^2 / 2 + \epsilon \log(1 + e^{\varphi x})

    sampled with period `ts` over ``[0, t_max)``.
    """

    has_hessian = True

    def __init__(self, ts=0.1, t_max=1e4, omega=0.02 * math.pi, eps=7.5, phi=1.75, t0=0.0):

        super().__init__(1, sets.TimeGrid.from_horizon(ts, t_max, t0))
        self.omega, self.eps, self.phi = float(omega), float(eps), float(phi)

    @property
    def grid(self):
        return self.time

    def function(self, x, t=None):

        x = self.dom.check_input(x)
        r = x[0] - math.cos(self.omega * self._check_time(t))
        return 0.5 * r**2 + self.eps * float(np.logaddexp(0.0, self.phi * x[0]))

    def gradient(self, x, t=None):

        x = self.dom.check_input(x)
        return x - math.cos(self.omega * self._check_time(t)) + self.eps * self.phi * expit(self.phi * x)

    def hessian(self, x, t=None):

        s = expit(self.phi * self.dom.check_input(x)[0])
        return np.array([[1 + self.eps * self.phi**2 * s * (1 - s)]])


#%% OPERATIONS

def _common_time(costs):

    times = [c.time for c in costs if c.time is not None]
    return times[0] if times else None


class SumCost(Cost):
    """Sum of costs over a common domain."""

    def __init__(self, *costs):

        terms = []
        for c in costs:
            terms.extend(c.costs if isinstance(c, SumCost) else [c])
        if len({c.shape for c in terms}) != 1:
            raise ShapeError("cannot sum costs defined over different shapes")

        super().__init__(terms[0].dom, _common_time(terms))
        self.costs = terms

        self.has_gradient = all(c.has_gradient for c in terms)
        self.has_hessian = all(c.has_hessian for c in terms)
        self._prox_split = None if self.is_dynamic else _sum_prox_split(terms)
        self.has_prox = self._prox_split is not None

    def function(self, x, t=None):
        return sum(c.function(x, t) for c in self.costs)

    def gradient(self, x, t=None):
        return sum(c.gradient(x, t) for c in self.costs)

    def hessian(self, x, t=None):
        return sum(c.hessian(x, t) for c in self.costs)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        if self._prox_split is None:
            return super().proximal(x, t, penalty, method)

        check_penalty(penalty)
        # g + (mu/2)||x||^2 + <b, x> + c
        g, mu, b = self._prox_split
        x = self.dom.check_input(x)
        scale = 1 + penalty * mu
        v = (x - penalty * b) / scale
        return v if g is None else g.proximal(v, penalty=penalty / scale)

    def sample(self, t):

        if not self.is_dynamic:
            return self
        return sum(c.sample(t) for c in self.costs)


def _sum_prox_split(terms):
    # closed form proximal for (closed form prox cost) + isotropic quadratic

    quad = [c for c in terms if isinstance(c, Quadratic)]
    other = [c for c in terms if not isinstance(c, Quadratic)]
    if len(other) > 1 or (other and not other[0].has_prox):
        return None

    Q = sum(q.Q for q in quad)
    mu = Q[0, 0]
    if not np.array_equal(Q, mu * np.eye(Q.shape[0])):
        return None

    return (other[0] if other else None), mu, sum(q.b for q in quad).reshape(terms[0].shape)


class ScaledCost(Cost):
    """The cost ``a * f`` for a real scalar ``a``."""

    def __init__(self, a, cost):

        if isinstance(cost, ScaledCost):
            a, cost = a * cost.a, cost.cost

        super().__init__(cost.dom, cost.time)
        self.a, self.cost = float(a), cost
        self.has_gradient, self.has_hessian = cost.has_gradient, cost.has_hessian
        self.has_prox = cost.has_prox and self.a >= 0

    def function(self, x, t=None):

        if self.a == 0:
            return 0.0
        return self.a * self.cost.function(x, t)

    def gradient(self, x, t=None):
        return self.a * self.cost.gradient(x, t)

    def hessian(self, x, t=None):
        return self.a * self.cost.hessian(x, t)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):

        if self.a == 0:
            return np.array(self.dom.check_input(x))
        if self.a > 0 and self.cost.has_prox:
            return self.cost.proximal(x, t, penalty=self.a * penalty, method=method)
        return super().proximal(x, t, penalty, method)

    def sample(self, t):
        return self if not self.is_dynamic else self.a * self.cost.sample(t)


class PowerCost(Cost):
    """The cost ``f ** p`` for ``p >= 1``."""

    def __init__(self, cost, p):

        if not p >= 1:
            raise ValueError("costs can only be raised to powers p >= 1")

        super().__init__(cost.dom, cost.time)
        self.cost, self.p = cost, float(p)
        self.has_gradient, self.has_hessian = cost.has_gradient, cost.has_hessian

    def function(self, x, t=None):
        return self.cost.function(x, t)**self.p

    def gradient(self, x, t=None):

        if self.p == 1:
            return self.cost.gradient(x, t)
        return self.p * self.cost.function(x, t)**(self.p - 1) * self.cost.gradient(x, t)

    def hessian(self, x, t=None):

        if self.p == 1:
            return self.cost.hessian(x, t)

        f, p = self.cost.function(x, t), self.p
        g = self.cost.gradient(x, t).ravel()
        return p * (p - 1) * f**(p - 2) * np.outer(g, g) + p * f**(p - 1) * self.cost.hessian(x, t)

    def sample(self, t):
        return self if not self.is_dynamic else PowerCost(self.cost.sample(t), self.p)


class ProductCost(Cost):
    """The product ``f * g`` of two costs."""

    def __init__(self, f, g):

        if f.shape != g.shape:
            raise ShapeError("cannot multiply costs defined over different shapes")

        super().__init__(f.dom, _common_time([f, g]))
        self.f, self.g = f, g
        self.has_gradient = f.has_gradient and g.has_gradient
        self.has_hessian = f.has_hessian and g.has_hessian

    def function(self, x, t=None):
        return self.f.function(x, t) * self.g.function(x, t)

    def gradient(self, x, t=None):

        f, g = self.f, self.g
        return f.function(x, t) * g.gradient(x, t) + g.function(x, t) * f.gradient(x, t)

    def hessian(self, x, t=None):

        if not self.has_hessian:
            return super().hessian(x, t)

        f, g = self.f, self.g
        df, dg = f.gradient(x, t).ravel(), g.gradient(x, t).ravel()
        return f.function(x, t) * g.hessian(x, t) + g.function(x, t) * f.hessian(x, t) \
            + np.outer(df, dg) + np.outer(dg, df)

    def sample(self, t):
        return self if not self.is_dynamic else ProductCost(self.f.sample(t), self.g.sample(t))
