r"""
Solvers for static problems.

Solvers are functions that take a problem dictionary (``"f"``, optionally
``"g"`` and ``"constraints"``), an initial condition, the parameters (e.g.
the step-size) and a number of iterations, and return the approximate
solution. They only access the costs through their oracles.

The dual solvers address problems of the form

.. math:: \min_{\pmb{x}, \pmb{y}} f(\pmb{x}) + g(\pmb{y}) \quad
          \text{s.t.} \ A \pmb{x} + B \pmb{y} = \pmb{c}
"""

import numpy as np
from numpy import linalg as la

from tempo import costs
from tempo.errors import ConvergenceError, DivergenceError, ShapeError


DIVERGENCE_BOUND = 1e12
INNER_ITER = 50
INNER_TOL = 1e-10


def initial_condition(dom, x_0):
    """
    Array of shape ``dom.shape`` from `x_0`: either an array with the same
    number of elements, or a value broadcast to the shape.
    """

    x_0 = np.asarray(x_0, dtype=float)
    if x_0.size == dom.size:
        return np.array(dom.check_input(x_0))
    return np.array(np.broadcast_to(x_0, dom.shape))


def check_divergence(*arrays):

    for a in arrays:
        n = np.max(np.abs(a), initial=0.0)
        if not n <= DIVERGENCE_BOUND:
            n = la.norm(np.ravel(a))
            raise DivergenceError(f"iterates norm {n:g} exceeds {DIVERGENCE_BOUND:g}; check the step-size")


#%% PRIMAL METHODS

def gradient(problem, step, x_0=0, num_iter=100):
    r"""
    Gradient method
    :math:`\pmb{x}^{\ell+1} = \pmb{x}^\ell - \alpha \nabla f(\pmb{x}^\ell)`.

    Parameters
    ----------
    problem : dict
        Problem dictionary defining the smooth cost :math:`f`.
    step : float
        The step-size :math:`\alpha`.
    x_0 : array_like, optional
        The initial condition, an array of suitable size or a scalar.
    num_iter : int, optional
        The number of iterations to be performed.

    Returns
    -------
    x : ndarray
        The approximate solution after `num_iter` iterations.
    """

    f = problem["f"]
    x = initial_condition(f.dom, x_0)

    for _ in range(num_iter):
        x = x - step * f.gradient(x)
        check_divergence(x)

    return x


def proximal_point(problem, penalty, x_0=0, num_iter=100):
    r"""
    Proximal point algorithm
    :math:`\pmb{x}^{\ell+1} = \operatorname{prox}_{\rho f}(\pmb{x}^\ell)`.
    """

    f = problem["f"]
    x = initial_condition(f.dom, x_0)

    for _ in range(num_iter):
        x = f.proximal(x, penalty=penalty)
        check_divergence(x)

    return x


def forward_backward(problem, step, x_0=0, num_iter=100):
    r"""
    Forward-backward splitting (proximal gradient method)

    .. math:: \pmb{x}^{\ell+1} = \operatorname{prox}_{\alpha g}(\pmb{x}^\ell - \alpha \nabla f(\pmb{x}^\ell))

    Parameters
    ----------
    problem : dict
        Problem dictionary with the smooth cost ``"f"`` and the cost ``"g"``
        used through its proximal.
    step : float
        The step-size :math:`\alpha`.
    x_0 : array_like, optional
        The initial condition.
    num_iter : int, optional
        The number of iterations to be performed.

    Returns
    -------
    x : ndarray
        The approximate solution after `num_iter` iterations.
    """

    f, g = problem["f"], problem.get("g")
    if g is None:
        raise KeyError("forward-backward requires the problem to define 'g'")

    x = initial_condition(f.dom, x_0)

    for _ in range(num_iter):
        x = g.proximal(x - step * f.gradient(x), penalty=step)
        check_divergence(x)

    return x


def peaceman_rachford(problem, penalty, x_0=0, num_iter=100, relaxation=1.0, full_state=False):
    r"""
    Relaxed Peaceman-Rachford splitting, running on the auxiliary variable

    .. math:: \begin{align}
              \pmb{x}^\ell &= \operatorname{prox}_{\rho f}(\pmb{z}^\ell) \\
              \pmb{z}^{\ell+1} &= (1 - \theta) \pmb{z}^\ell + \theta \left(
                  2 \operatorname{prox}_{\rho g}(2 \pmb{x}^\ell - \pmb{z}^\ell) - 2 \pmb{x}^\ell + \pmb{z}^\ell \right)
              \end{align}

    :math:`\theta = 1` gives Peaceman-Rachford and :math:`\theta = 1/2`
    Douglas-Rachford. `x_0` initializes :math:`\pmb{z}`; the returned
    solution is :math:`\operatorname{prox}_{\rho f}` of the last
    :math:`\pmb{z}` (and :math:`\pmb{z}` itself if `full_state`).
    """

    if not 0 < relaxation <= 1:
        raise ValueError("the relaxation must be in (0, 1]")

    f, g = problem["f"], problem.get("g")
    if g is None:
        raise KeyError("Peaceman-Rachford requires the problem to define 'g'")

    z = initial_condition(f.dom, x_0)

    for _ in range(num_iter):
        x = f.proximal(z, penalty=penalty)
        w = g.proximal(2 * x - z, penalty=penalty)
        z = (1 - relaxation) * z + relaxation * (2 * w - 2 * x + z)
        check_divergence(z)

    x = f.proximal(z, penalty=penalty)
    return (x, z) if full_state else x


def douglas_rachford(problem, penalty, x_0=0, num_iter=100, full_state=False):
    """Douglas-Rachford splitting, i.e. Peaceman-Rachford with relaxation 1/2."""

    return peaceman_rachford(problem, penalty, x_0, num_iter, relaxation=0.5, full_state=full_state)


#%% DUAL METHODS

class LinearConstraint:
    """The constraint ``A x + B y = c`` (with ``x`` and ``y`` flattened)."""

    def __init__(self, A, B, c):

        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.atleast_2d(np.asarray(B, dtype=float))
        self.c = np.atleast_1d(np.asarray(c, dtype=float)).ravel()

        if not self.A.shape[0] == self.B.shape[0] == self.c.size:
            raise ShapeError(f"inconsistent constraint data: A {self.A.shape}, B {self.B.shape}, c {self.c.shape}")

    def residual(self, x, y):
        return self.A @ np.ravel(x) + self.B @ np.ravel(y) - self.c


def _constraint(problem):

    con = problem["constraints"]
    return con if isinstance(con, LinearConstraint) else LinearConstraint(*con)


def argmin_regularized(f, q, M=None, x_0=None, num_iter=INNER_ITER, tol=INNER_TOL):
    r"""
    Minimize :math:`f(\pmb{x}) + \frac{1}{2} \pmb{x}^\top M \pmb{x} + \langle \pmb{q}, \pmb{x} \rangle`
    over the flattened variable.

    Quadratic costs are solved in closed form, isotropic ``M`` with a cost
    having a proximal reduces to one proximal evaluation; otherwise
    damped Newton runs for at most `num_iter` iterations, or, if the
    Hessian is not available, a gradient method with backtracking.
    """

    n = f.dom.size
    q = np.ravel(q)
    M = np.zeros((n, n)) if M is None else np.atleast_2d(M)

    if isinstance(f, costs.Quadratic):
        try:
            x = la.solve(f.Q + M, -(f.b.ravel() + q))
        except la.LinAlgError as e:
            raise ConvergenceError("the subproblem is not strictly convex") from e
        return x.reshape(f.shape)

    mu = M[0, 0]
    if mu > 0 and np.array_equal(M, mu * np.eye(n)):
        return f.proximal((-q / mu).reshape(f.shape), penalty=1 / mu)

    x = np.zeros(f.shape) if x_0 is None else initial_condition(f.dom, x_0)

    def grad(z):
        return f.gradient(z) + (M @ z.ravel() + q).reshape(z.shape)

    if not f.has_hessian:
        return costs.descent(grad, x, tol=tol, max_iter=max(num_iter, costs.PROX_GRADIENT_ITER))

    try:
        return costs.newton(grad, lambda z: f.hessian(z) + M, x, tol=tol, max_iter=num_iter)
    except ConvergenceError as e:
        raise ConvergenceError(f"inner minimization failed: {e}") from e


def _joint_argmin(f, g, con, lam, penalty, x, y, num_iter):
    # argmin_{x,y} f(x) + g(y) + <lam, Ax + By - c> + (penalty / 2) ||Ax + By - c||^2

    A, B, c = con.A, con.B, con.c
    n = A.shape[1]

    if isinstance(f, costs.Quadratic) and isinstance(g, costs.Quadratic):

        K = np.hstack([A, B])
        H = penalty * K.T @ K
        H[:n, :n] += f.Q
        H[n:, n:] += g.Q
        rhs = -(np.concatenate([f.b.ravel(), g.b.ravel()]) + K.T @ (lam - penalty * c))
        try:
            z = la.solve(H, rhs)
        except la.LinAlgError as e:
            raise ConvergenceError("the augmented Lagrangian is not strictly convex") from e
        return z[:n].reshape(f.shape), z[n:].reshape(g.shape)

    # block coordinate minimization
    for _ in range(num_iter):

        x_old, y_old = x, y
        x = argmin_regularized(f, A.T @ (lam + penalty * (B @ np.ravel(y) - c)), penalty * A.T @ A,
                               x_0=x, num_iter=num_iter)
        y = argmin_regularized(g, B.T @ (lam + penalty * (A @ np.ravel(x) - c)), penalty * B.T @ B,
                               x_0=y, num_iter=num_iter)

        if la.norm(np.ravel(x - x_old)) + la.norm(np.ravel(y - y_old)) < INNER_TOL:
            return x, y

    raise ConvergenceError(f"joint augmented Lagrangian minimization did not converge in {num_iter} sweeps")


def _dual_init(problem, x_0, y_0, dual_0):

    f, g, con = problem["f"], problem["g"], _constraint(problem)
    x, y = initial_condition(f.dom, x_0), initial_condition(g.dom, y_0)
    d = np.asarray(dual_0, dtype=float)
    lam = d.ravel().copy() if d.size == con.c.size else np.full(con.c.shape, float(d))
    return f, g, con, x, y, lam


def dual_ascent(problem, step, x_0=0, y_0=0, dual_0=0, num_iter=100, inner_iter=INNER_ITER):
    r"""
    Dual ascent

    .. math:: \begin{align}
              \pmb{x}^{\ell+1} &= \operatorname{argmin}_{\pmb{x}} f(\pmb{x}) + \langle A^\top \pmb{\lambda}^\ell, \pmb{x} \rangle \\
              \pmb{y}^{\ell+1} &= \operatorname{argmin}_{\pmb{y}} g(\pmb{y}) + \langle B^\top \pmb{\lambda}^\ell, \pmb{y} \rangle \\
              \pmb{\lambda}^{\ell+1} &= \pmb{\lambda}^\ell + \alpha (A \pmb{x}^{\ell+1} + B \pmb{y}^{\ell+1} - \pmb{c})
              \end{align}

    Returns
    -------
    x, y, dual : ndarray
        The primal and dual variables after `num_iter` iterations.
    """

    f, g, con, x, y, lam = _dual_init(problem, x_0, y_0, dual_0)

    for _ in range(num_iter):

        x = argmin_regularized(f, con.A.T @ lam, x_0=x, num_iter=inner_iter)
        y = argmin_regularized(g, con.B.T @ lam, x_0=y, num_iter=inner_iter)
        lam = lam + step * con.residual(x, y)
        check_divergence(x, y, lam)

    return x, y, lam


def method_of_multipliers(problem, penalty, x_0=0, y_0=0, dual_0=0, num_iter=100, inner_iter=INNER_ITER):
    r"""
    Method of multipliers: joint minimization of the augmented Lagrangian
    with penalty :math:`\rho`, followed by the dual step
    :math:`\pmb{\lambda}^{\ell+1} = \pmb{\lambda}^\ell + \rho (A \pmb{x}^{\ell+1} + B \pmb{y}^{\ell+1} - \pmb{c})`.
    """

    f, g, con, x, y, lam = _dual_init(problem, x_0, y_0, dual_0)

    for _ in range(num_iter):

        x, y = _joint_argmin(f, g, con, lam, penalty, x, y, inner_iter)
        lam = lam + penalty * con.residual(x, y)
        check_divergence(x, y, lam)

    return x, y, lam


def admm(problem, penalty, x_0=0, y_0=0, dual_0=0, num_iter=100, inner_iter=INNER_ITER):
    r"""
    Alternating direction method of multipliers (ADMM)

    .. math:: \begin{align}
              \pmb{x}^{\ell+1} &= \operatorname{argmin}_{\pmb{x}} f(\pmb{x})
                  + \frac{\rho}{2} \| A \pmb{x} + B \pmb{y}^\ell - \pmb{c} + \pmb{\lambda}^\ell / \rho \|^2 \\
              \pmb{y}^{\ell+1} &= \operatorname{argmin}_{\pmb{y}} g(\pmb{y})
                  + \frac{\rho}{2} \| A \pmb{x}^{\ell+1} + B \pmb{y} - \pmb{c} + \pmb{\lambda}^\ell / \rho \|^2 \\
              \pmb{\lambda}^{\ell+1} &= \pmb{\lambda}^\ell + \rho (A \pmb{x}^{\ell+1} + B \pmb{y}^{\ell+1} - \pmb{c})
              \end{align}

    Parameters
    ----------
    problem : dict
        Problem dictionary with ``"f"``, ``"g"`` and ``"constraints"``
        (a `LinearConstraint` or a tuple ``(A, B, c)``).
    penalty : float
        The penalty :math:`\rho > 0`.
    x_0, y_0, dual_0 : array_like, optional
        Initial primal and dual variables; `x_0` only warm-starts inner
        numerical solves.
    num_iter : int, optional
        The number of iterations to be performed.
    inner_iter : int, optional
        Budget of the inner minimizations without closed form.

    Returns
    -------
    x, y, dual : ndarray
        The primal and dual variables after `num_iter` iterations.
    """

    f, g, con, x, y, lam = _dual_init(problem, x_0, y_0, dual_0)
    A, B, c = con.A, con.B, con.c
    AtA, BtB = penalty * A.T @ A, penalty * B.T @ B

    for _ in range(num_iter):

        x = argmin_regularized(f, A.T @ (lam + penalty * (B @ np.ravel(y) - c)), AtA, x_0=x, num_iter=inner_iter)
        y = argmin_regularized(g, B.T @ (lam + penalty * (A @ np.ravel(x) - c)), BtB, x_0=y, num_iter=inner_iter)
        lam = lam + penalty * con.residual(x, y)
        check_divergence(x, y, lam)

    return x, y, lam


def dual_forward_backward(problem, step, x_0=0, y_0=0, dual_0=0, num_iter=100, inner_iter=INNER_ITER):
    r"""
    Dual forward-backward splitting: a gradient step on the (smooth) dual
    function of :math:`f` followed by a proximal step on the dual function
    of :math:`g`, which in primal terms reads

    .. math:: \begin{align}
              \pmb{x}^{\ell+1} &= \operatorname{argmin}_{\pmb{x}} f(\pmb{x}) + \langle A^\top \pmb{\lambda}^\ell, \pmb{x} \rangle \\
              \pmb{v}^\ell &= \pmb{\lambda}^\ell + \alpha (A \pmb{x}^{\ell+1} - \pmb{c}) \\
              \pmb{y}^{\ell+1} &= \operatorname{argmin}_{\pmb{y}} g(\pmb{y}) + \langle B^\top \pmb{v}^\ell, \pmb{y} \rangle
                                  + \frac{\alpha}{2} \| B \pmb{y} \|^2 \\
              \pmb{\lambda}^{\ell+1} &= \pmb{v}^\ell + \alpha B \pmb{y}^{\ell+1}
              \end{align}
    """

    f, g, con, x, y, lam = _dual_init(problem, x_0, y_0, dual_0)
    A, B, c = con.A, con.B, con.c
    BtB = step * B.T @ B

    for _ in range(num_iter):

        x = argmin_regularized(f, A.T @ lam, x_0=x, num_iter=inner_iter)
        v = lam + step * (A @ np.ravel(x) - c)
        y = argmin_regularized(g, B.T @ v, BtB, x_0=y, num_iter=inner_iter)
        lam = v + step * B @ np.ravel(y)
        check_divergence(x, y, lam)

    return x, y, lam


DUAL_METHODS = {
    "dual_ascent": dual_ascent,
    "multipliers": method_of_multipliers,
    "admm": admm,
    "dual_fb": dual_forward_backward,
}


def dual_solve(method, problem, step, **kwargs):
    """
    Run one of the dual methods (``"dual_ascent"``, ``"multipliers"``,
    ``"admm"``, ``"dual_fb"``); `step` is the step-size or penalty.
    """

    try:
        solver = DUAL_METHODS[method]
    except KeyError:
        raise ValueError(f"unknown dual method {method!r}, choose from {sorted(DUAL_METHODS)}") from None
    return solver(problem, step, **kwargs)
