r"""
Distributed costs and solvers.

A `SeparableCost` models :math:`F(\pmb{x}; t) = \sum_{i=1}^N F_i(x_i; t)`
with the agents indexed by the last dimension of :math:`\pmb{x}`. The
solvers take a problem dictionary holding the separable cost ``"f"``
(optionally ``"g"``) and the ``"network"`` used for all agent-to-agent
communication.
"""

import numpy as np

from tempo import costs, sets
from tempo.errors import ShapeError
from tempo.solvers import argmin_regularized, check_divergence, initial_condition


#%% SEPARABLE COSTS

class SeparableCost(costs.Cost):
    """
    Separable cost built from a list of static or dynamic local costs with a
    common shape; oracles are stacked along a trailing agents dimension.
    The value oracle returns the ``1 x N`` array of local values.
    """

    def __init__(self, local_costs):

        local_costs = list(local_costs)
        if not local_costs:
            raise ValueError("a separable cost needs at least one local cost")
        if len({c.shape for c in local_costs}) != 1:
            raise ShapeError("all the local costs must share one shape")

        self.costs, self.N = local_costs, len(local_costs)
        self.local_shape = local_costs[0].shape

        times = [c.time for c in local_costs if c.time is not None]
        super().__init__(sets.R(self.local_shape + (self.N,)), times[0] if times else None)

        self.has_gradient = all(c.has_gradient for c in local_costs)
        self.has_hessian = all(c.has_hessian for c in local_costs)
        self.has_prox = all(c.has_prox for c in local_costs)

    def _agent(self, i):

        if not -self.N <= i < self.N:
            raise IndexError(f"agent index {i} out of range for {self.N} agents")
        return self.costs[i]

    def function(self, x, t=None, i=None):

        x = self.dom.check_input(x)
        if i is not None:
            return self._agent(i).function(x[..., i], t)
        return np.array([[c.function(x[..., j], t) for j, c in enumerate(self.costs)]])

    def total(self, x, t=None):
        """The value of the sum of the local costs."""

        return float(np.sum(self.function(x, t)))

    def gradient(self, x, t=None, i=None):

        x = self.dom.check_input(x)
        if i is not None:
            return self._agent(i).gradient(x[..., i], t)
        return np.stack([c.gradient(x[..., j], t) for j, c in enumerate(self.costs)], axis=-1)

    def hessian(self, x, t=None, i=None):

        x = self.dom.check_input(x)
        if i is not None:
            return self._agent(i).hessian(x[..., i], t)
        return np.stack([c.hessian(x[..., j], t) for j, c in enumerate(self.costs)], axis=-1)

    def proximal(self, x, t=None, penalty=1.0, method="auto", i=None):

        x = self.dom.check_input(x)
        if i is not None:
            return self._agent(i).proximal(x[..., i], t, penalty=penalty, method=method)

        penalty = np.broadcast_to(penalty, (self.N,))
        return np.stack([c.proximal(x[..., j], t, penalty=penalty[j], method=method)
                         for j, c in enumerate(self.costs)], axis=-1)

    def sample(self, t):

        if not self.is_dynamic:
            return self
        return SeparableCost([c.sample(t) for c in self.costs])


#%% PRIMAL METHODS

def _step_size(step, decay, l):
    return step if decay == 0 else step / (l + 1)**decay


def dpgm(problem, step, x_0=0, num_iter=100, step_decay=0.0, iter_offset=0):
    r"""
    Distributed proximal gradient method (DPGM)

    .. math:: \pmb{x}^{\ell+1} = \operatorname{prox}_{\alpha_\ell g}(\pmb{W} \pmb{x}^\ell - \alpha_\ell \nabla f(\pmb{x}^\ell))

    with step-sizes :math:`\alpha_\ell = \alpha / (\ell + 1)^\gamma`
    (:math:`\gamma` = `step_decay`, 0 for a fixed step). Without ``"g"`` in
    the problem this is DGD.

    Parameters
    ----------
    problem : dict
        The separable cost ``"f"``, optionally ``"g"``, and the ``"network"``.
    step : float
        The (initial) step-size.
    x_0 : array_like, optional
        The initial states, with the last dimension indexing the agents, or
        a scalar used for all components.
    num_iter : int, optional
        The number of iterations to be performed.
    step_decay : float, optional
        The exponent :math:`\gamma` of the diminishing step-sizes.
    iter_offset : int, optional
        Index of the first iteration in the step-size schedule, so that the
        schedule can continue across calls.

    Returns
    -------
    x : ndarray
        The agents' states after `num_iter` iterations.
    """

    f, g, net = problem["f"], problem.get("g"), problem["network"]
    x = initial_condition(f.dom, x_0)

    for l in range(num_iter):

        a = _step_size(step, step_decay, l + iter_offset)
        y = net.consensus(x) - a * f.gradient(x)
        x = y if g is None else g.proximal(y, penalty=a)
        check_divergence(x)

    return x


def dgd(problem, step, x_0=0, num_iter=100, step_decay=0.0, iter_offset=0):
    r"""
    Decentralized gradient descent
    :math:`\pmb{x}^{\ell+1} = \pmb{W} \pmb{x}^\ell - \alpha_\ell \nabla f(\pmb{x}^\ell)`,
    see `dpgm` for the parameters.
    """

    p = {"f": problem["f"], "network": problem["network"]}
    return dpgm(p, step, x_0, num_iter, step_decay, iter_offset)


def gradient_tracking(problem, step, x_0=0, num_iter=100, tracker_0=None, full_state=False):
    r"""
    Gradient tracking

    .. math:: \begin{align}
              \pmb{x}^{\ell+1} &= \pmb{W} \pmb{x}^\ell - \alpha \pmb{y}^\ell \\
              \pmb{y}^{\ell+1} &= \pmb{W} \pmb{y}^\ell + \nabla f(\pmb{x}^{\ell+1}) - \nabla f(\pmb{x}^\ell)
              \end{align}

    where the trackers :math:`\pmb{y}` start from
    :math:`\nabla f(\pmb{x}^0)` unless `tracker_0` is given. With
    `full_state` the trackers are returned as well.
    """

    f, net = problem["f"], problem["network"]
    x = initial_condition(f.dom, x_0)
    grad = f.gradient(x)
    y = grad if tracker_0 is None else initial_condition(f.dom, tracker_0)

    for _ in range(num_iter):

        x = net.consensus(x) - step * y
        grad_old, grad = grad, f.gradient(x)
        y = net.consensus(y) + grad - grad_old
        check_divergence(x, y)

    return (x, y) if full_state else x


#%% DUAL METHODS

def _exchange(net, x):
    # every agent broadcasts its state; r[..., i, j] is j's state as seen by i

    for i in range(net.N):
        net.broadcast(i, x[..., i])

    r = np.repeat(x[..., :, None], net.N, axis=-1)
    for i in range(net.N):
        for j in net.neighbors[i]:
            p = net.receive(i, j)
            if p is not None:
                r[..., i, j] = p
    return r


def _edge_aggregate(net, duals):
    # sum of the edge duals seen by each agent, with sign +1 on edges (i, j), i < j

    z = np.zeros(duals.shape[:-1] + (net.N,))
    for e, (i, j) in enumerate(net.graph.edges):
        z[..., i] += duals[..., e]
        z[..., j] -= duals[..., e]
    return z


def _edge_duals(f, net, dual_0):

    shape = f.local_shape + (len(net.graph.edges),)
    return np.zeros(shape) if dual_0 is None else np.array(np.broadcast_to(dual_0, shape), dtype=float)


def dual_decomposition(problem, step, x_0=0, dual_0=None, num_iter=100, full_state=False):
    r"""
    Dual decomposition over the edge constraints :math:`x_i = x_j`,
    :math:`(i, j)` an edge with :math:`i < j`, with duals
    :math:`\lambda_{ij}`:

    .. math:: \begin{align}
              x_i^{\ell+1} &= \operatorname{argmin}_{x_i} F_i(x_i) + \Big\langle \sum_{j > i} \lambda_{ij}^\ell - \sum_{j < i} \lambda_{ji}^\ell, x_i \Big\rangle \\
              \lambda_{ij}^{\ell+1} &= \lambda_{ij}^\ell + \alpha (x_i^{\ell+1} - x_j^{\ell+1})
              \end{align}

    Returns the states (and the edge duals, ordered as ``net.graph.edges``,
    if `full_state`).
    """

    f, net = problem["f"], problem["network"]
    x = initial_condition(f.dom, x_0)
    lam = _edge_duals(f, net, dual_0)

    for _ in range(num_iter):

        z = _edge_aggregate(net, lam)
        x = np.stack([argmin_regularized(c, z[..., i], x_0=x[..., i]) for i, c in enumerate(f.costs)], axis=-1)

        r = _exchange(net, x)
        for e, (i, j) in enumerate(net.graph.edges):
            lam[..., e] += step * (x[..., i] - r[..., i, j])
        check_divergence(x, lam)

    return (x, lam) if full_state else x


def admm(problem, penalty, x_0=0, dual_0=None, num_iter=100, full_state=False):
    r"""
    Distributed ADMM over the edge constraints :math:`x_i = x_j`, in the
    form obtained with the edge auxiliary variables
    :math:`(x_i + x_j) / 2`:

    .. math:: \begin{align}
              x_i^{\ell+1} &= \operatorname{argmin}_{x_i} F_i(x_i) + \langle z_i^\ell, x_i \rangle
                  + \frac{\rho}{2} \sum_{j \in \mathcal{N}_i} \| x_i - (x_i^\ell + x_j^\ell) / 2 \|^2 \\
              \lambda_{ij}^{\ell+1} &= \lambda_{ij}^\ell + \frac{\rho}{2} (x_i^{\ell+1} - x_j^{\ell+1})
              \end{align}

    with :math:`z_i` the signed sum of the duals of the edges of agent
    :math:`i` (as in `dual_decomposition`).
    """

    f, net = problem["f"], problem["network"]
    x = initial_condition(f.dom, x_0)
    lam = _edge_duals(f, net, dual_0)
    eye = np.eye(int(np.prod(f.local_shape)))

    r = _exchange(net, x)

    for _ in range(num_iter):

        z = _edge_aggregate(net, lam)
        x_new = []
        for i, c in enumerate(f.costs):
            nb = net.neighbors[i]
            mid = sum(0.5 * (x[..., i] + r[..., i, j]) for j in nb) if nb else 0
            q = z[..., i] - penalty * mid
            x_new.append(argmin_regularized(c, q, penalty * len(nb) * eye, x_0=x[..., i]))
        x = np.stack(x_new, axis=-1)

        r = _exchange(net, x)
        for e, (i, j) in enumerate(net.graph.edges):
            lam[..., e] += 0.5 * penalty * (x[..., i] - r[..., i, j])
        check_divergence(x, lam)

    return (x, lam) if full_state else x


def dual_methods_distributed(method, problem, step, **kwargs):
    """Dispatch to ``"dual_decomposition"`` or ``"admm"``."""

    if method == "dual_decomposition":
        return dual_decomposition(problem, step, **kwargs)
    if method == "admm":
        return admm(problem, step, **kwargs)
    raise ValueError(f"unknown distributed dual method {method!r}")


#%% AVERAGE CONSENSUS

def average_consensus(net, x_0, num_iter=100, protocol="synchronous", seed=None):
    """
    Average consensus of the states `x_0` (last dimension indexing the
    agents) with the ``"synchronous"`` protocol (consensus rounds with the
    network weights) or the ``"gossip"`` protocol.
    """

    if protocol == "gossip":
        return gossip_consensus(net, x_0, num_iter, seed)
    if protocol != "synchronous":
        raise ValueError(f"unknown consensus protocol {protocol!r}")

    x = np.array(x_0, dtype=float)
    for _ in range(num_iter):
        x = net.consensus(x)
    return x


def gossip_consensus(net, x_0, num_iter=100, seed=None):
    """
    Symmetric gossip: at each round a uniformly random edge is activated and
    its two endpoints replace their states with the pairwise average.
    """

    rng = np.random.default_rng(seed)
    edges = net.graph.edges
    x = np.array(x_0, dtype=float)

    for _ in range(num_iter):

        i, j = edges[rng.integers(len(edges))]
        net.send(i, j, x[..., i])
        net.send(j, i, x[..., j])

        from_j, from_i = net.receive(i, j), net.receive(j, i)
        if from_j is not None:
            x[..., i] = 0.5 * (x[..., i] + from_j)
        if from_i is not None:
            x[..., j] = 0.5 * (x[..., j] + from_i)

    return x
