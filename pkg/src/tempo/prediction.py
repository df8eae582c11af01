r"""
Prediction of dynamic costs.

A `Prediction` wraps a dynamic cost and, after each call to `update` with
the latest sampling time :math:`t_k`, behaves like the static cost
:math:`\hat{F}(\cdot; t_{k+1})`.
"""

import numpy as np

from tempo import costs
from tempo.errors import HistoryError, NotDifferentiableError


class Prediction(costs.Cost):
    r"""
    Template for predictions of a dynamic cost.

    The default strategy predicts :math:`\hat{F}(\cdot; t_{k+1}) = F(\cdot; t_k)`.
    """

    def __init__(self, cost):

        if not cost.is_dynamic:
            raise ValueError("only dynamic costs can be predicted")

        super().__init__(cost.dom)
        self.cost, self.ts = cost, cost.time.ts
        self.has_gradient, self.has_hessian = cost.has_gradient, cost.has_hessian

        self.t_k = None
        self.prediction = None

    def update(self, t, *args, **kwargs):
        """Build the prediction from the samples observed up to time `t`."""

        self.prediction = self.cost.sample(t)
        self.t_k = t

    def _predicted(self):

        if self.prediction is None:
            raise RuntimeError("the prediction must be updated before it is evaluated")
        return self.prediction

    def function(self, x, t=None):
        return self._predicted().function(x)

    def gradient(self, x, t=None):
        return self._predicted().gradient(x)

    def hessian(self, x, t=None):
        return self._predicted().hessian(x)

    def proximal(self, x, t=None, penalty=1.0, method="auto"):
        return self._predicted().proximal(x, penalty=penalty, method=method)

    @property
    def has_prox(self):
        return self.prediction is not None and self.prediction.has_prox


def extrapolation_coefficients(order):
    r"""
    Coefficients :math:`\ell_i = \prod_{j \neq i} j / (j - i)`, :math:`i = 1, \ldots, I`,
    of the Lagrange extrapolation from :math:`t_k, \ldots, t_{k-I+1}` to :math:`t_{k+1}`.
    """

    if int(order) != order or order < 1:
        raise ValueError("the extrapolation order must be a positive integer")

    r = range(1, int(order) + 1)
    return np.array([np.prod([j / (j - i) for j in r if j != i]) for i in r])


class ExtrapolationPrediction(Prediction):
    r"""
    Extrapolation-based prediction

    .. math:: \hat{F}(\pmb{x}; t_{k+1}) = \sum_{i=1}^I \ell_i F(\pmb{x}; t_{k-i+1})

    combining the last `order` samples, e.g.
    :math:`2 F(\pmb{x}; t_k) - F(\pmb{x}; t_{k-1})` for ``order=2``.
    """

    def __init__(self, cost, order=2):

        super().__init__(cost)
        self.order = int(order)
        self.coeffs = extrapolation_coefficients(order)

    def update(self, t):

        grid = self.cost.time
        k = grid.nearest(t)
        if k + 1 < self.order:
            raise HistoryError(f"extrapolation of order {self.order} needs {self.order} samples, "
                               f"only {k + 1} available at t = {t}")

        self.prediction = sum(c * self.cost.sample(grid.time(k - i))
                              for i, c in enumerate(self.coeffs))
        self.t_k = t


class TaylorPrediction(Prediction):
    r"""
    Taylor expansion-based prediction around the current iterate
    :math:`\pmb{x}_k`, the quadratic model

    .. math:: \hat{F}(\pmb{x}; t_{k+1}) = F_k + T_s \hat{\nabla}_t F_k
              + \langle \nabla_x F_k + T_s \hat{\nabla}_{tx} F_k, \pmb{x} - \pmb{x}_k \rangle
              + \frac{1}{2} (\pmb{x} - \pmb{x}_k)^\top \nabla_{xx} F_k (\pmb{x} - \pmb{x}_k)

    where the subscript :math:`k` denotes evaluation at
    :math:`(\pmb{x}_k; t_k)` and the time derivatives are first order
    backward differences.
    """

    def __init__(self, cost):

        if not cost.has_hessian:
            raise NotDifferentiableError("the Taylor prediction requires a twice differentiable cost")

        super().__init__(cost)
        self.x_k = None

    def update(self, t, x):

        f, grid = self.cost, self.cost.time
        k = grid.nearest(t)
        if k < 1:
            raise HistoryError(f"the Taylor prediction needs 2 samples, only {k + 1} available at t = {t}")

        t_k = grid.time(k)
        x_k = f.dom.check_input(x)
        xf = x_k.ravel()

        h = f.hessian(x_k, t_k)
        g = f.gradient(x_k, t_k).ravel() + self.ts * f.time_derivative(x_k, t_k, of="gradient").ravel()
        v = f.function(x_k, t_k) + self.ts * f.time_derivative(x_k, t_k, of="value")

        # expand around x_k
        b = g - h @ xf
        c = v - g @ xf + 0.5 * xf @ h @ xf

        self.prediction = costs.Quadratic(h, b.reshape(f.shape), c)
        self.x_k, self.t_k = x_k, t
