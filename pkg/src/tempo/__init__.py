"""
tempo: time-varying optimization with prediction-correction methods.

Modules
-------
sets
    Sets, projections and time grids.
costs
    Static and dynamic costs with their oracles.
prediction
    Prediction strategies for dynamic costs.
solvers
    Centralized first-order and dual solvers.
networks
    Graphs and simulated multi-agent networks.
distributed
    Separable costs and distributed solvers.
runner
    Online driver, scenarios and command line interface.
"""

from tempo import costs, distributed, errors, networks, prediction, sets, solvers

__version__ = "0.1.0"
