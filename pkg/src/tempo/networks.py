"""
Multi-agent networks.

A `Network` simulates synchronous agent-to-agent communication over an
undirected graph: `send` places a packet in the mailbox of the ordered pair
(sender, receiver) and `receive` reads it destructively. Subclasses model
unreliable channels by overriding `transmit`.

Random channel effects are reproducible: each ordered pair ``(i, j)`` owns a
random stream derived from the network seed and ``(i, j)``, consumed one
transmission at a time, so the draws do not depend on the order in which
the agents transmit.
"""

import csv
import numpy as np

from tempo.errors import NetworkError


#%% GRAPHS

class Graph:
    """
    Undirected graph defined by a symmetric 0/1 adjacency matrix with zero
    diagonal. Edges are listed as pairs ``(i, j)`` with ``i < j``.
    """

    def __init__(self, adjacency):

        adj = np.asarray(adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or adj.shape[0] < 1:
            raise NetworkError(f"the adjacency matrix must be square, got shape {adj.shape}")
        if not np.all((adj == 0) | (adj == 1)):
            raise NetworkError("the adjacency matrix must have 0/1 entries")
        if not np.array_equal(adj, adj.T):
            raise NetworkError("the adjacency matrix must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise NetworkError("the adjacency matrix must have a zero diagonal")

        self.adjacency = adj.astype(int)
        self.n = adj.shape[0]
        self.neighbors = [list(np.flatnonzero(row)) for row in self.adjacency]
        self.degrees = self.adjacency.sum(axis=1)
        self.edges = [(i, j) for i in range(self.n) for j in self.neighbors[i] if i < j]
        self.is_connected = is_connected(self.adjacency)

    @property
    def num_edges(self):
        return len(self.edges)

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges}, connected={self.is_connected})"


def is_connected(adjacency):
    """Breadth-first search connectivity test."""

    adj = np.asarray(adjacency)
    seen = np.zeros(adj.shape[0], dtype=bool)
    seen[0] = True
    frontier = [0]

    while frontier:
        nxt = np.flatnonzero(adj[frontier].any(axis=0) & ~seen)
        seen[nxt] = True
        frontier = list(nxt)

    return bool(seen.all())


def complete_graph(n):
    return Graph(np.ones((n, n), dtype=int) - np.eye(n, dtype=int))


def circulant_graph(n, degree=1):
    """Ring where each node is linked to its `degree` nearest nodes on each side."""

    if not 1 <= degree <= n // 2:
        raise ValueError(f"the circulant degree must be in 1..{n // 2}")

    i = np.arange(n)
    dist = np.abs(i[:, None] - i[None, :])
    dist = np.minimum(dist, n - dist)
    return Graph(((dist >= 1) & (dist <= degree)).astype(int))


def random_graph(n, p, seed=None, max_attempts=100):
    """
    Erdos-Renyi graph (each edge present with probability `p`), resampled
    until connected.
    """

    if not 0 < p <= 1:
        raise ValueError("the edge probability must be in (0, 1]")

    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        upper = np.triu(rng.random((n, n)) < p, 1).astype(int)
        adj = upper + upper.T
        if is_connected(adj):
            return Graph(adj)

    raise NetworkError(f"no connected random graph found in {max_attempts} attempts (n={n}, p={p})")


def make_graph(kind, n, seed=None, **params):
    """
    Generate a ``"random"`` (param ``p``), ``"circulant"`` (param
    ``degree``) or ``"complete"`` graph over ``n >= 2`` nodes.
    """

    if n < 2:
        raise ValueError("graphs need at least 2 nodes")
    if kind == "random":
        return random_graph(n, params.get("p", 0.5), seed=seed)
    if kind == "circulant":
        return circulant_graph(n, params.get("degree", 1))
    if kind == "complete":
        return complete_graph(n)
    raise ValueError(f"unknown graph kind {kind!r}")


def metropolis_weights(adjacency):
    """
    Metropolis-Hastings weights ``1 / (1 + max(d_i, d_j))`` on the edges,
    with the diagonal absorbing the remainder; the matrix is doubly
    stochastic.
    """

    adj = np.asarray(adjacency)
    deg = adj.sum(axis=1)
    W = adj / (1 + np.maximum(deg[:, None], deg[None, :]))
    W[np.diag_indices_from(W)] = 1 - W.sum(axis=1)
    return W


def load_adjacency_csv(path):
    """Read an adjacency matrix from a CSV file of 0/1 entries."""

    with open(path, newline="") as fh:
        rows = [[int(float(v)) for v in row] for row in csv.reader(fh) if row]
    return Graph(np.array(rows))


def save_adjacency_csv(path, graph):

    adj = graph.adjacency if isinstance(graph, Graph) else np.asarray(graph, dtype=int)
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(adj.tolist())


#%% NETWORKS

class Network:
    """
    Loss-less network.

    Parameters
    ----------
    graph : Graph or array_like
        The graph (or its adjacency matrix).
    weights : array_like, optional
        Default consensus weights, Metropolis-Hastings if not given.
    seed : int, optional
        Master seed of the random channel effects.
    """

    def __init__(self, graph, weights=None, seed=0):

        self.graph = graph if isinstance(graph, Graph) else Graph(graph)
        self.N = self.graph.n
        self.adjacency = self.graph.adjacency
        self.neighbors, self.degrees = self.graph.neighbors, self.graph.degrees

        self.weights = metropolis_weights(self.adjacency) if weights is None else np.asarray(weights, dtype=float)
        self._check_weights(self.weights)

        self.seed = int(seed)
        self._mailbox = {}
        self._streams = {}

    def _check_weights(self, W):

        if W.shape != (self.N, self.N):
            raise NetworkError(f"consensus weights must be {self.N}x{self.N}")
        off_graph = (W != 0) & (self.adjacency == 0) & ~np.eye(self.N, dtype=bool)
        if off_graph.any():
            raise NetworkError("consensus weights are non-zero on pairs that are not connected")

    def _check_edge(self, i, j):

        if not (0 <= i < self.N and 0 <= j < self.N) or self.adjacency[i, j] == 0:
            raise NetworkError(f"agents {i} and {j} are not connected")

    def rng(self, sender, receiver):
        """Random stream of the transmissions from `sender` to `receiver`."""

        key = (sender, receiver)
        if key not in self._streams:
            self._streams[key] = np.random.default_rng([self.seed, int(sender), int(receiver)])
        return self._streams[key]

    def transmit(self, senders, receivers, packets):
        """
        Apply the channel to a batch of transmissions; `packets` stacks the
        packets along the last dimension, one per ``(senders[m],
        receivers[m])`` pair. Returns the received packets and the mask of
        the delivered ones. Channel models override this method.
        """

        return packets, np.ones(len(senders), dtype=bool)

    def send(self, sender, receiver, packet):
        """Transmit `packet` from `sender` to `receiver`."""

        self._check_edge(sender, receiver)
        packet = np.asarray(packet, dtype=float)
        out, ok = self.transmit([sender], [receiver], packet[..., None])
        if ok[0]:
            self._mailbox[(sender, receiver)] = np.array(out[..., 0])
        else:
            self._mailbox.pop((sender, receiver), None)

    def receive(self, receiver, sender, destructive=True):
        """
        Read the packet sent from `sender` to `receiver`, or None if there is
        none (never sent, or lost).
        """

        if destructive:
            return self._mailbox.pop((sender, receiver), None)
        return self._mailbox.get((sender, receiver))

    def broadcast(self, sender, packet):
        """Send `packet` to all the neighbors of `sender`."""

        for j in self.neighbors[sender]:
            self.send(sender, j, packet)

    def consensus(self, x, weights=None):
        r"""
        One round of consensus mixing :math:`x_i^+ = \sum_j W_{ij} x_j` of
        the states `x` (last dimension indexing the agents). Each agent
        sends its state to the neighbors that weigh it; a packet that does
        not arrive is replaced by the receiving agent's own state.
        """

        W = self.weights if weights is None else np.asarray(weights, dtype=float)
        if weights is not None:
            self._check_weights(W)

        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.N:
            raise NetworkError(f"the last dimension of the states must be {self.N}, got {x.shape}")

        # r[..., i, j]: state of j as received by i
        if type(self).transmit is Network.transmit:
            r = np.ascontiguousarray(np.broadcast_to(x[..., None, :], x.shape + (self.N,)))
        else:
            mask = (W != 0) & (self.adjacency == 1)
            rec, snd = np.nonzero(mask)
            out, ok = self.transmit(snd, rec, x[..., snd])

            r = np.ascontiguousarray(np.repeat(x[..., :, None], self.N, axis=-1))
            r[..., rec[ok], snd[ok]] = out[..., ok]

        return np.einsum("ij,...ij->...i", W, r)


class LossyNetwork(Network):
    """Network whose transmissions fail independently with probability `p_drop`."""

    def __init__(self, graph, p_drop, weights=None, seed=0):

        if not 0 <= p_drop <= 1:
            raise ValueError("the drop probability must be in [0, 1]")
        super().__init__(graph, weights, seed)
        self.p_drop = float(p_drop)

    def transmit(self, senders, receivers, packets):

        u = np.array([self.rng(i, j).random() for i, j in zip(senders, receivers)])
        return packets, u >= self.p_drop


class NoisyNetwork(Network):
    """Network adding i.i.d. zero-mean Gaussian noise of std `sigma` to packets."""

    def __init__(self, graph, sigma, weights=None, seed=0):

        if not sigma > 0:
            raise ValueError("the noise standard deviation must be positive")
        super().__init__(graph, weights, seed)
        self.sigma = float(sigma)

    def transmit(self, senders, receivers, packets):

        shape = packets.shape[:-1]
        noise = np.stack([self.rng(i, j).normal(0.0, self.sigma, shape) for i, j in zip(senders, receivers)],
                         axis=-1)
        return packets + noise, np.ones(len(senders), dtype=bool)


class QuantizedNetwork(Network):
    """Network rounding packets to the nearest multiple of `delta` (ties to even)."""

    def __init__(self, graph, delta, weights=None, seed=0):

        if not delta > 0:
            raise ValueError("the quantization step must be positive")
        super().__init__(graph, weights, seed)
        self.delta = float(delta)

    def transmit(self, senders, receivers, packets):
        return self.delta * np.round(packets / self.delta), np.ones(len(senders), dtype=bool)


CHANNELS = {"lossless": Network, "lossy": LossyNetwork, "noisy": NoisyNetwork, "quantized": QuantizedNetwork}


def make_network(graph, channel="lossless", seed=0, weights=None, **params):
    """
    Build a network over `graph` with the given `channel` kind; the channel
    parameter (``p_drop``, ``sigma`` or ``delta``) is passed by keyword.
    """

    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}, choose from {sorted(CHANNELS)}")
    return CHANNELS[channel](graph, weights=weights, seed=seed, **params)
