"""
Performance metrics of online solvers and the run trace.
"""

import csv
from dataclasses import dataclass, field

import numpy as np


def fixed_point_residual(iterates):
    """``||x_k - x_{k-1}||`` for ``k >= 1``; NaN at ``k = 0``."""

    xs = np.asarray(iterates, dtype=float)
    res = np.full(len(xs), np.nan)
    if len(xs) > 1:
        res[1:] = np.linalg.norm(np.diff(xs.reshape(len(xs), -1), axis=0), axis=1)
    return res


def tracking_error(iterates, optima):
    """``||x_k - x*(t_k)||``."""

    xs, opt = np.asarray(iterates, dtype=float), np.asarray(optima, dtype=float)
    return np.linalg.norm((xs - opt).reshape(len(xs), -1), axis=1)


def regret(values, optimal_values):
    """Running average ``sum_{j <= k} (F(x_j; t_j) - F(x*(t_j); t_j)) / (k + 1)``."""

    gaps = np.asarray(values, dtype=float) - np.asarray(optimal_values, dtype=float)
    return np.cumsum(gaps) / np.arange(1, len(gaps) + 1)


def compute_metrics(iterates, optima=None, values=None, optimal_values=None):
    """
    The metric columns of a trace; tracking error and regret are NaN when the
    optima (or the cost values) are not available.
    """

    n = len(iterates)
    out = {"fixed_point_residual": fixed_point_residual(iterates)}
    out["tracking_error"] = np.full(n, np.nan) if optima is None else tracking_error(iterates, optima)
    out["regret"] = np.full(n, np.nan) if values is None or optimal_values is None \
        else regret(values, optimal_values)
    return out


def _fmt(v):

    if np.isnan(v):
        return "NaN"
    return format(float(v), ".17g")


@dataclass
class RunTrace:
    """Per-sample record of an online run; `iterates` are flattened."""

    times: np.ndarray
    iterates: np.ndarray
    tracking_error: np.ndarray
    fixed_point_residual: np.ndarray
    regret: np.ndarray
    name: str = ""
    values: np.ndarray = field(default=None, repr=False)

    @classmethod
    def build(cls, times, iterates, optima=None, values=None, optimal_values=None, name=""):

        xs = np.asarray(iterates, dtype=float).reshape(len(times), -1)
        m = compute_metrics(xs, optima, values, optimal_values)
        return cls(np.asarray(times, dtype=float), xs, m["tracking_error"], m["fixed_point_residual"],
                   m["regret"], name, None if values is None else np.asarray(values, dtype=float))

    def __len__(self):
        return len(self.times)

    @property
    def header(self):
        return ["step", "time", "tracking_error", "fixed_point_residual", "regret"] \
            + [f"x_{i}" for i in range(self.iterates.shape[1])]

    def rows(self):

        for k in range(len(self)):
            yield [str(k), _fmt(self.times[k]), _fmt(self.tracking_error[k]),
                   _fmt(self.fixed_point_residual[k]), _fmt(self.regret[k])] \
                + [_fmt(v) for v in self.iterates[k]]

    def to_csv(self, path):

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header)
            w.writerows(self.rows())

    @classmethod
    def from_csv(cls, path, name=""):

        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, 1], data[:, 5:], data[:, 2], data[:, 3], data[:, 4], name)

    def equals(self, other):
        """Bit-wise equality of all the columns (NaN equal to NaN)."""

        return all(np.array_equal(a, b, equal_nan=True) for a, b in [
            (self.times, other.times), (self.iterates, other.iterates),
            (self.tracking_error, other.tracking_error),
            (self.fixed_point_residual, other.fixed_point_residual), (self.regret, other.regret)])
