"""
Sets and sampling times.

Sets are subsets of the space of real arrays with a given ``shape``. Every set
implements a membership test and the Euclidean projection

    proj_C(x) = argmin_{y in C} ||y - x||^2

and sets can be scaled, translated and intersected (``S1 + S2``).
"""

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from numpy import linalg as la

from tempo.errors import ConvergenceError, ShapeError


DEFAULT_TOL = 1e-9

# alternating projections budget
MAP_MAX_SWEEPS = 1000
MAP_TOL = 1e-9


def norm(x):
    """Euclidean norm, rescaled to avoid underflow on tiny entries."""

    x = np.ravel(x)
    m = np.max(np.abs(x), initial=0.0)
    if m == 0 or not np.isfinite(m):
        return float(m)
    return float(m * la.norm(x / m))


def as_shape(dims):
    """Normalize ``dims`` (ints or a single tuple) to a shape tuple."""

    if len(dims) == 1 and isinstance(dims[0], (tuple, list)):
        dims = dims[0]
    shape = tuple(int(d) for d in dims)
    if len(shape) == 0 or any(d < 1 for d in shape):
        raise ShapeError(f"invalid shape {dims!r}, all dimensions must be >= 1")
    return shape


#%% SET TEMPLATE

class Set:
    """
    Template for a subset of the space of arrays of shape ``shape``.

    Subclasses implement `projection`; `contains` is derived from the
    distance to the projection unless overridden.
    """

    def __init__(self, *dims):

        self.shape = as_shape(dims)
        self.size = math.prod(self.shape)

    def check_input(self, x):
        """
        Verify that `x` fits the shape of the set, reshaping it if needed.

        Arrays with the right number of elements are reshaped in row-major
        order; anything else is an error.
        """

        x = np.asarray(x, dtype=float)

        if x.shape == self.shape:
            return x
        if x.size == self.size:
            return x.reshape(self.shape)

        raise ShapeError(f"input of shape {x.shape} does not fit a set of shape {self.shape}")

    def projection(self, x):
        raise NotImplementedError

    def project(self, x):
        return self.projection(x)

    def distance(self, x):
        """Euclidean distance of `x` from the set."""

        x = self.check_input(x)
        return norm(self.projection(x) - x)

    def contains(self, x, tol=DEFAULT_TOL):
        """Return True if `x` lies within distance `tol` of the set."""

        return bool(self.distance(x) <= tol)

    def __contains__(self, x):
        return self.contains(x)

    # operations

    def transform(self, scale=1.0, shift=0.0):
        """The set ``{scale * y + shift : y in self}``."""

        return TransformedSet(self, scale, shift)

    def scale(self, a):
        return self.transform(scale=a)

    def translate(self, b):
        return self.transform(shift=b)

    def __add__(self, other):

        if not isinstance(other, Set):
            return NotImplemented
        return IntersectionSet(self, other)


#%% BUILT-INS

class R(Set):
    """The whole space of arrays of the given shape."""

    def projection(self, x):
        return np.array(self.check_input(x), dtype=float)

    def distance(self, x):
        self.check_input(x)
        return 0.0

    def contains(self, x, tol=DEFAULT_TOL):
        self.check_input(x)
        return True


class Ball(Set):
    """Closed Euclidean ball with given `center` and `radius`."""

    def __init__(self, center, radius):

        center = np.atleast_1d(np.asarray(center, dtype=float))
        super().__init__(center.shape)

        if not radius > 0:
            raise ValueError("the radius of a ball must be positive")
        self.center, self.radius = center, float(radius)

    def projection(self, x):

        x = self.check_input(x)
        d = x - self.center
        n = norm(d)

        if n <= self.radius:
            return np.array(x)
        return self.center + (self.radius / n) * d


class Box(Set):
    """
    Box ``{x : lower <= x <= upper}``; bounds are scalars or arrays and may
    be infinite. Coordinates with ``lower == upper`` are pinned.
    """

    def __init__(self, lower, upper, shape=None):

        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)

        if shape is None:
            shape = np.broadcast_shapes(lower.shape, upper.shape) or (1,)
        super().__init__(shape)

        self.lower = np.broadcast_to(lower, self.shape)
        self.upper = np.broadcast_to(upper, self.shape)

        if np.any(self.lower > self.upper):
            raise ValueError("box lower bounds must not exceed the upper bounds")

    def projection(self, x):

        x = self.check_input(x)
        return np.clip(x, self.lower, self.upper)


class HalfSpace(Set):
    """Half-space ``{x : <normal, x> <= offset}``."""

    def __init__(self, normal, offset):

        normal = np.atleast_1d(np.asarray(normal, dtype=float))
        super().__init__(normal.shape)

        self._sq_norm = float(np.sum(normal**2))
        if self._sq_norm == 0:
            raise ValueError("the normal of a half-space must be non-zero")
        self.normal, self.offset = normal, float(offset)

    def projection(self, x):

        x = self.check_input(x)
        excess = np.sum(self.normal * x) - self.offset

        if excess <= 0:
            return np.array(x)
        return x - (excess / self._sq_norm) * self.normal


#%% OPERATIONS

class TransformedSet(Set):
    """
    The set ``{scale * y + shift : y in base}``, so that ``x`` belongs to it
    iff ``(x - shift) / scale`` belongs to `base`.
    """

    def __init__(self, base, scale=1.0, shift=0.0):

        super().__init__(base.shape)

        if scale == 0:
            raise ValueError("the scaling factor of a set must be non-zero")
        self.base, self.a = base, float(scale)
        self.b = np.broadcast_to(np.asarray(shift, dtype=float), self.shape)

    def pull_back(self, x):
        return (self.check_input(x) - self.b) / self.a

    def projection(self, x):

        x = self.check_input(x)
        y = self.pull_back(x)
        if self.base.distance(y) == 0:
            return np.array(x)
        return self.a * self.base.projection(y) + self.b

    def distance(self, x):
        return abs(self.a) * self.base.distance(self.pull_back(x))


class IntersectionSet(Set):
    """
    Intersection of sets sharing one shape.

    The projection is computed with the method of alternating projections,
    which returns a point in the intersection but in general not the
    closest one.
    """

    def __init__(self, *sets):

        members = []
        for s in sets:
            members.extend(s.sets if isinstance(s, IntersectionSet) else [s])

        shapes = {s.shape for s in members}
        if len(shapes) != 1:
            raise ShapeError(f"cannot intersect sets with shapes {sorted(shapes)}")

        super().__init__(members[0].shape)
        self.sets = members

    def distance(self, x):
        # max distance from the members: a lower bound on the true distance,
        # equal to it whenever it is zero
        x = self.check_input(x)
        return max(s.distance(x) for s in self.sets)

    def projection(self, x, max_sweeps=MAP_MAX_SWEEPS, tol=MAP_TOL):

        x = np.array(self.check_input(x))

        for _ in range(max_sweeps):
            if self.distance(x) <= tol:
                return x
            x = reduce(lambda y, s: s.projection(y), self.sets, x)

        if self.distance(x) <= tol:
            return x
        raise ConvergenceError(
            f"alternating projections did not reach feasibility {tol:g} in "
            f"{max_sweeps} sweeps; the intersection may be empty")


#%% SAMPLING TIMES

@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid of sampling instants ``t_k = t0 + k * ts``, ``0 <= k < num_samples``.
    """

    ts: float
    num_samples: int
    t0: float = 0.0

    def __post_init__(self):

        if not self.ts > 0:
            raise ValueError("the sampling time must be positive")
        if int(self.num_samples) != self.num_samples or self.num_samples < 1:
            raise ValueError("the number of samples must be a positive integer")
        object.__setattr__(self, "num_samples", int(self.num_samples))

    @classmethod
    def from_horizon(cls, ts, t_max, t0=0.0):
        """Grid with sampling time `ts` covering ``[t0, t0 + t_max)``."""

        return cls(ts, int(round(t_max / ts)), t0)

    @property
    def t_s(self):
        return self.ts

    @property
    def t_max(self):
        return self.num_samples * self.ts

    @property
    def times(self):
        return self.t0 + self.ts * np.arange(self.num_samples)

    def time(self, k):

        if not 0 <= k < self.num_samples:
            raise IndexError(f"sample index {k} outside the grid (0..{self.num_samples - 1})")
        return self.t0 + k * self.ts

    def nearest(self, t):
        """
        Index of the sampling instant closest to `t`; ties go to the smaller
        index.
        """

        u = (t - self.t0) / self.ts
        if not -0.5 - 1e-9 <= u <= self.num_samples - 0.5 + 1e-9:
            raise ValueError(f"time {t} is outside the sampling grid")

        k = math.floor(u)
        if u - k > 0.5 + 1e-9:
            k += 1
        return min(max(k, 0), self.num_samples - 1)

    def contains(self, t, tol=DEFAULT_TOL):
        """True if `t` is (within `tol` of) a sampling instant."""

        try:
            k = self.nearest(t)
        except ValueError:
            return False
        return abs(t - self.time(k)) <= tol

    def __contains__(self, t):
        return self.contains(t)

    def __len__(self):
        return self.num_samples


def grid_nearest(grid, t):
    return grid.nearest(t)
