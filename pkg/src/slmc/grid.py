"""Truncated spatial grids with the origin pinned as a node."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Grid1D:
    """Grid on ``[x_left, x_right]`` with ``n`` nodes, one of which is 0.

    ``spacing="uniform"`` splits the ``n - 1`` intervals between the two
    half-lines in proportion to their lengths, so the spacing is uniform on
    each side and differs across 0 only by rounding. ``spacing="tanh"``
    clusters nodes around 0 with the given ``strength``.
    """

    x_left: float
    x_right: float
    n: int
    spacing: str = "uniform"
    strength: float = 2.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    zero_index: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.x_left < 0.0 < self.x_right):
            raise ConfigError(
                f"grid must satisfy x_left < 0 < x_right, got [{self.x_left}, {self.x_right}]")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigError(f"grid needs n >= 3 nodes, got {self.n}")
        if self.spacing not in ("uniform", "tanh"):
            raise ConfigError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "tanh" and not self.strength > 0:
            raise ConfigError("tanh strength must be positive")
        intervals = int(self.n) - 1
        frac = -self.x_left / (self.x_right - self.x_left)
        n_left = min(max(int(round(intervals * frac)), 1), intervals - 1)
        n_right = intervals - n_left
        u_left = np.linspace(1.0, 0.0, n_left + 1)
        u_right = np.linspace(0.0, 1.0, n_right + 1)[1:]
        if self.spacing == "uniform":
            left = self.x_left * u_left
            right = self.x_right * u_right
        else:
            b = self.strength
            stretch = lambda u: 1.0 - np.tanh(b * (1.0 - u)) / np.tanh(b)  # noqa: E731
            left = self.x_left * stretch(u_left)
            right = self.x_right * stretch(u_right)
        nodes = np.concatenate([left, right])
        nodes[0] = self.x_left
        nodes[n_left] = 0.0
        nodes[-1] = self.x_right
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes are not strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "zero_index", n_left)

    @classmethod
    def from_nodes(cls, nodes) -> "Grid1D":
        """Wrap an explicit node array (must contain 0 exactly)."""
        nodes = np.asarray(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ConfigError("explicit grid needs at least 3 nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ConfigError("grid nodes must be strictly increasing")
        hits = np.flatnonzero(nodes == 0.0)
        if hits.size != 1:
            raise ConfigError("0 must be a grid node")
        if not (nodes[0] < 0.0 < nodes[-1]):
            raise ConfigError("grid must satisfy x_left < 0 < x_right")
        obj = object.__new__(cls)
        for name, val in (("x_left", float(nodes[0])), ("x_right", float(nodes[-1])),
                          ("n", int(nodes.size)), ("spacing", "explicit"),
                          ("strength", 0.0), ("zero_index", int(hits[0]))):
            object.__setattr__(obj, name, val)
        nodes = nodes.copy()
        nodes.setflags(write=False)
        object.__setattr__(obj, "nodes", nodes)
        return obj

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)

    def enlarged(self, factor: float = 1.25) -> "Grid1D":
        """Same spacing law on ``[factor*x_left, factor*x_right]`` with the
        node count scaled to keep the resolution."""
        if self.spacing == "explicit":
            raise ConfigError("cannot enlarge an explicit grid")
        n = int(round((self.n - 1) * factor)) + 1
        return Grid1D(self.x_left * factor, self.x_right * factor, n,
                      self.spacing, self.strength)

    def inner_half(self) -> np.ndarray:
        """Boolean mask of nodes in the middle half of ``[x_left, x_right]``."""
        quarter = 0.25 * (self.x_right - self.x_left)
        return (self.nodes >= self.x_left + quarter) & (self.nodes <= self.x_right - quarter)

    def to_dict(self) -> dict:
        return {"x_left": self.x_left, "x_right": self.x_right, "n": self.n,
                "spacing": self.spacing, "strength": self.strength}
