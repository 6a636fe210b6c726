"""Driving Brownian coefficient paths with reproducible, splittable randomness.

Every random draw in the package comes from a counter-based generator
(Philox) keyed by ``(master_seed, replicate, lane)`` through
``numpy.random.SeedSequence`` spawn keys.  A lane is a small integer
namespace identifying what the stream drives:

* lane k in [0, 2**32)          increments of coefficient path k
* lane 2**32 + i                interval-refinement draws for the
                                detector whose block starts at
                                coefficient i
* lane 2**33 + j                experiment-specific auxiliary draws
* lane 2**34                    closed-form first-passage sampler

The same (seed, replicate, lane) triple always yields the same stream
regardless of execution order, thread count, or how many values other
streams consumed.  Philox additionally guarantees that drawing a stream
in chunks produces the same values as drawing it in one shot, which the
chunked detectors rely on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

LANE_PATH_BASE = 0
LANE_BRIDGE_BASE = 1 << 32
LANE_AUX_BASE = 1 << 33
LANE_FIRST_PASSAGE = 1 << 34

_HEADER = struct.Struct("<4q")


class GridError(ValueError):
    """Malformed time grids."""


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times starting at 0."""

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or t.size < 1:
            raise GridError("grid must be a one-dimensional, nonempty time array")
        if t[0] != 0.0:
            raise GridError("grid must start at time 0")
        if not np.all(np.isfinite(t)):
            raise GridError("grid times must be finite")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise GridError("grid times must be strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "times", t)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return self.times.size - 1


def uniform_grid(horizon: float, step: float) -> TimeGrid:
    """Grid 0, step, 2*step, ... covering [0, horizon]."""
    if not (horizon > 0.0 and step > 0.0):
        raise GridError("horizon and step must be positive")
    n = int(np.ceil(horizon / step - 1e-12))
    return TimeGrid(step * np.arange(n + 1))


def checkpoint_grid(checkpoints) -> TimeGrid:
    """Grid consisting of 0 followed by the given positive times."""
    c = np.asarray(checkpoints, dtype=np.float64)
    if c.size < 1 or np.any(c <= 0.0):
        raise GridError("checkpoints must be positive times")
    return TimeGrid(np.concatenate(([0.0], c)))


@dataclass(frozen=True)
class RngPolicy:
    """Root of the deterministic stream derivation."""

    master_seed: int

    def __post_init__(self):
        if not isinstance(self.master_seed, int) or not (0 <= self.master_seed < 1 << 64):
            raise ValueError("master_seed must be an integer in [0, 2**64)")

    def stream(self, replicate: int, lane: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(replicate, lane))
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Simulated coefficient paths: K rows, one column per grid time."""

    paths: np.ndarray
    replicate: int
    policy: RngPolicy


def sample_paths(K: int, grid: TimeGrid, policy: RngPolicy, replicate: int) -> PathBundle:
    """Independent coefficient Brownian paths on the grid.

    Increments over grid intervals are exact Gaussian draws, so the grid
    values carry no time-discretization error.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if grid.steps < 1:
        raise GridError("grid must contain at least one interval")
    sqrt_dt = np.sqrt(np.diff(grid.times))
    paths = np.zeros((K, grid.times.size), dtype=np.float64)
    for k in range(K):
        z = policy.stream(replicate, LANE_PATH_BASE + k).standard_normal(grid.steps)
        np.cumsum(z * sqrt_dt, out=paths[k, 1:])
    paths.flags.writeable = False
    return PathBundle(paths=paths, replicate=replicate, policy=policy)


def sample_first_passage(a: float, policy: RngPolicy, replicate: int) -> float:
    """Draw the first time a rate-1 Brownian motion from a > 0 hits 0.

    Uses the closed-form transform a**2 / Z**2 with Z standard normal,
    whose law has distribution function t -> 2 * Phi_bar(a / sqrt(t)).
    This is an oracle draw: it carries no grid or detection bias.
    """
    if not a > 0.0:
        raise ValueError("a must be positive")
    gen = policy.stream(replicate, LANE_FIRST_PASSAGE)
    z = gen.standard_normal()
    while z == 0.0:  # probability-zero guard; keeps the draw finite
        z = gen.standard_normal()
    return float(a * a / (z * z))


def dump_path_bundle(bundle: PathBundle, path: str) -> None:
    """Binary dump: header (K, grid length, seed, replicate) + row-major f64 LE."""
    K, G = bundle.paths.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(K, G, bundle.policy.master_seed, bundle.replicate))
        fh.write(np.ascontiguousarray(bundle.paths, dtype="<f8").tobytes())


def load_path_bundle(path: str) -> PathBundle:
    with open(path, "rb") as fh:
        K, G, seed, replicate = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != K * G:
        raise ValueError("truncated path dump")
    paths = data.reshape(K, G).astype(np.float64)
    paths.flags.writeable = False
    return PathBundle(paths=paths, replicate=replicate, policy=RngPolicy(seed))


def bridge_crossing_prob(d0, d1, var_dt):
    """Probability that a Brownian bridge pinned at distances d0, d1 below a
    level touches it inside the interval; var_dt is the variance accrued
    over the interval.  Distances at or past the level give probability 1.
    """
    d0 = np.asarray(d0, dtype=np.float64)
    d1 = np.asarray(d1, dtype=np.float64)
    p = np.exp(-2.0 * d0 * d1 / var_dt)
    return np.where((d0 <= 0.0) | (d1 <= 0.0), 1.0, np.minimum(p, 1.0))


def sample_bridge_max(u0, u1, var_dt, uniform):
    """Exact draw of the maximum of a Brownian bridge between u0 and u1."""
    u0 = np.asarray(u0, dtype=np.float64)
    u1 = np.asarray(u1, dtype=np.float64)
    log_u = np.log(uniform)
    disc = (u1 - u0) ** 2 - 2.0 * var_dt * log_u
    return 0.5 * (u0 + u1 + np.sqrt(disc))
