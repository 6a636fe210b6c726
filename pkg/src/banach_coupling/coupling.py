"""Reflection couplings of coefficient Brownian motions.

The mirror construction: given a nonzero displacement x, the second
process starts at x and evolves as the reflection of the first across
the hyperplane orthogonal to x, until the first time the driving
projection ``u(t) = <x, B(t)>`` reaches half of ``|x|_H**2``.  From that
time on the two processes are the same object.  The gap is always the
scalar multiple ``s(t) * x`` with ``s(t) = 1 - 2 u(t) / |x|_H**2``, so
the whole coupling reduces to one scalar process per block.

Coupling-time detection on a grid scans intervals in order and treats
an interval as a hit when either its right endpoint has ``u >= b`` or
an exact Brownian-bridge draw says the level was touched inside the
interval.  The bridge draw for interval i consumes one uniform from the
detector's dedicated stream if and only if the log crossing probability
``g_i = -2 (b - u_{i-1}) (b - u_i) / (v dt_i)`` exceeds -745 (below
that, exp underflows to zero and no draw can succeed).  This consumption
rule is part of the determinism contract: the chunked scanner used for
long runs consumes streams identically to the reference scanner.

Blocks: a displacement too irregular for a single finite-energy
reflection is split into consecutive coefficient blocks whose ambient
tail norms fall below 2**-(n+1) after block n.  Each block is coupled by
an independent reflection driven by its own coefficients of the shared
path bundle, so the residual gap ``sum_n s_n(t) x_n`` decays even when
the full displacement has no finite Hilbert norm in the limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simulation import (
    LANE_AUX_BASE,
    LANE_BRIDGE_BASE,
    PathBundle,
    RngPolicy,
    TimeGrid,
    sample_bridge_max,
    sample_paths,
)
from .wiener_space import DimensionError, ModelSpec, w_norms

# exp(g) underflows to 0.0 a little below this; the explicit constant makes
# the uniform-consumption rule implementation-independent
_LOG_P_FLOOR = -745.0


class ReflectionError(ValueError):
    """Reflection or detection requested for a zero displacement."""


class PlanError(ValueError):
    """Block plans that do not fit their displacement or norm schedule."""


def reflect(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mirror y across the hyperplane orthogonal to x.

    Returns ``y - 2 (<x, y> / |x|**2) x``; maps x to -x and fixes every
    vector orthogonal to x.  An isometric involution.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    v = float(np.dot(x, x))
    if v == 0.0:
        raise ReflectionError("cannot reflect across a zero displacement")
    return y - (2.0 * float(np.dot(x, y)) / v) * x


@dataclass(frozen=True, eq=False)
class BlockPlan:
    """Consecutive coefficient blocks with recorded tail norms.

    ``cuts`` are zero-based boundary positions c_0 = 0 < c_1 < ... < c_N = K;
    block n (1-based) holds coefficients [c_{n-1}, c_n) of the planned
    displacement, stored as full-length projections.  ``tail_norms[n-1]``
    is the ambient norm of what remains after blocks 1..n.
    """

    cuts: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]
    tail_norms: tuple[float, ...]
    block_w_norms: tuple[float, ...]
    block_h_norms: tuple[float, ...]

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def ranges(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.cuts[:-1], self.cuts[1:]))


def plan_blocks(model: ModelSpec, x: np.ndarray) -> BlockPlan:
    """Greedy minimal cuts achieving tail norms <= 2**-(n+1).

    The final block absorbs whatever remains, so the last tail norm is
    exactly zero at this truncation.  Ties resolve to the smallest cut.
    Every block after the first is checked against the derived bound
    ``w_norm(block n+1) < 2**(1-n)``.
    """
    x = np.asarray(x, dtype=np.float64)
    K = model.K
    if x.ndim != 1 or x.size != K:
        raise DimensionError(f"expected {K} coefficients, got shape {x.shape}")
    if not np.any(x != 0.0):
        raise PlanError("cannot plan blocks for a zero displacement")

    # tails[c] = ambient norm of x with the first c coefficients removed
    zeroed = np.arange(K)[None, :] < np.arange(K + 1)[:, None]
    suffixes = np.where(zeroed, 0.0, x[None, :])
    tails = w_norms(model, suffixes)

    cuts = [0]
    tail_norms = []
    n = 1
    while cuts[-1] < K:
        bound = 2.0 ** (-(n + 1))
        candidates = np.nonzero(tails[cuts[-1] + 1 :] <= bound)[0]
        if candidates.size == 0:
            raise PlanError(f"truncation cannot meet the block-{n} tail bound {bound}")
        c = cuts[-1] + 1 + int(candidates[0])
        cuts.append(c)
        tail_norms.append(float(tails[c]))
        n += 1

    blocks = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        blk = np.zeros(K)
        blk[lo:hi] = x[lo:hi]
        blk.flags.writeable = False
        blocks.append(blk)
    block_w = tuple(float(t) for t in w_norms(model, np.asarray(blocks)))
    block_h = tuple(float(np.linalg.norm(b)) for b in blocks)
    for n in range(1, len(blocks)):  # block n+1 in 1-based counting
        if not block_w[n] < 2.0 ** (1 - n):
            raise PlanError(
                f"block {n + 1} ambient norm {block_w[n]} breaks the 2**{1 - n} bound"
            )
    return BlockPlan(
        cuts=tuple(cuts),
        blocks=tuple(blocks),
        tail_norms=tuple(tail_norms),
        block_w_norms=block_w,
        block_h_norms=block_h,
    )


@dataclass(frozen=True, eq=False)
class CouplingResult:
    """Trajectories and per-block coupling times of one replicate."""

    grid: TimeGrid
    replicate: int
    d_w: np.ndarray                      # ambient distance at each grid time
    factors: np.ndarray                  # per-block scalar factor, shape (N, |grid|)
    n_uncoupled: np.ndarray              # blocks still apart at each grid time
    coupling_times: tuple                # per-block time, None when not yet coupled
    coupled: bool
    block_ranges: tuple[tuple[int, int], ...]
    bundle: PathBundle | None = None
    coupled_paths: np.ndarray | None = None


def _detect_index(u: np.ndarray, b: float, v: float, dts: np.ndarray, bridge_gen):
    """Index of the detected crossing of level b by the projection path u.

    Scans intervals in order; see the module docstring for the exact
    endpoint/bridge rule and its stream-consumption contract.  Returns
    None when no crossing is detected by the end of the grid.
    """
    crossed = u[1:] >= b
    e = int(np.argmax(crossed)) + 1 if crossed.any() else None
    limit = (e - 1) if e is not None else u.size - 1
    if bridge_gen is not None and limit >= 1:
        d0 = b - u[:limit]
        d1 = b - u[1 : limit + 1]
        g = -2.0 * d0 * d1 / (v * dts[:limit])
        mask = g > _LOG_P_FLOOR
        nd = int(mask.sum())
        if nd:
            hits = bridge_gen.random(nd) < np.exp(g[mask])
            if hits.any():
                return int(np.nonzero(mask)[0][int(np.argmax(hits))]) + 1
    return e


def detect_coupling_time(
    x: np.ndarray,
    bundle: PathBundle,
    grid: TimeGrid,
    bridge: bool = False,
    bridge_lane: int = 0,
):
    """First grid time at which the coupling of displacement x closes.

    Endpoint rule: the first grid time with ``<x, B(t)> >= |x|**2 / 2``.
    With ``bridge=True`` an exact Brownian-bridge draw also detects
    crossings inside grid intervals; detected times are still reported
    at the interval's right endpoint.  Returns None if no crossing is
    detected by the horizon.
    """
    x = np.asarray(x, dtype=np.float64)
    v = float(np.dot(x, x))
    if v == 0.0:
        raise ReflectionError("cannot detect coupling for a zero displacement")
    if x.size != bundle.paths.shape[0] or grid.times.size != bundle.paths.shape[1]:
        raise DimensionError("displacement, bundle and grid sizes do not agree")
    u = x @ bundle.paths
    gen = None
    if bridge:
        gen = bundle.policy.stream(bundle.replicate, LANE_BRIDGE_BASE + bridge_lane)
    idx = _detect_index(u, v / 2.0, v, np.diff(grid.times), gen)
    return None if idx is None else float(grid.times[idx])


def _run_blocks(model, x, ranges, grid, policy, replicate, bridge, keep_paths):
    K = model.K
    bundle = sample_paths(K, grid, policy, replicate)
    G = grid.times.size
    dts = np.diff(grid.times)
    N = len(ranges)
    factors = np.zeros((N, G))
    detect_idx = []
    block_mat = np.zeros((N, K))
    for n, (lo, hi) in enumerate(ranges):
        alpha = x[lo:hi]
        block_mat[n, lo:hi] = alpha
        v = float(np.dot(alpha, alpha))
        if v == 0.0:
            # an all-zero block is coupled from the start
            detect_idx.append(0)
            continue
        u = alpha @ bundle.paths[lo:hi]
        gen = policy.stream(replicate, LANE_BRIDGE_BASE + lo) if bridge else None
        idx = _detect_index(u, v / 2.0, v, dts, gen)
        s = 1.0 - u / (v / 2.0)
        if idx is not None:
            s[idx:] = 0.0
        factors[n] = s
        detect_idx.append(idx)

    delta = factors.T @ block_mat
    d_w = w_norms(model, delta)
    idx_arr = np.array([G if i is None else i for i in detect_idx])
    n_uncoupled = (np.arange(G)[:, None] < idx_arr[None, :]).sum(axis=1)
    times = tuple(None if i is None else float(grid.times[i]) for i in detect_idx)
    coupled = all(i is not None for i in detect_idx)

    coupled_paths = None
    if keep_paths:
        coupled_paths = bundle.paths.copy()
        for n, (lo, hi) in enumerate(ranges):
            coupled_paths[lo:hi] += np.outer(x[lo:hi], factors[n])
        coupled_paths.flags.writeable = False
    return CouplingResult(
        grid=grid,
        replicate=replicate,
        d_w=d_w,
        factors=factors,
        n_uncoupled=n_uncoupled,
        coupling_times=times,
        coupled=coupled,
        block_ranges=tuple(ranges),
        bundle=bundle if keep_paths else None,
        coupled_paths=coupled_paths,
    )


def run_reflection_coupling(
    model: ModelSpec,
    x: np.ndarray,
    grid: TimeGrid,
    policy: RngPolicy,
    replicate: int,
    bridge: bool = True,
    keep_paths: bool = False,
) -> CouplingResult:
    """Couple a single finite-energy displacement by one reflection.

    The reflected process is ``x + B(t) - 2 (<x, B(t)> / |x|**2) x``
    until the detected coupling time and equals B(t), entry for entry,
    afterwards.  The recorded ambient distance is ``|s(t)| * w_norm(x)``
    with the scalar factor ``s(t) = 1 - 2 <x, B(t)> / |x|**2``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.K:
        raise DimensionError(f"expected {model.K} coefficients, got shape {x.shape}")
    if not np.any(x != 0.0):
        raise ReflectionError("cannot couple a zero displacement")
    return _run_blocks(model, x, [(0, model.K)], grid, policy, replicate, bridge, keep_paths)


def run_block_coupling(
    model: ModelSpec,
    x: np.ndarray,
    plan: BlockPlan,
    grid: TimeGrid,
    policy: RngPolicy,
    replicate: int,
    bridge: bool = True,
    keep_paths: bool = False,
) -> CouplingResult:
    """Couple each planned block by its own independent reflection.

    Block n is driven by coefficient paths [c_{n-1}, c_n) of the shared
    bundle, so the block couplings are independent without extra stream
    bookkeeping.  The residual gap at time t is
    ``sum over uncoupled n of s_n(t) x_n``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.K:
        raise DimensionError(f"expected {model.K} coefficients, got shape {x.shape}")
    if plan.cuts[0] != 0 or plan.cuts[-1] != x.size:
        raise PlanError("plan cuts do not span the displacement")
    assembled = np.sum(plan.blocks, axis=0)
    if not np.array_equal(assembled, x):
        raise PlanError("plan blocks do not reassemble the displacement")
    return _run_blocks(model, x, list(plan.ranges), grid, policy, replicate, bridge, keep_paths)


def grid_first_passage_time(
    x: np.ndarray,
    dt: float,
    n_steps: int,
    policy: RngPolicy,
    replicate: int,
    bridge: bool = True,
    chunk: int = 1 << 16,
):
    """Chunked scalar detector for long uniform grids.

    Simulates only the driving projection ``u(t) = <x, B(t)>`` in
    standardized units and applies the same endpoint/bridge detection
    rule as ``detect_coupling_time``, consuming the same streams, but
    generating paths chunk by chunk with early exit.  Returns the
    detected time or None when censored at ``n_steps * dt``.
    """
    x = np.asarray(x, dtype=np.float64)
    v = float(np.dot(x, x))
    if v == 0.0:
        raise ReflectionError("cannot detect coupling for a zero displacement")
    if not (dt > 0.0 and n_steps >= 1):
        raise ValueError("dt must be positive and n_steps at least 1")
    K = x.size
    # standardized units: partial sums of unit normals against the barrier
    # b_s; the bridge exponent -2 D0 D1 is scale free
    b_s = 0.5 * np.sqrt(v / dt)
    dirn = x / np.sqrt(v)
    gens = [policy.stream(replicate, k) for k in range(K)]
    bgen = policy.stream(replicate, LANE_BRIDGE_BASE) if bridge else None
    # bridge candidates need D0 * D1 <= -_LOG_P_FLOOR / 2; chunks whose
    # distances stay above sqrt of that cannot consume any uniform
    far = np.sqrt(-_LOG_P_FLOOR / 2.0)

    carry = 0.0
    done = 0
    while done < n_steps:
        L = min(chunk, n_steps - done)
        if K == 1:
            c = gens[0].standard_normal(L)
            if dirn[0] != 1.0:
                c = dirn[0] * c
        else:
            z = np.empty((K, L))
            for k in range(K):
                z[k] = gens[k].standard_normal(L)
            c = dirn @ z
        u = np.cumsum(c)
        if carry != 0.0:
            u += carry
        d_min = b_s - u.max()
        d_carry = b_s - carry
        if d_min > far and d_carry * d_min > -_LOG_P_FLOOR / 2.0:
            carry = float(u[-1])
            done += L
            continue

        crossed = u >= b_s
        e = int(np.argmax(crossed)) if crossed.any() else None
        limit = e if e is not None else L
        if bgen is not None and limit > 0:
            d1 = b_s - u[:limit]
            d0 = np.empty(limit)
            d0[0] = d_carry
            d0[1:] = d1[:-1]
            g = -2.0 * d0 * d1
            mask = g > _LOG_P_FLOOR
            nd = int(mask.sum())
            if nd:
                hits = bgen.random(nd) < np.exp(g[mask])
                if hits.any():
                    local = int(np.nonzero(mask)[0][int(np.argmax(hits))])
                    return (done + local + 1) * dt
        if e is not None:
            return (done + e + 1) * dt
        carry = float(u[-1])
        done += L
    return None


def sample_factor_sup(
    x: np.ndarray,
    dt: float,
    n_steps: int,
    policy: RngPolicy,
    replicate: int,
    chunk: int = 1 << 12,
):
    """Running maximum of the coupling factor until absorption.

    The factor ``s(t) = 1 - 2 <x, B(t)> / |x|**2`` is a Brownian motion
    of rate ``4 / |x|_H**2`` started at 1 and absorbed at 0.  Per grid
    interval this draws the exact bridge maximum given the endpoints and
    an exact bridge crossing of the absorbing level, then returns
    ``(sup, absorbed)`` where sup is the largest value seen up to and
    including the absorbing interval (or the horizon when the process
    survives).  The two uniform streams are consumed one full chunk at a
    time so consumption does not depend on the data.
    """
    x = np.asarray(x, dtype=np.float64)
    v = float(np.dot(x, x))
    if v == 0.0:
        raise ReflectionError("factor process needs a nonzero displacement")
    if not (dt > 0.0 and n_steps >= 1):
        raise ValueError("dt must be positive and n_steps at least 1")
    K = x.size
    var_dt = 4.0 / v * dt
    scale = -2.0 / np.sqrt(v) * np.sqrt(dt)  # maps unit normals to factor increments
    dirn = x / np.sqrt(v)
    gens = [policy.stream(replicate, k) for k in range(K)]
    gmax = policy.stream(replicate, LANE_AUX_BASE)
    gabs = policy.stream(replicate, LANE_AUX_BASE + 1)

    s_prev = 1.0
    sup = 1.0
    done = 0
    while done < n_steps:
        L = min(chunk, n_steps - done)
        if K == 1:
            c = gens[0].standard_normal(L)
        else:
            z = np.empty((K, L))
            for k in range(K):
                z[k] = gens[k].standard_normal(L)
            c = dirn @ z
        s = s_prev + np.cumsum(scale * c)
        s0 = np.empty(L)
        s0[0] = s_prev
        s0[1:] = s[:-1]
        u_max = 1.0 - gmax.random(L)  # in (0, 1]: keeps the bridge-max log finite
        u_abs = gabs.random(L)
        alive = (s0 > 0.0) & (s > 0.0)
        exponent = np.minimum(-2.0 * s0 * s / var_dt, 0.0)
        p_abs = np.where(alive, np.exp(exponent), 1.0)
        crossed = u_abs < p_abs
        m = sample_bridge_max(s0, s, var_dt, u_max)
        if crossed.any():
            j = int(np.argmax(crossed))
            return float(max(sup, m[: j + 1].max())), True
        sup = max(sup, float(m.max()))
        s_prev = float(s[-1])
        done += L
    return float(sup), False
