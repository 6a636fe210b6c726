"""Truncated Gaussian model spaces.

Two concrete families are supported, each truncated to K coefficients
against an orthonormal basis of the underlying Hilbert space of
admissible shift directions:

* ``ClassicalWiener``: continuous paths on [0, 1].  The basis is the
  linear function t followed by the triangular Faber-Schauder functions,
  enumerated level by level, left to right within a level.  With J
  levels (the linear element plus tent levels j = 0..J-1) the
  coefficient count is K = 2**J.  The ambient norm is the sup norm,
  evaluated exactly on a dyadic grid of step 2**-m; any function in the
  truncated span is piecewise linear with knots on that grid once
  m >= J + 1, so the grid maximum is the true maximum.

* ``DiagonalSequence``: sequences weighted by positive scales sigma_k.
  The ambient norm is either the weighted l2 norm
  sqrt(sum (alpha_k * sigma_k)**2) or the weighted sup norm
  max |alpha_k * sigma_k|.

Coefficient vectors ("H-vectors") are plain float64 numpy arrays of
length K holding the coordinates against the basis; the Hilbert norm is
the unweighted Euclidean norm of the coefficients in both models.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

KIND_CLASSICAL = "ClassicalWiener"
KIND_DIAGONAL = "DiagonalSequence"
AMBIENT_L2 = "L2"
AMBIENT_SUP = "SUP"

# Coefficient vectors are plain float64 arrays; the alias names the contract.
HVector = np.ndarray


class DimensionError(ValueError):
    """Coefficient vectors with incompatible lengths or bad index ranges."""


class ModelError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class ModelSpec:
    """A truncated model space: basis family plus ambient-norm rule."""

    kind: str
    J: int | None = None
    m: int | None = None
    sigmas: tuple[float, ...] | None = None
    ambient: str | None = None

    @property
    def K(self) -> int:
        if self.kind == KIND_CLASSICAL:
            return 1 << self.J
        return len(self.sigmas)

    def to_json(self) -> str:
        if self.kind == KIND_CLASSICAL:
            doc = {"kind": self.kind, "J": self.J, "m": self.m}
        else:
            doc = {"kind": self.kind, "sigmas": list(self.sigmas), "ambient": self.ambient}
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str | dict) -> "ModelSpec":
        doc = json.loads(text) if isinstance(text, str) else dict(text)
        if not isinstance(doc, dict) or "kind" not in doc:
            raise ModelError("model document must be an object with a 'kind' field")
        kind = doc["kind"]
        if kind == KIND_CLASSICAL:
            extra = set(doc) - {"kind", "J", "m"}
            if extra:
                raise ModelError(f"unknown model fields: {sorted(extra)}")
            if "J" not in doc or "m" not in doc:
                raise ModelError("ClassicalWiener model requires fields 'J' and 'm'")
            return classical_model(doc["J"], doc["m"])
        if kind == KIND_DIAGONAL:
            extra = set(doc) - {"kind", "sigmas", "ambient"}
            if extra:
                raise ModelError(f"unknown model fields: {sorted(extra)}")
            if "sigmas" not in doc or "ambient" not in doc:
                raise ModelError("DiagonalSequence model requires fields 'sigmas' and 'ambient'")
            return diagonal_model(doc["sigmas"], doc["ambient"])
        raise ModelError(f"unknown model kind: {kind!r}")


def classical_model(J: int, m: int) -> ModelSpec:
    """Classical path model with K = 2**J coefficients, grid step 2**-m."""
    if not isinstance(J, int) or J < 0:
        raise ModelError("J must be a nonnegative integer")
    if not isinstance(m, int) or m < J + 1:
        raise ModelError("m must be an integer with m >= J + 1")
    return ModelSpec(kind=KIND_CLASSICAL, J=J, m=m)


def diagonal_model(sigmas: Iterable[float], ambient: str = AMBIENT_L2) -> ModelSpec:
    sig = tuple(float(s) for s in sigmas)
    if len(sig) < 1:
        raise ModelError("sigmas must contain at least one entry")
    if not all(np.isfinite(sig)) or min(sig) <= 0.0:
        raise ModelError("all sigmas must be finite and positive")
    if ambient not in (AMBIENT_L2, AMBIENT_SUP):
        raise ModelError(f"ambient must be '{AMBIENT_L2}' or '{AMBIENT_SUP}'")
    return ModelSpec(kind=KIND_DIAGONAL, sigmas=sig, ambient=ambient)


def hvector(coeffs: Iterable[float]) -> HVector:
    """Validate and freeze a coefficient vector."""
    x = np.array(coeffs, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise DimensionError("coefficient vector must be one-dimensional and nonempty")
    if not np.all(np.isfinite(x)):
        raise DimensionError("coefficient vector entries must be finite")
    x.flags.writeable = False
    return x


def h_inner(x: HVector, y: HVector) -> float:
    """Inner product of two coefficient vectors (plain dot product)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x, y))


def h_norm(x: HVector) -> float:
    """Hilbert norm sqrt(h_inner(x, x))."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.linalg.norm(x))


@functools.lru_cache(maxsize=32)
def _classical_basis(J: int, m: int) -> np.ndarray:
    """Basis values on the dyadic grid: array of shape (K, 2**m + 1).

    Row 0 is the linear element; row i = 2**j + k (1-based heap order)
    is the level-j tent supported on [k * 2**-j, (k+1) * 2**-j] with
    peak height 2**(-j/2 - 1).
    """
    K = 1 << J
    t = np.arange((1 << m) + 1, dtype=np.float64) / (1 << m)
    basis = np.empty((K, t.size), dtype=np.float64)
    basis[0] = t
    for i in range(1, K):
        j = i.bit_length() - 1
        k = i - (1 << j)
        u = t * (1 << j) - k  # local coordinate in [0, 1] on the support
        tent = np.clip(1.0 - np.abs(2.0 * u - 1.0), 0.0, None)
        tent[(u < 0.0) | (u > 1.0)] = 0.0
        basis[i] = 2.0 ** (-0.5 * j - 1.0) * tent
    basis.flags.writeable = False
    return basis


def _check_length(model: ModelSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.K:
        raise DimensionError(f"expected {model.K} coefficients, got shape {x.shape}")
    return x


def w_norm(model: ModelSpec, x: HVector) -> float:
    """Ambient norm of the element with coefficients x."""
    x = _check_length(model, x)
    return float(w_norms(model, x[None, :])[0])


def w_norms(model: ModelSpec, xs: np.ndarray) -> np.ndarray:
    """Ambient norms of a batch of coefficient rows, shape (n, K) -> (n,)."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != model.K:
        raise DimensionError(f"expected rows of {model.K} coefficients, got shape {xs.shape}")
    if model.kind == KIND_CLASSICAL:
        values = xs @ _classical_basis(model.J, model.m)
        return np.abs(values).max(axis=1)
    sig = np.asarray(model.sigmas)
    if model.ambient == AMBIENT_L2:
        return np.sqrt(((xs * sig) ** 2).sum(axis=1))
    return np.abs(xs * sig).max(axis=1)


def evaluate(model: ModelSpec, x: HVector, t) -> float | np.ndarray:
    """Value at time t of the classical-model path with coefficients x."""
    if model.kind != KIND_CLASSICAL:
        raise ModelError("evaluate is defined for the ClassicalWiener model only")
    x = _check_length(model, x)
    t_arr = np.asarray(t, dtype=np.float64)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError("t must lie in [0, 1]")
    out = x[0] * t_arr
    for i in range(1, model.K):
        if x[i] == 0.0:
            continue
        j = i.bit_length() - 1
        k = i - (1 << j)
        u = t_arr * (1 << j) - k
        tent = np.clip(1.0 - np.abs(2.0 * u - 1.0), 0.0, None)
        tent = np.where((u < 0.0) | (u > 1.0), 0.0, tent)
        out = out + x[i] * 2.0 ** (-0.5 * j - 1.0) * tent
    if np.ndim(t) == 0:
        return float(out)
    return out


def project_block(x: HVector, lo: int, hi: int) -> HVector:
    """Zero all coefficients outside the half-open position range [lo, hi).

    Positions are one-based: [1, 2) keeps only the first coefficient and
    [1, K+1) is the identity.  Projections onto disjoint ranges are
    exactly orthogonal and each projection is idempotent.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError("expected a one-dimensional coefficient vector")
    if not (1 <= lo <= hi <= x.size + 1):
        raise DimensionError(f"bad block range [{lo}, {hi}) for length {x.size}")
    out = np.zeros_like(x)
    out[lo - 1:hi - 1] = x[lo - 1:hi - 1]
    return out
