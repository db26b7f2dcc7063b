"""Distance-covariance machinery: U-centering, the unbiased squared-dCov
estimator, and the kernel-smoothed conditional dependence statistic.

All estimators work on plain numpy arrays.  Samples may be scalar series of
shape ``(n,)`` or vector series of shape ``(n, d)``; distances are Euclidean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DegenerateWeightError, SampleSizeError

__all__ = [
    "KernelConfig",
    "CdcovStatistic",
    "pairwise_distances",
    "u_center",
    "dcov2_unbiased",
    "kernel_weights",
    "cdcov2_at_point",
    "cdcov2_mean",
]


def _as_sample(v: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError(f"{name} must be 1- or 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


def pairwise_distances(v: np.ndarray) -> np.ndarray:
    """n x n matrix of Euclidean distances between sample rows."""
    arr = _as_sample(v, "sample")
    if arr.shape[1] == 1:
        return np.abs(arr[:, 0, None] - arr[None, :, 0])
    diff = arr[:, None, :] - arr[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def u_center(a: np.ndarray) -> np.ndarray:
    """U-centered version of a square matrix.

    Off-diagonal entries become
    ``a_kl - rowsum_k/(n-2) - colsum_l/(n-2) + total/((n-1)(n-2))``;
    the diagonal is zeroed.  For a symmetric zero-diagonal input every row and
    column of the result sums to zero, which is what makes the dCov estimator
    built on it unbiased.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n < 4:
        raise SampleSizeError(f"U-centering requires n >= 4, got n={n}")
    rows = a.sum(axis=1, keepdims=True)
    cols = a.sum(axis=0, keepdims=True)
    total = a.sum()
    out = a - rows / (n - 2) - cols / (n - 2) + total / ((n - 1) * (n - 2))
    np.fill_diagonal(out, 0.0)
    return out


def dcov2_unbiased(x: np.ndarray, y: np.ndarray) -> float:
    """Unbiased estimator of squared distance covariance.

    ``(1/(n(n-3))) * sum_{i != j} dx~_ij dy~_ij`` over the U-centered distance
    matrices.  Being unbiased, the value can be negative.
    """
    dx = pairwise_distances(x)
    dy = pairwise_distances(y)
    n = dx.shape[0]
    if dy.shape[0] != n:
        raise DataError(f"sample sizes differ: {n} != {dy.shape[0]}")
    if n < 4:
        raise SampleSizeError(f"dcov2_unbiased requires n >= 4, got n={n}")
    return float(np.vdot(u_center(dx), u_center(dy)) / (n * (n - 3)))


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian product-kernel settings for conditional statistics.

    ``bandwidth`` is in standardized-Z units; ``None`` selects the
    rule-of-thumb ``n**(-1/(4+r))`` where ``r`` is the number of conditioning
    coordinates.  Each Z coordinate is scaled to unit sample variance before
    kernel evaluation unless ``standardize`` is disabled.
    """

    bandwidth: float | None = None
    standardize: bool = True

    def __post_init__(self) -> None:
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def resolve_bandwidth(self, n: int, r: int) -> float:
        if self.bandwidth is not None:
            return self.bandwidth
        return float(n) ** (-1.0 / (4.0 + r))


@dataclass(frozen=True)
class CdcovStatistic:
    """Conditional dependence statistic: mean and per-evaluation-point values."""

    value: float
    per_point: np.ndarray = field(repr=False)


def kernel_weights(z: np.ndarray, cfg: KernelConfig | None = None) -> np.ndarray:
    """Column-normalized Gaussian kernel weights.

    Returns W of shape (n, n) where ``W[i, u]`` is the weight of sample ``i``
    at evaluation point ``u``: ``K_H(z_i - z_u)`` divided by its column sum.
    The Gaussian prefactor ``(2 pi)^(-r/2) |H|^(-1)`` cancels in the ratio but
    is evaluated anyway for numerical transparency.
    """
    cfg = cfg or KernelConfig()
    zs = _as_sample(z, "z")
    n, r = zs.shape
    if cfg.standardize:
        sd = zs.std(axis=0, ddof=1)
        sd = np.where(sd > 0, sd, 1.0)  # constant coordinates add nothing
        zs = zs / sd
    h = cfg.resolve_bandwidth(n, r)
    diff = zs[:, None, :] - zs[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        k = (2.0 * math.pi) ** (-r / 2.0) * h ** (-r) * np.exp(-0.5 * sq / (h * h))
    colsum = k.sum(axis=0)
    if not np.all(np.isfinite(k)) or np.any(colsum <= 0):
        raise DegenerateWeightError(
            "kernel weights degenerate at some evaluation point; bandwidth too small"
        )
    return k / colsum


def _per_point_values(dx: np.ndarray, dy: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Conditional squared-dCov estimate at every evaluation point.

    The quadruple sum over the symmetrized distance products collapses, for
    column-normalized weights w, to ``S_AB + S_A * S_B - 2 T`` per point:

      S_AB(u) = sum_ij w_iu w_ju dx_ij dy_ij
      S_A(u)  = sum_ij w_iu w_ju dx_ij          (S_B analogous)
      T(u)    = sum_i  w_iu (dx w)_iu (dy w)_iu

    Equivalence with the literal quadruple sum is enforced by tests.
    """
    aw = dx @ w
    bw = dy @ w
    abw = (dx * dy) @ w
    s_ab = np.einsum("iu,iu->u", w, abw)
    s_a = np.einsum("iu,iu->u", w, aw)
    s_b = np.einsum("iu,iu->u", w, bw)
    t = np.einsum("iu,iu,iu->u", w, aw, bw)
    return s_ab + s_a * s_b - 2.0 * t


def _mean_profile(dx: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Matrix M with ``mean_u percdcov(u) = vdot(M, dy) / n`` for any dy.

    Folds the evaluation-point average into a single quadratic form in the
    second distance matrix, so bootstrap replicates cost O(n^2) each.
    """
    aw = dx @ w
    s_a = np.einsum("iu,iu->u", w, aw)
    g = w @ w.T
    q = (w * s_a) @ w.T
    h = (w * aw) @ w.T
    return dx * g + q - 2.0 * h


def cdcov2_at_point(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    u: int,
    cfg: KernelConfig | None = None,
) -> float:
    """Conditional squared-dCov estimate at the ``u``-th sample's Z value."""
    dx = pairwise_distances(x)
    dy = pairwise_distances(y)
    n = dx.shape[0]
    if dy.shape[0] != n or _as_sample(z, "z").shape[0] != n:
        raise DataError("x, y and z must share the sample dimension")
    if n < 4:
        raise SampleSizeError(f"cdcov2_at_point requires n >= 4, got n={n}")
    if not 0 <= u < n:
        raise IndexError(f"evaluation index {u} out of range for n={n}")
    w = kernel_weights(z, cfg)
    return float(_per_point_values(dx, dy, w)[u])


def cdcov2_mean(
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    cfg: KernelConfig | None = None,
) -> CdcovStatistic:
    """Average of the conditional squared-dCov estimates over all sample points.

    This is the plug-in conditional dependence statistic driving the
    conditional independence test: zero in population exactly under
    conditional independence.
    """
    dx = pairwise_distances(x)
    dy = pairwise_distances(y)
    n = dx.shape[0]
    if dy.shape[0] != n or _as_sample(z, "z").shape[0] != n:
        raise DataError("x, y and z must share the sample dimension")
    if n < 4:
        raise SampleSizeError(f"cdcov2_mean requires n >= 4, got n={n}")
    w = kernel_weights(z, cfg)
    per_point = _per_point_values(dx, dy, w)
    return CdcovStatistic(value=float(per_point.mean()), per_point=per_point)
