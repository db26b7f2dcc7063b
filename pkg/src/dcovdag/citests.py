"""Conditional independence tests behind one interface.

Four testers share the decision contract (``independent`` iff the statistic
does not exceed the threshold, deterministic given a seed):

* conditional distance covariance with a kernel-weighted local bootstrap,
* unconditional distance covariance with a permutation bootstrap,
* the Fisher-z partial-correlation baseline,
* an exact d-separation oracle for ground-truth runs.

Every test derives its RNG substream from ``(seed, unordered pair, sorted
conditioning set)``, so decisions do not depend on invocation order or on
which endpoint is listed first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.stats import norm

from .dependence import (
    KernelConfig,
    _mean_profile,
    kernel_weights,
    pairwise_distances,
    u_center,
)
from .errors import RankError, SampleSizeError
from .graphs import MixedGraph, d_separated

__all__ = [
    "TestConfig",
    "CiDecision",
    "CiTester",
    "CdcovCiTester",
    "FisherZCiTester",
    "OracleCiTester",
    "LatentProjection",
    "cdcov_ci_test",
    "dcov_ci_test",
    "fisher_z_ci_test",
    "oracle_ci_test",
]

COND_NUMBER_LIMIT = 1e12


@dataclass(frozen=True)
class TestConfig:
    """Shared test settings: level, bootstrap size, seed and kernel."""

    __test__ = False  # not a pytest collection target

    alpha: float = 0.05
    n_boot: int = 199
    seed: int = 0
    kernel: KernelConfig = field(default_factory=KernelConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.n_boot < 1:
            raise ValueError(f"n_boot must be >= 1, got {self.n_boot}")


@dataclass(frozen=True)
class CiDecision:
    """Outcome of one conditional independence test."""

    statistic: float
    threshold: float
    independent: bool
    replicates_used: int


def _rng_for(seed: int, a: int, b: int, s: Iterable[int]) -> np.random.Generator:
    lo, hi = (a, b) if a < b else (b, a)
    key = (lo, hi, *sorted(s))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _bootstrap_threshold(replicates: np.ndarray, alpha: float) -> float:
    """Upper empirical quantile: the ceil((1-alpha)(R+1))-th order statistic."""
    r = replicates.shape[0]
    k = min(math.ceil((1.0 - alpha) * (r + 1)), r)
    return float(np.sort(replicates)[k - 1])


def dcov_ci_test(a: int, b: int, data, cfg: TestConfig) -> CiDecision:
    """Unconditional independence test via the unbiased squared-dCov statistic.

    The threshold is the upper empirical quantile of permutation replicates
    (the higher-indexed column is permuted and the statistic recomputed).
    """
    n = data.values.shape[0]
    if n < 4:
        raise SampleSizeError(f"dcov test requires n >= 4, got n={n}")
    lo, hi = (a, b) if a < b else (b, a)
    dx_t = u_center(pairwise_distances(data.values[:, lo]))
    dy_t = u_center(pairwise_distances(data.values[:, hi]))
    scale = n * (n - 3)
    stat = float(np.vdot(dx_t, dy_t) / scale)

    rng = _rng_for(cfg.seed, a, b, ())
    reps = np.empty(cfg.n_boot)
    for r in range(cfg.n_boot):
        # permuting the U-centered matrix equals U-centering permuted distances
        perm = rng.permutation(n)
        reps[r] = np.vdot(dx_t, dy_t[np.ix_(perm, perm)]) / scale
    threshold = _bootstrap_threshold(reps, cfg.alpha)
    return CiDecision(stat, threshold, stat <= threshold, cfg.n_boot)


def cdcov_ci_test(a: int, b: int, s: Iterable[int], data, cfg: TestConfig) -> CiDecision:
    """Conditional independence test via the conditional squared-dCov statistic.

    Calibration uses a local bootstrap: holding the first variable and the
    conditioning block fixed, each replicate redraws the second variable
    row-wise from its observed values with probabilities proportional to the
    kernel weight of the corresponding conditioning rows, which preserves the
    conditional law of the second variable while severing its tie to the
    first.  The threshold is the upper empirical quantile of the replicate
    statistics.
    """
    s = sorted(set(s))
    if not s:
        raise ValueError("empty conditioning set: use dcov_ci_test")
    n = data.values.shape[0]
    if n < 4:
        raise SampleSizeError(f"cdcov test requires n >= 4, got n={n}")
    lo, hi = (a, b) if a < b else (b, a)
    x = data.values[:, lo]
    y = data.values[:, hi]
    z = data.values[:, s]

    w = kernel_weights(z, cfg.kernel)
    dx = pairwise_distances(x)
    profile = _mean_profile(dx, w)
    dy = pairwise_distances(y)
    stat = float(np.vdot(profile, dy) / n)

    rng = _rng_for(cfg.seed, a, b, s)
    cw = np.cumsum(w, axis=0)
    cw[-1, :] = 1.0  # close the CDF against rounding
    draws = rng.random((cfg.n_boot, n))
    idx = (draws[:, None, :] <= cw[None, :, :]).argmax(axis=1)
    y_star = y[idx]
    dy_star = np.abs(y_star[:, :, None] - y_star[:, None, :])
    reps = np.einsum("ij,rij->r", profile, dy_star) / n
    threshold = _bootstrap_threshold(reps, cfg.alpha)
    return CiDecision(stat, threshold, stat <= threshold, cfg.n_boot)


def fisher_z_ci_test(a: int, b: int, s: Iterable[int], data, cfg: TestConfig) -> CiDecision:
    """Partial-correlation test with the Fisher z transform.

    The partial correlation is read off the inverse of the sample covariance
    over ``{a, b} + s`` (condition number guarded); with an empty conditioning
    set this reduces to the plain correlation, which keeps perfectly
    correlated pairs decidable instead of failing on the singular 2x2 matrix.
    """
    s = sorted(set(s))
    n = data.values.shape[0]
    dof = n - len(s) - 3
    if dof <= 0:
        raise SampleSizeError(f"fisher-z requires n - |s| - 3 > 0, got n={n}, |s|={len(s)}")
    cols = [min(a, b), max(a, b)] + s  # canonical order keeps (a,b)/(b,a) bit-identical
    c = np.cov(data.values[:, cols], rowvar=False)
    var = np.diag(c)
    if not np.all(np.isfinite(c)) or np.any(var <= 0):
        raise RankError(f"degenerate variance in columns {cols}")
    # standardize so the condition guard is scale-invariant; the partial
    # correlation read off the inverse is unchanged
    sd = np.sqrt(var)
    corr = c / np.outer(sd, sd)
    if s:
        if np.linalg.cond(corr) > COND_NUMBER_LIMIT:
            raise RankError(f"covariance submatrix for ({a},{b}|{s}) is singular")
        prec = np.linalg.inv(corr)
        denom = prec[0, 0] * prec[1, 1]
        if denom <= 0:
            raise RankError(f"covariance submatrix for ({a},{b}|{s}) is singular")
        r = -prec[0, 1] / math.sqrt(denom)
    else:
        r = corr[0, 1]
    r = min(1.0, max(-1.0, float(r)))
    if abs(r) >= 1.0:
        stat = math.inf
    else:
        stat = math.sqrt(dof) * abs(math.atanh(r))
    threshold = float(norm.ppf(1.0 - cfg.alpha / 2.0))
    return CiDecision(stat, threshold, stat <= threshold, 0)


def oracle_ci_test(a: int, b: int, s: Iterable[int], truth: MixedGraph) -> CiDecision:
    """Exact test: independent iff d-separated in the ground-truth DAG.

    Statistic/threshold carry a 0/1-vs-0 sentinel so the decision invariant
    (independent iff statistic <= threshold) still holds.
    """
    independent = d_separated(truth, a, b, frozenset(s))
    return CiDecision(0.0 if independent else 1.0, 0.0, independent, 0)


@dataclass(frozen=True)
class LatentProjection:
    """Ground-truth source for oracle runs over a subset of observed vertices.

    ``observed[i]`` is the truth-DAG vertex behind observed column ``i``;
    oracle queries are translated accordingly, which realizes m-separation
    over the observed margin when there are no selection variables.
    """

    truth: MixedGraph
    observed: tuple[int, ...]

    @property
    def p(self) -> int:
        return len(self.observed)


class CiTester:
    """Interface: ``test(a, b, s, source) -> CiDecision``.

    Implementations are stateless apart from memoization and must return the
    same decision for ``(a, b, s)`` and ``(b, a, s)`` under the same seed.
    """

    def test(self, a: int, b: int, s: Iterable[int], source) -> CiDecision:
        raise NotImplementedError


class _MemoizingTester(CiTester):
    """Caches decisions per (source, unordered pair, conditioning set)."""

    def __init__(self, cfg: TestConfig):
        self.cfg = cfg
        self._memo: dict[tuple, CiDecision] = {}
        self._memo_source = None

    def test(self, a: int, b: int, s: Iterable[int], source) -> CiDecision:
        if source is not self._memo_source:
            self._memo = {}
            self._memo_source = source
        key = (min(a, b), max(a, b), tuple(sorted(s)))
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = self._decide(a, b, frozenset(s), source)
        return hit

    def _decide(self, a: int, b: int, s: frozenset[int], source) -> CiDecision:
        raise NotImplementedError


class CdcovCiTester(_MemoizingTester):
    """Distance-covariance tester; empty conditioning sets are dispatched to
    the unconditional permutation test, everything else to the local
    bootstrap."""

    def _decide(self, a: int, b: int, s: frozenset[int], source) -> CiDecision:
        if s:
            return cdcov_ci_test(a, b, s, source, self.cfg)
        return dcov_ci_test(a, b, source, self.cfg)


class FisherZCiTester(_MemoizingTester):
    """Partial-correlation baseline tester."""

    def _decide(self, a: int, b: int, s: frozenset[int], source) -> CiDecision:
        return fisher_z_ci_test(a, b, s, source, self.cfg)


class OracleCiTester(CiTester):
    """d-separation oracle; the source is the truth DAG or a LatentProjection."""

    def __init__(self, truth: MixedGraph | None = None):
        self.truth = truth

    def test(self, a: int, b: int, s: Iterable[int], source=None) -> CiDecision:
        src = source if source is not None else self.truth
        if src is None:
            raise ValueError("oracle tester needs a truth graph (constructor or source)")
        if isinstance(src, LatentProjection):
            v = src.observed
            return oracle_ci_test(v[a], v[b], {v[c] for c in s}, src.truth)
        return oracle_ci_test(a, b, s, src)
