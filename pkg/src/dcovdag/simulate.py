"""Random DAGs and synthetic data from linear/quadratic structural equation
models, with three noise families and latent-variable masking for
latent-confounder benchmarks.

Everything is seed-deterministic: identical seeds reproduce bit-identical
weights, coefficients and samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr

from .data import Dataset
from .errors import MaskError
from .graphs import Mark, MixedGraph

__all__ = [
    "NoiseScheme",
    "WeightedAdjacency",
    "NonlinearCoefficients",
    "LatentMask",
    "random_dag_adjacency",
    "truth_graph",
    "draw_nonlinear_coefficients",
    "solve_linear_sem",
    "sample_linear_sem",
    "solve_nonlinear_sem",
    "sample_nonlinear_sem",
    "apply_latent_mask",
]


class NoiseScheme(str, Enum):
    """Noise families: standard normal, normal pushed to an F(1,1) marginal,
    and an even normal/Cauchy mixture."""

    NORMAL = "normal"
    COPULA_F11 = "copula"
    NORMAL_CAUCHY_MIXTURE = "mixture"


@dataclass(frozen=True)
class WeightedAdjacency:
    """Strictly lower-triangular weight matrix of a random DAG.

    ``weights[i, j] != 0`` encodes the edge j -> i; nonzero entries lie in
    [0.1, 1).  ``sparsity`` is the Bernoulli probability used per entry, so
    the expected vertex degree is ``(p - 1) * sparsity``.
    """

    p: int
    weights: np.ndarray
    sparsity: float


@dataclass(frozen=True)
class NonlinearCoefficients:
    """Linear/quadratic edge coefficients on the support of a weight matrix."""

    linear: np.ndarray
    quadratic: np.ndarray


@dataclass(frozen=True)
class LatentMask:
    """Partition of the truth vertices into latent and observed."""

    latent: frozenset[int]
    observed: tuple[int, ...]


def random_dag_adjacency(p: int, s: float, seed: int) -> WeightedAdjacency:
    """Draw a weighted DAG: each lower-triangle entry is present with
    probability ``s`` and weighted Uniform(0.1, 1)."""
    if p < 2:
        raise ValueError(f"need p >= 2 vertices, got {p}")
    if not 0.0 < s < 1.0:
        raise ValueError(f"sparsity must be in (0,1), got {s}")
    rng = np.random.default_rng(seed)
    present = rng.random((p, p)) < s
    values = rng.uniform(0.1, 1.0, size=(p, p))
    lower = np.tril(np.ones((p, p), dtype=bool), k=-1)
    weights = np.where(lower & present, values, 0.0)
    return WeightedAdjacency(p=p, weights=weights, sparsity=s)


def truth_graph(adj: WeightedAdjacency) -> MixedGraph:
    """DAG with edge j -> i for every nonzero weight."""
    g = MixedGraph(adj.p)
    rows, cols = np.nonzero(adj.weights)
    for i, j in zip(rows.tolist(), cols.tolist()):
        g.add_edge(j, i, Mark.TAIL, Mark.ARROW)
    return g


def _draw_noise(scheme: NoiseScheme, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    if scheme is NoiseScheme.NORMAL:
        return rng.standard_normal((n, p))
    if scheme is NoiseScheme.COPULA_F11:
        # F(1,1) is the law of a squared standard Cauchy, so the quantile
        # function has the closed form tan^2(pi u / 2).
        gauss = rng.standard_normal((n, p))
        return np.tan(0.5 * np.pi * ndtr(gauss)) ** 2
    if scheme is NoiseScheme.NORMAL_CAUCHY_MIXTURE:
        pick_normal = rng.random((n, p)) < 0.5
        gauss = rng.standard_normal((n, p))
        cauchy = np.tan(np.pi * (rng.random((n, p)) - 0.5))
        return np.where(pick_normal, gauss, cauchy)
    raise ValueError(f"unknown noise scheme: {scheme!r}")


def _column_names(p: int) -> tuple[str, ...]:
    return tuple(f"x{i}" for i in range(p))


def solve_linear_sem(weights: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Forward substitution in index order: exact because the weight matrix is
    strictly lower triangular."""
    x = np.empty_like(eps, dtype=np.float64)
    for i in range(weights.shape[0]):
        x[:, i] = eps[:, i] + x[:, :i] @ weights[i, :i]
    return x


def sample_linear_sem(
    adj: WeightedAdjacency, scheme: NoiseScheme, n: int, seed: int
) -> Dataset:
    """Sample the linear model: each variable is its weighted parents plus
    noise drawn from the chosen scheme."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(seed)
    eps = _draw_noise(scheme, n, adj.p, rng)
    return Dataset(names=_column_names(adj.p), values=solve_linear_sem(adj.weights, eps))


def draw_nonlinear_coefficients(adj: WeightedAdjacency, seed: int) -> NonlinearCoefficients:
    """Linear coefficients ~ N(0,1) and quadratic ~ N(0, 0.5) (variance),
    zero wherever the weight matrix is zero."""
    rng = np.random.default_rng(seed)
    support = adj.weights != 0
    linear = np.where(support, rng.standard_normal((adj.p, adj.p)), 0.0)
    quadratic = np.where(support, rng.normal(0.0, np.sqrt(0.5), (adj.p, adj.p)), 0.0)
    return NonlinearCoefficients(linear=linear, quadratic=quadratic)


def solve_nonlinear_sem(coef: NonlinearCoefficients, eps: np.ndarray) -> np.ndarray:
    """Evaluate the quadratic model in index order."""
    x = np.empty_like(eps, dtype=np.float64)
    for i in range(coef.linear.shape[0]):
        x[:, i] = (
            eps[:, i]
            + x[:, :i] @ coef.linear[i, :i]
            + (x[:, :i] ** 2) @ coef.quadratic[i, :i]
        )
    return x


def sample_nonlinear_sem(
    adj: WeightedAdjacency, coef: NonlinearCoefficients, n: int, seed: int
) -> Dataset:
    """Sample the quadratic model: each variable is a linear+squared function
    of its parents plus standard normal noise."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n, adj.p))
    return Dataset(names=_column_names(adj.p), values=solve_nonlinear_sem(coef, eps))


def apply_latent_mask(
    truth: MixedGraph, data: Dataset, seed: int
) -> tuple[Dataset, LatentMask]:
    """Hide half of the eligible vertices (parentless with at least one child).

    The chosen columns are dropped from the dataset; the returned mask maps
    the remaining columns back to truth vertices for ground-truth scoring.
    """
    eligible = sorted(
        v for v in range(truth.p) if not truth.parents(v) and truth.children(v)
    )
    if not eligible:
        raise MaskError("no parentless vertex with a child to mask")
    rng = np.random.default_rng(seed)
    k = len(eligible) // 2
    latent = frozenset(rng.choice(eligible, size=k, replace=False).tolist())
    observed = tuple(v for v in range(truth.p) if v not in latent)
    masked = Dataset(
        names=tuple(data.names[v] for v in observed),
        values=data.values[:, observed],
    )
    return masked, LatentMask(latent=latent, observed=observed)
