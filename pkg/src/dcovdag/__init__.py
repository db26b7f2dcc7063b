"""Nonparametric constraint-based causal structure learning.

Skeleton/CPDAG/PAG search driven by conditional-independence tests built on
(conditional) distance covariance, plus the partial-correlation baseline, an
exact d-separation oracle, SEM simulators and benchmark tooling.
"""

from .bench import BenchmarkReport, ScenarioConfig, emit_report, run_benchmark
from .citests import (
    CdcovCiTester,
    CiDecision,
    CiTester,
    FisherZCiTester,
    LatentProjection,
    OracleCiTester,
    TestConfig,
    cdcov_ci_test,
    dcov_ci_test,
    fisher_z_ci_test,
    oracle_ci_test,
)
from .data import Dataset, load_csv, write_csv
from .dependence import (
    CdcovStatistic,
    KernelConfig,
    cdcov2_at_point,
    cdcov2_mean,
    dcov2_unbiased,
    kernel_weights,
    pairwise_distances,
    u_center,
)
from .graphs import (
    Mark,
    MixedGraph,
    SepsetMap,
    cpdag_oracle,
    d_separated,
    possible_d_sep,
    shd,
    v_structures,
)
from .learn import (
    LearnConfig,
    SkeletonResult,
    extend_to_cpdag,
    fci_final_skeleton,
    fci_initial_skeleton,
    fci_stable_pipeline,
    orient_v_structures_fci,
    pc_stable_skeleton,
)
from .simulate import (
    LatentMask,
    NoiseScheme,
    NonlinearCoefficients,
    WeightedAdjacency,
    apply_latent_mask,
    draw_nonlinear_coefficients,
    random_dag_adjacency,
    sample_linear_sem,
    sample_nonlinear_sem,
    truth_graph,
)

__version__ = "0.1.0"
