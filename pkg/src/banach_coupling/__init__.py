"""Reflection couplings of Banach-valued Brownian motions on truncated
model spaces, with closed-form laws to verify them against."""

from .analysis import (
    EmpiricalSample,
    LawSpec,
    cameron_martin_log_density,
    empirical_sample,
    first_passage_cdf,
    join_mass,
    ks_report,
    ks_statistic,
    max_coupling_prob,
    ruin_check,
    std_normal_tail,
)
from .coupling import (
    BlockPlan,
    CouplingResult,
    PlanError,
    ReflectionError,
    detect_coupling_time,
    plan_blocks,
    reflect,
    run_block_coupling,
    run_reflection_coupling,
)
from .simulation import (
    GridError,
    PathBundle,
    RngPolicy,
    TimeGrid,
    checkpoint_grid,
    dump_path_bundle,
    load_path_bundle,
    sample_first_passage,
    sample_paths,
    uniform_grid,
)
from .wiener_space import (
    DimensionError,
    HVector,
    ModelError,
    ModelSpec,
    classical_model,
    diagonal_model,
    evaluate,
    h_inner,
    h_norm,
    hvector,
    project_block,
    w_norm,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPlan",
    "CouplingResult",
    "DimensionError",
    "EmpiricalSample",
    "GridError",
    "HVector",
    "LawSpec",
    "ModelError",
    "ModelSpec",
    "PathBundle",
    "PlanError",
    "ReflectionError",
    "RngPolicy",
    "TimeGrid",
    "cameron_martin_log_density",
    "checkpoint_grid",
    "classical_model",
    "detect_coupling_time",
    "diagonal_model",
    "dump_path_bundle",
    "empirical_sample",
    "evaluate",
    "first_passage_cdf",
    "h_inner",
    "h_norm",
    "hvector",
    "join_mass",
    "ks_report",
    "ks_statistic",
    "load_path_bundle",
    "max_coupling_prob",
    "plan_blocks",
    "project_block",
    "reflect",
    "ruin_check",
    "run_block_coupling",
    "run_reflection_coupling",
    "sample_first_passage",
    "sample_paths",
    "std_normal_tail",
    "uniform_grid",
    "w_norm",
]
