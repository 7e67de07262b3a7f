"""Discrete information bottleneck solver and hierarchical information-flow simulator.

The package models a multi-level organization as a chain of
attention-limited compression stages over finite alphabets, quantifies
per-layer information retention exactly, and measures how skip
connections recover decision-relevant signal that strict reporting
chains filter away.
"""

from .bottleneck import (
    IBSolution,
    InfoCurvePoint,
    SolverConfig,
    anneal_ib,
    brute_force_ib,
    ib_lagrangian,
    solve_ib,
)
from .exceptions import (
    CapacityError,
    ConfigError,
    ConsistencyError,
    DimensionError,
    ValidationError,
)
from .experiments import (
    ComparisonReport,
    Scenario,
    builtin_scenario,
    compare_random_batch,
    compare_topologies,
    generate_scenario,
    info_curve,
    xor_source,
)
from .hierarchy import (
    ChainLink,
    EncoderChain,
    HierarchySpec,
    LayerSpec,
    LayerState,
    PropagationReport,
    SkipEdge,
    build_hierarchy,
    layer_beta,
    merge_skip,
    propagate,
    relevant_info_profile,
)
from .info_theory import (
    Channel,
    Distribution,
    DPIReport,
    JointDistribution,
    MarkovChainSpec,
    conditional_entropy,
    entropy,
    kl_divergence,
    mutual_information,
    permute_joint,
    push_through,
    verify_dpi,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Channel",
    "ChainLink",
    "ComparisonReport",
    "ConfigError",
    "ConsistencyError",
    "DimensionError",
    "DiscreteInformationBottleneck",
    "Distribution",
    "DPIReport",
    "EncoderChain",
    "HierarchySpec",
    "IBSolution",
    "InfoCurvePoint",
    "JointDistribution",
    "LayerSpec",
    "LayerState",
    "MarkovChainSpec",
    "PropagationReport",
    "Scenario",
    "SkipEdge",
    "SolverConfig",
    "ValidationError",
    "anneal_ib",
    "brute_force_ib",
    "build_hierarchy",
    "builtin_scenario",
    "compare_random_batch",
    "compare_topologies",
    "conditional_entropy",
    "entropy",
    "generate_scenario",
    "ib_lagrangian",
    "info_curve",
    "kl_divergence",
    "layer_beta",
    "merge_skip",
    "mutual_information",
    "permute_joint",
    "propagate",
    "push_through",
    "relevant_info_profile",
    "solve_ib",
    "verify_dpi",
    "xor_source",
]


def __getattr__(name):
    # Lazy import keeps scikit-learn off the CLI's startup path.
    if name == "DiscreteInformationBottleneck":
        from .estimator import DiscreteInformationBottleneck

        return DiscreteInformationBottleneck
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
