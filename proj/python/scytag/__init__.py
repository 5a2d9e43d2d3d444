"""Attack-graph driven cyber twin pipeline."""

from ._core import (
    AbortError,
    CompletionError,
    ConsistencyError,
    Error,
    InfeasibleError,
    InfrastructureError,
    ParseError,
    SchedulingError,
    UndefinedMetricError,
    ValidationError,
    ability_success_parity,
    critical_hops,
    energy_wh,
    evaluate,
    listing,
    main,
    order_similarity,
    path_equivalence,
    reduce,
    reduction_ratios,
    relative_delta,
    stages,
    technique_coverage_parity,
    topology_facts,
)

__all__ = [name for name in dir() if not name.startswith("_")]
