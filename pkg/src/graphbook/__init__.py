"""Curriculum prerequisite-graph engine for personalized ebook assembly."""

from .model import (
    AltGroup,
    ChoicePoint,
    ClosurePolicy,
    ClosureResult,
    CurriculumGraph,
    EdgeKind,
    ExplicitChoiceError,
    GraphbookError,
    InvalidGraphError,
    PrerequisiteEdge,
    Resolution,
    TopicNode,
    UnknownNodeError,
    UnresolvedGroupError,
    ValidationReport,
)
from .validation import detect_cycle, ensure_usable, validate_graph
from .closure import (
    direct_predecessors,
    direct_successors,
    enumerate_closures,
    predecessor_closure,
)
from .sequencing import (
    Linearization,
    PopularityStore,
    RankingWeights,
    all_linearizations,
    count_linearizations,
    is_valid_order,
    rank_orderings,
    record_adoption,
    score_ordering,
    topological_order,
)

__version__ = "0.1.0"

__all__ = [
    "AltGroup",
    "ChoicePoint",
    "ClosurePolicy",
    "ClosureResult",
    "CurriculumGraph",
    "EdgeKind",
    "ExplicitChoiceError",
    "GraphbookError",
    "InvalidGraphError",
    "Linearization",
    "PopularityStore",
    "PrerequisiteEdge",
    "RankingWeights",
    "Resolution",
    "TopicNode",
    "UnknownNodeError",
    "UnresolvedGroupError",
    "ValidationReport",
    "all_linearizations",
    "count_linearizations",
    "detect_cycle",
    "direct_predecessors",
    "direct_successors",
    "ensure_usable",
    "enumerate_closures",
    "is_valid_order",
    "predecessor_closure",
    "rank_orderings",
    "record_adoption",
    "score_ordering",
    "topological_order",
    "validate_graph",
]
