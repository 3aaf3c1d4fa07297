"""Model checking of workflow nets with tables and guard constraints."""

from .dctl import Verdict, builtin_metrics, eval_atom, sat, sat_au, sat_eg, sat_eu, sat_ex, verify
from .model import (
    ModelError,
    Predicate,
    TableSchema,
    WftcNet,
    constraint_consistent,
    validate_workflow_structure,
)
from .srg import (
    CONSTRAINED,
    UNCONSTRAINED,
    ResourceLimitError,
    Srg,
    StateC,
    build_srg,
    enabled,
    fire,
    initial_state,
    refine,
    srg_stats,
)
from .textio import (
    ParseError,
    export_dot,
    export_json,
    import_json,
    parse_dctl,
    parse_model,
    serialize_model,
)

__all__ = [
    "CONSTRAINED",
    "UNCONSTRAINED",
    "ModelError",
    "ParseError",
    "Predicate",
    "ResourceLimitError",
    "Srg",
    "StateC",
    "TableSchema",
    "Verdict",
    "WftcNet",
    "build_srg",
    "builtin_metrics",
    "constraint_consistent",
    "enabled",
    "eval_atom",
    "export_dot",
    "export_json",
    "fire",
    "import_json",
    "initial_state",
    "parse_dctl",
    "parse_model",
    "refine",
    "sat",
    "sat_au",
    "sat_eg",
    "sat_eu",
    "sat_ex",
    "serialize_model",
    "srg_stats",
    "validate_workflow_structure",
    "verify",
]

__version__ = "0.1.0"
