"""Value, pacing and semantic type checking."""

from .pacing import Event, Periodic, check_pacing_access, entails, infer_pacing_types
from .semantic import check_semantic_types
from .values import infer_value_types

__all__ = [
    "Event", "Periodic", "entails", "infer_value_types", "infer_pacing_types",
    "check_pacing_access", "check_semantic_types",
]
