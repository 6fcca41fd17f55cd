"""Process-aware local explanations for process outcome predictors.

The package covers the full pipeline: parse a textual process definition,
simulate labeled event logs, train a logistic outcome predictor, and explain
individual predictions with perturbation-based surrogates whose sampling
either ignores the process (vanilla) or respects it (process-aware).
"""

from . import errors
from .process_model import (
    CausalityGraph,
    ProcessDefinition,
    derive_causality_graph,
    fixture_path,
    load_fixture,
    parse_process,
    reachable_indicators,
    serialize_process,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "CausalityGraph",
    "ProcessDefinition",
    "derive_causality_graph",
    "fixture_path",
    "load_fixture",
    "parse_process",
    "reachable_indicators",
    "serialize_process",
    "validate",
    "__version__",
]
