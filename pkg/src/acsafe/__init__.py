"""Heuristic safety analysis for core-based / entity-labeling access control models."""

from acsafe.core import Command, Model, TransitionScheme, decide, el_components, run, step
from acsafe.errors import (
    AcsafeError,
    DslError,
    EvalError,
    HookError,
    SafetySpecError,
    SchemaError,
)
from acsafe.logic import ConditionExpr, apply_post, clauses_of, eval_pre
from acsafe.safety import SafetySpec, derive_leak_targets, extract_acf, is_leaked
from acsafe.schema import ComponentSchema, ELCategory, Kind, Schema
from acsafe.state import ModelState, StaticExt

__version__ = "0.1.0"

__all__ = [
    "AcsafeError",
    "Command",
    "ComponentSchema",
    "ConditionExpr",
    "DslError",
    "ELCategory",
    "EvalError",
    "HookError",
    "Kind",
    "Model",
    "ModelState",
    "SafetySpec",
    "SafetySpecError",
    "Schema",
    "SchemaError",
    "StaticExt",
    "TransitionScheme",
    "apply_post",
    "clauses_of",
    "decide",
    "derive_leak_targets",
    "el_components",
    "eval_pre",
    "extract_acf",
    "is_leaked",
    "run",
    "step",
]
