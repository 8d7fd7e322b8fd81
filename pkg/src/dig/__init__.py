"""Data interface grammars: parse them, model their choices, bind values,
reduce to SQL, synthesize interfaces, and generate tutorials and workloads."""

from .ast import GrammarAst
from .backend import CatalogSnapshot, QueryResult, SqliteBackend, open_backend
from .binding import BindingState, Violation, validate_value
from .choices import (
    ChoiceModel,
    ChoiceVariable,
    ConstraintGraph,
    QualifiedName,
    build_constraint_graph,
    dependency_order,
    extract_choice_variables,
)
from .dbt import ProjectGraph, TemplatedModel, load_project, translate_model, translate_project
from .enumeration import enumerate_queries
from .errors import DigError
from .formatter import format_grammar
from .interface import (
    InteractionDecl,
    InterfaceSpec,
    MappingDecl,
    ViewDecl,
    check_valid,
    covers,
    synthesize,
    synthesize_default,
)
from .parser import parse_grammar
from .reduction import ReductionResult, reduce_grammar, reduce_rule_strict
from .rewrite import factor_rewrite, unroll_recursion
from .textparse import parse_input
from .tutorial import TutorialStep, plan_tutorial, replay
from .validate import ValidationReport, validate_grammar
from .workload import UserModel, WorkloadTrace, generate_workload

__version__ = "0.1.0"

__all__ = [
    "GrammarAst", "parse_grammar", "format_grammar", "validate_grammar",
    "ValidationReport", "ChoiceModel", "ChoiceVariable", "QualifiedName",
    "ConstraintGraph", "extract_choice_variables", "build_constraint_graph",
    "dependency_order", "BindingState", "Violation", "validate_value",
    "parse_input", "reduce_grammar", "reduce_rule_strict", "ReductionResult",
    "unroll_recursion", "factor_rewrite", "enumerate_queries",
    "SqliteBackend", "open_backend", "CatalogSnapshot", "QueryResult",
    "InterfaceSpec", "InteractionDecl", "MappingDecl", "ViewDecl",
    "covers", "check_valid", "synthesize", "synthesize_default",
    "TemplatedModel", "ProjectGraph", "load_project", "translate_model",
    "translate_project", "TutorialStep", "plan_tutorial", "replay",
    "UserModel", "WorkloadTrace", "generate_workload", "DigError",
    "__version__",
]
