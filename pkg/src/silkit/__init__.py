"""Toolkit for port-interaction architectures: the composition algebra, an
interaction separation logic with two decision procedures, parametric
recursive architectures, FSM behavior composition and a reconfiguration
layer with local Hoare reasoning."""

from .arch import (
    Architecture, EMPTY, closes, closure_of, compose, is_closed,
    parse_architecture, print_architecture,
)
from .errors import SilkitError
from .formula import (
    AtomKind, Formula, in_rule_body, in_silplus, in_silstar, ports_of,
)
from .parser import parse_formula, print_formula
from .semantics import (
    EnumBudget, Valuation, check, enumerate_canonical, eval_bterm,
    is_minimal_model, oracle_entails, oracle_sat,
)

__all__ = [
    "Architecture", "EMPTY", "closes", "closure_of", "compose", "is_closed",
    "parse_architecture", "print_architecture", "SilkitError", "AtomKind",
    "Formula", "in_rule_body", "in_silplus", "in_silstar", "ports_of",
    "parse_formula", "print_formula", "EnumBudget", "Valuation", "check",
    "enumerate_canonical", "eval_bterm", "is_minimal_model",
    "oracle_entails", "oracle_sat",
]
