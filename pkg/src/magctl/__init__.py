"""Exact controllability analysis of a magnetically actuated satellite."""
from .expr import ConstraintViolation, DomainViolation, Expr, ExprError, Ring
from .model import P_STAR, InvalidParams, Params, build_system, diagnose_params, equilibrium
from .system import SystemSpec

__version__ = "0.1.0"

__all__ = [
    "ConstraintViolation",
    "DomainViolation",
    "Expr",
    "ExprError",
    "InvalidParams",
    "P_STAR",
    "Params",
    "Ring",
    "SystemSpec",
    "build_system",
    "diagnose_params",
    "equilibrium",
]
