"""osc2c: compiler and deterministic execution engine for an OpenSCENARIO 2 subset."""

from .btree import Status
from .diagnostics import CompileError, Diagnostic
from .runtime import (CompiledScenario, MethodRegistry, builtin_registry,
                      compile_scenario, compile_source)
from .semantics import check
from .world import RoadMap, SimFault, World, load_map

__version__ = "0.1.0"

__all__ = [
    "CompileError",
    "CompiledScenario",
    "Diagnostic",
    "MethodRegistry",
    "RoadMap",
    "SimFault",
    "Status",
    "World",
    "builtin_registry",
    "check",
    "compile_scenario",
    "compile_source",
    "load_map",
    "__version__",
]
