"""Typed syntax tree.

Every node is a frozen dataclass carrying its source span (keyword-only so
positional fields stay readable at construction sites).  ``to_dict`` /
``from_dict`` give a lossless structured form: serializing a tree to JSON
and reading it back yields an equal tree, spans included.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from .diagnostics import Span


@dataclass(frozen=True, slots=True, kw_only=True)
class Node:
    span: Span


# expressions

@dataclass(frozen=True, slots=True)
class NumberLiteral(Node):
    value: float


@dataclass(frozen=True, slots=True)
class QuantityLiteral(Node):
    value: float
    unit: str


@dataclass(frozen=True, slots=True)
class StringLiteral(Node):
    value: str


@dataclass(frozen=True, slots=True)
class Identifier(Node):
    name: str


@dataclass(frozen=True, slots=True)
class MemberAccess(Node):
    receiver: Node
    member: str


@dataclass(frozen=True, slots=True)
class MethodCall(Node):
    receiver: Node
    method: str
    args: list[Node]


@dataclass(frozen=True, slots=True)
class Argument(Node):
    name: str | None
    value: Node


@dataclass(frozen=True, slots=True)
class Binary(Node):
    op: str
    lhs: Node
    rhs: Node


@dataclass(frozen=True, slots=True)
class Unary(Node):
    op: str
    operand: Node


# wait conditions

@dataclass(frozen=True, slots=True)
class EventRef(Node):
    name: str


@dataclass(frozen=True, slots=True)
class RiseCondition(Node):
    expr: Node


@dataclass(frozen=True, slots=True)
class FallCondition(Node):
    expr: Node


@dataclass(frozen=True, slots=True)
class ElapsedCondition(Node):
    duration: Node


@dataclass(frozen=True, slots=True)
class BoolCondition(Node):
    expr: Node


# behaviors

@dataclass(frozen=True, slots=True)
class ModifierApplication(Node):
    name: str
    args: list[Node]


@dataclass(frozen=True, slots=True)
class ActionInvocation(Node):
    actor: str
    action: str
    args: list[Node]
    modifiers: list[Node]


@dataclass(frozen=True, slots=True)
class WaitStatement(Node):
    condition: Node


@dataclass(frozen=True, slots=True)
class EmitStatement(Node):
    event: str


@dataclass(frozen=True, slots=True)
class Composition(Node):
    kind: str  # serial | parallel | one_of
    children: list[Node]


# declarations

@dataclass(frozen=True, slots=True)
class KeepConstraint(Node):
    expr: Node


@dataclass(frozen=True, slots=True)
class FieldDecl(Node):
    name: str
    type_name: str
    constraints: list[Node]


@dataclass(frozen=True, slots=True)
class VarDecl(Node):
    name: str
    type_name: str
    init: Node


@dataclass(frozen=True, slots=True)
class DoBlock(Node):
    root: Composition


@dataclass(frozen=True, slots=True)
class ScenarioDecl(Node):
    name: str
    members: list[Node]
    body: DoBlock | None


@dataclass(frozen=True, slots=True)
class ImportDecl(Node):
    path: str


@dataclass(frozen=True, slots=True)
class UseDecl(Node):
    name: str


@dataclass(frozen=True, slots=True)
class Program(Node):
    imports: list[Node]
    uses: list[Node]
    scenarios: list[Node]


NODE_TYPES: dict[str, type[Node]] = {
    cls.__name__: cls
    for cls in (
        NumberLiteral, QuantityLiteral, StringLiteral, Identifier,
        MemberAccess, MethodCall, Argument, Binary, Unary,
        EventRef, RiseCondition, FallCondition, ElapsedCondition, BoolCondition,
        ModifierApplication, ActionInvocation, WaitStatement, EmitStatement,
        Composition, KeepConstraint, FieldDecl, VarDecl, DoBlock,
        ScenarioDecl, ImportDecl, UseDecl, Program,
    )
}


def to_dict(node: Node) -> dict:
    """Encode a tree as plain dicts/lists suitable for json.dumps."""
    span = node.span
    data: dict = {
        "node": type(node).__name__,
        "span": [span.line, span.col, span.end_line, span.end_col],
    }
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        data[f.name] = _encode(getattr(node, f.name))
    return data


def _encode(value):
    if isinstance(value, Node):
        return to_dict(value)
    if isinstance(value, list):
        return [_encode(v) for v in value]
    return value


def from_dict(data: dict) -> Node:
    """Inverse of to_dict; from_dict(to_dict(tree)) == tree."""
    cls = NODE_TYPES[data["node"]]
    kwargs = {"span": Span(*data["span"])}
    for f in dataclasses.fields(cls):
        if f.name != "span":
            kwargs[f.name] = _decode(data[f.name])
    return cls(**kwargs)


def _decode(value):
    if isinstance(value, dict) and "node" in value:
        return from_dict(value)
    if isinstance(value, list):
        return [_decode(v) for v in value]
    return value


def dump_json(node: Node) -> str:
    return json.dumps(to_dict(node), indent=2)


def load_json(text: str) -> Node:
    return from_dict(json.loads(text))
