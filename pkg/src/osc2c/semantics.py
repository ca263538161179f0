"""Two-pass semantic analysis.

The definition pass builds the scope tree and registers every declared
symbol (fields, vars, and event names harvested from emit/wait sites) so
forward references are legal by construction.  The resolution pass then
binds references, walks actor inheritance chains, checks dimensions, and
binds the scenario to a builtin map.  Diagnostics accumulate in source
order; errors never abort the pass, so one run reports everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast, prelude, units
from .diagnostics import ERROR, WARNING, CompileError, Diagnostic, Span
from .parser import parse
from .units import DIMENSIONLESS, DURATION, Dimension, dimension_name


# static expression types

class ExprType:
    pass


@dataclass(frozen=True, slots=True)
class QuantityType(ExprType):
    dim: Dimension


@dataclass(frozen=True, slots=True)
class ActorRef(ExprType):
    type_name: str
    instance: str


@dataclass(frozen=True, slots=True)
class PositionType(ExprType):
    instance: str


@dataclass(frozen=True, slots=True)
class EnumWord(ExprType):
    word: str


class _Singleton(ExprType):
    def __init__(self, label: str):
        self.label = label

    def __repr__(self):
        return self.label


STRING = _Singleton("string")
BOOL = _Singleton("bool")
UNKNOWN = _Singleton("unknown")

COMPARISONS = ("==", "!=", "<", "<=", ">", ">=")
ARITHMETIC = ("+", "-", "*", "/")


@dataclass
class Symbol:
    name: str
    kind: str  # actor-type | actor-instance | variable | modifier | event
    #          # | physical-type | builtin-map
    declared_type: str | None = None
    span: Span | None = None
    resolved: bool = False


class Scope:
    def __init__(self, kind: str, parent: "Scope | None" = None):
        self.kind = kind
        self.parent = parent
        self.symbols: dict[tuple[str, str], Symbol] = {}
        self.children: list[Scope] = []
        if parent is not None:
            parent.children.append(self)

    def define(self, symbol: Symbol) -> Symbol | None:
        """Add a symbol; returns the existing one on a same-kind collision."""
        key = (symbol.name, symbol.kind)
        existing = self.symbols.get(key)
        if existing is not None:
            return existing
        self.symbols[key] = symbol
        return None

    def lookup(self, name: str, kinds: tuple[str, ...]) -> Symbol | None:
        scope: Scope | None = self
        while scope is not None:
            for kind in kinds:
                symbol = scope.symbols.get((name, kind))
                if symbol is not None:
                    return symbol
            scope = scope.parent
        return None


@dataclass
class ScenarioInfo:
    decl: ast.ScenarioDecl
    scope: Scope
    map_name: str | None = None
    fields: dict[str, str] = field(default_factory=dict)
    constraints: dict[str, dict[str, str]] = field(default_factory=dict)
    variables: dict[str, ast.VarDecl] = field(default_factory=dict)
    events: list[str] = field(default_factory=list)


@dataclass
class Analysis:
    diagnostics: list[Diagnostic]
    program: ast.Program | None = None
    global_scope: Scope | None = None
    scenarios: list[ScenarioInfo] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == ERROR]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors


def _global_scope() -> Scope:
    scope = Scope("global")
    for name in prelude.ACTOR_TYPES:
        scope.define(Symbol(name, "actor-type", resolved=True))
    for name in prelude.PHYSICAL_TYPES:
        scope.define(Symbol(name, "physical-type", resolved=True))
    for name in prelude.MODIFIERS:
        scope.define(Symbol(name, "modifier", resolved=True))
    for name in prelude.BUILTIN_MAPS:
        scope.define(Symbol(name, "builtin-map", resolved=True))
    return scope


class Analyzer:
    def __init__(self, filename: str,
                 extra_actions: dict[str, frozenset[str]] | None = None):
        self.filename = filename
        self.extra_actions = extra_actions or {}
        self.diagnostics: list[Diagnostic] = []

    def report(self, severity: str, code: str, message: str, span: Span) -> None:
        self.diagnostics.append(
            Diagnostic(severity, code, message, span, self.filename))

    def error(self, code: str, message: str, span: Span) -> None:
        self.report(ERROR, code, message, span)

    # definition pass

    def definition_pass(self, program: ast.Program) -> tuple[Scope, list[ScenarioInfo]]:
        global_scope = _global_scope()
        infos = []
        for scen in program.scenarios:
            scope = Scope("scenario", global_scope)
            info = ScenarioInfo(scen, scope)
            for member in scen.members:
                if isinstance(member, ast.FieldDecl):
                    self._define(scope, Symbol(member.name, "actor-instance",
                                               member.type_name, member.span))
                elif isinstance(member, ast.VarDecl):
                    self._define(scope, Symbol(member.name, "variable",
                                               member.type_name, member.span))
            if scen.body is not None:
                self._define_events(scen.body.root, scope)
                self._mirror_blocks(scen.body.root, scope)
            info.events = sorted(name for (name, kind) in scope.symbols
                                 if kind == "event")
            infos.append(info)
        return global_scope, infos

    def _define(self, scope: Scope, symbol: Symbol) -> None:
        existing = scope.define(symbol)
        if existing is not None:
            self.error("E005", f"duplicate definition of '{symbol.name}'",
                       symbol.span)

    def _define_events(self, node: ast.Node, scope: Scope) -> None:
        # events are open-world: any emit or wait site declares the name
        if isinstance(node, ast.EmitStatement):
            scope.define(Symbol(node.event, "event", span=node.span))
        elif isinstance(node, ast.WaitStatement) \
                and isinstance(node.condition, ast.EventRef):
            scope.define(Symbol(node.condition.name, "event",
                                span=node.condition.span))
        elif isinstance(node, ast.Composition):
            for child in node.children:
                self._define_events(child, scope)

    def _mirror_blocks(self, node: ast.Composition, parent: Scope) -> None:
        block = Scope("block", parent)
        for child in node.children:
            if isinstance(child, ast.Composition):
                self._mirror_blocks(child, block)

    # resolution pass

    def resolution_pass(self, infos: list[ScenarioInfo]) -> None:
        for info in infos:
            for member in info.decl.members:
                if isinstance(member, ast.FieldDecl):
                    self._resolve_field(member, info)
                else:
                    self._resolve_var(member, info)
            if info.decl.body is not None:
                self._resolve_behavior(info.decl.body.root, info.scope)

    def _resolve_field(self, decl: ast.FieldDecl, info: ScenarioInfo) -> None:
        scope = info.scope
        type_sym = scope.lookup(decl.type_name, ("actor-type",))
        if type_sym is None:
            self.error("E001", f"undefined type '{decl.type_name}'", decl.span)
            return
        symbol = scope.lookup(decl.name, ("actor-instance",))
        if symbol is not None:
            symbol.resolved = True
        info.fields[decl.name] = decl.type_name
        it_type = ActorRef(decl.type_name, decl.name)
        for keep in decl.constraints:
            self._resolve_keep(keep, decl, info, it_type)

    def _resolve_keep(self, keep: ast.KeepConstraint, decl: ast.FieldDecl,
                      info: ScenarioInfo, it_type: ActorRef) -> None:
        expr = keep.expr
        shape_ok = (isinstance(expr, ast.Binary) and expr.op == "=="
                    and isinstance(expr.lhs, ast.MemberAccess)
                    and isinstance(expr.lhs.receiver, ast.Identifier)
                    and expr.lhs.receiver.name == "it")
        if not shape_ok:
            self.error("E002",
                       "keep constraint must have the form it.<attribute> == <value>",
                       keep.span)
            return
        attr = expr.lhs.member
        if not prelude.has_attribute(decl.type_name, attr):
            self.error("E001",
                       f"type '{decl.type_name}' has no attribute '{attr}'",
                       expr.lhs.span)
            return
        if not isinstance(expr.rhs, ast.StringLiteral):
            self.error("E002", f"attribute '{attr}' expects a string value",
                       expr.rhs.span)
            return
        value = expr.rhs.value
        info.constraints.setdefault(decl.name, {})[attr] = value
        if decl.type_name == "map" and attr == "map_file":
            map_sym = info.scope.lookup(value.lower(), ("builtin-map",))
            if map_sym is None:
                self.error("E006", f"unknown map '{value}'", expr.rhs.span)
            else:
                info.map_name = value.lower()

    def _resolve_var(self, decl: ast.VarDecl, info: ScenarioInfo) -> None:
        scope = info.scope
        type_sym = scope.lookup(decl.type_name, ("physical-type",))
        if type_sym is None:
            if scope.lookup(decl.type_name, ("actor-type",)) is not None:
                self.error("E002",
                           f"'{decl.type_name}' is not a physical type",
                           decl.span)
            else:
                self.error("E001", f"undefined type '{decl.type_name}'",
                           decl.span)
            return
        symbol = scope.lookup(decl.name, ("variable",))
        if symbol is not None:
            symbol.resolved = True
        info.variables[decl.name] = decl
        declared = prelude.PHYSICAL_TYPES[decl.type_name]
        self._check_initializer(decl, declared, scope)

    def _check_initializer(self, decl: ast.VarDecl, declared: Dimension,
                           scope: Scope) -> None:
        init = decl.init
        if isinstance(init, ast.Binary) and init.op == "*":
            # a product may only work if the right factor is read as a scalar
            lhs = self.resolve_expr(init.lhs, scope)
            rhs = self.resolve_expr(init.rhs, scope)
            if lhs is UNKNOWN or rhs is UNKNOWN:
                return
            if not (isinstance(lhs, QuantityType) and isinstance(rhs, QuantityType)):
                self.error("E002", "arithmetic requires quantity operands",
                           init.span)
                return
            if units.coercible_product(lhs.dim, rhs.dim, declared):
                self.report(
                    WARNING, "W001",
                    f"dimensional coercion applied in initializer of "
                    f"'{decl.name}': {dimension_name(rhs.dim)} operand "
                    f"reinterpreted as a dimensionless scalar",
                    init.span)
                return
            result: ExprType = QuantityType(lhs.dim * rhs.dim)
        else:
            result = self.resolve_expr(init, scope)
        if result is UNKNOWN:
            return
        if not isinstance(result, QuantityType):
            self.error("E002", f"initializer of '{decl.name}' is not a quantity",
                       init.span)
        elif result.dim != declared:
            self.error("E003",
                       f"initializer of '{decl.name}' has dimension "
                       f"{dimension_name(result.dim)}, expected "
                       f"{dimension_name(declared)}", init.span)

    def _resolve_behavior(self, node: ast.Node, scope: Scope) -> None:
        if isinstance(node, ast.Composition):
            for child in node.children:
                self._resolve_behavior(child, scope)
        elif isinstance(node, ast.ActionInvocation):
            self._resolve_invocation(node, scope)
        elif isinstance(node, ast.WaitStatement):
            self._resolve_condition(node.condition, scope)
        elif isinstance(node, ast.EmitStatement):
            symbol = scope.lookup(node.event, ("event",))
            if symbol is not None:
                symbol.resolved = True

    def _resolve_invocation(self, node: ast.ActionInvocation, scope: Scope) -> None:
        actor_sym = scope.lookup(node.actor, ("actor-instance",))
        if actor_sym is None:
            self.error("E001", f"undefined actor '{node.actor}'", node.span)
        else:
            actor_sym.resolved = True
            type_name = actor_sym.declared_type
            if not prelude.has_action(type_name, node.action, self.extra_actions):
                self.error("E004",
                           f"action '{node.action}' is not defined for actor "
                           f"type '{type_name}' or its ancestors", node.span)
        for arg in node.args:
            self.resolve_expr(arg.value, scope)
        for modifier in node.modifiers:
            if scope.lookup(modifier.name, ("modifier",)) is None:
                self.error("E004", f"unknown modifier '{modifier.name}'",
                           modifier.span)
            for arg in modifier.args:
                self.resolve_expr(arg.value, scope)

    def _resolve_condition(self, cond: ast.Node, scope: Scope) -> None:
        if isinstance(cond, ast.EventRef):
            symbol = scope.lookup(cond.name, ("event",))
            if symbol is not None:
                symbol.resolved = True
        elif isinstance(cond, (ast.RiseCondition, ast.FallCondition)):
            result = self.resolve_expr(cond.expr, scope)
            if result not in (BOOL, UNKNOWN):
                kind = "rise" if isinstance(cond, ast.RiseCondition) else "fall"
                self.error("E002", f"{kind}() requires a boolean condition",
                           cond.span)
        elif isinstance(cond, ast.ElapsedCondition):
            result = self.resolve_expr(cond.duration, scope)
            if result is not UNKNOWN and \
                    (not isinstance(result, QuantityType) or result.dim != DURATION):
                self.error("E003", "elapsed() requires a time duration",
                           cond.span)
        elif isinstance(cond, ast.BoolCondition):
            result = self.resolve_expr(cond.expr, scope)
            if result not in (BOOL, UNKNOWN):
                self.error("E002", "wait requires a boolean condition", cond.span)

    # expression typing

    def resolve_expr(self, expr: ast.Node, scope: Scope,
                     it_type: ActorRef | None = None) -> ExprType:
        if isinstance(expr, ast.NumberLiteral):
            return QuantityType(DIMENSIONLESS)
        if isinstance(expr, ast.QuantityLiteral):
            return QuantityType(units.unit_dimension(expr.unit))
        if isinstance(expr, ast.StringLiteral):
            return STRING
        if isinstance(expr, ast.Identifier):
            return self._resolve_name(expr, scope, it_type)
        if isinstance(expr, ast.Unary):
            return self._resolve_unary(expr, scope, it_type)
        if isinstance(expr, ast.Binary):
            return self._resolve_binary(expr, scope, it_type)
        if isinstance(expr, ast.MemberAccess):
            return self._resolve_member(expr, scope, it_type)
        if isinstance(expr, ast.MethodCall):
            return self._resolve_call(expr, scope, it_type)
        self.error("E002", "unsupported expression", expr.span)
        return UNKNOWN

    def _resolve_name(self, expr: ast.Identifier, scope: Scope,
                      it_type: ActorRef | None) -> ExprType:
        if it_type is not None and expr.name == "it":
            return it_type
        symbol = scope.lookup(expr.name, ("variable", "actor-instance"))
        if symbol is not None:
            symbol.resolved = True
            if symbol.kind == "variable":
                dim = prelude.PHYSICAL_TYPES.get(symbol.declared_type)
                return QuantityType(dim) if dim is not None else UNKNOWN
            return ActorRef(symbol.declared_type, expr.name)
        if expr.name in prelude.ENUM_WORDS:
            return EnumWord(expr.name)
        self.error("E001", f"undefined name '{expr.name}'", expr.span)
        return UNKNOWN

    def _resolve_unary(self, expr: ast.Unary, scope: Scope,
                       it_type: ActorRef | None) -> ExprType:
        operand = self.resolve_expr(expr.operand, scope, it_type)
        if expr.op == "-":
            if operand is UNKNOWN or isinstance(operand, QuantityType):
                return operand
            self.error("E002", "negation requires a quantity", expr.span)
            return UNKNOWN
        if operand in (BOOL, UNKNOWN):
            return BOOL
        self.error("E002", "'not' requires a boolean", expr.span)
        return UNKNOWN

    def _resolve_binary(self, expr: ast.Binary, scope: Scope,
                        it_type: ActorRef | None) -> ExprType:
        lhs = self.resolve_expr(expr.lhs, scope, it_type)
        rhs = self.resolve_expr(expr.rhs, scope, it_type)
        if lhs is UNKNOWN or rhs is UNKNOWN:
            return UNKNOWN if expr.op in ARITHMETIC else BOOL
        if expr.op in ("and", "or"):
            if lhs is BOOL and rhs is BOOL:
                return BOOL
            self.error("E002", f"'{expr.op}' requires boolean operands", expr.span)
            return UNKNOWN
        if expr.op in ARITHMETIC:
            if isinstance(lhs, QuantityType) and isinstance(rhs, QuantityType):
                if expr.op in ("+", "-"):
                    if lhs.dim != rhs.dim:
                        self.error("E003",
                                   f"cannot apply '{expr.op}' to "
                                   f"{dimension_name(lhs.dim)} and "
                                   f"{dimension_name(rhs.dim)}", expr.span)
                        return UNKNOWN
                    return lhs
                if expr.op == "*":
                    return QuantityType(lhs.dim * rhs.dim)
                return QuantityType(lhs.dim / rhs.dim)
            self.error("E002", "arithmetic requires quantity operands", expr.span)
            return UNKNOWN
        # comparisons
        if isinstance(lhs, QuantityType) and isinstance(rhs, QuantityType):
            if lhs.dim != rhs.dim:
                self.error("E003",
                           f"cannot compare {dimension_name(lhs.dim)} with "
                           f"{dimension_name(rhs.dim)}", expr.span)
            return BOOL
        if lhs is STRING and rhs is STRING and expr.op in ("==", "!="):
            return BOOL
        self.error("E002", "incomparable operand types", expr.span)
        return BOOL

    def _resolve_member(self, expr: ast.MemberAccess, scope: Scope,
                        it_type: ActorRef | None) -> ExprType:
        receiver = self.resolve_expr(expr.receiver, scope, it_type)
        if receiver is UNKNOWN:
            return UNKNOWN
        if isinstance(receiver, ActorRef):
            if expr.member == "speed":
                return QuantityType(units.SPEED)
            if expr.member == "position":
                return PositionType(receiver.instance)
            if prelude.has_attribute(receiver.type_name, expr.member):
                return STRING
            self.error("E001",
                       f"actor type '{receiver.type_name}' has no member "
                       f"'{expr.member}'", expr.span)
            return UNKNOWN
        self.error("E002", f"cannot access member '{expr.member}' here",
                   expr.span)
        return UNKNOWN

    def _resolve_call(self, expr: ast.MethodCall, scope: Scope,
                      it_type: ActorRef | None) -> ExprType:
        receiver = self.resolve_expr(expr.receiver, scope, it_type)
        arg_types = [self.resolve_expr(a.value, scope, it_type)
                     for a in expr.args]
        if receiver is UNKNOWN:
            return UNKNOWN
        if isinstance(receiver, PositionType):
            if expr.method != "ahead_of":
                self.error("E001",
                           f"position query has no method '{expr.method}'",
                           expr.span)
                return UNKNOWN
            if len(arg_types) != 1 or not isinstance(arg_types[0], ActorRef):
                self.error("E002", "ahead_of() takes one actor argument",
                           expr.span)
                return UNKNOWN
            return QuantityType(units.LENGTH)
        if isinstance(receiver, ActorRef):
            if expr.method != "object_distance":
                self.error("E001",
                           f"actor type '{receiver.type_name}' has no method "
                           f"'{expr.method}'", expr.span)
                return UNKNOWN
            by_name = {a.name: t for a, t in zip(expr.args, arg_types)}
            if not isinstance(by_name.get("reference"), ActorRef):
                self.error("E002",
                           "object_distance() requires a 'reference' actor",
                           expr.span)
                return UNKNOWN
            direction = by_name.get("direction")
            if direction is not None and not (
                    isinstance(direction, EnumWord)
                    and direction.word in ("euclidean", "topological")):
                self.error("E002",
                           "direction must be euclidean or topological",
                           expr.span)
            return QuantityType(units.LENGTH)
        self.error("E002", f"cannot call method '{expr.method}' here", expr.span)
        return UNKNOWN


def analyze(program: ast.Program, filename: str = "<string>",
            extra_actions: dict[str, frozenset[str]] | None = None) -> Analysis:
    """Run both passes over a parsed program."""
    analyzer = Analyzer(filename, extra_actions)
    global_scope, infos = analyzer.definition_pass(program)
    analyzer.resolution_pass(infos)
    return Analysis(analyzer.diagnostics, program, global_scope, infos)


def check(source: str, filename: str = "<string>",
          extra_actions: dict[str, frozenset[str]] | None = None) -> Analysis:
    """Full frontend: lex, parse, analyze.  Frontend aborts become diagnostics."""
    try:
        program = parse(source, filename)
    except CompileError as exc:
        return Analysis([exc.diagnostic])
    return analyze(program, filename, extra_actions)
