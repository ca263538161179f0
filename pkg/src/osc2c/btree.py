"""Behavior-tree execution substrate.

Trees are ticked once per simulation step in depth-first, left-to-right
order; same-tick event visibility follows that traversal order.  A node
that returns Success or Failure latches: re-ticking returns the same
status with no side effects until a parent resets it.  OneOf halts losing
siblings so they stop mutating the blackboard or world.

Timers and timeouts convert durations to whole ticks with
``required_ticks`` so threshold comparisons never depend on float
round-off at the boundary.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

from .diagnostics import Span


class Status(enum.Enum):
    RUNNING = "Running"
    SUCCESS = "Success"
    FAILURE = "Failure"


RUNNING = Status.RUNNING
SUCCESS = Status.SUCCESS
FAILURE = Status.FAILURE


class ArbitrationFault(RuntimeError):
    """Two leaves commanded one actor's motion in the same tick."""


class Blackboard:
    """Latched event store plus per-tick motion arbitration slots."""

    def __init__(self):
        self.events: dict[str, int] = {}  # name -> first-emission tick
        self.emissions: list[tuple[str, bool]] = []  # this tick's emits
        self._claims: dict[str, tuple[int, object]] = {}

    def begin_tick(self, now: int) -> None:
        self.emissions.clear()

    def emit(self, name: str, now: int) -> None:
        first = name not in self.events
        if first:
            self.events[name] = now
        self.emissions.append((name, first))

    def has(self, name: str) -> bool:
        return name in self.events

    def first_tick(self, name: str) -> int | None:
        return self.events.get(name)

    def claim_motion(self, actor: str, claimant: object, now: int) -> None:
        held = self._claims.get(actor)
        if held is not None and held[0] == now and held[1] is not claimant:
            raise ArbitrationFault(
                f"motion of actor '{actor}' commanded by two behaviors "
                f"in tick {now}")
        self._claims[actor] = (now, claimant)

    def release_motion(self, actor: str, claimant: object) -> None:
        """Drop a claim when its holder finishes or is halted, so a successor
        behavior may command the same actor within the same tick."""
        held = self._claims.get(actor)
        if held is not None and held[1] is claimant:
            del self._claims[actor]


@dataclass
class TickContext:
    """Minimal context a bare tree needs; the runtime supplies a richer one."""

    blackboard: Blackboard = field(default_factory=Blackboard)
    now: int = 0
    dt: float = 0.05


def required_ticks(duration: float, dt: float) -> int:
    """Whole ticks needed for `duration` of simulated time at step dt."""
    return max(0, math.ceil(duration / dt - 1e-9))


class BtNode:
    def __init__(self, label: str | None = None, span: Span | None = None):
        self.label = label
        self.span = span
        self._status: Status | None = None
        self._halted = False

    @property
    def status(self) -> Status | None:
        return self._status

    @property
    def halted(self) -> bool:
        return self._halted

    def tick(self, ctx) -> Status:
        if self._halted:
            return self._status if self._status is not None else RUNNING
        if self._status in (SUCCESS, FAILURE):
            return self._status
        status = self._tick(ctx)
        self._status = status
        return status

    def _tick(self, ctx) -> Status:
        raise NotImplementedError

    def children(self) -> tuple["BtNode", ...]:
        return ()

    def halt(self) -> None:
        self._halted = True
        for child in self.children():
            child.halt()

    def reset(self) -> None:
        self._status = None
        self._halted = False
        self._reset()
        for child in self.children():
            child.reset()

    def _reset(self) -> None:
        pass

    def local_state(self) -> tuple:
        return ()

    def variant(self) -> str:
        return type(self).__name__


class Sequence(BtNode):
    """Children in order; advances to the next child within the same tick."""

    def __init__(self, children, **kw):
        super().__init__(**kw)
        self._children = tuple(children)
        self.cursor = 0

    def children(self):
        return self._children

    def _tick(self, ctx) -> Status:
        while self.cursor < len(self._children):
            status = self._children[self.cursor].tick(ctx)
            if status is RUNNING:
                return RUNNING
            if status is FAILURE:
                return FAILURE
            self.cursor += 1
        return SUCCESS

    def _reset(self):
        self.cursor = 0

    def local_state(self):
        return (self.cursor,)


class Parallel(BtNode):
    """All children must succeed; any failure fails the composite."""

    def __init__(self, children, **kw):
        super().__init__(**kw)
        self._children = tuple(children)

    def children(self):
        return self._children

    def _tick(self, ctx) -> Status:
        failed = False
        for child in self._children:
            if child.status is SUCCESS:
                continue
            if child.tick(ctx) is FAILURE:
                failed = True
        if failed:
            for child in self._children:
                if child.status is not SUCCESS:
                    child.halt()
            return FAILURE
        if all(child.status is SUCCESS for child in self._children):
            return SUCCESS
        return RUNNING


class OneOf(BtNode):
    """First child to succeed wins; the running siblings are halted."""

    def __init__(self, children, **kw):
        super().__init__(**kw)
        self._children = tuple(children)

    def children(self):
        return self._children

    def _tick(self, ctx) -> Status:
        for child in self._children:
            status = child.tick(ctx)
            if status is SUCCESS:
                self._halt_others(child)
                return SUCCESS
            if status is FAILURE:
                self._halt_others(child)
                return FAILURE
        return RUNNING

    def _halt_others(self, winner: BtNode) -> None:
        for child in self._children:
            if child is not winner:
                child.halt()


class Condition(BtNode):
    """Level-triggered: Success whenever the predicate currently holds."""

    def __init__(self, predicate, **kw):
        super().__init__(**kw)
        self.predicate = predicate

    def _tick(self, ctx) -> Status:
        return SUCCESS if self.predicate(ctx) else RUNNING


class EdgeCondition(BtNode):
    """Fires on an observed transition; the first sample only arms it."""

    def __init__(self, kind: str, predicate, **kw):
        if kind not in ("rise", "fall"):
            raise ValueError(f"bad edge kind {kind!r}")
        super().__init__(**kw)
        self.kind = kind
        self.predicate = predicate
        self.armed = False
        self.prev = False

    def _tick(self, ctx) -> Status:
        current = bool(self.predicate(ctx))
        if not self.armed:
            self.armed = True
            self.prev = current
            return RUNNING
        if self.kind == "rise":
            fired = not self.prev and current
        else:
            fired = self.prev and not current
        self.prev = current
        return SUCCESS if fired else RUNNING

    def _reset(self):
        self.armed = False
        self.prev = False

    def local_state(self):
        return (self.armed, self.prev)


class Timer(BtNode):
    """Success once the latched start is `duration` of simulated time ago."""

    def __init__(self, duration: float, **kw):
        super().__init__(**kw)
        self.duration = duration
        self.start: int | None = None

    def _tick(self, ctx) -> Status:
        if self.start is None:
            self.start = ctx.now
        if ctx.now - self.start >= required_ticks(self.duration, ctx.dt):
            return SUCCESS
        return RUNNING

    def _reset(self):
        self.start = None

    def local_state(self):
        return (self.start,)


class EventWait(BtNode):
    def __init__(self, event: str, **kw):
        super().__init__(**kw)
        self.event = event

    def _tick(self, ctx) -> Status:
        return SUCCESS if ctx.blackboard.has(self.event) else RUNNING


class EventEmit(BtNode):
    def __init__(self, event: str, **kw):
        super().__init__(**kw)
        self.event = event

    def _tick(self, ctx) -> Status:
        ctx.blackboard.emit(self.event, ctx.now)
        return SUCCESS


class Timeout(BtNode):
    """Fails the child if it is still running after `limit` simulated time.

    The deadline is checked before the child ticks, so a child cannot
    squeeze in a success on the deadline tick itself.
    """

    def __init__(self, child: BtNode, limit: float, **kw):
        if limit <= 0:
            raise ValueError("timeout limit must be positive")
        super().__init__(**kw)
        self.child = child
        self.limit = limit
        self.start: int | None = None

    def children(self):
        return (self.child,)

    def _tick(self, ctx) -> Status:
        if self.start is None:
            self.start = ctx.now
        if ctx.now - self.start >= required_ticks(self.limit, ctx.dt):
            self.child.halt()
            return FAILURE
        return self.child.tick(ctx)

    def _reset(self):
        self.start = None

    def local_state(self):
        return (self.start,)


class ActionLeaf(BtNode):
    """Base for leaves that drive the world; subclasses live in the runtime."""


def with_timeout(child: BtNode, limit: float) -> Timeout:
    return Timeout(child, limit)


def snapshot(node: BtNode) -> tuple:
    """Deterministic structural + state view of a tree, for hashing."""
    return (node.variant(), node.label,
            node._status.name if node._status is not None else None,
            node._halted, node.local_state(),
            tuple(snapshot(child) for child in node.children()))


def state_hash(node: BtNode) -> str:
    return hashlib.sha1(repr(snapshot(node)).encode()).hexdigest()


def dump_tree(node: BtNode, indent: int = 0) -> str:
    """Indented text rendering with node variants and source spans."""
    parts = [node.variant()]
    if node.label:
        parts.append(f"({node.label})")
    if node.span is not None:
        parts.append(f" @{node.span.line}:{node.span.col}")
    line = "  " * indent + "".join(parts)
    lines = [line]
    for child in node.children():
        lines.append(dump_tree(child, indent + 1))
    return "\n".join(lines)
