"""Embedded standard library: actor types, physical types, modifiers.

This is the domain model every scenario compiles against.  Actor types form
a single-inheritance hierarchy rooted at ``traffic_participant``; attribute
and action lookup walks the chain.  ``person`` deliberately carries a
declared action with no execution backend so the unsupported-action path
stays exercised end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

from .units import ACCELERATION, ANGLE, DURATION, LENGTH, SPEED, Dimension


@dataclass(frozen=True, slots=True)
class ActorType:
    name: str
    base: str | None
    attributes: frozenset[str]
    actions: frozenset[str]


ACTOR_TYPES: dict[str, ActorType] = {
    t.name: t for t in (
        ActorType("traffic_participant", None, frozenset(), frozenset()),
        ActorType("vehicle", "traffic_participant",
                  frozenset({"model", "name", "color"}),
                  frozenset({"drive", "change_speed", "change_lane",
                             "assign_position", "assign_orientation",
                             "set_lights", "follow_path"})),
        ActorType("person", "traffic_participant",
                  frozenset({"model", "name"}),
                  frozenset({"walk"})),
        ActorType("stationary_object", None,
                  frozenset({"name", "model"}),
                  frozenset({"assign_position"})),
        ActorType("environment", None, frozenset(),
                  frozenset({"assign_celestial_position"})),
        ActorType("map", None, frozenset({"map_file"}), frozenset()),
    )
}

PHYSICAL_TYPES: dict[str, Dimension] = {
    "speed": SPEED,
    "length": LENGTH,
    "time": DURATION,
    "angle": ANGLE,
    "acceleration": ACCELERATION,
}

MODIFIERS = frozenset({
    "speed", "change_speed", "acceleration", "position", "lane",
    "keep_lane", "change_lane", "orientation", "at",
})

# bare identifiers that act as enumeration words in argument position
ENUM_WORDS = frozenset({
    "start", "left", "right", "smooth", "asap", "euclidean", "topological",
})

BUILTIN_MAPS = frozenset({"town06"})


def inheritance_chain(type_name: str) -> list[str]:
    """Type name followed by its ancestors, most derived first."""
    chain = []
    cursor: str | None = type_name
    while cursor is not None:
        actor = ACTOR_TYPES.get(cursor)
        if actor is None:
            break
        chain.append(cursor)
        cursor = actor.base
    return chain


def has_action(type_name: str, action: str,
               extra: dict[str, frozenset[str]] | None = None) -> bool:
    for name in inheritance_chain(type_name):
        if action in ACTOR_TYPES[name].actions:
            return True
        if extra and action in extra.get(name, frozenset()):
            return True
    return False


def has_attribute(type_name: str, attribute: str) -> bool:
    return any(attribute in ACTOR_TYPES[name].attributes
               for name in inheritance_chain(type_name))
