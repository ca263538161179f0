"""Deterministic 2D kinematic traffic world.

A straight multi-lane road along +x.  Lane i is centered at
y = -lane_width * i, so "right" of lane i is lane i+1.  Vehicles advance
under one of two longitudinal profiles each step and may run one lateral
lane-change maneuver at a time (smoothstep over 3 s of simulated time).
Static props never move; off-network actors (absolute placements) keep
their pose verbatim and are excluded from topological queries.

Everything is scalar float arithmetic at fixed dt; stepping the same
initial state twice produces bit-identical trajectories.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .btree import required_ticks

ASAP_ACCEL_LIMIT = 8.0    # m/s^2
SMOOTH_GAIN = 0.5         # 1/s
SMOOTH_ACCEL_LIMIT = 2.5  # m/s^2
LANE_CHANGE_DURATION = 3.0  # s

VEHICLE_HALF_LENGTH = 2.5
VEHICLE_HALF_WIDTH = 1.0
PROP_HALF_LENGTH = 1.0
PROP_HALF_WIDTH = 1.0

LOW_SUN_ELEVATION = math.radians(15.0)

LIGHT_MODES = ("off", "auto", "drl", "low_beam", "high_beam")

SPEED_EPSILON = 1e-6  # below this a follower has no meaningful time gap


class SimFault(RuntimeError):
    """Base class for faults that abort a run."""


class OffMapFault(SimFault):
    pass


class LaneOutOfBounds(SimFault):
    pass


class TopologicalUnreachable(SimFault):
    pass


class UnknownLightMode(SimFault):
    pass


@dataclass(frozen=True, slots=True)
class RoadMap:
    name: str
    lane_count: int
    lane_width: float
    length: float
    spawns: tuple[tuple[int, float], ...]

    def lane_center(self, lane: int) -> float:
        return -self.lane_width * lane

    def spawn_on_lane(self, lane: int) -> float | None:
        for spawn_lane, s in self.spawns:
            if spawn_lane == lane:
                return s
        return None


TOWN06 = RoadMap("town06", lane_count=5, lane_width=3.5, length=600.0,
                 spawns=((1, 50.0), (2, 50.0), (3, 50.0), (4, 50.0)))

BUILTIN_MAPS = {"town06": TOWN06}


def load_map(spec: str) -> RoadMap:
    """Resolve ``builtin:<name>`` or a JSON map file path."""
    if spec.startswith("builtin:"):
        name = spec.split(":", 1)[1]
        road = BUILTIN_MAPS.get(name)
        if road is None:
            raise ValueError(f"unknown builtin map '{name}'")
        return road
    with open(spec, encoding="utf-8") as handle:
        data = json.load(handle)
    try:
        return RoadMap(
            name=str(data["name"]),
            lane_count=int(data["lane_count"]),
            lane_width=float(data["lane_width"]),
            length=float(data["length"]),
            spawns=tuple((int(lane), float(s)) for lane, s in data["spawns"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad map file {spec!r}: {exc}") from exc


@dataclass(slots=True)
class LaneChangeState:
    from_lane: int
    to_lane: int
    total_steps: int  # whole-tick count so completion never drifts
    steps: int = 0


@dataclass(slots=True)
class Actor:
    name: str
    kind: str  # vehicle | static-prop
    s: float = 0.0
    lane: int | None = None
    lateral_offset: float = 0.0
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = 0.0
    target_speed: float = 0.0
    profile: str = "asap"
    light_mode: str = "off"
    lights: str = "off"
    half_length: float = VEHICLE_HALF_LENGTH
    half_width: float = VEHICLE_HALF_WIDTH
    off_network: bool = False
    lane_change: LaneChangeState | None = None

    @property
    def on_network(self) -> bool:
        return not self.off_network


@dataclass(slots=True)
class EnvironmentState:
    azimuth: float = 0.0
    elevation: float = math.pi / 2  # overhead sun: auto lights stay off


def clamp(value: float, low: float, high: float) -> float:
    return low if value < low else high if value > high else value


def speed_controller(current: float, target: float, profile: str,
                     dt: float) -> float:
    """One controller step; exact landing for asap, first-order lag for smooth."""
    if profile == "asap":
        limit = ASAP_ACCEL_LIMIT * dt
        gap = target - current
        if abs(gap) <= limit:
            return target
        return current + (limit if gap > 0 else -limit)
    if profile == "smooth":
        accel = clamp(SMOOTH_GAIN * (target - current),
                      -SMOOTH_ACCEL_LIMIT, SMOOTH_ACCEL_LIMIT)
        return current + accel * dt
    raise ValueError(f"unknown rate profile {profile!r}")


def smoothstep(u: float) -> float:
    u = clamp(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def overlaps(a: Actor, b: Actor) -> bool:
    """Axis-aligned bounding box intersection test between two actors."""
    return (abs(a.x - b.x) < a.half_length + b.half_length
            and abs(a.y - b.y) < a.half_width + b.half_width)


class World:
    def __init__(self, road: RoadMap, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.road = road
        self.dt = dt
        self.actors: dict[str, Actor] = {}
        self.environment = EnvironmentState()
        self.collisions: list[tuple[str, str]] = []
        self.query_count = 0

    # population

    def add_vehicle(self, name: str) -> Actor:
        return self._add(Actor(name, "vehicle"))

    def add_prop(self, name: str) -> Actor:
        return self._add(Actor(name, "static-prop",
                               half_length=PROP_HALF_LENGTH,
                               half_width=PROP_HALF_WIDTH))

    def _add(self, actor: Actor) -> Actor:
        if actor.name in self.actors:
            raise ValueError(f"duplicate actor name '{actor.name}'")
        self.actors[actor.name] = actor
        return actor

    def place_on_lane(self, actor: Actor, lane: int, s: float) -> None:
        if not 0 <= lane < self.road.lane_count:
            raise LaneOutOfBounds(
                f"lane {lane} outside [0, {self.road.lane_count})")
        actor.lane = lane
        actor.s = s
        actor.off_network = False
        actor.lateral_offset = 0.0
        actor.heading = 0.0
        self._refresh_pose(actor)

    def place_absolute(self, actor: Actor, x: float, y: float,
                       heading: float) -> None:
        actor.off_network = True
        actor.lane = None
        actor.x = x
        actor.y = y
        actor.heading = heading

    def set_sun(self, azimuth: float, elevation: float) -> None:
        self.environment.azimuth = azimuth % (2.0 * math.pi)
        self.environment.elevation = clamp(elevation, -math.pi / 2, math.pi / 2)

    def set_lights(self, actor: Actor, mode: str) -> None:
        if mode not in LIGHT_MODES:
            raise UnknownLightMode(f"unknown light mode {mode!r}")
        actor.light_mode = mode
        actor.lights = self._effective_lights(actor)

    def begin_lane_change(self, actor: Actor, num_of_lanes: int,
                          side: str) -> bool:
        """Start a lateral maneuver; returns False for the 0-lane no-op."""
        if num_of_lanes == 0:
            return False
        if actor.lane is None:
            raise LaneOutOfBounds(
                f"actor '{actor.name}' is off the lane network")
        delta = num_of_lanes if side == "right" else -num_of_lanes
        target = actor.lane + delta
        if not 0 <= target < self.road.lane_count:
            raise LaneOutOfBounds(
                f"lane change to {target} outside [0, {self.road.lane_count})")
        total = max(1, required_ticks(LANE_CHANGE_DURATION, self.dt))
        actor.lane_change = LaneChangeState(actor.lane, target, total)
        return True

    # stepping

    def step(self) -> None:
        for actor in self.actors.values():
            if actor.kind == "static-prop":
                actor.speed = 0.0  # zero-velocity kinematic lock
                continue
            self._step_vehicle(actor)
        self._detect_collisions()

    def _step_vehicle(self, actor: Actor) -> None:
        if actor.off_network:
            actor.lights = self._effective_lights(actor)
            return
        actor.speed = max(0.0, speed_controller(
            actor.speed, actor.target_speed, actor.profile, self.dt))
        actor.s += actor.speed * self.dt
        if not 0.0 <= actor.s <= self.road.length:
            raise OffMapFault(
                f"actor '{actor.name}' left the road at s={actor.s:.2f}")
        self._advance_lane_change(actor)
        self._refresh_pose(actor)
        actor.lights = self._effective_lights(actor)

    def _advance_lane_change(self, actor: Actor) -> None:
        maneuver = actor.lane_change
        if maneuver is None:
            return
        maneuver.steps += 1
        u = maneuver.steps / maneuver.total_steps
        shift = (self.road.lane_center(maneuver.to_lane)
                 - self.road.lane_center(maneuver.from_lane))
        previous = actor.lateral_offset
        actor.lateral_offset = shift * smoothstep(u)
        lateral_rate = (actor.lateral_offset - previous) / self.dt
        if u >= 1.0:
            actor.lane = maneuver.to_lane
            actor.lateral_offset = 0.0
            actor.heading = 0.0
            actor.lane_change = None
        else:
            actor.heading = math.atan2(lateral_rate, actor.speed)

    def _refresh_pose(self, actor: Actor) -> None:
        if actor.off_network:
            return
        actor.x = actor.s
        actor.y = self.road.lane_center(actor.lane) + actor.lateral_offset

    def _effective_lights(self, actor: Actor) -> str:
        if actor.light_mode != "auto":
            return actor.light_mode
        if self.environment.elevation < LOW_SUN_ELEVATION:
            return "low_beam"
        return "off"

    def _detect_collisions(self) -> None:
        self.collisions = []
        actors = list(self.actors.values())
        for i, a in enumerate(actors):
            for b in actors[i + 1:]:
                if overlaps(a, b):
                    pair = tuple(sorted((a.name, b.name)))
                    self.collisions.append(pair)

    # spatial queries

    def ahead_of(self, a: Actor, b: Actor) -> float:
        self.query_count += 1
        if a.off_network or b.off_network:
            raise TopologicalUnreachable(
                "ahead_of requires both actors on the lane network")
        return a.s - b.s

    def object_distance(self, a: Actor, reference: Actor,
                        direction: str = "euclidean") -> float:
        self.query_count += 1
        if direction == "euclidean":
            return math.hypot(a.x - reference.x, a.y - reference.y)
        if direction == "topological":
            if a.off_network or reference.off_network:
                raise TopologicalUnreachable(
                    f"'{reference.name if reference.off_network else a.name}' "
                    f"is off the routable network")
            return abs(a.s - reference.s)
        raise ValueError(f"unknown direction {direction!r}")

    def gap_queries(self, follower: Actor,
                    leader: Actor) -> tuple[float, float, float]:
        self.query_count += 1
        space_gap = (leader.s - follower.s
                     - leader.half_length - follower.half_length)
        if follower.speed < SPEED_EPSILON:
            time_gap = math.inf
        else:
            time_gap = space_gap / follower.speed
        dx = leader.x - follower.x
        dy = leader.y - follower.y
        headway = dx * math.cos(follower.heading) + dy * math.sin(follower.heading)
        return space_gap, time_gap, headway
