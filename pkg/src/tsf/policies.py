"""Exemplar policy library: observation encoding, scripted archetypes, rewards.

Every policy is a pure function of a single Observation (plus an explicit
rng for sampling), so the same code path serves three purposes: driving
agents in live play, scoring observed behavior frame-by-frame for the
cross-entropy similarity metric, and generating synthetic teammates.

Observations are expressed in the bait-centric frame: origin at the
fortress, +Y axis through the bait, all positions/velocities/headings
rotated accordingly. Region flags and wall clearances are computed in the
global frame before rotation (the hexagons and arena walls do not rotate).

Archetypes:
  HEX_BAIT_CAPPED   orbit the inner hexagon, hard thrust cutoff at a speed cap
  HEX_BAIT_FULL     orbit with continuously modulated thrust, optional
                    teammate-aware orbit direction
  RISK_BAIT         face the fortress and creep close; aggression controls
                    how late it reacts to incoming fire and how far it runs
  MIRROR_SHOOTER    hold the point mirrored through the fortress from the
                    bait, fire during vulnerability windows
  REGION_SHOOTER    wait just outside the outer hexagon, swing to the
                    fortress rear while the bait holds its attention

Deterministic decisions are emitted as smoothed categoricals: the chosen
option gets 1 - (k-1)*0.01 and every alternative 0.01, which keeps every
log-probability finite for the similarity metric.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .engine import (
    BAIT, SHOOTER, FORTRESS, Action, EngineConfig, GameState,
    ev_ship_killed, in_hexagon, wrap_angle,
)
from .errors import UsageError

ARCH_HEX_BAIT_CAPPED = "HEX_BAIT_CAPPED"
ARCH_HEX_BAIT_FULL = "HEX_BAIT_FULL"
ARCH_RISK_BAIT = "RISK_BAIT"
ARCH_MIRROR_SHOOTER = "MIRROR_SHOOTER"
ARCH_REGION_SHOOTER = "REGION_SHOOTER"

PROB_FLOOR = 0.01

_DET3 = {
    -1: (0.98, PROB_FLOOR, PROB_FLOOR),
    0: (PROB_FLOOR, 0.98, PROB_FLOOR),
    1: (PROB_FLOOR, PROB_FLOOR, 0.98),
}
_DET2 = {0: (0.99, PROB_FLOOR), 1: (PROB_FLOOR, 0.99)}
_THIRD = 1.0 / 3.0


class ActionDistribution(NamedTuple):
    """Independent categoricals over the three action factors.

    p_turn indexes (left, none, right); p_thrust and p_fire index (off, on).
    """

    p_turn: tuple
    p_thrust: tuple
    p_fire: tuple

    def logp(self, action: Action) -> float:
        return (math.log(self.p_turn[action.turn + 1])
                + math.log(self.p_thrust[action.thrust])
                + math.log(self.p_fire[action.fire]))

    def prob(self, action: Action) -> float:
        return (self.p_turn[action.turn + 1] * self.p_thrust[action.thrust]
                * self.p_fire[action.fire])

    def argmax(self) -> Action:
        turn = self.p_turn.index(max(self.p_turn)) - 1
        thrust = 0 if self.p_thrust[0] >= self.p_thrust[1] else 1
        fire = 0 if self.p_fire[0] >= self.p_fire[1] else 1
        return Action(turn, thrust, fire)


UNIFORM_DIST = ActionDistribution((_THIRD, _THIRD, _THIRD), (0.5, 0.5), (0.5, 0.5))


def det_dist(turn: int, thrust: int, fire: int) -> ActionDistribution:
    """Smoothed point-mass distribution for a deterministic choice."""
    return ActionDistribution(_DET3[turn], _DET2[thrust], _DET2[fire])


def _draw(probs, rng: random.Random) -> int:
    r = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            return i
    return len(probs) - 1


def sample_action(dist: ActionDistribution, rng: random.Random) -> Action:
    """Sample the three factors independently."""
    return Action(_draw(dist.p_turn, rng) - 1,
                  _draw(dist.p_thrust, rng),
                  _draw(dist.p_fire, rng))


class TeammateView(NamedTuple):
    pos: tuple
    vel: tuple
    heading: float
    alive: bool


class Observation:
    """Per-ship view of one frame in the bait-centric frame."""

    __slots__ = ("role", "alive", "pos", "vel", "speed", "heading",
                 "fortress_angle", "fortress_alive", "fortress_vulnerable",
                 "lock_target", "teammate", "nearest_missiles",
                 "self_in_inner", "self_in_outer", "bait_in_inner",
                 "inner_radius", "outer_radius", "outer_boundary_radius",
                 "border_distance", "wall_normal")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw[name])


def hex_boundary_radius(angle_deg: float, circumradius: float) -> float:
    """Distance from center to a flat-top hexagon's boundary along a bearing."""
    a = math.radians(angle_deg) % (math.pi / 3.0)
    # Edge midpoints sit at 30 deg within each 60 deg sector.
    return (circumradius * math.sqrt(3.0) / 2.0) / math.cos(a - math.pi / 6.0)


def bait_frame_transform(state: GameState, role: str,
                         include_teammate: bool = True) -> Observation:
    """Encode one ship's observation: translate to the fortress, rotate the
    bait onto +Y. A bait sitting exactly on the fortress degenerates to a
    pure translation (rotation angle 0)."""
    cfg = state.config
    cx, cy = cfg.center
    bait = state.bait
    bx, by = bait.x - cx, bait.y - cy
    if bx * bx + by * by < 1e-18:
        theta = 0.0
    else:
        theta = math.radians(90.0) - math.atan2(by, bx)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta)
    theta_deg = math.degrees(theta)

    def rot_point(x, y):
        dx, dy = x - cx, y - cy
        return (cos_t * dx - sin_t * dy, sin_t * dx + cos_t * dy)

    def rot_vec(x, y):
        return (cos_t * x - sin_t * y, sin_t * x + cos_t * y)

    me = state.ship(role)
    mate = state.ship(SHOOTER if role == BAIT else BAIT)
    pos = rot_point(me.x, me.y)
    vel = rot_vec(me.vx, me.vy)
    heading = (me.heading + theta_deg) % 360.0

    fortress_missiles = sorted(
        (m for m in state.missiles if m.owner == FORTRESS),
        key=lambda m: (m.x - me.x) ** 2 + (m.y - me.y) ** 2)
    nearest = tuple(rot_point(m.x, m.y) for m in fortress_missiles[:2])

    teammate = None
    if include_teammate:
        teammate = TeammateView(rot_point(mate.x, mate.y),
                                rot_vec(mate.vx, mate.vy),
                                (mate.heading + theta_deg) % 360.0,
                                mate.alive)

    self_angle = math.degrees(math.atan2(me.y - cy, me.x - cx))
    border = min(me.x, cfg.arena_width - me.x, me.y, cfg.arena_height - me.y)
    wall_normal = None
    if border < 150.0:
        walls = ((me.x, (-1.0, 0.0)), (cfg.arena_width - me.x, (1.0, 0.0)),
                 (me.y, (0.0, -1.0)), (cfg.arena_height - me.y, (0.0, 1.0)))
        _, n = min(walls, key=lambda w: w[0])
        wall_normal = rot_vec(*n)

    return Observation(
        role=role,
        alive=me.alive,
        pos=pos,
        vel=vel,
        speed=math.hypot(me.vx, me.vy),
        heading=heading,
        fortress_angle=(state.fortress.angle + theta_deg) % 360.0,
        fortress_alive=state.fortress.alive,
        fortress_vulnerable=state.fortress.vulnerable,
        lock_target=state.fortress.lock_target,
        teammate=teammate,
        nearest_missiles=nearest,
        self_in_inner=me.alive and in_hexagon(me.x, me.y, cx, cy, cfg.inner_hex_radius),
        self_in_outer=me.alive and in_hexagon(me.x, me.y, cx, cy, cfg.outer_hex_radius),
        bait_in_inner=bait.alive and in_hexagon(bait.x, bait.y, cx, cy, cfg.inner_hex_radius),
        inner_radius=cfg.inner_hex_radius,
        outer_radius=cfg.outer_hex_radius,
        outer_boundary_radius=hex_boundary_radius(self_angle, cfg.outer_hex_radius),
        border_distance=border,
        wall_normal=wall_normal,
    )


# Alias used by code that reads better as "encode".
encode_observation = bait_frame_transform


@dataclass(frozen=True)
class PolicySpec:
    """Identified, parameterized exemplar policy."""

    id: str
    role: str
    archetype: str
    params: dict = field(default_factory=dict)

    @property
    def group(self) -> str:
        return self.archetype

    def to_json(self) -> dict:
        return {"id": self.id, "role": self.role, "archetype": self.archetype,
                "params": dict(self.params)}

    @classmethod
    def from_json(cls, obj: dict) -> "PolicySpec":
        return cls(obj["id"], obj["role"], obj["archetype"], dict(obj["params"]))


# --- steering helpers (bait frame: fortress at the origin) ------------------

def _bearing(dx: float, dy: float) -> float:
    return math.degrees(math.atan2(dy, dx))


def _turn_toward(desired: float, heading: float, deadband: float) -> int:
    err = wrap_angle(desired - heading)
    if abs(err) <= deadband:
        return 0
    if abs(err) > 172.0:
        return 1  # fixed side near a U-turn, avoids sign thrash
    return 1 if err > 0 else -1


def _aligned(desired: float, heading: float, within: float) -> bool:
    return abs(wrap_angle(desired - heading)) <= within


def _with_wall_repel(obs: Observation, desired: float) -> float:
    """Bend a travel bearing away from a nearby arena wall."""
    if obs.wall_normal is None:
        return desired
    w = 1.3 * max(0.0, 1.0 - obs.border_distance / 150.0)
    rad = math.radians(desired)
    vx = math.cos(rad) - obs.wall_normal[0] * w
    vy = math.sin(rad) - obs.wall_normal[1] * w
    if vx == 0.0 and vy == 0.0:
        return desired
    return _bearing(vx, vy)


def _juke_bearing(obs: Observation, missile_pos: tuple) -> float:
    """Dodge perpendicular to the missile-to-self line, least-turn side."""
    base = _bearing(obs.pos[0] - missile_pos[0], obs.pos[1] - missile_pos[1])
    left, right = base + 90.0, base - 90.0
    if abs(wrap_angle(left - obs.heading)) <= abs(wrap_angle(right - obs.heading)):
        chosen = left
    else:
        chosen = right
    # Never dodge into the fortress disc.
    px, py = obs.pos
    d = math.hypot(px, py)
    if d < 105.0:
        rad = math.radians(chosen)
        radial = (px * math.cos(rad) + py * math.sin(rad)) / max(d, 1e-9)
        if radial < 0.0:
            chosen = base  # straight away from the missile instead
    return chosen


def _spiral_in(obs: Observation, orbit_r: float, direction: float = 1.0,
               gain: float = 0.92) -> float:
    """Approach bearing that blends from radial into the orbit tangent, so
    the ship crosses the lock boundary already moving sideways. Gains above
    ~1 saturate into a slow swirling descent."""
    px, py = obs.pos
    d = math.hypot(px, py)
    offset = math.degrees(math.asin(min(0.90, gain * orbit_r / max(d, 1e-9))))
    return _bearing(-px, -py) - direction * offset


def _orbit_bearing(obs: Observation, orbit_r: float, direction: float = 1.0) -> float:
    """Tangential orbit bearing with radial correction and a body guard.

    The nose leans inward of the tangent by the angle whose thrust component
    supplies the centripetal acceleration for the current speed, so the turn
    actually closes instead of drifting outward.
    """
    px, py = obs.pos
    d = math.hypot(px, py)
    r_err = d - orbit_r
    lean = math.degrees(math.asin(
        min(1.0, obs.speed * obs.speed / (max(d, 60.0) * 240.0))))
    # Past ~90 deg total the thrust gains a retro component, bleeding speed
    # until the turn can close; that makes the capture self-correcting.
    bend = max(-60.0, min(118.0, max(-60.0, min(85.0, r_err * 1.6)) + lean))
    if d < 70.0:
        bend = min(bend, -(70.0 - d) * 1.5)  # push outward, clear the body
    return _bearing(px, py) + direction * (90.0 + bend)


def _clear_of_fortress(obs: Observation, desired: float, target: tuple,
                       keep_out: float = 70.0) -> float:
    """Veer a travel bearing so the straight path misses the fortress disc."""
    px, py = obs.pos
    ux, uy = target[0] - px, target[1] - py
    seg = math.hypot(ux, uy)
    if seg < 1e-9:
        return desired
    fx, fy = -px, -py
    proj = (fx * ux + fy * uy) / seg
    if proj <= 0.0 or proj >= seg + keep_out:
        return desired  # fortress is not between us and the target
    perp = abs(ux * fy - uy * fx) / seg
    if perp >= keep_out:
        return desired
    side = 1.0 if (ux * fy - uy * fx) > 0.0 else -1.0
    return desired - side * (keep_out - perp) * 1.1


def _nearest_threat(obs: Observation, radius: float) -> Optional[tuple]:
    if obs.nearest_missiles:
        m = obs.nearest_missiles[0]
        dx, dy = obs.pos[0] - m[0], obs.pos[1] - m[1]
        if dx * dx + dy * dy <= radius * radius:
            return m
    return None


def _exit_move(obs: Observation) -> tuple[float, bool]:
    """Leave the outer hexagon and park just outside it (fortress down)."""
    px, py = obs.pos
    d = math.hypot(px, py)
    stop_r = obs.outer_boundary_radius + 30.0
    speed = obs.speed
    brake = 0.55 * speed + speed * speed / 520.0  # turn-around plus stopping
    radial_out = _bearing(px, py)
    if d + brake < stop_r:
        desired = radial_out
        thrust = speed < 150.0 and _aligned(desired, obs.heading, 50.0)
    elif speed > 18.0:
        desired = _bearing(-obs.vel[0], -obs.vel[1])
        thrust = _aligned(desired, obs.heading, 45.0)
    else:
        desired = radial_out
        thrust = False
    return desired, thrust


def _fortress_bearing(obs: Observation) -> float:
    return _bearing(-obs.pos[0], -obs.pos[1])


def _aim_and_fire(obs: Observation) -> tuple[int, int, int]:
    desired = _fortress_bearing(obs)
    turn = _turn_toward(desired, obs.heading, 2.0)
    fire = 1 if _aligned(desired, obs.heading, 10.0) else 0
    return turn, 0, fire


def _wall_emergency(obs: Observation) -> Optional[tuple[int, int, int]]:
    if obs.wall_normal is not None and obs.border_distance < 45.0:
        desired = _bearing(-obs.wall_normal[0], -obs.wall_normal[1])
        turn = _turn_toward(desired, obs.heading, 8.0)
        thrust = 1 if _aligned(desired, obs.heading, 70.0) else 0
        return turn, thrust, 0
    return None


# --- bait archetypes ---------------------------------------------------------

def _act_hex_capped(params: dict, obs: Observation) -> tuple[int, int, int]:
    cap = params["speed_cap"]
    px, py = obs.pos
    d = math.hypot(px, py)
    orbit_r = 0.72 * obs.inner_radius
    if not obs.fortress_alive:
        desired, thrust = _exit_move(obs)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    threat = _nearest_threat(obs, 130.0)
    if threat is not None:
        desired = _juke_bearing(obs, threat)
        thrust = obs.speed < cap and _aligned(desired, obs.heading, 80.0)
    elif d > 270.0:
        desired = _with_wall_repel(obs, _spiral_in(obs, orbit_r))
        thrust = obs.speed < cap and _aligned(desired, obs.heading, 55.0)
    else:
        desired = _orbit_bearing(obs, orbit_r)
        orbit_speed = min(cap, math.sqrt(110.0 * orbit_r))
        thrust = obs.speed < orbit_speed and _aligned(desired, obs.heading, 70.0)
    return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0


def _act_hex_full(params: dict, obs: Observation) -> tuple[int, int, int]:
    deadband = params["steer_deadband"]
    perceive = params["perceive_teammate"]
    px, py = obs.pos
    d = math.hypot(px, py)
    orbit_r = 0.62 * obs.inner_radius
    pace = 1.0
    if perceive and obs.teammate is not None and obs.teammate.alive:
        # Work toward the anti-teammate phase by modulating pace, never by
        # reversing: reversals feed back through a mirroring teammate.
        phi_self = _bearing(px, py)
        phi_opposite = _bearing(-obs.teammate.pos[0], -obs.teammate.pos[1])
        err = wrap_angle(phi_opposite - phi_self)
        pace = 1.0 + max(-0.45, min(0.75, err / 120.0))
    if not obs.fortress_alive:
        desired, thrust = _exit_move(obs)
        return _turn_toward(desired, obs.heading, deadband), int(thrust), 0
    threat = _nearest_threat(obs, 160.0)
    if threat is not None:
        desired = _juke_bearing(obs, threat)
        thrust = _aligned(desired, obs.heading, 88.0)
    elif d > 270.0:
        desired = _with_wall_repel(obs, _spiral_in(obs, orbit_r))
        thrust = obs.speed < 170.0 and _aligned(desired, obs.heading, 55.0)
    else:
        r_err = d - orbit_r
        desired = _orbit_bearing(obs, orbit_r)
        target_speed = min(60.0 + 0.9 * abs(r_err),
                           math.sqrt(110.0 * orbit_r)) * pace
        thrust = obs.speed < target_speed and _aligned(desired, obs.heading, 70.0)
    return _turn_toward(desired, obs.heading, deadband), int(thrust), 0


def _act_risk_bait(params: dict, obs: Observation) -> tuple[int, int, int]:
    aggr = params["aggressiveness"]
    retreat_r = params["retreat_radius"]
    threat_r = 55.0 + (1.0 - aggr) * 240.0
    orbit_r = obs.inner_radius * (0.92 - 0.52 * aggr)
    px, py = obs.pos
    d = math.hypot(px, py)
    if not obs.fortress_alive:
        desired, thrust = _exit_move(obs)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    threat = _nearest_threat(obs, threat_r)
    if threat is not None:
        if aggr < 0.5 and d < retreat_r - 15.0:
            desired = _with_wall_repel(obs, _bearing(px, py))  # run for distance
            thrust = _aligned(desired, obs.heading, 70.0)
        else:
            desired = _juke_bearing(obs, threat)
            thrust = obs.speed < 150.0 and _aligned(desired, obs.heading, 80.0)
    elif d > 270.0:
        swirl = 0.92 * (1.0 + 1.6 * (1.0 - aggr))
        desired = _with_wall_repel(obs, _spiral_in(obs, orbit_r, gain=swirl))
        thrust = obs.speed < (95.0 + 60.0 * aggr) and _aligned(desired, obs.heading, 55.0)
    elif d > orbit_r + 14.0:
        swirl = 0.92 * (1.0 + 1.6 * (1.0 - aggr))
        if d > orbit_r + 90.0:
            desired = _spiral_in(obs, orbit_r, gain=swirl)
        else:
            desired = _orbit_bearing(obs, orbit_r)
        thrust = obs.speed < (95.0 + 60.0 * aggr) and _aligned(desired, obs.heading, 70.0)
    elif obs.speed < 40.0 + 111.0 * aggr:
        desired = _orbit_bearing(obs, orbit_r)  # sweep along the dwell ring
        thrust = _aligned(desired, obs.heading, 60.0)
    else:
        desired = _fortress_bearing(obs)  # face the fortress while coasting
        thrust = False
    return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0


# --- shooter archetypes ------------------------------------------------------

def _self_bait_move(obs: Observation, speed_cap: float) -> tuple[int, int, int]:
    """Teammate down: draw the lock ourselves and convert our own windows.

    Creep near the ring with the nose on the fortress so a window can be
    converted immediately; dodging is secondary (a death soft-resets the
    arena, which also unblocks the game).
    """
    px, py = obs.pos
    d = math.hypot(px, py)
    orbit_r = 0.72 * obs.inner_radius
    threat = _nearest_threat(obs, 90.0)
    if threat is not None:
        desired = _juke_bearing(obs, threat)
        thrust = obs.speed < speed_cap and _aligned(desired, obs.heading, 80.0)
    elif d > 270.0:
        desired = _with_wall_repel(obs, _spiral_in(obs, orbit_r))
        thrust = obs.speed < speed_cap and _aligned(desired, obs.heading, 55.0)
    elif obs.speed < min(speed_cap, math.sqrt(110.0 * orbit_r), 110.0) * 0.45:
        desired = _orbit_bearing(obs, orbit_r)
        thrust = _aligned(desired, obs.heading, 60.0)
    else:
        desired = _fortress_bearing(obs)  # pre-aimed coast
        thrust = False
    return _turn_toward(desired, obs.heading, 4.0), int(thrust), 0


def _hold_ready(obs: Observation) -> tuple[int, int, int]:
    """Drift with the nose on the fortress, ready to convert a window."""
    desired = _fortress_bearing(obs)
    return _turn_toward(desired, obs.heading, 4.0), 0, 0


def _act_mirror_shooter(params: dict, obs: Observation) -> tuple[int, int, int]:
    """Purely positional doctrine: hold the bait's reflection through the
    fortress. The reflection of a dead bait freezes in place, so with the
    teammate down this shooter parks deep and trades fire with the fortress
    rather than playing a bait of its own."""
    threshold = params["distance_threshold"]
    px, py = obs.pos
    d = math.hypot(px, py)
    if obs.fortress_alive and obs.fortress_vulnerable:
        return _aim_and_fire(obs)
    if (obs.fortress_alive and obs.lock_target == obs.role
            and obs.teammate is not None and obs.teammate.alive):
        desired = _with_wall_repel(obs, _bearing(px, py))
        thrust = _aligned(desired, obs.heading, 60.0)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    if not obs.fortress_alive:
        desired, thrust = _exit_move(obs)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    # Mirror of the bait through the fortress center. Approaching along the
    # post's own circle arrives co-rotating with it, which suits baits that
    # orbit steadily; posts that dash radially are chased, late.
    bait_pos = obs.teammate.pos if obs.teammate is not None else (0.0, 1.0)
    mx, my = -bait_pos[0], -bait_pos[1]
    post_r = max(math.hypot(mx, my), 1e-9)
    dist_m = math.hypot(px - mx, py - my)
    if dist_m <= threshold:
        return _hold_ready(obs)
    if dist_m <= threshold + 60.0:
        # Near the post: keep the nose on the fortress, nudge in if aligned.
        desired = _fortress_bearing(obs)
        travel = _bearing(mx - px, my - py)
        thrust = (obs.speed < 110.0 and _aligned(desired, obs.heading, 5.0)
                  and _aligned(travel, obs.heading, 35.0))
        return _turn_toward(desired, obs.heading, 4.0), int(thrust), 0
    if abs(d - post_r) < 70.0 and d > 80.0:
        arc = wrap_angle(_bearing(mx, my) - _bearing(px, py))
        direction = 1.0 if arc >= 0.0 else -1.0
        desired = _orbit_bearing(obs, post_r, direction)
        thrust = obs.speed < 225.0 and _aligned(desired, obs.heading, 65.0)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    desired = _clear_of_fortress(obs, _bearing(mx - px, my - py), (mx, my))
    desired = _with_wall_repel(obs, desired)
    post_speed = math.hypot(*obs.teammate.vel) if obs.teammate is not None else 0.0
    speed_limit = min(225.0, max(40.0 + dist_m * 1.4, post_speed + 45.0))
    thrust = obs.speed < speed_limit and _aligned(desired, obs.heading, 55.0)
    return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0


def _act_region_shooter(params: dict, obs: Observation) -> tuple[int, int, int]:
    max_speed = params["max_speed"]
    px, py = obs.pos
    d = math.hypot(px, py)
    if obs.fortress_alive and obs.fortress_vulnerable:
        return _aim_and_fire(obs)
    if obs.teammate is not None and not obs.teammate.alive and obs.fortress_alive:
        return _self_bait_move(obs, min(max_speed, 110.0))
    if obs.fortress_alive and obs.lock_target == obs.role:
        desired = _with_wall_repel(obs, _bearing(px, py))
        thrust = _aligned(desired, obs.heading, 60.0)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    if not obs.fortress_alive:
        desired, thrust = _exit_move(obs)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    bait_engaged = obs.bait_in_inner
    if not bait_engaged and obs.teammate is not None and obs.teammate.alive:
        bait_engaged = math.hypot(*obs.teammate.pos) < 340.0
    if bait_engaged:
        # Firing-ring discipline: take the fortress rear when this hull can
        # actually track its sweep; otherwise park on the ring wherever we
        # are and stay aimed, conceding the bearing but never the shot.
        if obs.teammate is not None and obs.teammate.alive:
            bx, by = obs.teammate.pos
            bd = max(math.hypot(bx, by), 1e-9)
            rear_r = max(95.0, min(155.0, bd + 25.0))
            omega = abs(bx * obs.teammate.vel[1] - by * obs.teammate.vel[0]) / (bd * bd)
        else:
            rear_r = 130.0
            omega = 0.0
        chase_ok = (omega * rear_r <= max_speed * 0.8
                    and omega * omega * rear_r <= 170.0)
        if chase_ok:
            if obs.lock_target == BAIT and obs.teammate is not None:
                bx, by = obs.teammate.pos
                rear = _bearing(-bx, -by)
            else:
                rear = obs.fortress_angle + 180.0
            rad = math.radians(rear)
            tx, ty = math.cos(rad) * rear_r, math.sin(rad) * rear_r
            dist_t = math.hypot(px - tx, py - ty)
            if dist_t <= 50.0:
                return _hold_ready(obs)
            near_limit = max_speed if d > 230.0 else min(max_speed, 145.0)
            if abs(d - rear_r) < 70.0:
                arc = wrap_angle(rear - _bearing(px, py))
                direction = 1.0 if arc >= 0.0 else -1.0
                desired = _orbit_bearing(obs, rear_r, direction)
                thrust = obs.speed < near_limit and _aligned(desired, obs.heading, 65.0)
            else:
                desired = _clear_of_fortress(obs, _bearing(tx - px, ty - py), (tx, ty))
                thrust = obs.speed < near_limit and _aligned(desired, obs.heading, 55.0)
            return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
        if abs(d - rear_r) > 30.0:
            desired = _bearing(px, py) if d < rear_r else _fortress_bearing(obs)
            thrust = obs.speed < max_speed * 0.7 and _aligned(desired, obs.heading, 55.0)
            return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
        return _hold_ready(obs)
    # Station just outside the outer hexagon at the current bearing.
    ring = obs.outer_boundary_radius + 40.0
    err = d - ring
    if abs(err) > 30.0:
        desired = _bearing(px, py) if err < 0.0 else _fortress_bearing(obs)
        desired = _with_wall_repel(obs, desired)
        thrust = obs.speed < max_speed * 0.75 and _aligned(desired, obs.heading, 55.0)
        return _turn_toward(desired, obs.heading, 8.0), int(thrust), 0
    return _hold_ready(obs)


_ARCHETYPE_FNS = {
    ARCH_HEX_BAIT_CAPPED: _act_hex_capped,
    ARCH_HEX_BAIT_FULL: _act_hex_full,
    ARCH_RISK_BAIT: _act_risk_bait,
    ARCH_MIRROR_SHOOTER: _act_mirror_shooter,
    ARCH_REGION_SHOOTER: _act_region_shooter,
}


def act_dist(spec: PolicySpec, obs: Observation) -> ActionDistribution:
    """Archetype decision rule -> smoothed action distribution."""
    if spec.role != obs.role:
        raise UsageError(
            f"policy {spec.id} has role {spec.role!r}, observation is {obs.role!r}")
    if not obs.alive:
        return UNIFORM_DIST
    emergency = _wall_emergency(obs)
    if emergency is not None:
        turn, thrust, fire = emergency
    else:
        turn, thrust, fire = _ARCHETYPE_FNS[spec.archetype](spec.params, obs)
    return ActionDistribution(_DET3[turn], _DET2[thrust], _DET2[fire])


class LibraryPolicy:
    """A PolicySpec bound to the runtime protocol used by run_trial and CEM."""

    def __init__(self, spec: PolicySpec):
        self.spec = spec
        self.role = spec.role
        self.policy_id = spec.id

    def dist_for(self, state: GameState) -> ActionDistribution:
        obs = bait_frame_transform(state, self.role)
        return act_dist(self.spec, obs)

    def act(self, state: GameState, rng: random.Random) -> Action:
        return sample_action(self.dist_for(state), rng)

    def logp(self, state: GameState, action: Action) -> float:
        return self.dist_for(state).logp(action)

    def __repr__(self):
        return f"LibraryPolicy({self.spec.id})"


class ConstantPolicy:
    """State-independent distribution; used for oracles and dead-agent play."""

    def __init__(self, dist: ActionDistribution, role: str = BAIT,
                 policy_id: str = "constant"):
        self.dist = dist
        self.role = role
        self.policy_id = policy_id

    def dist_for(self, state: GameState) -> ActionDistribution:
        return self.dist

    def act(self, state: GameState, rng: random.Random) -> Action:
        return sample_action(self.dist, rng)

    def logp(self, state: GameState, action: Action) -> float:
        return self.dist.logp(action)


def idle_policy(role: str) -> ConstantPolicy:
    """Do-nothing stand-in (argmax is all-zero; sampling noise remains)."""
    return ConstantPolicy(det_dist(0, 0, 0), role, f"idle-{role}")


@dataclass
class PolicyLibrary:
    """Ordered exemplar policies; order fixes table axes and argmax ties."""

    baits: list
    shooters: list

    def for_role(self, role: str) -> list:
        return self.baits if role == BAIT else self.shooters

    def by_id(self, policy_id: str) -> PolicySpec:
        for spec in self.baits + self.shooters:
            if spec.id == policy_id:
                return spec
        raise UsageError(f"unknown policy id {policy_id!r}")

    def policy(self, policy_id: str) -> LibraryPolicy:
        return LibraryPolicy(self.by_id(policy_id))

    def to_json(self) -> list:
        return [s.to_json() for s in self.baits + self.shooters]

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def save_catalog(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)

    @classmethod
    def from_catalog(cls, path) -> "PolicyLibrary":
        with open(path) as fh:
            specs = [PolicySpec.from_json(obj) for obj in json.load(fh)]
        return cls(baits=[s for s in specs if s.role == BAIT],
                   shooters=[s for s in specs if s.role == SHOOTER])


def default_library() -> PolicyLibrary:
    """Nine baits and seven shooters across the five archetypes."""
    baits = [
        PolicySpec("B1", BAIT, ARCH_HEX_BAIT_CAPPED, {"speed_cap": 90.0}),
        PolicySpec("B2", BAIT, ARCH_HEX_BAIT_CAPPED, {"speed_cap": 140.0}),
        PolicySpec("B3", BAIT, ARCH_HEX_BAIT_CAPPED, {"speed_cap": 190.0}),
        PolicySpec("B4", BAIT, ARCH_HEX_BAIT_FULL,
                   {"steer_deadband": 4.0, "perceive_teammate": False}),
        PolicySpec("B5", BAIT, ARCH_HEX_BAIT_FULL,
                   {"steer_deadband": 9.0, "perceive_teammate": False}),
        PolicySpec("B6", BAIT, ARCH_HEX_BAIT_FULL,
                   {"steer_deadband": 4.0, "perceive_teammate": True}),
        PolicySpec("B7", BAIT, ARCH_HEX_BAIT_FULL,
                   {"steer_deadband": 9.0, "perceive_teammate": True}),
        PolicySpec("B8", BAIT, ARCH_RISK_BAIT,
                   {"aggressiveness": 0.9, "retreat_radius": 260.0}),
        PolicySpec("B9", BAIT, ARCH_RISK_BAIT,
                   {"aggressiveness": 0.2, "retreat_radius": 310.0}),
    ]
    shooters = [
        PolicySpec("S1", SHOOTER, ARCH_REGION_SHOOTER, {"max_speed": 120.0}),
        PolicySpec("S2", SHOOTER, ARCH_REGION_SHOOTER, {"max_speed": 180.0}),
        PolicySpec("S3", SHOOTER, ARCH_REGION_SHOOTER, {"max_speed": 240.0}),
        PolicySpec("S4", SHOOTER, ARCH_MIRROR_SHOOTER, {"distance_threshold": 40.0}),
        PolicySpec("S5", SHOOTER, ARCH_MIRROR_SHOOTER, {"distance_threshold": 80.0}),
        PolicySpec("S6", SHOOTER, ARCH_MIRROR_SHOOTER, {"distance_threshold": 120.0}),
        PolicySpec("S7", SHOOTER, ARCH_MIRROR_SHOOTER, {"distance_threshold": 160.0}),
    ]
    return PolicyLibrary(baits=baits, shooters=shooters)


# --- reward functions --------------------------------------------------------

def reward_activation(state: GameState) -> float:
    """+1 per frame the bait spends alive inside the inner hexagon."""
    cfg = state.config
    cx, cy = cfg.center
    b = state.bait
    if b.alive and in_hexagon(b.x, b.y, cx, cy, cfg.inner_hex_radius):
        return 1.0
    return 0.0


def reward_composite(state: GameState, c_border: float, c_bearing: float,
                     c_death: float) -> float:
    """Border-distance + fortress-bearing shaping with a death penalty."""
    if c_border < 0 or c_bearing < 0 or c_death < 0:
        raise UsageError("reward coefficients must be non-negative")
    cfg = state.config
    cx, cy = cfg.center
    b = state.bait
    total = 0.0
    if b.alive:
        dist = math.hypot(b.x - cx, b.y - cy)
        total += c_border * max(0.0, min(1.0, dist / cfg.outer_hex_radius))
        if in_hexagon(b.x, b.y, cx, cy, cfg.inner_hex_radius):
            to_fortress = math.degrees(math.atan2(cy - b.y, cx - b.x))
            err = abs(wrap_angle(to_fortress - b.heading))
            total += c_bearing * (1.0 - err / 180.0)
    if ev_ship_killed(BAIT) in state.events:
        total -= c_death
    return total


def reward_region_shooter(state: GameState) -> float:
    """Shooter positional shaping, always <= 0 and 0 only when on station."""
    cfg = state.config
    cx, cy = cfg.center
    s = state.shooter
    if not s.alive:
        return -1.0
    b = state.bait
    bait_inside = b.alive and in_hexagon(b.x, b.y, cx, cy, cfg.inner_hex_radius)
    if bait_inside:
        rear = (state.fortress.angle + 180.0) % 360.0
        shooter_bearing = math.degrees(math.atan2(s.y - cy, s.x - cx))
        return -abs(wrap_angle(shooter_bearing - rear)) / 180.0
    angle = math.degrees(math.atan2(s.y - cy, s.x - cx))
    boundary = hex_boundary_radius(angle, cfg.outer_hex_radius)
    dist = math.hypot(s.x - cx, s.y - cy)
    return -abs(dist - boundary) / cfg.outer_hex_radius
