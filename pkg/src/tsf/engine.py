"""Deterministic fixed-timestep Team Space Fortress simulation.

Two ships (bait and shooter) cooperate to destroy a central fortress in a
low-friction 2D arena. The fortress locks onto the first ship that enters
the inner hexagon, turns to track it, and fires; each fortress shot opens a
short vulnerability window during which one ship missile destroys it. After
a fortress kill both living ships must leave the outer hexagon before the
fortress respawns.

The per-frame update order is a fixed part of the engine contract:

  1. ship kinematics (turn, thrust, friction, speed cap, integration) and
     missile flight / expiry
  2. fortress update: lock acquisition/maintenance, rotation, firing
     (firing opens the vulnerability window), respawn countdown
  3. ship missile spawns
  4. collisions: ship vs border / missile / fortress body; ship missile vs
     fortress (kill only while vulnerable, else absorbed)
  5. scoring and reset logic (fortress kill, both-dead soft reset)
  6. event emission and frame increment

`step` is purely functional: it never mutates its input state, so retained
snapshots stay valid for logging and similarity scoring. Given the same
(config, seed, policies) a trial replays bit-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Optional

from .errors import ConfigError, TrialCompleteError, UsageError

BAIT = "bait"
SHOOTER = "shooter"
FORTRESS = "fortress"
ROLES = (BAIT, SHOOTER)

SQRT3 = math.sqrt(3.0)


class Action(NamedTuple):
    """One joint action: turn in {-1, 0, +1}, thrust and fire in {0, 1}.

    turn -1 decreases heading (left), +1 increases it (right).
    """

    turn: int
    thrust: int
    fire: int


IDLE_ACTION = Action(0, 0, 0)

# Event tags carried on GameState.events / FrameRecord.events.
EV_FORTRESS_KILLED = "fortress_killed"
EV_FORTRESS_RESPAWNED = "fortress_respawned"
EV_TRIAL_END = "trial_end"


def ev_ship_killed(role: str) -> str:
    return f"ship_killed:{role}"


def ev_policy_switch(policy_id: str) -> str:
    return f"policy_switch:{policy_id}"


@dataclass(frozen=True)
class EngineConfig:
    """All tunable engine constants. Units are world units, seconds, frames."""

    arena_width: float = 1280.0
    arena_height: float = 800.0
    fps: int = 30
    friction: float = 0.985          # per-frame velocity retention
    ship_turn_rate: float = 180.0    # deg/s
    ship_thrust_accel: float = 260.0  # u/s^2
    ship_max_speed_engine: float = 240.0  # u/s hard cap
    missile_speed: float = 360.0     # u/s
    missile_lifetime_frames: int = 60
    ship_fire_cooldown_frames: int = 10
    inner_hex_radius: float = 180.0  # circumradius
    outer_hex_radius: float = 330.0  # circumradius
    fortress_track_rate: float = 200.0  # deg/s while locked
    fortress_idle_rate: float = 30.0    # deg/s sweep while unlocked
    fortress_aim_tolerance: float = 8.0  # deg
    fortress_fire_cooldown_frames: int = 45
    vulnerability_window_frames: int = 15
    fortress_respawn_delay_frames: int = 30
    trial_length_frames: int = 1800
    ship_radius: float = 12.0
    fortress_radius: float = 30.0
    missile_radius: float = 4.0

    def validate(self) -> None:
        """Raise ConfigError naming the first violated field."""
        pos_fields = [
            "arena_width", "arena_height", "fps", "ship_turn_rate",
            "ship_thrust_accel", "ship_max_speed_engine", "missile_speed",
            "missile_lifetime_frames", "ship_fire_cooldown_frames",
            "fortress_track_rate", "fortress_idle_rate",
            "fortress_aim_tolerance", "fortress_fire_cooldown_frames",
            "vulnerability_window_frames", "fortress_respawn_delay_frames",
            "trial_length_frames", "ship_radius", "fortress_radius",
            "missile_radius",
        ]
        for name in pos_fields:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if not (0.0 < self.friction <= 1.0):
            raise ConfigError("friction must lie in (0, 1]")
        if not (0.0 < self.inner_hex_radius < self.outer_hex_radius):
            raise ConfigError(
                "inner_hex_radius must satisfy 0 < inner_hex_radius < outer_hex_radius"
            )
        if self.outer_hex_radius >= min(self.arena_width, self.arena_height) / 2.0:
            raise ConfigError(
                "outer_hex_radius must be less than half the smaller arena side"
            )
        # Spawn points sit on the horizontal midline at 1/8 and 7/8 width;
        # they must clear the outer hexagon.
        if self.arena_width * 0.375 <= self.outer_hex_radius:
            raise ConfigError(
                "outer_hex_radius leaves no room for spawn points (arena_width too small)"
            )

    @property
    def center(self) -> tuple[float, float]:
        return (self.arena_width / 2.0, self.arena_height / 2.0)

    @property
    def dt(self) -> float:
        return 1.0 / self.fps

    def spawn_point(self, role: str) -> tuple[float, float, float]:
        """Deterministic (x, y, heading) spawn for a role."""
        cy = self.arena_height / 2.0
        if role == BAIT:
            return (self.arena_width * 0.125, cy, 0.0)
        return (self.arena_width * 0.875, cy, 180.0)

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def digest(self) -> str:
        text = "\n".join(f"{k}={v!r}" for k, v in sorted(self.to_mapping().items()))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "EngineConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
            kwargs[key] = (int if "int" in str(known[key]) else float)(value)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "EngineConfig":
        """Parse a flat key=value config file ('#' starts a comment)."""
        mapping = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"malformed config line: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
        return cls.from_mapping(mapping)

    def to_file(self, path: str | Path) -> None:
        lines = [f"{k} = {v}" for k, v in sorted(self.to_mapping().items())]
        Path(path).write_text("\n".join(lines) + "\n")


class ShipState:
    """One ship. `inner_since` tracks inner-hexagon entry order for locking."""

    __slots__ = ("role", "x", "y", "vx", "vy", "heading", "alive",
                 "fire_cooldown", "inner_since")

    def __init__(self, role, x, y, vx, vy, heading, alive=True,
                 fire_cooldown=0, inner_since=None):
        self.role = role
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.heading = heading
        self.alive = alive
        self.fire_cooldown = fire_cooldown
        self.inner_since = inner_since

    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    def copy(self) -> "ShipState":
        return ShipState(self.role, self.x, self.y, self.vx, self.vy,
                         self.heading, self.alive, self.fire_cooldown,
                         self.inner_since)


class FortressState:
    __slots__ = ("angle", "alive", "lock_target", "firing", "vulnerable",
                 "fire_cooldown", "vulnerability_timer", "respawn_pending",
                 "respawn_timer")

    def __init__(self, angle=0.0, alive=True, lock_target=None, firing=False,
                 vulnerable=False, fire_cooldown=0, vulnerability_timer=0,
                 respawn_pending=False, respawn_timer=0):
        self.angle = angle
        self.alive = alive
        self.lock_target = lock_target
        self.firing = firing
        self.vulnerable = vulnerable
        self.fire_cooldown = fire_cooldown
        self.vulnerability_timer = vulnerability_timer
        self.respawn_pending = respawn_pending
        self.respawn_timer = respawn_timer

    def copy(self) -> "FortressState":
        return FortressState(self.angle, self.alive, self.lock_target,
                             self.firing, self.vulnerable, self.fire_cooldown,
                             self.vulnerability_timer, self.respawn_pending,
                             self.respawn_timer)


class Missile:
    __slots__ = ("owner", "x", "y", "vx", "vy", "age")

    def __init__(self, owner, x, y, vx, vy, age=0):
        self.owner = owner
        self.x = x
        self.y = y
        self.vx = vx
        self.vy = vy
        self.age = age


class GameState:
    """Full world snapshot for one frame.

    `last_action_bait` / `last_action_shooter` hold the joint action that
    produced this state (None at frame 0); observers use them to pair
    states with teammate actions without replaying the trial.
    """

    __slots__ = ("config", "frame", "bait", "shooter", "fortress", "missiles",
                 "score", "events", "last_action_bait", "last_action_shooter")

    def __init__(self, config, frame, bait, shooter, fortress, missiles,
                 score, events, last_action_bait=None, last_action_shooter=None):
        self.config = config
        self.frame = frame
        self.bait = bait
        self.shooter = shooter
        self.fortress = fortress
        self.missiles = missiles
        self.score = score
        self.events = events
        self.last_action_bait = last_action_bait
        self.last_action_shooter = last_action_shooter

    def ship(self, role: str) -> ShipState:
        return self.bait if role == BAIT else self.shooter

    @property
    def done(self) -> bool:
        return self.frame >= self.config.trial_length_frames


class FrameRecord(NamedTuple):
    """(state, actions rolled out at that state, events those actions caused)."""

    frame: int
    state: GameState
    action_bait: Action
    action_shooter: Action
    events: tuple


@dataclass
class Trajectory:
    """Seeded, replayable per-frame log of one trial."""

    records: list
    seed: int
    config: EngineConfig
    policy_ids: dict
    library_digest: str = ""

    def __len__(self) -> int:
        return len(self.records)

    @property
    def config_digest(self) -> str:
        return self.config.digest()

    @property
    def final_state(self) -> GameState:
        return self.records[-1].state if self.records else None


@dataclass
class TrialStats:
    kills: int
    kills_per_minute: float
    deaths: dict
    time_in_inner: dict
    time_in_outer: dict
    frames: int


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labelled parts (not Python hash)."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def role_rngs(seed: int) -> dict:
    """Per-role action-sampling generators, identical for live and headless runs."""
    return {role: random.Random(derive_seed(seed, role)) for role in ROLES}


def _norm_heading(h: float) -> float:
    h = math.fmod(h, 360.0)
    return h + 360.0 if h < 0.0 else h


def wrap_angle(delta: float) -> float:
    """Wrap a degree difference into [-180, 180)."""
    return (delta + 180.0) % 360.0 - 180.0


def in_hexagon(x: float, y: float, cx: float, cy: float, radius: float) -> bool:
    """Point-in-flat-top-regular-hexagon, circumradius `radius`."""
    px = abs(x - cx)
    py = abs(y - cy)
    if py > SQRT3 * 0.5 * radius:
        return False
    return SQRT3 * px + py <= SQRT3 * radius


def in_inner_hexagon(pos: tuple, config: EngineConfig) -> bool:
    cx, cy = config.center
    return in_hexagon(pos[0], pos[1], cx, cy, config.inner_hex_radius)


def in_outer_hexagon(pos: tuple, config: EngineConfig) -> bool:
    cx, cy = config.center
    return in_hexagon(pos[0], pos[1], cx, cy, config.outer_hex_radius)


def new_game(config: EngineConfig, seed: int = 0) -> GameState:
    """Fresh trial state at frame 0. The engine itself is deterministic;
    `seed` only names the trial for logging and policy-rng derivation."""
    config.validate()
    ships = {}
    for role in ROLES:
        x, y, heading = config.spawn_point(role)
        ships[role] = ShipState(role, x, y, 0.0, 0.0, heading)
    return GameState(config, 0, ships[BAIT], ships[SHOOTER], FortressState(),
                     (), 0, ())


def _fresh_ship(config: EngineConfig, role: str) -> ShipState:
    x, y, heading = config.spawn_point(role)
    return ShipState(role, x, y, 0.0, 0.0, heading)


def _integrate_ship(ship: ShipState, action: Action, cfg: EngineConfig) -> ShipState:
    s = ship.copy()
    if not s.alive:
        return s
    dt = cfg.dt
    if action.turn:
        s.heading = _norm_heading(s.heading + action.turn * cfg.ship_turn_rate * dt)
    if action.thrust:
        rad = math.radians(s.heading)
        s.vx += math.cos(rad) * cfg.ship_thrust_accel * dt
        s.vy += math.sin(rad) * cfg.ship_thrust_accel * dt
    s.vx *= cfg.friction
    s.vy *= cfg.friction
    speed = math.hypot(s.vx, s.vy)
    if speed > cfg.ship_max_speed_engine:
        scale = cfg.ship_max_speed_engine / speed
        s.vx *= scale
        s.vy *= scale
    s.x += s.vx * dt
    s.y += s.vy * dt
    if s.fire_cooldown > 0:
        s.fire_cooldown -= 1
    return s


def step(state: GameState, a_bait: Action, a_shooter: Action) -> GameState:
    """Advance exactly one frame. See the module docstring for phase order."""
    cfg = state.config
    if state.frame >= cfg.trial_length_frames:
        raise TrialCompleteError(
            f"trial already complete at frame {state.frame}"
        )
    events = []
    cx, cy = cfg.center
    dt = cfg.dt

    # Phase 1: kinematics.
    bait = _integrate_ship(state.bait, a_bait, cfg)
    shooter = _integrate_ship(state.shooter, a_shooter, cfg)
    missiles = []
    for m in state.missiles:
        age = m.age + 1
        if age > cfg.missile_lifetime_frames:
            continue
        missiles.append(Missile(m.owner, m.x + m.vx * dt, m.y + m.vy * dt,
                                m.vx, m.vy, age))

    # Inner-hexagon entry bookkeeping (entry order decides lock priority).
    for ship in (bait, shooter):
        if ship.alive and in_hexagon(ship.x, ship.y, cx, cy, cfg.inner_hex_radius):
            if ship.inner_since is None:
                ship.inner_since = state.frame + 1
        else:
            ship.inner_since = None

    # Phase 2: fortress.
    fortress = state.fortress.copy()
    fortress.firing = False
    if fortress.vulnerability_timer > 0:
        fortress.vulnerability_timer -= 1
    if fortress.fire_cooldown > 0:
        fortress.fire_cooldown -= 1
    if fortress.alive:
        # Keep lock while the target is alive and inside; else fall back to
        # the first-entered live ship inside the inner hexagon.
        target = None
        if fortress.lock_target is not None:
            held = bait if fortress.lock_target == BAIT else shooter
            if held.alive and held.inner_since is not None:
                target = held
        if target is None:
            fortress.lock_target = None
            candidates = [s for s in (bait, shooter)
                          if s.alive and s.inner_since is not None]
            if candidates:
                target = min(candidates,
                             key=lambda s: (s.inner_since, s.role != BAIT))
                fortress.lock_target = target.role
        if target is not None:
            desired = math.degrees(math.atan2(target.y - cy, target.x - cx))
            err = wrap_angle(desired - fortress.angle)
            max_turn = cfg.fortress_track_rate * dt
            turn = max(-max_turn, min(max_turn, err))
            fortress.angle = _norm_heading(fortress.angle + turn)
            aim_err = wrap_angle(desired - fortress.angle)
            if abs(aim_err) <= cfg.fortress_aim_tolerance and fortress.fire_cooldown == 0:
                fortress.firing = True
                fortress.fire_cooldown = cfg.fortress_fire_cooldown_frames
                fortress.vulnerability_timer = cfg.vulnerability_window_frames
                rad = math.radians(fortress.angle)
                offset = cfg.fortress_radius + cfg.missile_radius + 2.0
                missiles.append(Missile(
                    FORTRESS,
                    cx + math.cos(rad) * offset, cy + math.sin(rad) * offset,
                    math.cos(rad) * cfg.missile_speed,
                    math.sin(rad) * cfg.missile_speed))
        else:
            fortress.angle = _norm_heading(
                fortress.angle + cfg.fortress_idle_rate * dt)
    else:
        if fortress.respawn_timer > 0:
            fortress.respawn_timer -= 1
        blocked = any(
            s.alive and in_hexagon(s.x, s.y, cx, cy, cfg.outer_hex_radius)
            for s in (bait, shooter))
        if fortress.respawn_timer == 0 and not blocked:
            fortress = FortressState()
            events.append(EV_FORTRESS_RESPAWNED)
    fortress.vulnerable = fortress.vulnerability_timer > 0

    # Phase 3: ship missile spawns.
    for ship, action in ((bait, a_bait), (shooter, a_shooter)):
        if ship.alive and action.fire and ship.fire_cooldown == 0:
            ship.fire_cooldown = cfg.ship_fire_cooldown_frames
            rad = math.radians(ship.heading)
            offset = cfg.ship_radius + cfg.missile_radius + 2.0
            missiles.append(Missile(
                ship.role,
                ship.x + math.cos(rad) * offset, ship.y + math.sin(rad) * offset,
                math.cos(rad) * cfg.missile_speed,
                math.sin(rad) * cfg.missile_speed))

    # Phase 4: collisions.
    fortress_killed = False
    hit_r_ship = cfg.ship_radius + cfg.missile_radius
    hit_r_fortress = cfg.fortress_radius + cfg.missile_radius
    body_r = cfg.ship_radius + cfg.fortress_radius
    consumed = set()
    for ship in (bait, shooter):
        if not ship.alive:
            continue
        died = not (0.0 <= ship.x <= cfg.arena_width
                    and 0.0 <= ship.y <= cfg.arena_height)
        if not died and fortress.alive:
            died = math.hypot(ship.x - cx, ship.y - cy) <= body_r
        if not died:
            for idx, m in enumerate(missiles):
                if idx in consumed or m.owner == ship.role:
                    continue
                if math.hypot(ship.x - m.x, ship.y - m.y) <= hit_r_ship:
                    died = True
                    consumed.add(idx)
                    break
        if died:
            ship.alive = False
            ship.inner_since = None
            events.append(ev_ship_killed(ship.role))
    if fortress.alive:
        for idx, m in enumerate(missiles):
            if idx in consumed or m.owner == FORTRESS:
                continue
            if math.hypot(m.x - cx, m.y - cy) <= hit_r_fortress:
                consumed.add(idx)  # absorbed either way
                if fortress.vulnerable and not fortress_killed:
                    fortress_killed = True
    if consumed:
        missiles = [m for i, m in enumerate(missiles) if i not in consumed]

    # Phase 5: scoring and resets.
    score = state.score
    if fortress_killed:
        score += 1
        events.append(EV_FORTRESS_KILLED)
        fortress.alive = False
        fortress.vulnerable = False
        fortress.vulnerability_timer = 0
        fortress.firing = False
        fortress.lock_target = None
        fortress.respawn_pending = True
        fortress.respawn_timer = cfg.fortress_respawn_delay_frames
        # A singly-dead ship stays dead until the next fortress kill.
        if not bait.alive:
            bait = _fresh_ship(cfg, BAIT)
        if not shooter.alive:
            shooter = _fresh_ship(cfg, SHOOTER)
    elif not bait.alive and not shooter.alive:
        # Both dead: soft reset without touching the score.
        bait = _fresh_ship(cfg, BAIT)
        shooter = _fresh_ship(cfg, SHOOTER)
        fortress = FortressState()
        missiles = []

    # Phase 6: frame advance and terminal event.
    frame = state.frame + 1
    if frame >= cfg.trial_length_frames:
        events.append(EV_TRIAL_END)
    return GameState(cfg, frame, bait, shooter, fortress, tuple(missiles),
                     score, tuple(events), a_bait, a_shooter)


def run_trial(p_bait, p_shooter, config: EngineConfig, seed: int,
              frames: Optional[int] = None) -> tuple[Trajectory, TrialStats]:
    """Roll one seeded trial with two policies and collect stats.

    Policies expose `.role`, `.act(state, rng) -> Action`, and optionally
    `.policy_id`, `.reset()`, and `.drain_events()` (for controllers that
    emit policy-switch events).
    """
    if getattr(p_bait, "role", BAIT) != BAIT:
        raise UsageError(f"bait slot got policy with role {p_bait.role!r}")
    if getattr(p_shooter, "role", SHOOTER) != SHOOTER:
        raise UsageError(f"shooter slot got policy with role {p_shooter.role!r}")
    if frames is None:
        frames = config.trial_length_frames
    if frames > config.trial_length_frames:
        config = replace(config, trial_length_frames=frames)
    rngs = role_rngs(seed)
    for p in (p_bait, p_shooter):
        if hasattr(p, "reset"):
            p.reset()

    state = new_game(config, seed)
    records = []
    deaths = {BAIT: 0, SHOOTER: 0}
    inner_frames = {BAIT: 0, SHOOTER: 0}
    outer_frames = {BAIT: 0, SHOOTER: 0}
    cx, cy = config.center
    for _ in range(frames):
        for role, ship in ((BAIT, state.bait), (SHOOTER, state.shooter)):
            if ship.alive:
                if in_hexagon(ship.x, ship.y, cx, cy, config.inner_hex_radius):
                    inner_frames[role] += 1
                if in_hexagon(ship.x, ship.y, cx, cy, config.outer_hex_radius):
                    outer_frames[role] += 1
        a_bait = p_bait.act(state, rngs[BAIT])
        a_shooter = p_shooter.act(state, rngs[SHOOTER])
        nxt = step(state, a_bait, a_shooter)
        events = nxt.events
        for p in (p_bait, p_shooter):
            if hasattr(p, "drain_events"):
                extra = p.drain_events()
                if extra:
                    events = events + tuple(extra)
        for ev in events:
            if ev.startswith("ship_killed:"):
                deaths[ev.split(":", 1)[1]] += 1
        records.append(FrameRecord(state.frame, state, a_bait, a_shooter, events))
        state = nxt

    traj = Trajectory(
        records=records,
        seed=seed,
        config=config,
        policy_ids={BAIT: getattr(p_bait, "policy_id", repr(p_bait)),
                    SHOOTER: getattr(p_shooter, "policy_id", repr(p_shooter))},
    )
    stats = TrialStats(
        kills=state.score,
        kills_per_minute=state.score * (60.0 * config.fps / frames),
        deaths=deaths,
        time_in_inner={r: inner_frames[r] / frames for r in ROLES},
        time_in_outer={r: outer_frames[r] / frames for r in ROLES},
        frames=frames,
    )
    return traj, stats


# --- trajectory serialization (JSONL, one object per frame + header) -------

def _ship_json(s: ShipState) -> dict:
    return {"x": s.x, "y": s.y, "vx": s.vx, "vy": s.vy, "h": s.heading,
            "alive": s.alive}


def _record_json(rec: FrameRecord) -> dict:
    st = rec.state
    f = st.fortress
    return {
        "frame": rec.frame,
        "bait": _ship_json(st.bait),
        "shooter": _ship_json(st.shooter),
        "fortress": {"angle": f.angle, "alive": f.alive, "vuln": f.vulnerable,
                     "lock": f.lock_target},
        "missiles": [{"o": m.owner, "x": m.x, "y": m.y, "vx": m.vx, "vy": m.vy}
                     for m in st.missiles],
        "a_bait": list(rec.action_bait),
        "a_shooter": list(rec.action_shooter),
        "events": list(rec.events),
        "score": st.score,
    }


def trajectory_lines(traj: Trajectory, extra_header: Optional[dict] = None) -> Iterable[str]:
    header = {
        "type": "header",
        "seed": traj.seed,
        "config_digest": traj.config_digest,
        "policy_ids": traj.policy_ids,
        "library_digest": traj.library_digest,
        "config": traj.config.to_mapping(),
    }
    if extra_header:
        header.update(extra_header)
    yield json.dumps(header)
    for rec in traj.records:
        yield json.dumps(_record_json(rec))


def write_trajectory(traj: Trajectory, path: str | Path,
                     extra_header: Optional[dict] = None) -> None:
    with open(path, "w") as fh:
        for line in trajectory_lines(traj, extra_header):
            fh.write(line + "\n")


def read_trajectory(path: str | Path) -> Trajectory:
    """Rebuild a Trajectory (with reconstructed GameState snapshots) from JSONL."""
    with open(path) as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise UsageError(f"{path}: missing trajectory header line")
    header = lines[0]
    config = EngineConfig.from_mapping(header["config"])
    records = []
    prev_actions = (None, None)
    for obj in lines[1:]:
        ships = {}
        for role in ROLES:
            d = obj[role]
            ships[role] = ShipState(role, d["x"], d["y"], d["vx"], d["vy"],
                                    d["h"], d["alive"])
        fd = obj["fortress"]
        fortress = FortressState(angle=fd["angle"], alive=fd["alive"],
                                 vulnerable=fd["vuln"], lock_target=fd["lock"])
        missiles = tuple(Missile(m["o"], m["x"], m["y"], m["vx"], m["vy"])
                         for m in obj["missiles"])
        a_bait = Action(*obj["a_bait"])
        a_shooter = Action(*obj["a_shooter"])
        state = GameState(config, obj["frame"], ships[BAIT], ships[SHOOTER],
                          fortress, missiles, obj["score"], (),
                          prev_actions[0], prev_actions[1])
        records.append(FrameRecord(obj["frame"], state, a_bait, a_shooter,
                                   tuple(obj["events"])))
        prev_actions = (a_bait, a_shooter)
    return Trajectory(records=records, seed=header["seed"], config=config,
                      policy_ids=header["policy_ids"],
                      library_digest=header.get("library_digest", ""))
