"""Self-play performance table and the real-time adaptive controller.

The table holds mean fortress kills per minute for every bait x shooter
pair. The adaptive controller watches its teammate through a sliding
window, classifies the nearest library policy by cross-entropy, looks up
the best complementary policy in the table, and switches to it (effective
on the next frame). Per-frame cost stays O(library size): the window keeps
per-policy log-probability sums incrementally instead of rescoring.
"""

from __future__ import annotations

import csv
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .engine import (
    BAIT, SHOOTER, Action, EngineConfig, GameState, Trajectory, derive_seed,
    ev_policy_switch, run_trial,
)
from .errors import TableKeyError, UsageError
from .policies import (
    LibraryPolicy, PolicyLibrary, sample_action,
)
from .similarity import Window, cem_estimate


@dataclass
class PerformanceTable:
    """Bait x shooter matrix of mean kills per minute."""

    bait_ids: list
    shooter_ids: list
    values: list               # values[i][j] for (bait_ids[i], shooter_ids[j])
    minutes_per_cell: int = 0
    seed_base: int = 0
    meta: dict = field(default_factory=dict)

    def value(self, bait_id: str, shooter_id: str) -> float:
        return self.values[self._bait_index(bait_id)][self._shooter_index(shooter_id)]

    def _bait_index(self, bait_id: str) -> int:
        try:
            return self.bait_ids.index(bait_id)
        except ValueError:
            raise TableKeyError(f"unknown bait id {bait_id!r}") from None

    def _shooter_index(self, shooter_id: str) -> int:
        try:
            return self.shooter_ids.index(shooter_id)
        except ValueError:
            raise TableKeyError(f"unknown shooter id {shooter_id!r}") from None

    def has_id(self, policy_id: str) -> bool:
        return policy_id in self.bait_ids or policy_id in self.shooter_ids

    def role_of(self, policy_id: str) -> str:
        if policy_id in self.bait_ids:
            return BAIT
        if policy_id in self.shooter_ids:
            return SHOOTER
        raise TableKeyError(f"unknown policy id {policy_id!r}")

    def save_csv(self, path: str | Path, sidecar: bool = True) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([""] + self.shooter_ids)
            for bait_id, row in zip(self.bait_ids, self.values):
                writer.writerow([bait_id] + [repr(v) for v in row])
        if sidecar:
            meta = {"minutes_per_cell": self.minutes_per_cell,
                    "seed_base": self.seed_base, **self.meta}
            path.with_suffix(".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load_csv(cls, path: str | Path) -> "PerformanceTable":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        shooter_ids = rows[0][1:]
        bait_ids = [r[0] for r in rows[1:]]
        values = [[float(v) for v in r[1:]] for r in rows[1:]]
        meta = {}
        sidecar = path.with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
        return cls(bait_ids, shooter_ids, values,
                   minutes_per_cell=meta.pop("minutes_per_cell", 0),
                   seed_base=meta.pop("seed_base", 0), meta=meta)


# Published self-play reference values for the default 9x7 library layout
# (kills per minute). Used by lookup tests and as a ready-made complement
# table before a locally built one exists.
REFERENCE_TABLE_VALUES = [
    # S1   S2   S3   S4   S5   S6   S7
    [5.1, 5.7, 5.0, 5.1, 4.9, 4.5, 3.9],   # B1
    [6.5, 7.0, 6.0, 7.6, 7.6, 7.5, 6.8],   # B2
    [5.9, 6.7, 5.8, 8.0, 8.1, 8.2, 7.9],   # B3
    [6.4, 7.1, 5.9, 7.5, 7.6, 7.3, 7.3],   # B4
    [6.3, 7.1, 6.2, 6.8, 6.8, 6.4, 6.2],   # B5
    [6.2, 7.1, 6.1, 7.8, 7.8, 7.4, 7.0],   # B6
    [6.2, 7.0, 6.2, 7.8, 7.8, 8.0, 7.8],   # B7
    [4.3, 5.3, 5.4, 3.1, 2.8, 3.0, 3.0],   # B8
    [4.9, 5.7, 5.5, 2.3, 2.1, 2.1, 1.8],   # B9
]


def reference_table() -> PerformanceTable:
    return PerformanceTable(
        bait_ids=[f"B{i}" for i in range(1, 10)],
        shooter_ids=[f"S{j}" for j in range(1, 8)],
        values=[row[:] for row in REFERENCE_TABLE_VALUES],
        meta={"source": "reference"},
    )


def build_table(library: PolicyLibrary, config: EngineConfig,
                minutes_per_cell: int, seed_base: int,
                progress=None) -> PerformanceTable:
    """Evaluate every bait x shooter pair over seeded 1-minute trials.

    Cell seeds derive only from (seed_base, bait id, shooter id, trial), so
    cells are order-independent and may be computed in parallel.
    """
    if minutes_per_cell < 1:
        raise UsageError("minutes_per_cell must be >= 1")
    frames = 60 * config.fps
    values = []
    for bi, bait_spec in enumerate(library.baits):
        row = []
        for sj, shooter_spec in enumerate(library.shooters):
            total = 0.0
            for trial in range(minutes_per_cell):
                seed = derive_seed(seed_base, bait_spec.id, shooter_spec.id, trial)
                _, stats = run_trial(LibraryPolicy(bait_spec),
                                     LibraryPolicy(shooter_spec),
                                     config, seed, frames)
                total += stats.kills_per_minute
            row.append(total / minutes_per_cell)
            if progress is not None:
                progress(bait_spec.id, shooter_spec.id, row[-1])
        values.append(row)
    return PerformanceTable(
        bait_ids=[s.id for s in library.baits],
        shooter_ids=[s.id for s in library.shooters],
        values=values,
        minutes_per_cell=minutes_per_cell,
        seed_base=seed_base,
        meta={"config_digest": config.digest(), "library_digest": library.digest()},
    )


def best_complement(table: PerformanceTable, teammate_id: str) -> str:
    """Argmax over the teammate's row (bait) or column (shooter); ties break
    toward the lowest index."""
    if teammate_id in table.bait_ids:
        row = table.values[table._bait_index(teammate_id)]
        best = max(range(len(row)), key=lambda j: (row[j], -j))
        return table.shooter_ids[best]
    if teammate_id in table.shooter_ids:
        j = table._shooter_index(teammate_id)
        col = [table.values[i][j] for i in range(len(table.bait_ids))]
        best = max(range(len(col)), key=lambda i: (col[i], -i))
        return table.bait_ids[best]
    raise TableKeyError(f"unknown policy id {teammate_id!r}")


class _IncrementalScorer:
    """Ring buffer of per-policy frame log-probs with running sums."""

    def __init__(self, scorers, capacity: int):
        self.scorers = scorers
        self.capacity = capacity
        self.buffer = deque()
        self.sums = [0.0] * len(scorers)

    def push(self, state: GameState, action: Action) -> None:
        logps = [s.logp(state, action) for s in self.scorers]
        self.buffer.append(logps)
        for i, lp in enumerate(logps):
            self.sums[i] += lp
        if len(self.buffer) > self.capacity:
            old = self.buffer.popleft()
            for i, lp in enumerate(old):
                self.sums[i] -= lp

    def __len__(self):
        return len(self.buffer)

    def means(self) -> list:
        n = len(self.buffer)
        return [s / n for s in self.sums]


@dataclass
class SwitchRecord:
    frame: int
    from_id: str
    to_id: str
    classified_teammate_id: str


class AdaptiveController:
    """Infer the teammate's nearest library policy and play its complement.

    `margin` adds optional hysteresis: reclassify only when the challenger
    beats the incumbent's score by that many nats.
    """

    def __init__(self, library: PolicyLibrary, table: PerformanceTable,
                 agent_role: str, window: int, seed: int,
                 min_warmup: Optional[int] = None, margin: float = 0.0):
        if window <= 0:
            raise UsageError("window must be positive")
        self.library = library
        self.table = table
        self.role = agent_role
        self.teammate_role = BAIT if agent_role == SHOOTER else SHOOTER
        self.window_size = window
        self.min_warmup = window // 2 if min_warmup is None else min_warmup
        self.margin = margin
        self.rng = random.Random(derive_seed(seed, "adaptive", agent_role))
        own = library.for_role(agent_role)
        self.current_policy = LibraryPolicy(own[self.rng.randrange(len(own))])
        self._teammate_specs = library.for_role(self.teammate_role)
        self._teammate_index = {s.id: i for i, s in enumerate(self._teammate_specs)}
        self._scorer = _IncrementalScorer(
            [LibraryPolicy(s) for s in self._teammate_specs], window)
        self.window = Window(window, self.teammate_role)
        self.last_inference = None
        self.switch_log = []
        self._pending_events = []
        self._classified_id = None

    @property
    def policy_id(self) -> str:
        return f"adaptive({self.window_size})"

    def drain_events(self) -> list:
        events, self._pending_events = self._pending_events, []
        return events

    def act(self, state: GameState) -> Action:
        return sample_action(self.current_policy.dist_for(state), self.rng)

    def observe(self, state: GameState, teammate_action: Optional[Action]) -> None:
        """Push one observed teammate frame and re-run inference once warm."""
        if teammate_action is not None and self.window.push(state, teammate_action):
            self._scorer.push(state, teammate_action)
        if len(self._scorer) >= self.min_warmup:
            self._infer(state.frame)

    def step(self, state: GameState, teammate_action: Optional[Action]) -> Action:
        """Feed one observed teammate frame; return this frame's own action.

        The returned action always comes from the policy that was current at
        frame start: a switch decided here takes effect next frame.
        """
        action = self.act(state)
        self.observe(state, teammate_action)
        return action

    def _infer(self, frame: int) -> None:
        means = self._scorer.means()
        best = 0
        for i in range(1, len(means)):
            if means[i] > means[best]:
                best = i
        candidate = self._teammate_specs[best].id
        if (self.margin > 0.0 and self._classified_id is not None
                and candidate != self._classified_id):
            inc_val = means[self._teammate_index[self._classified_id]]
            if means[best] - inc_val <= self.margin:
                candidate = self._classified_id
        self._classified_id = candidate
        self.last_inference = (candidate, means)
        complement = best_complement(self.table, candidate)
        if complement != self.current_policy.policy_id:
            self.switch_log.append(SwitchRecord(
                frame, self.current_policy.policy_id, complement, candidate))
            self._pending_events.append(ev_policy_switch(complement))
            self.current_policy = self.library.policy(complement)


def controller_init(library: PolicyLibrary, table: PerformanceTable,
                    agent_role: str, window_T: int, seed: int,
                    margin: float = 0.0) -> AdaptiveController:
    return AdaptiveController(library, table, agent_role, window_T, seed,
                              margin=margin)


def controller_step(controller: AdaptiveController, state: GameState,
                    teammate_action: Action) -> Action:
    return controller.step(state, teammate_action)


class AdaptivePolicy:
    """run_trial-compatible wrapper around AdaptiveController.

    run_trial policies see only the current state, so the teammate pair
    pushed each frame is the previous state with the action recorded on the
    current one (GameState.last_action_*). This one-frame lag is the
    canonical integration used by both the harness and the live service.
    """

    def __init__(self, library: PolicyLibrary, table: PerformanceTable,
                 agent_role: str, window: int, seed: int, margin: float = 0.0):
        self._factory = lambda: AdaptiveController(
            library, table, agent_role, window, seed, margin=margin)
        self.role = agent_role
        self.controller = self._factory()
        self._prev_state = None

    @property
    def policy_id(self) -> str:
        return self.controller.policy_id

    @property
    def switch_log(self) -> list:
        return self.controller.switch_log

    def reset(self) -> None:
        self.controller = self._factory()
        self._prev_state = None

    def drain_events(self) -> list:
        return self.controller.drain_events()

    def act(self, state: GameState, rng: random.Random) -> Action:
        teammate_role = self.controller.teammate_role
        teammate_action = (state.last_action_bait if teammate_role == BAIT
                           else state.last_action_shooter)
        if self._prev_state is not None:
            self.controller.observe(self._prev_state, teammate_action)
        self._prev_state = state
        return self.controller.act(state)


def similarity_to_optimal(traj: Trajectory, teammate_id: str,
                          table: PerformanceTable,
                          library: PolicyLibrary) -> float:
    """Whole-trajectory CEM between the observed player and the library
    policy that is the table-optimal partner for `teammate_id`."""
    optimal_id = best_complement(table, teammate_id)
    optimal_spec = library.by_id(optimal_id)
    observed_role = optimal_spec.role
    window = Window(max(1, len(traj.records)), observed_role)
    for rec in traj.records:
        action = rec.action_bait if observed_role == BAIT else rec.action_shooter
        window.push(rec.state, action)
    return cem_estimate(window, optimal_spec)
