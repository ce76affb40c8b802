"""Cross-entropy policy similarity: sliding windows, classification, PCA.

The similarity between an observed player and a library policy is the mean
log-probability of the observed actions under that policy, each frame scored
through the policy's own observation encoding. Frames where the observed
ship is dead are excluded (a dead ship's action is meaningless and would
bias every policy toward uniform).

The PCA used for the 2D policy-space embedding runs a cyclic Jacobi
eigensolver written here; the matrices are at most library-sized, so no
numerical library is needed on this path (tests check it against an
independent dense eigensolver).
"""

from __future__ import annotations

import bisect
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .engine import BAIT, Action, GameState, Trajectory, in_hexagon
from .errors import DegenerateDataError, InsufficientDataError, UsageError
from .policies import LibraryPolicy, PolicyLibrary, PolicySpec

CEM_LOWER_BOUND = 3.0 * math.log(0.01)  # smoothing floor makes this the worst case


class Window:
    """Ring buffer of the last T live (state, action) pairs for one player."""

    def __init__(self, capacity: int, role: str):
        if capacity <= 0:
            raise UsageError("window capacity must be positive")
        self.capacity = capacity
        self.role = role
        self.entries = deque(maxlen=capacity)

    def push(self, state: GameState, action: Action) -> bool:
        """Append one frame; dead-player frames are skipped. Returns whether
        the frame was accepted."""
        if not state.ship(self.role).alive:
            return False
        self.entries.append((state, action))
        return True

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def frames_used(self) -> int:
        return len(self.entries)


@dataclass
class SimilarityVector:
    policy_ids: list
    values: list
    frames_used: int

    def argmax_id(self) -> str:
        best = 0
        for i in range(1, len(self.values)):
            if self.values[i] > self.values[best]:
                best = i
        return self.policy_ids[best]


def _as_scorer(policy) -> LibraryPolicy:
    if isinstance(policy, PolicySpec):
        return LibraryPolicy(policy)
    return policy  # anything exposing .logp(state, action)


def cem_estimate(window: Window, policy) -> float:
    """Mean log-probability of the windowed actions under `policy`."""
    if len(window.entries) == 0:
        raise InsufficientDataError("empty window: no inference yet")
    scorer = _as_scorer(policy)
    if getattr(scorer, "role", window.role) != window.role:
        raise UsageError(
            f"policy role {scorer.role!r} does not match window role {window.role!r}")
    total = 0.0
    for state, action in window.entries:
        total += scorer.logp(state, action)
    return total / len(window.entries)


def similarity_vector(window: Window, library: PolicyLibrary,
                      role: str) -> SimilarityVector:
    """CEM against every same-role library policy, preserving library order."""
    specs = library.for_role(role)
    if len(window.entries) == 0:
        raise InsufficientDataError("empty window: no inference yet")
    scorers = [LibraryPolicy(s) for s in specs]
    totals = [0.0] * len(scorers)
    for state, action in window.entries:
        for i, scorer in enumerate(scorers):
            totals[i] += scorer.logp(state, action)
    n = len(window.entries)
    return SimilarityVector([s.id for s in specs], [t / n for t in totals], n)


def classify(vector: SimilarityVector) -> str:
    """Argmax policy id; ties break toward the lowest library index."""
    if not vector.policy_ids:
        raise UsageError("empty similarity vector")
    return vector.argmax_id()


def _live_frame_logps(traj: Trajectory, library: PolicyLibrary, role: str):
    """Per-live-frame log-probabilities for every same-role library policy.

    Returns (frame_indices, per-policy prefix sums) so that any window's
    mean is a subtraction away.
    """
    specs = library.for_role(role)
    scorers = [LibraryPolicy(s) for s in specs]
    frames = []
    prefix = [[0.0] for _ in scorers]
    for rec in traj.records:
        ship = rec.state.ship(role)
        if not ship.alive:
            continue
        action = rec.action_bait if role == BAIT else rec.action_shooter
        frames.append(rec.frame)
        for i, scorer in enumerate(scorers):
            prefix[i].append(prefix[i][-1] + scorer.logp(rec.state, action))
    return [s.id for s in specs], frames, prefix


def logprob_series(traj: Trajectory, library: PolicyLibrary, role: str,
                   window: int, stride: int = 30):
    """Sliding-window similarity vectors along a trajectory.

    Yields rows (frame, values list in library order) for
    frame = window, window + stride, ... using the trailing window of live
    frames at each point. Trajectories shorter than one window raise
    InsufficientDataError.
    """
    if len(traj.records) < window:
        raise InsufficientDataError(
            f"trajectory has {len(traj.records)} frames, needs {window}")
    if stride <= 0:
        raise UsageError("stride must be positive")
    ids, frames, prefix = _live_frame_logps(traj, library, role)
    rows = []
    first_frame = traj.records[0].frame
    for t in range(first_frame + window, first_frame + len(traj.records) + 1, stride):
        # live frames in (t - window, t]
        hi = bisect.bisect_right(frames, t - 1)
        lo = bisect.bisect_left(frames, t - window)
        if hi <= lo:
            continue  # entire window dead; no inference at this timestamp
        n = hi - lo
        values = [(p[hi] - p[lo]) / n for p in prefix]
        rows.append((t, values))
    return ids, rows


@dataclass
class Episode:
    start_frame: int
    end_frame: int
    complete: bool


def segment_episodes(traj: Trajectory) -> list:
    """Half-open [entry, kill) segments: a bait inner-hexagon entry up to the
    next fortress kill. A trailing entry without a kill yields one incomplete
    episode."""
    cfg = traj.config
    cx, cy = cfg.center
    episodes = []
    open_start = None
    prev_inside = False
    for rec in traj.records:
        b = rec.state.bait
        inside = b.alive and in_hexagon(b.x, b.y, cx, cy, cfg.inner_hex_radius)
        if inside and not prev_inside and open_start is None:
            open_start = rec.frame
        if "fortress_killed" in rec.events and open_start is not None:
            episodes.append(Episode(open_start, rec.frame + 1, True))
            open_start = None
        prev_inside = inside
    if open_start is not None:
        episodes.append(Episode(open_start, traj.records[-1].frame + 1, False))
    return episodes


# --- PCA (cyclic Jacobi eigensolver, symmetric matrices) ---------------------

@dataclass
class PcaModel:
    mean: list
    components: list        # k rows, each a unit-norm direction
    explained_variance: list

    def explained_variance_ratio(self, total: Optional[float] = None) -> list:
        if total is None:
            total = sum(self.explained_variance)
        if total <= 0.0:
            return [0.0 for _ in self.explained_variance]
        return [v / total for v in self.explained_variance]


def jacobi_eigh(matrix: list, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue;
    eigenvectors[i] pairs with eigenvalues[i].
    """
    n = len(matrix)
    a = [row[:] for row in matrix]
    v = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i][j] ** 2 for i in range(n)
                            for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p][q]) < tol * 1e-3:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k][p], v[k][q]
                    v[k][p] = c * vkp - s * vkq
                    v[k][q] = s * vkp + c * vkq
    eigvals = [a[i][i] for i in range(n)]
    vectors = [[v[k][i] for k in range(n)] for i in range(n)]
    order = sorted(range(n), key=lambda i: eigvals[i], reverse=True)
    return [eigvals[i] for i in order], [vectors[i] for i in order]


def pca_fit(rows: list, k: int) -> PcaModel:
    """Top-k principal components of mean-centered rows (sample covariance)."""
    n = len(rows)
    if n < 2:
        raise UsageError("pca_fit needs at least 2 rows")
    dim = len(rows[0])
    if k > dim:
        raise UsageError(f"k={k} exceeds data dimension {dim}")
    mean = [sum(r[j] for r in rows) / n for j in range(dim)]
    centered = [[r[j] - mean[j] for j in range(dim)] for r in rows]
    cov = [[0.0] * dim for _ in range(dim)]
    for row in centered:
        for i in range(dim):
            ri = row[i]
            if ri == 0.0:
                continue
            ci = cov[i]
            for j in range(i, dim):
                ci[j] += ri * row[j]
    denom = n - 1
    for i in range(dim):
        for j in range(i, dim):
            cov[i][j] /= denom
            cov[j][i] = cov[i][j]
    if all(abs(cov[i][j]) < 1e-15 for i in range(dim) for j in range(dim)):
        raise DegenerateDataError("zero-variance data: no principal directions")
    eigvals, eigvecs = jacobi_eigh(cov)
    return PcaModel(mean=mean,
                    components=[eigvecs[i] for i in range(k)],
                    explained_variance=[max(0.0, eigvals[i]) for i in range(k)])


def pca_project(model: PcaModel, vector: Iterable) -> list:
    vec = list(vector)
    if len(vec) != len(model.mean):
        raise UsageError("vector dimension does not match the fitted model")
    centered = [x - m for x, m in zip(vec, model.mean)]
    return [sum(c * e for c, e in zip(centered, comp))
            for comp in model.components]
