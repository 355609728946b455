"""Fixed-width state features: event one-hot, on-ball block and sorted off-ball block."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gvdep.actions import ACTION_NAMES, BODY_PARTS, GOAL_XY, N_ACTION_TYPES, Action, swap_perspective
from gvdep.ingest import FreezeFrame

N_ONBALL = 21
SLOTS_PER_TEAM = 11
N_OFFBALL = 2 * SLOTS_PER_TEAM * 4
SENTINEL = (-100.0, -100.0, 200.0, 0.0)
FEATURE_SCHEMA_VERSION = 1

SCHEMAS = {
    "vaep_133": N_ACTION_TYPES + N_ONBALL + N_OFFBALL,
    "vdep_109": N_ONBALL + N_OFFBALL,
}

ONBALL_COLUMNS = (
    [f"bodypart_{b}" for b in BODY_PARTS]
    + ["yellow_card", "red_card", "score_for", "score_against", "goal_diff",
       "start_x", "start_y", "end_x", "end_y", "dx", "dy", "movement",
       "start_dist_to_goal", "start_angle_to_goal", "end_dist_to_goal", "end_angle_to_goal",
       "visitor"]
)
assert len(ONBALL_COLUMNS) == N_ONBALL


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    schema_id: str
    state_ref: tuple[int, int]


def schema_id(base: str, n_nearest: int = SLOTS_PER_TEAM) -> str:
    if base not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {base!r}")
    if n_nearest == SLOTS_PER_TEAM:
        return base
    return f"{base.split('_')[0]}_truncated({n_nearest})"


def schema_width(sid: str) -> int:
    family = sid.split("_")[0]
    for base, width in SCHEMAS.items():
        if base.startswith(family + "_"):
            return width
    raise SchemaMismatch(f"unknown schema {sid!r}")


def column_specs(base: str) -> list[dict]:
    """Column names with their block and slot, for matrix sidecars."""
    cols = []
    if base == "vaep_133":
        cols += [{"name": f"type_{n}", "block": "event", "slot": None} for n in ACTION_NAMES]
    elif base != "vdep_109":
        raise SchemaMismatch(f"unknown schema {base!r}")
    cols += [{"name": n, "block": "onball", "slot": None} for n in ONBALL_COLUMNS]
    for side in ("attacker", "defender"):
        for slot in range(1, SLOTS_PER_TEAM + 1):
            for q in ("x", "y", "dist_to_ball", "angle_to_ball"):
                cols.append({"name": f"{side}{slot}_{q}", "block": "offball", "slot": slot})
    return cols


def _polar(origin, target) -> tuple[float, float]:
    dx, dy = target[0] - origin[0], target[1] - origin[1]
    return math.hypot(dx, dy), math.atan2(dy, dx)


def onball_features(state: Action, state_prev: Action | None = None) -> np.ndarray:
    """21 on-ball values of state i.

    Missing locations were already filled from the previous action's end (or the
    pitch centre) when the action stream was built, so ``state_prev`` is only
    accepted for interface symmetry.
    """
    out = np.zeros(N_ONBALL)
    out[BODY_PARTS.index(state.body_part_class)] = 1.0
    out[4] = float(state.yellow_card)
    out[5] = float(state.red_card)
    out[6] = state.score_for
    out[7] = state.score_against
    out[8] = state.goal_diff
    sx, sy = state.start_xy
    ex, ey = state.end_xy
    out[9:13] = (sx, sy, ex, ey)
    dx, dy = ex - sx, ey - sy
    out[13:16] = (dx, dy, math.hypot(dx, dy))
    out[16:18] = _polar(state.start_xy, GOAL_XY)
    out[18:20] = _polar(state.end_xy, GOAL_XY)
    out[20] = float(state.acting_team_is_visitor)
    return out


def _sorted_team(players, ball_xy) -> list[tuple[float, float, float, float]]:
    rows = []
    for p in players:
        d, ang = _polar(ball_xy, (p.x, p.y))
        rows.append((d, p.x, p.y, ang))
    rows.sort()
    return [(x, y, d, ang) for d, x, y, ang in rows[:SLOTS_PER_TEAM]]


def offball_features(frame: FreezeFrame | None, ball_xy, n_nearest: int = SLOTS_PER_TEAM) -> np.ndarray:
    """88 values: 11 attacker slots then 11 defender slots, each (x, y, dist, angle),
    nearest to the ball first; slots past ``n_nearest`` or unobserved get the sentinel."""
    if not 0 <= n_nearest <= SLOTS_PER_TEAM:
        raise ValueError("n_nearest must be within 0..11")
    out = np.tile(np.asarray(SENTINEL), 2 * SLOTS_PER_TEAM)
    if frame is None or n_nearest == 0:
        return out
    for block, teammate in enumerate((True, False)):
        team = [p for p in frame.players if p.teammate == teammate]
        for slot, quad in enumerate(_sorted_team(team, ball_xy)[:n_nearest]):
            base = (block * SLOTS_PER_TEAM + slot) * 4
            out[base:base + 4] = quad
    return out


def event_onehot(state: Action) -> np.ndarray:
    out = np.zeros(N_ACTION_TYPES)
    out[int(state.action_type)] = 1.0
    return out


def assemble(state: Action, state_prev: Action | None, frame: FreezeFrame | None,
             schema: str, n_nearest: int = SLOTS_PER_TEAM) -> FeatureVector:
    if schema not in SCHEMAS:
        raise SchemaMismatch(f"unknown schema {schema!r}")
    parts = [onball_features(state, state_prev), offball_features(frame, state.start_xy, n_nearest)]
    if schema == "vaep_133":
        parts.insert(0, event_onehot(state))
    return FeatureVector(np.concatenate(parts), schema_id(schema, n_nearest),
                         (state.match_id, state.state_index))


def truncation_mask(n_nearest: int) -> np.ndarray:
    """Boolean mask over the 88 off-ball columns that must hold the sentinel."""
    slot = np.repeat(np.arange(SLOTS_PER_TEAM), 4)
    per_team = slot >= n_nearest
    return np.concatenate([per_team, per_team])


class StateFeatures:
    """Full-width feature blocks for a list of states, truncated on demand.

    Off-ball blocks are computed once at n_nearest=11; any smaller n is a
    column-wise sentinel overwrite, which is exactly what the per-state builder
    produces because slots are filled nearest-first.
    """

    def __init__(self, states: list[Action], swapped: bool = False):
        if swapped:
            states = [swap_perspective(s) for s in states]
        n = len(states)
        self.refs = [(s.match_id, s.state_index) for s in states]
        self.event = np.zeros((n, N_ACTION_TYPES))
        self.onball = np.zeros((n, N_ONBALL))
        self.offball = np.zeros((n, N_OFFBALL))
        for i, s in enumerate(states):
            self.event[i, int(s.action_type)] = 1.0
            self.onball[i] = onball_features(s)
            self.offball[i] = offball_features(s.frame, s.start_xy)

    def matrix(self, schema: str, n_nearest: int = SLOTS_PER_TEAM) -> np.ndarray:
        off = self.offball.copy()
        if n_nearest < SLOTS_PER_TEAM:
            mask = truncation_mask(n_nearest)
            off[:, mask] = np.tile(np.asarray(SENTINEL), 2 * SLOTS_PER_TEAM)[mask]
        if schema == "vaep_133":
            return np.hstack([self.event, self.onball, off])
        if schema == "vdep_109":
            return np.hstack([self.onball, off])
        raise SchemaMismatch(f"unknown schema {schema!r}")


def write_matrix(path, X: np.ndarray, schema: str, n_nearest: int, refs) -> None:
    """Raw float64 column-major matrix plus a JSON sidecar (``<path>.json``)."""
    path = Path(path)
    X = np.asarray(X, dtype="<f8")
    if X.shape[1] != SCHEMAS[schema]:
        raise SchemaMismatch(f"{X.shape[1]} columns for {schema}")
    path.write_bytes(X.tobytes(order="F"))
    sidecar = {
        "schema_version": FEATURE_SCHEMA_VERSION,
        "schema_id": schema_id(schema, n_nearest),
        "n_rows": int(X.shape[0]),
        "n_cols": int(X.shape[1]),
        "dtype": "<f8",
        "order": "F",
        "columns": column_specs(schema),
        "rows": [list(r) for r in refs],
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=1) + "\n")


def read_matrix(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    flat = np.frombuffer(path.read_bytes(), dtype=meta["dtype"])
    X = flat.reshape((meta["n_rows"], meta["n_cols"]), order="F")
    return X, meta
