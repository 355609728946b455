"""Probability deltas, VAEP, score-scaled defensive values and team aggregates.

Perspective bookkeeping: every state row carries its acting team and its
defending team. ``p_scores``/``p_concedes`` are stored for the acting team,
``p_gains``/``p_attacked`` for the defending team, which is the same thing
seen from the other side. When possession changes between s_{i-1} and s_i the
previous state is re-scored with teams swapped, so both terms of each
difference refer to the same team.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import special

from gvdep.config import GameFilter
from gvdep.ingest import MatchMeta
from gvdep.labeling import TARGETS, EventRef


class EmptyEventSet(ValueError):
    pass


class UnknownTeam(KeyError):
    pass


class DegenerateVariance(ValueError):
    pass


@dataclass
class StateProbs:
    """Column table of out-of-sample probabilities for retained states.

    ``p`` holds P_target(s_i) in the state's own perspective; ``p_swapped``
    holds the same state scored after swapping teams (needed when the next
    state belongs to the other team). Rows are ordered by match, then state.
    """

    match_id: np.ndarray
    state_index: np.ndarray
    period: np.ndarray
    acting_team: np.ndarray
    defending_team: np.ndarray
    p: dict[str, np.ndarray]
    p_swapped: dict[str, np.ndarray]
    event_id: list[str] = field(default_factory=list)
    player: list[str] = field(default_factory=list)
    action: list[str] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.match_id)
        for name in ("state_index", "period", "acting_team", "defending_team"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name}: length mismatch")
        for table in (self.p, self.p_swapped):
            if set(table) != set(TARGETS):
                raise ValueError(f"probabilities needed for {TARGETS}")
            for t, v in table.items():
                if len(v) != n:
                    raise ValueError(f"{t}: length mismatch")
                if n and not (np.all(v > 0) and np.all(v < 1)):
                    raise ValueError(f"{t}: probabilities must lie in (0, 1)")
        for name in ("event_id", "player", "action"):
            col = getattr(self, name)
            if not col:
                setattr(self, name, [""] * n)
            elif len(col) != n:
                raise ValueError(f"{name}: length mismatch")

    def __len__(self) -> int:
        return len(self.match_id)

    def period_starts(self) -> np.ndarray:
        """True at the first row of each (match, period) run."""
        n = len(self)
        out = np.ones(n, dtype=bool)
        if n > 1:
            out[1:] = (self.match_id[1:] != self.match_id[:-1]) | (self.period[1:] != self.period[:-1])
        return out

    def row_of(self) -> dict[tuple[int, int], int]:
        return {(int(m), int(s)): i for i, (m, s) in enumerate(zip(self.match_id, self.state_index))}


def deltas(probs: StateProbs) -> dict[str, np.ndarray]:
    """ΔP_target(s_i) = P(s_i, x) - P(s_{i-1}, x) with x fixed to state i's perspective.

    Zero at the first row of every period.
    """
    first = probs.period_starts()
    flip = np.zeros(len(probs), dtype=bool)
    flip[1:] = probs.acting_team[1:] != probs.acting_team[:-1]
    out = {}
    for t in TARGETS:
        cur = probs.p[t]
        prev = np.empty_like(cur)
        prev[1:] = np.where(flip[1:], probs.p_swapped[t][:-1], cur[:-1])
        d = np.zeros_like(cur)
        d[~first] = cur[~first] - prev[~first]
        out[t] = d
    return out


def vaep_value(d: dict[str, np.ndarray]) -> np.ndarray:
    """Acting-team VAEP value per state."""
    return d["scores"] - d["concedes"]


@dataclass(frozen=True)
class Weights:
    weight_gains: float       # signed means, as defined
    weight_attacked: float
    n_gains: int              # events that contributed
    n_attacked: int
    corpus_id: str = ""

    @property
    def abs_gains(self) -> float:
        return abs(self.weight_gains)

    @property
    def abs_attacked(self) -> float:
        return abs(self.weight_attacked)


def _event_mean(v_vaep, acting_team, rows, events: Iterable[EventRef]) -> tuple[float, int]:
    total, n = 0.0, 0
    for ev in events:
        i = rows.get((ev.match_id, ev.state_index))
        if i is None:  # event at a state without frame: no prediction exists
            continue
        sign = 1.0 if acting_team[i] == ev.team else -1.0
        total += sign * v_vaep[i]
        n += 1
    return (float(total / n) if n else math.nan), n


def compute_weights(v_vaep: np.ndarray, probs: StateProbs, ev_gains: Sequence[EventRef],
                    ev_attacked: Sequence[EventRef], corpus_id: str = "") -> Weights:
    """Mean sign-adjusted VAEP value over the gain events and the attack events."""
    rows = probs.row_of()
    wg, ng = _event_mean(v_vaep, probs.acting_team, rows, ev_gains)
    wa, na = _event_mean(v_vaep, probs.acting_team, rows, ev_attacked)
    if ng == 0 or na == 0:
        raise EmptyEventSet(f"{ng} gain events and {na} attack events with predictions")
    return Weights(wg, wa, ng, na, corpus_id)


def gvdep_value(d: dict[str, np.ndarray], weights: Weights, *, absolute: bool = True) -> np.ndarray:
    """|w_gains|·ΔP_gains − |w_attacked|·ΔP_attacked (signed weights if ``absolute`` is off)."""
    wg = weights.abs_gains if absolute else weights.weight_gains
    wa = weights.abs_attacked if absolute else weights.weight_attacked
    return wg * d["gains"] - wa * d["attacked"]


def legacy_constant(n_gains: int, n_attacked: int) -> float:
    if n_attacked <= 0:
        raise EmptyEventSet("no attacked occurrences")
    return n_gains / n_attacked


def legacy_vdep(probs: StateProbs, c: float) -> np.ndarray:
    return probs.p["gains"] - c * probs.p["attacked"]


@dataclass
class Valuation:
    probs: StateProbs
    deltas: dict[str, np.ndarray]
    v_vaep: np.ndarray
    v_gvdep: np.ndarray
    legacy: np.ndarray
    weights: Weights
    legacy_c: float


def value_states(probs: StateProbs, ev_gains, ev_attacked, legacy_c: float,
                 corpus_id: str = "") -> Valuation:
    d = deltas(probs)
    v = vaep_value(d)
    w = compute_weights(v, probs, ev_gains, ev_attacked, corpus_id)
    return Valuation(probs, d, v, gvdep_value(d, w), legacy_vdep(probs, legacy_c), w, legacy_c)


@dataclass(frozen=True)
class TeamReport:
    team_id: int
    team_name: str
    games: int
    defending_states: int
    gain_value: float          # mean ΔP_gains while defending
    attacked_value: float      # mean of −ΔP_attacked, the plotted orientation
    attacked_delta_mean: float  # mean ΔP_attacked, signed
    g_vdep_value: float
    legacy_vdep_value: float
    concedes: int


def _selected_matches(matches: Sequence[MatchMeta], game_filter: GameFilter | None):
    if game_filter is None:
        return list(matches), None
    chosen = [m for m in matches if m.stage in game_filter.stages]
    teams = None
    if game_filter.teams_from_stage is not None:
        teams = set()
        for m in matches:
            if m.stage == game_filter.teams_from_stage:
                teams.update((m.home_team_id, m.away_team_id))
    return chosen, teams


def team_report(val: Valuation, matches: Sequence[MatchMeta], goals: dict[int, dict[int, int]],
                game_filter: GameFilter | None = None, teams: Sequence[int] | None = None) -> list[TeamReport]:
    """Per-team means over the states in which the team defends.

    ``goals`` maps match id to goals scored per team. Only matches admitted by
    ``game_filter`` count; the team set is the filter's (or every team that
    played) unless ``teams`` is given.
    """
    chosen, filter_teams = _selected_matches(matches, game_filter)
    played: dict[int, list[MatchMeta]] = {}
    names: dict[int, str] = {}
    for m in chosen:
        for t, name in ((m.home_team_id, m.home_team_name), (m.away_team_id, m.away_team_name)):
            played.setdefault(t, []).append(m)
            names[t] = name
    if teams is None:
        teams = sorted(filter_teams & played.keys() if filter_teams is not None else played)
    for t in teams:
        if t not in played:
            raise UnknownTeam(t)
    probs = val.probs
    in_games = np.isin(probs.match_id, [m.match_id for m in chosen])
    out = []
    for t in teams:
        mask = in_games & (probs.defending_team == t)
        n = int(mask.sum())
        mean = (lambda a: float(a[mask].mean())) if n else (lambda a: 0.0)
        conceded = 0
        for m in played[t]:
            opp = m.away_team_id if m.home_team_id == t else m.home_team_id
            conceded += goals.get(m.match_id, {}).get(opp, 0)
        d_att = mean(val.deltas["attacked"])
        out.append(TeamReport(int(t), names[t], len(played[t]), n, mean(val.deltas["gains"]),
                              -d_att + 0.0, d_att, mean(val.v_gvdep), mean(val.legacy), conceded))
    return out


def pearson(xs, ys) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value from Student's t with n-2 df."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateVariance("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1 - r * r))
    return r, float(2 * special.stdtr(n - 2, -abs(t)))


VALUATION_COLUMNS = (
    "match_id", "state_index", "period", "event_id", "acting_team", "defending_team", "player",
    "action_type", "p_scores", "p_concedes", "p_gains", "p_attacked", "d_p_scores",
    "d_p_concedes", "d_p_gains", "d_p_attacked", "v_vaep", "v_gvdep", "legacy_vdep",
)
TEAM_COLUMNS = ("team", "team_name", "games", "defending_states", "gain_value", "attacked_value",
                "attacked_delta_mean", "g_vdep_value", "legacy_vdep_value", "concedes")


def write_valuation_csv(path, val: Valuation) -> None:
    p = val.probs
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(VALUATION_COLUMNS)
        for i in range(len(p)):
            w.writerow([int(p.match_id[i]), int(p.state_index[i]), int(p.period[i]), p.event_id[i],
                        int(p.acting_team[i]), int(p.defending_team[i]), p.player[i], p.action[i]]
                       + [repr(float(p.p[t][i])) for t in TARGETS]
                       + [repr(float(val.deltas[t][i])) for t in TARGETS]
                       + [repr(float(val.v_vaep[i])), repr(float(val.v_gvdep[i])),
                          repr(float(val.legacy[i]))])


def write_team_csv(path, reports: Sequence[TeamReport]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TEAM_COLUMNS)
        for r in reports:
            w.writerow([r.team_id, r.team_name, r.games, r.defending_states, repr(r.gain_value),
                        repr(r.attacked_value), repr(r.attacked_delta_mean), repr(r.g_vdep_value),
                        repr(r.legacy_vdep_value), r.concedes])


def read_team_csv(path) -> list[TeamReport]:
    with open(path, newline="") as fh:
        return [TeamReport(int(r["team"]), r["team_name"], int(r["games"]), int(r["defending_states"]),
                           float(r["gain_value"]), float(r["attacked_value"]),
                           float(r["attacked_delta_mean"]), float(r["g_vdep_value"]),
                           float(r["legacy_vdep_value"]), int(r["concedes"]))
                for r in csv.DictReader(fh)]
