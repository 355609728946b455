"""Look-ahead labels (scores, concedes, gains, attacked) and the gain/attack event sets."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from gvdep.actions import PASS_TYPES, SHOT_TYPES, Action, ActionType, in_penalty_area
from gvdep.config import LabelConfig

TARGETS = ("scores", "concedes", "gains", "attacked")

# actions that move the ball and can carry it into the penalty area
_CARRYING_TYPES = PASS_TYPES | {ActionType.dribble, ActionType.take_on}


class EventRef(NamedTuple):
    match_id: int
    state_index: int
    team: int  # team credited with the occurrence


@dataclass
class MatchLabels:
    match_id: int
    scores: np.ndarray
    concedes: np.ndarray
    gains: np.ndarray
    attacked: np.ndarray
    goal_events: list[EventRef]
    gain_events: list[EventRef]
    attack_events: list[EventRef]

    def target(self, name: str) -> np.ndarray:
        return getattr(self, name)


def detect_goal_events(actions: list[Action]) -> list[EventRef]:
    return [EventRef(a.match_id, a.state_index, a.goal_team)
            for a in actions if a.goal_team is not None]


def detect_gain_events(actions: list[Action], config: LabelConfig = LabelConfig()) -> list[EventRef]:
    """Changes of acting team at state j triggered by a gain action at j
    (or an offside by the previous team at j-1); credited to the new team."""
    triggers = set(config.gain_triggers)
    offside = "offside" in triggers
    out = []
    for prev, cur in zip(actions, actions[1:]):
        if cur.period != prev.period or cur.team_id == prev.team_id:
            continue
        hit = (cur.action_type.name in triggers
               and (cur.success or not config.gain_requires_success))
        if not hit and offside and prev.offside:
            hit = True
        if hit:
            out.append(EventRef(cur.match_id, cur.state_index, cur.team_id))
    return out


def detect_attack_events(actions: list[Action], config: LabelConfig = LabelConfig()) -> list[EventRef]:
    """Shots, plus ball movements whose end location enters the opponent penalty
    area from outside it; credited to the acting (attacking) team."""
    out = []
    for a in actions:
        if a.action_type in SHOT_TYPES:
            hit = True
        else:
            hit = (a.action_type in _CARRYING_TYPES
                   and in_penalty_area(a.end_xy) and not in_penalty_area(a.start_xy)
                   and (a.success or not config.attack_requires_success))
        if hit:
            out.append(EventRef(a.match_id, a.state_index, a.team_id))
    return out


def label_window(actions: list[Action], events: list[EventRef], horizon: int,
                 perspective: str) -> np.ndarray:
    """State i is positive iff an event credited to the perspective team of
    state i happens at some state in [i, i+horizon-1] of the same period.

    ``perspective="attacking"`` uses the acting team of state i,
    ``"defending"`` its opponent.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if perspective not in ("attacking", "defending"):
        raise ValueError(f"unknown perspective {perspective!r}")
    n = len(actions)
    credited: list[set] = [set() for _ in range(n)]
    for ev in events:
        credited[ev.state_index].add(ev.team)
    out = np.zeros(n, dtype=bool)
    for i, a in enumerate(actions):
        team = a.team_id if perspective == "attacking" else a.opponent_id
        for j in range(i, min(i + horizon, n)):
            if actions[j].period != a.period:
                break
            if team in credited[j]:
                out[i] = True
                break
    return out


def label_match(actions: list[Action], config: LabelConfig = LabelConfig()) -> MatchLabels:
    match_id = actions[0].match_id if actions else -1
    goals = detect_goal_events(actions)
    gains = detect_gain_events(actions, config)
    attacks = detect_attack_events(actions, config)
    return MatchLabels(
        match_id=match_id,
        scores=label_window(actions, goals, config.k_prime, "attacking"),
        concedes=label_window(actions, goals, config.k_prime, "defending"),
        gains=label_window(actions, gains, config.k, "defending"),
        attacked=label_window(actions, attacks, config.k, "attacking"),
        goal_events=goals,
        gain_events=gains,
        attack_events=attacks,
    )


LABEL_CSV_COLUMNS = ("match_id", "state_index", "scores", "concedes", "gains", "attacked",
                     "is_gain_event", "is_attacked_event", "credited_team")


def write_labels_csv(path, actions_by_match: dict, labels_by_match: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LABEL_CSV_COLUMNS)
        for match_id in sorted(labels_by_match):
            lab = labels_by_match[match_id]
            gains = {e.state_index: e.team for e in lab.gain_events}
            attacks = {e.state_index: e.team for e in lab.attack_events}
            for a in actions_by_match[match_id]:
                i = a.state_index
                credited = gains.get(i, attacks.get(i, ""))
                w.writerow([match_id, i, int(lab.scores[i]), int(lab.concedes[i]),
                            int(lab.gains[i]), int(lab.attacked[i]),
                            int(i in gains), int(i in attacks), credited])
