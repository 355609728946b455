"""Normalized on-ball action stream built from raw provider events."""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum

from gvdep.config import ActionMap, load_config
from gvdep.ingest import PITCH_LENGTH, PITCH_WIDTH, FramePlayer, FreezeFrame, MatchMeta, RawEvent

GOAL_XY = (PITCH_LENGTH, PITCH_WIDTH / 2)
PITCH_CENTER = (PITCH_LENGTH / 2, PITCH_WIDTH / 2)
PENALTY_AREA_X = 102.0
PENALTY_AREA_Y = (18.0, 62.0)


ACTION_NAMES = (
    "id", "pass", "cross", "throw_in", "freekick_crossed", "freekick_short",
    "corner_crossed", "corner_short", "take_on", "foul", "tackle", "interception",
    "shot", "shot_penalty", "shot_freekick", "keeper_save", "keeper_claim",
    "keeper_punch", "keeper_pick_up", "clearance", "bad_touch", "non_action",
    "dribble", "goalkick",
)
# functional form: "pass" is a keyword, so members are reached as ActionType["pass"]
ActionType = IntEnum("ActionType", [(name, code) for code, name in enumerate(ACTION_NAMES)])

N_ACTION_TYPES = len(ActionType)
SHOT_TYPES = frozenset({ActionType.shot, ActionType.shot_penalty, ActionType.shot_freekick})
PASS_TYPES = frozenset({
    ActionType["pass"], ActionType.cross, ActionType.throw_in, ActionType.freekick_crossed,
    ActionType.freekick_short, ActionType.corner_crossed, ActionType.corner_short,
    ActionType.goalkick,
})
KEEPER_TYPES = frozenset({ActionType.keeper_save, ActionType.keeper_claim,
                          ActionType.keeper_punch, ActionType.keeper_pick_up})
BODY_PARTS = ("foot", "head", "other", "head_or_other")

_BODY_PART_CLASS = {
    "Left Foot": "foot", "Right Foot": "foot", "Drop Kick": "foot",
    "Head": "head",
    "Other": "other", "Chest": "other", "Keeper Arm": "other", "Both Hands": "other",
    "Left Hand": "other", "Right Hand": "other", "No Touch": "other",
    "Head/Other": "head_or_other",
}
_WON = frozenset({"Won", "Success", "Success In Play", "Success Out"})
_KEEPER_FAIL = frozenset({"In Play Danger", "No Touch", "Fail", "Lost In Play", "Lost Out",
                          "Touched In", "Touched Out"})
_YELLOW = frozenset({"Yellow Card"})
_RED = frozenset({"Red Card", "Second Yellow"})


class UnknownPeriod(ValueError):
    pass


class OrientationUndecidable(ValueError):
    pass


@dataclass(frozen=True)
class Action:
    match_id: int
    state_index: int
    event_id: str
    period: int
    timestamp: float
    team_id: int
    opponent_id: int
    player_id: int | None
    action_type: ActionType
    start_xy: tuple[float, float]
    end_xy: tuple[float, float]
    success: bool
    body_part_class: str
    yellow_card: bool
    red_card: bool
    acting_team_is_visitor: bool
    frame: FreezeFrame | None = None
    goal_team: int | None = None  # team credited with a goal at this action
    offside: bool = False
    own_goal: bool = False
    mirrored: bool = False
    score_for: int = 0
    score_against: int = 0

    @property
    def goal_diff(self) -> int:
        return self.score_for - self.score_against


@dataclass(frozen=True)
class ScoreState:
    """Goals per team scored strictly before each state index."""

    before: dict  # team_id -> tuple[int, ...] aligned with state_index
    final: dict   # team_id -> int


# ---------------------------------------------------------------------------
# geometry


def mirror_xy(xy):
    return (PITCH_LENGTH - xy[0], PITCH_WIDTH - xy[1])


def mirror_frame(frame: FreezeFrame | None) -> FreezeFrame | None:
    if frame is None:
        return None
    players = tuple(FramePlayer(PITCH_LENGTH - p.x, PITCH_WIDTH - p.y, p.teammate, p.actor, p.keeper)
                    for p in frame.players)
    area = tuple(mirror_xy(xy) for xy in frame.visible_area)
    return FreezeFrame(frame.event_id, players, area)


def in_penalty_area(xy) -> bool:
    return xy[0] >= PENALTY_AREA_X and PENALTY_AREA_Y[0] <= xy[1] <= PENALTY_AREA_Y[1]


def swap_perspective(action: Action) -> Action:
    """Re-express a state as seen by the other team (used to re-score ``s_{i-1}``)."""
    frame = action.frame
    if frame is not None:
        frame = mirror_frame(frame)
        frame = FreezeFrame(frame.event_id,
                            tuple(replace(p, teammate=not p.teammate) for p in frame.players),
                            frame.visible_area)
    return replace(
        action,
        team_id=action.opponent_id,
        opponent_id=action.team_id,
        start_xy=mirror_xy(action.start_xy),
        end_xy=mirror_xy(action.end_xy),
        frame=frame,
        acting_team_is_visitor=not action.acting_team_is_visitor,
        score_for=action.score_against,
        score_against=action.score_for,
        mirrored=not action.mirrored,
    )


# ---------------------------------------------------------------------------
# type mapping


def _sub(event: RawEvent, key: str) -> dict:
    sub = event.extras.get(key)
    return sub if isinstance(sub, dict) else {}


_SUBTYPE_KEY = {"Pass": "pass", "Duel": "duel", "Shot": "shot", "Goal Keeper": "goalkeeper"}


def lookup_keys(event: RawEvent) -> list[str]:
    """Candidate mapping keys, most specific first."""
    t = event.type_name
    sub_key = _SUBTYPE_KEY.get(t)
    subtype = None
    quals = []
    if sub_key:
        sub = _sub(event, sub_key)
        subtype = (sub.get("type") or {}).get("name") if isinstance(sub.get("type"), dict) else None
        if t == "Pass":
            if sub.get("cross"):
                quals.append("cross")
            if isinstance(sub.get("height"), dict) and sub["height"].get("name") == "High Pass":
                quals.append("high")
    keys = []
    if subtype:
        keys += [f"{t}|{subtype}|{q}" for q in quals] + [f"{t}|{subtype}"]
    keys += [f"{t}|{q}" for q in quals] + [t]
    return keys


def map_type(event: RawEvent, action_map: ActionMap) -> ActionType:
    for key in lookup_keys(event):
        if key in action_map.table:
            return action_map.table[key]
    return ActionType.non_action


def _success(event: RawEvent, atype: ActionType) -> bool:
    out = event.outcome
    if atype in PASS_TYPES:
        return out is None
    if atype in SHOT_TYPES:
        return event.shot_goal_flag
    if atype == ActionType.take_on:
        return out == "Complete"
    if atype in (ActionType.tackle, ActionType.interception):
        return out in _WON
    if atype in KEEPER_TYPES:
        return out not in _KEEPER_FAIL
    if atype in (ActionType.foul, ActionType.bad_touch):
        return False
    return True


# ---------------------------------------------------------------------------
# conversion


_DEFAULT_MAP: ActionMap | None = None


def default_action_map() -> ActionMap:
    global _DEFAULT_MAP
    if _DEFAULT_MAP is None:
        _DEFAULT_MAP = load_config().action_map
    return _DEFAULT_MAP


def to_actions(events: list[RawEvent], frames: dict, meta: MatchMeta,
               action_map: ActionMap | None = None, *, orientation: str = "actor",
               keep_non_actions: bool = False) -> list[Action]:
    """Convert one match's raw events into the ordered action stream.

    ``orientation`` describes the provider coordinates: ``"actor"`` means each
    event is already expressed with the acting team attacking toward +x;
    ``"home_left"`` means fixed coordinates with the home team attacking +x,
    so away-team events get mirrored. Goal events are always kept, whatever
    their mapping, so the scoreboard stays complete.
    """
    action_map = action_map or default_action_map()
    if orientation not in ("actor", "home_left"):
        raise ValueError(f"unknown orientation {orientation!r}")
    teams = (meta.home_team_id, meta.away_team_id)
    actions: list[Action] = []
    prev_end = None
    prev_period = None
    for ev in events:
        if not 1 <= ev.period <= 4:
            raise UnknownPeriod(f"event {ev.event_id}: period {ev.period}")
        atype = map_type(ev, action_map)
        own_goal = ev.type_name == "Own Goal Against"
        is_goal = ev.shot_goal_flag or own_goal
        if atype == ActionType.non_action and not keep_non_actions and not is_goal:
            continue
        if ev.team_id not in teams:
            raise OrientationUndecidable(f"event {ev.event_id}: team {ev.team_id} not in match")
        opponent = teams[1] if ev.team_id == teams[0] else teams[0]
        mirrored = orientation == "home_left" and ev.team_id == meta.away_team_id

        if ev.period != prev_period:
            prev_end, prev_period = None, ev.period
        start = ev.location
        # provider coordinates until the orientation step below
        if start is None:
            start = prev_end if prev_end is not None else PITCH_CENTER
        end = ev.end_location if ev.end_location is not None else start
        prev_end = end
        frame = frames.get(ev.event_id)
        if mirrored:
            start, end, frame = mirror_xy(start), mirror_xy(end), mirror_frame(frame)

        goal_team = None
        if own_goal:
            goal_team = opponent
        elif ev.shot_goal_flag:
            goal_team = ev.team_id
        actions.append(Action(
            match_id=meta.match_id,
            state_index=len(actions),
            event_id=ev.event_id,
            period=ev.period,
            timestamp=ev.timestamp,
            team_id=ev.team_id,
            opponent_id=opponent,
            player_id=ev.player_id,
            action_type=atype,
            start_xy=start,
            end_xy=end,
            success=_success(ev, atype),
            body_part_class=_BODY_PART_CLASS.get(ev.body_part, "foot"),
            yellow_card=ev.card in _YELLOW,
            red_card=ev.card in _RED,
            acting_team_is_visitor=ev.team_id == meta.away_team_id,
            frame=frame,
            goal_team=goal_team,
            offside=ev.outcome == "Pass Offside",
            own_goal=own_goal,
            mirrored=mirrored,
        ))
    return apply_scoreboard(actions, compute_scoreboard(actions))


def compute_scoreboard(actions: list[Action]) -> ScoreState:
    teams = set()
    for a in actions:
        teams.update((a.team_id, a.opponent_id))
    running = {t: 0 for t in teams}
    before = {t: [] for t in teams}
    for a in actions:
        for t in teams:
            before[t].append(running[t])
        if a.goal_team is not None:
            running[a.goal_team] += 1
    return ScoreState({t: tuple(v) for t, v in before.items()}, dict(running))


def apply_scoreboard(actions: list[Action], score: ScoreState) -> list[Action]:
    return [replace(a, score_for=score.before[a.team_id][i],
                    score_against=score.before[a.opponent_id][i])
            for i, a in enumerate(actions)]


def corpus_actions(corpus, action_map: ActionMap | None = None, **kwargs) -> dict[int, list[Action]]:
    """Actions for every match; penalty-shootout events (period 5) are left out."""
    out = {}
    for meta in corpus.matches:
        events = [e for e in corpus.events_by_match.get(meta.match_id, []) if e.period <= 4]
        out[meta.match_id] = to_actions(events, corpus.frames_by_event, meta, action_map, **kwargs)
    return out
