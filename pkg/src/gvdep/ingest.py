"""Parsing of the open-data corpus layout into typed records.

Expected layout under ``root``::

    matches/{competition_id}/{season_id}.json
    events/{match_id}.json
    three-sixty/{match_id}.json      (optional per match)
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterator

import numpy as np

logger = logging.getLogger(__name__)

PITCH_LENGTH = 120.0
PITCH_WIDTH = 80.0
LOCATION_SLACK = 1.0

CACHE_FORMAT = "gvdep-corpus"
CACHE_VERSION = 1

# Keys lifted into typed fields; everything else stays in RawEvent.extras.
_TYPED_KEYS = frozenset({"id", "index", "period", "timestamp", "type", "location"})
_SUBOBJECTS_WITH_END = ("pass", "carry", "shot", "goalkeeper")
_SUBOBJECTS_WITH_BODY_PART = ("pass", "shot", "clearance", "goalkeeper")
_SUBOBJECTS_WITH_OUTCOME = (
    "pass", "shot", "dribble", "duel", "interception", "goalkeeper", "ball_receipt", "50_50",
)


class IngestError(Exception):
    """Base class for corpus loading failures."""


class MissingFile(IngestError):
    pass


class MalformedRecord(IngestError):
    def __init__(self, path, offset: int, message: str):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{self.path} @ byte {offset}: {message}")


class DuplicateEventId(IngestError):
    pass


@dataclass(frozen=True)
class MatchMeta:
    match_id: int
    competition_id: int
    season_id: int
    home_team_id: int
    away_team_id: int
    home_team_name: str
    away_team_name: str
    kickoff_date: str
    home_score: int | None = None
    away_score: int | None = None
    stage: str | None = None


@dataclass(frozen=True)
class RawEvent:
    event_id: str
    match_id: int
    index: int
    period: int
    timestamp: float
    team_id: int
    player_id: int | None
    type_name: str
    location: tuple[float, float] | None
    end_location: tuple[float, float] | None
    body_part: str | None
    outcome: str | None
    card: str | None
    shot_goal_flag: bool
    extras: dict = field(default_factory=dict, compare=True, hash=False)

    @property
    def player_name(self) -> str | None:
        return (self.extras.get("player") or {}).get("name")


@dataclass(frozen=True)
class FramePlayer:
    x: float
    y: float
    teammate: bool
    actor: bool
    keeper: bool


@dataclass(frozen=True)
class FreezeFrame:
    event_id: str
    players: tuple[FramePlayer, ...]
    visible_area: tuple[tuple[float, float], ...] = ()

    @property
    def n_players(self) -> int:
        return len(self.players)


@dataclass
class Corpus:
    matches: list[MatchMeta]
    events_by_match: dict[int, list[RawEvent]]
    frames_by_event: dict[str, FreezeFrame]
    competition_id: int | None = None
    season_id: int | None = None
    dropped_events: int = field(default=0, compare=False)

    def match(self, match_id: int) -> MatchMeta:
        for m in self.matches:
            if m.match_id == match_id:
                return m
        raise KeyError(match_id)

    @property
    def n_events(self) -> int:
        return sum(len(v) for v in self.events_by_match.values())


# ---------------------------------------------------------------------------
# low-level JSON helpers


def _iter_json_array(path: Path) -> Iterator[tuple[int, Any]]:
    """Yield ``(byte_offset, element)`` for each element of a top-level JSON array."""
    raw = path.read_bytes()
    text = raw.decode("utf-8")
    ascii_only = len(raw) == len(text)
    decoder = json.JSONDecoder()

    def byte_offset(pos: int) -> int:
        return pos if ascii_only else len(text[:pos].encode("utf-8"))

    n = len(text)
    pos = _skip_ws(text, 0)
    if pos >= n or text[pos] != "[":
        raise MalformedRecord(path, byte_offset(pos), "expected a JSON array")
    pos = _skip_ws(text, pos + 1)
    if pos < n and text[pos] == "]":
        return
    while True:
        try:
            obj, end = decoder.raw_decode(text, pos)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(path, byte_offset(exc.pos), exc.msg) from None
        yield byte_offset(pos), obj
        pos = _skip_ws(text, end)
        if pos < n and text[pos] == ",":
            pos = _skip_ws(text, pos + 1)
            continue
        if pos < n and text[pos] == "]":
            return
        raise MalformedRecord(path, byte_offset(pos), "expected ',' or ']'")


def _skip_ws(text: str, pos: int) -> int:
    n = len(text)
    while pos < n and text[pos] in " \t\r\n":
        pos += 1
    return pos


def _parse_timestamp(value: Any) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"bad timestamp {value!r}")
    h, m, s = value.split(":")
    return int(h) * 3600 + int(m) * 60 + float(s)


def _xy(value: Any, what: str) -> tuple[float, float] | None:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) < 2:
        raise ValueError(f"{what} must be a list of at least two numbers")
    x, y = value[0], value[1]
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (x, y)):
        raise ValueError(f"{what} must hold numbers")
    return float(x), float(y)


def _name(obj: Any) -> str | None:
    if isinstance(obj, dict):
        name = obj.get("name")
        return name if isinstance(name, str) else None
    return None


def _int(obj: Any, what: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ValueError(f"{what} must be an integer, got {obj!r}")
    return obj


def _in_pitch(xy: tuple[float, float]) -> bool:
    x, y = xy
    return (-LOCATION_SLACK <= x <= PITCH_LENGTH + LOCATION_SLACK
            and -LOCATION_SLACK <= y <= PITCH_WIDTH + LOCATION_SLACK)


# ---------------------------------------------------------------------------
# record parsers


def parse_match(obj: dict) -> MatchMeta:
    home, away = obj["home_team"], obj["away_team"]
    meta = MatchMeta(
        match_id=_int(obj["match_id"], "match_id"),
        competition_id=_int(obj["competition"]["competition_id"], "competition_id"),
        season_id=_int(obj["season"]["season_id"], "season_id"),
        home_team_id=_int(home["home_team_id"], "home_team_id"),
        away_team_id=_int(away["away_team_id"], "away_team_id"),
        home_team_name=str(home["home_team_name"]),
        away_team_name=str(away["away_team_name"]),
        kickoff_date=str(obj.get("match_date", "")),
        home_score=obj.get("home_score"),
        away_score=obj.get("away_score"),
        stage=_name(obj.get("competition_stage")),
    )
    if meta.home_team_id == meta.away_team_id:
        raise ValueError("home and away team are identical")
    return meta


def parse_event(obj: dict, match_id: int) -> RawEvent:
    if not isinstance(obj, dict):
        raise ValueError("event must be an object")
    type_name = _name(obj.get("type"))
    if type_name is None:
        raise ValueError("event.type.name missing")
    team = obj.get("team")
    if not isinstance(team, dict):
        raise ValueError("event.team missing")
    player = obj.get("player")
    player_id = _int(player["id"], "player.id") if isinstance(player, dict) else None

    location = _xy(obj.get("location"), "location")
    end_location = body_part = outcome = card = None
    for key in _SUBOBJECTS_WITH_END:
        sub = obj.get(key)
        if isinstance(sub, dict) and sub.get("end_location") is not None:
            end_location = _xy(sub["end_location"], f"{key}.end_location")
            break
    for key in _SUBOBJECTS_WITH_BODY_PART:
        sub = obj.get(key)
        if isinstance(sub, dict) and _name(sub.get("body_part")):
            body_part = _name(sub["body_part"])
            break
    for key in _SUBOBJECTS_WITH_OUTCOME:
        sub = obj.get(key)
        if isinstance(sub, dict) and _name(sub.get("outcome")):
            outcome = _name(sub["outcome"])
            break
    for key in ("foul_committed", "bad_behaviour"):
        sub = obj.get(key)
        if isinstance(sub, dict) and _name(sub.get("card")):
            card = _name(sub["card"])
            break
    shot = obj.get("shot")
    goal = isinstance(shot, dict) and _name(shot.get("outcome")) == "Goal"

    for xy, what in ((location, "location"), (end_location, "end_location")):
        if xy is not None and not _in_pitch(xy):
            raise ValueError(f"{what} {xy} outside pitch bounds")

    period = _int(obj["period"], "period")
    if not 1 <= period <= 5:
        raise ValueError(f"period {period} not in 1..5")

    return RawEvent(
        event_id=str(obj["id"]),
        match_id=match_id,
        index=_int(obj["index"], "index"),
        period=period,
        timestamp=_parse_timestamp(obj.get("timestamp", 0.0)),
        team_id=_int(team["id"], "team.id"),
        player_id=player_id,
        type_name=type_name,
        location=location,
        end_location=end_location,
        body_part=body_part,
        outcome=outcome,
        card=card,
        shot_goal_flag=bool(goal),
        extras={k: v for k, v in obj.items() if k not in _TYPED_KEYS},
    )


def parse_frame(obj: dict) -> FreezeFrame:
    players = []
    for p in obj.get("freeze_frame") or []:
        xy = _xy(p.get("location"), "freeze_frame.location")
        if xy is None:
            raise ValueError("freeze_frame player without location")
        players.append(FramePlayer(xy[0], xy[1], bool(p.get("teammate")),
                                   bool(p.get("actor")), bool(p.get("keeper"))))
    if len(players) > 22:
        raise ValueError(f"{len(players)} players in one frame")
    if sum(p.actor for p in players) > 1:
        raise ValueError("more than one actor in frame")
    area = obj.get("visible_area") or []
    if len(area) % 2:
        raise ValueError("visible_area must hold an even number of coordinates")
    polygon = tuple((float(area[i]), float(area[i + 1])) for i in range(0, len(area), 2))
    return FreezeFrame(event_id=str(obj["event_uuid"]), players=tuple(players),
                       visible_area=polygon)


# ---------------------------------------------------------------------------
# corpus loading


def load_matches(root: Path, competition_id: int, season_id: int) -> list[MatchMeta]:
    path = Path(root) / "matches" / str(competition_id) / f"{season_id}.json"
    if not path.is_file():
        raise MissingFile(str(path))
    matches = []
    seen = set()
    for offset, obj in _iter_json_array(path):
        try:
            meta = parse_match(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(path, offset, f"bad match record: {exc!r}") from None
        if meta.match_id in seen:
            raise MalformedRecord(path, offset, f"duplicate match_id {meta.match_id}")
        seen.add(meta.match_id)
        matches.append(meta)
    matches.sort(key=lambda m: (m.kickoff_date, m.match_id))
    return matches


def load_match_events(root: Path, match_id: int) -> list[RawEvent]:
    path = Path(root) / "events" / f"{match_id}.json"
    if not path.is_file():
        raise MissingFile(str(path))
    events = []
    for offset, obj in _iter_json_array(path):
        try:
            events.append(parse_event(obj, match_id))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(path, offset, f"bad event record: {exc!r}") from None
    events.sort(key=lambda e: e.index)
    for a, b in zip(events, events[1:]):
        if a.index == b.index:
            raise MalformedRecord(path, 0, f"repeated event index {a.index}")
    return events


def load_match_frames(root: Path, match_id: int) -> list[FreezeFrame]:
    path = Path(root) / "three-sixty" / f"{match_id}.json"
    if not path.is_file():
        return []
    frames = []
    for offset, obj in _iter_json_array(path):
        try:
            frames.append(parse_frame(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(path, offset, f"bad frame record: {exc!r}") from None
    return frames


def load_corpus(root, competition_id: int, season_id: int) -> Corpus:
    root = Path(root)
    matches = load_matches(root, competition_id, season_id)
    events_by_match: dict[int, list[RawEvent]] = {}
    frames_by_event: dict[str, FreezeFrame] = {}
    seen_ids: set[str] = set()
    for meta in matches:
        events = load_match_events(root, meta.match_id)
        ids = {e.event_id for e in events}
        if len(ids) != len(events) or not seen_ids.isdisjoint(ids):
            dup = [k for k, c in Counter(e.event_id for e in events).items() if c > 1]
            dup = dup or sorted(seen_ids & ids)
            raise DuplicateEventId(f"match {meta.match_id}: {dup[:3]}")
        seen_ids |= ids
        events_by_match[meta.match_id] = events
        orphans = 0
        for frame in load_match_frames(root, meta.match_id):
            if frame.event_id not in ids:
                orphans += 1
                continue
            if frame.event_id in frames_by_event:
                raise DuplicateEventId(f"two frames for event {frame.event_id}")
            frames_by_event[frame.event_id] = frame
        if orphans:
            logger.warning("match %s: %d frames without a matching event", meta.match_id, orphans)
    logger.info("loaded %d matches, %d events, %d frames",
                len(matches), sum(map(len, events_by_match.values())), len(frames_by_event))
    return Corpus(matches, events_by_match, frames_by_event, competition_id, season_id)


# ---------------------------------------------------------------------------
# corpus statistics and filtering


def is_observed(frame: FreezeFrame | None) -> bool:
    return frame is not None and frame.n_players > 0


def frame_player_count_histogram(corpus: Corpus, event_ids=None) -> dict[int, int]:
    """Player-count frequencies over events that carry a frame.

    ``event_ids`` restricts the count to a subset (e.g. constructed states).
    """
    if event_ids is None:
        frames = corpus.frames_by_event.values()
    else:
        frames = (corpus.frames_by_event[e] for e in event_ids if e in corpus.frames_by_event)
    counts = Counter(f.n_players for f in frames)
    return dict(sorted(counts.items()))


def histogram_quantiles(hist: dict[int, int], qs=(0, 25, 50, 75, 100)) -> list[float]:
    if not hist:
        return []
    values = np.repeat(np.fromiter(hist.keys(), dtype=float), list(hist.values()))
    return [float(v) for v in np.percentile(values, qs)]


def drop_unobserved_events(corpus: Corpus) -> Corpus:
    """Remove events whose frame is absent or empty; the count lands in ``dropped_events``."""
    kept: dict[int, list[RawEvent]] = {}
    removed = 0
    for match_id, events in corpus.events_by_match.items():
        keep = [e for e in events if is_observed(corpus.frames_by_event.get(e.event_id))]
        removed += len(events) - len(keep)
        kept[match_id] = keep
    live = {e.event_id for evs in kept.values() for e in evs}
    frames = {k: v for k, v in corpus.frames_by_event.items() if k in live}
    logger.info("dropped %d unobserved events", removed)
    return replace(corpus, events_by_match=kept, frames_by_event=frames,
                   dropped_events=corpus.dropped_events + removed)


# ---------------------------------------------------------------------------
# cache file: line-delimited JSON, one record per line after a header


def _event_to_dict(e: RawEvent) -> dict:
    return {
        "event_id": e.event_id, "match_id": e.match_id, "index": e.index, "period": e.period,
        "timestamp": e.timestamp, "team_id": e.team_id, "player_id": e.player_id,
        "type_name": e.type_name,
        "location": list(e.location) if e.location else None,
        "end_location": list(e.end_location) if e.end_location else None,
        "body_part": e.body_part, "outcome": e.outcome, "card": e.card,
        "shot_goal_flag": e.shot_goal_flag, "extras": e.extras,
    }


def _event_from_dict(d: dict) -> RawEvent:
    d = dict(d)
    for key in ("location", "end_location"):
        if d[key] is not None:
            d[key] = tuple(d[key])
    return RawEvent(**d)


def _frame_to_dict(f: FreezeFrame) -> dict:
    return {
        "event_id": f.event_id,
        "players": [[p.x, p.y, p.teammate, p.actor, p.keeper] for p in f.players],
        "visible_area": [list(xy) for xy in f.visible_area],
    }


def _frame_from_dict(d: dict) -> FreezeFrame:
    return FreezeFrame(
        event_id=d["event_id"],
        players=tuple(FramePlayer(*p) for p in d["players"]),
        visible_area=tuple(tuple(xy) for xy in d["visible_area"]),
    )


def write_cache(corpus: Corpus, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        header = {"format": CACHE_FORMAT, "version": CACHE_VERSION,
                  "competition_id": corpus.competition_id, "season_id": corpus.season_id}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for m in corpus.matches:
            fh.write(json.dumps({"match": m.__dict__}, sort_keys=True) + "\n")
            for e in corpus.events_by_match.get(m.match_id, []):
                fh.write(json.dumps({"event": _event_to_dict(e)}, sort_keys=True) + "\n")
                frame = corpus.frames_by_event.get(e.event_id)
                if frame is not None:
                    fh.write(json.dumps({"frame": _frame_to_dict(frame)}, sort_keys=True) + "\n")


def read_cache(path) -> Corpus:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CACHE_FORMAT or header.get("version") != CACHE_VERSION:
            raise MalformedRecord(path, 0, f"unsupported cache header {header}")
        matches, events, frames = [], {}, {}
        for line in fh:
            rec = json.loads(line)
            if "match" in rec:
                meta = MatchMeta(**rec["match"])
                matches.append(meta)
                events[meta.match_id] = []
            elif "event" in rec:
                e = _event_from_dict(rec["event"])
                events[e.match_id].append(e)
            else:
                f = _frame_from_dict(rec["frame"])
                frames[f.event_id] = f
    return Corpus(matches, events, frames, header["competition_id"], header["season_id"])
