"""Synthetic tournaments written in the open-data directory layout.

The simulation is crude but structured: the chance of losing the ball falls
with the distance of the nearest defender, shots come from the penalty area,
and broadcast frames only show players inside a camera window around the
ball. That is enough signal for the classifiers to learn something and for
every code path of the pipeline (non-actions, offsides, own goals, cards,
missing frames, penalty shootouts) to be exercised.
"""
from __future__ import annotations

import json
import math
import uuid
from pathlib import Path

import numpy as np

L, W = 120.0, 80.0


def _mirror(x, y):
    return L - x, W - y


class _MatchSim:
    def __init__(self, rng, match_id, home, away, n_events, shootout, compactness):
        self.rng = rng
        self.match_id = match_id
        self.teams = (home, away)
        self.n_target = n_events
        self.shootout = shootout
        self.compactness = compactness  # team id -> defender spread
        self.events = []
        self.frames = []
        self.index = 0
        self.clock = 0.0
        self.uuid_rng = np.random.default_rng(match_id)

    # -- helpers -----------------------------------------------------------
    def _uuid(self):
        return str(uuid.UUID(bytes=self.uuid_rng.bytes(16), version=4))

    def _other(self, team):
        return self.teams[1] if team == self.teams[0] else self.teams[0]

    def _team(self, team):
        return {"id": team, "name": f"Team {team}"}

    def _player(self, team, slot):
        pid = team * 100 + slot
        return {"id": pid, "name": f"Player {pid}"}

    def _shape(self, team, bx, by):
        """Attacker and defender positions in the possessing team's frame."""
        rng = self.rng
        att = np.column_stack([np.clip(bx + rng.normal(-5, 14, 10), 1, 119),
                               np.clip(by + rng.normal(0, 16, 10), 1, 79)])
        att = np.vstack([att, [[8.0 + rng.normal(0, 2), 40 + rng.normal(0, 3)]]])  # own keeper
        spread = self.compactness[self._other(team)]
        dfd = np.column_stack([np.clip(bx + rng.normal(6, spread, 10), 1, 119),
                               np.clip(by + rng.normal(0, spread * 1.3, 10), 1, 79)])
        dfd = np.vstack([dfd, [[116.0 + rng.normal(0, 1.5), 40 + rng.normal(0, 3)]]])
        return att, dfd

    def _emit(self, period, team, type_name, loc=None, sub=None, frame_shape=None,
              actor_slot=None, extra=None):
        self.index += 1
        self.clock += float(self.rng.uniform(0.5, 4.0))
        ev = {
            "id": self._uuid(),
            "index": self.index,
            "period": period,
            "timestamp": _fmt_clock(self.clock),
            "minute": int(self.clock // 60),
            "second": int(self.clock % 60),
            "type": {"id": 0, "name": type_name},
            "possession_team": self._team(team),
            "team": self._team(team),
        }
        if actor_slot is not None:
            ev["player"] = self._player(team, actor_slot)
        if loc is not None:
            loc = (float(np.clip(loc[0], 0, L)), float(np.clip(loc[1], 0, W)))
            ev["location"] = [round(loc[0], 1), round(loc[1], 1)]
        if sub:
            ev.update(sub)
        if extra:
            ev.update(extra)
        self.events.append(ev)
        if frame_shape is not None and loc is not None and self.rng.random() < 0.9:
            self.frames.append(self._frame(ev["id"], loc, *frame_shape))
        return ev

    def _frame(self, event_id, loc, att, dfd):
        rng = self.rng
        bx, by = loc
        half_w, half_h = rng.uniform(18, 40), rng.uniform(20, 45)
        if rng.random() < 0.06:  # camera on a replay / close-up
            half_w = half_h = 0.0
        box = (bx - half_w, bx + half_w, by - half_h, by + half_h)
        players = []
        if half_w > 0:
            players.append({"teammate": True, "actor": True, "keeper": False,
                            "location": [float(bx), float(by)]})
        for mates, xy in ((True, att), (False, dfd)):
            for k, (x, y) in enumerate(xy):
                if box[0] <= x <= box[1] and box[2] <= y <= box[3]:
                    players.append({"teammate": mates, "actor": False, "keeper": k == len(xy) - 1,
                                    "location": [round(float(x), 2), round(float(y), 2)]})
        players = players[:22]
        area = [box[0], box[2], box[1], box[2], box[1], box[3], box[0], box[3]]
        return {"event_uuid": event_id, "visible_area": [round(float(v), 2) for v in area],
                "freeze_frame": players}

    # -- simulation --------------------------------------------------------
    def run(self):
        for team in self.teams:
            self._emit(1, team, "Starting XI")
        per_period = self.n_target // 2
        for period in (1, 2):
            self._emit(period, self.teams[0], "Half Start")
            self._emit(period, self.teams[1], "Half Start")
            team = self.teams[period - 1]
            self._play(period, team, per_period)
            self._emit(period, self.teams[0], "Half End")
            self._emit(period, self.teams[1], "Half End")
        if self.shootout:
            for k in range(6):
                team = self.teams[k % 2]
                scored = self.rng.random() < 0.75
                self._emit(5, team, "Shot", (108.0, 40.0), actor_slot=9,
                           sub={"shot": {"type": {"name": "Penalty"},
                                         "outcome": {"name": "Goal" if scored else "Saved"},
                                         "body_part": {"name": "Right Foot"},
                                         "end_location": [120.0, 40.0, 1.0]}})
        return self.events, self.frames

    def _play(self, period, team, n_events):
        rng = self.rng
        bx, by = 60.0, 40.0
        start = len(self.events)
        kickoff = True
        while len(self.events) - start < n_events:
            att, dfd = self._shape(team, bx, by)
            shape = (att, dfd)
            d_near = float(np.min(np.hypot(dfd[:-1, 0] - bx, dfd[:-1, 1] - by)))
            p_lose = 0.45 * math.exp(-d_near / 3.0)
            opp = self._other(team)
            slot = int(rng.integers(1, 11))
            in_box = bx >= 102 and 18 <= by <= 62

            if kickoff:
                kickoff = False
                ex, ey = bx - 10, by + rng.normal(0, 8)
                self._pass(period, team, (bx, by), (ex, ey), shape, slot, ptype="Kick Off")
                bx, by = ex, ey
                continue

            if not in_box and rng.random() < p_lose:
                # defender wins the ball where it is
                mx, my = _mirror(bx, by)
                if rng.random() < 0.5:
                    sub = {"duel": {"type": {"name": "Tackle"},
                                    "outcome": {"name": "Won" if rng.random() < 0.85 else "Lost In Play"}}}
                    won = sub["duel"]["outcome"]["name"] == "Won"
                    self._emit(period, opp, "Duel", (mx, my), sub, _swap(shape, bx, by), slot)
                else:
                    sub = {"interception": {"outcome": {"name": "Won" if rng.random() < 0.85 else "Lost Out"}}}
                    won = sub["interception"]["outcome"]["name"] == "Won"
                    self._emit(period, opp, "Interception", (mx, my), sub, _swap(shape, bx, by), slot)
                if won:
                    team, (bx, by) = opp, (mx, my)
                continue

            r = rng.random()
            if r < 0.04:
                self._emit(period, opp, "Pressure", _mirror(bx, by), None, _swap(shape, bx, by), slot)
                continue
            if in_box and r < 0.45:
                goal = rng.random() < 0.14
                outcome = "Goal" if goal else ("Saved" if rng.random() < 0.5 else "Off T")
                stype = "Free Kick" if rng.random() < 0.05 else "Open Play"
                head = rng.random() < 0.2
                self._emit(period, team, "Shot", (bx, by),
                           {"shot": {"type": {"name": stype}, "outcome": {"name": outcome},
                                     "body_part": {"name": "Head" if head else "Right Foot"},
                                     "end_location": [120.0, float(np.clip(40 + rng.normal(0, 4), 30, 50)), 1.0]}},
                           shape, slot)
                if goal:
                    team, (bx, by), kickoff = opp, (60.0, 40.0), True
                else:
                    gk = "Shot Saved" if outcome == "Saved" else "Collected"
                    self._emit(period, opp, "Goal Keeper", (4.0, 40.0),
                               {"goalkeeper": {"type": {"name": gk}, "outcome": {"name": "Success"},
                                               "body_part": {"name": "Both Hands"}}},
                               _swap(shape, bx, by), 11)
                    team = opp
                    ex, ey = 40 + rng.normal(0, 10), 40 + rng.normal(0, 15)
                    self._pass(period, team, (6.0, 40.0), (ex, ey), None, 11, ptype="Goal Kick")
                    bx, by = ex, ey
                continue
            if r < 0.05:
                # foul by the defending side, free kick
                card = None
                u = rng.random()
                if u < 0.15:
                    card = "Yellow Card"
                elif u < 0.17:
                    card = "Red Card"
                sub = {"foul_committed": {"card": {"name": card}}} if card else None
                self._emit(period, opp, "Foul Committed", _mirror(bx, by), sub, _swap(shape, bx, by), slot)
                self._emit(period, team, "Foul Won", (bx, by), None, shape, slot)
                ex, ey = min(bx + 25, 115), float(np.clip(by + rng.normal(0, 10), 1, 79))
                self._pass(period, team, (bx, by), (ex, ey), shape, slot,
                           ptype="Free Kick", high=ex > 100)
                bx, by = ex, ey
                continue
            if r < 0.055:
                # own goal by the defending side
                self._emit(period, opp, "Own Goal Against", _mirror(bx, by), None, None, 4)
                self._emit(period, team, "Own Goal For", (bx, by), None, None, None)
                team, (bx, by), kickoff = opp, (60.0, 40.0), True
                continue
            if r < 0.07 and bx > 60:
                # offside pass, free kick to the opponent
                ex, ey = min(bx + 20, 118), by
                self._pass(period, team, (bx, by), (ex, ey), shape, slot, outcome="Pass Offside")
                team, (bx, by) = opp, _mirror(ex, ey)
                self._pass(period, team, (bx, by), (max(bx - 15, 1.0), by), None, 3, ptype="Free Kick")
                bx = max(bx - 15, 1.0)
                continue

            if r < 0.3:
                ex = float(np.clip(bx + rng.normal(6, 6), 1, 119))
                ey = float(np.clip(by + rng.normal(0, 6), 1, 79))
                if rng.random() < 0.1:
                    ok = rng.random() < 0.6
                    self._emit(period, team, "Dribble", (bx, by),
                               {"dribble": {"outcome": {"name": "Complete" if ok else "Incomplete"}}}, shape, slot)
                    if not ok:
                        team, (bx, by) = opp, _mirror(bx, by)
                        continue
                self._emit(period, team, "Carry", (bx, by), {"carry": {"end_location": [round(ex, 1), round(ey, 1)]}},
                           shape, slot)
                bx, by = ex, ey
                continue

            # pass
            cross = bx > 95 and (by < 18 or by > 62) and rng.random() < 0.5
            if cross:
                ex, ey = float(rng.uniform(104, 116)), float(rng.uniform(28, 52))
            else:
                ex = float(np.clip(bx + rng.normal(10, 14), 1, 119))
                ey = float(np.clip(by + rng.normal(0, 14), 1, 79))
            d_end = float(np.min(np.hypot(dfd[:-1, 0] - ex, dfd[:-1, 1] - ey)))
            fail = rng.random() < (0.1 + 0.5 * math.exp(-d_end / 4.0) + (0.3 if cross else 0.0))
            self._pass(period, team, (bx, by), (ex, ey), shape, slot,
                       outcome="Incomplete" if fail else None, cross=cross)
            if fail:
                team, (bx, by) = opp, _mirror(ex, ey)
                self._emit(period, team, "Ball Recovery", (bx, by), None, None, slot)
            else:
                if rng.random() < 0.5:
                    self._emit(period, team, "Ball Receipt*", (ex, ey), None, None, slot)
                bx, by = ex, ey

    def _pass(self, period, team, start, end, shape, slot, *, ptype=None, outcome=None,
              cross=False, high=False):
        body = "Head" if self.rng.random() < 0.08 else "Right Foot"
        sub = {"end_location": [round(float(np.clip(end[0], 0, 120)), 1),
                                round(float(np.clip(end[1], 0, 80)), 1)],
               "body_part": {"name": body}}
        if ptype:
            sub["type"] = {"name": ptype}
        if outcome:
            sub["outcome"] = {"name": outcome}
        if cross:
            sub["cross"] = True
        if high or cross:
            sub["height"] = {"name": "High Pass"}
        if shape is None:
            shape = self._shape(team, *start)
        self._emit(period, team, "Pass", start, {"pass": sub}, shape, slot)


def _swap(shape, bx, by):
    """Same players seen from the other team's frame (defenders become mates)."""
    att, dfd = shape
    m = lambda a: np.column_stack([L - a[:, 0], W - a[:, 1]])
    return m(dfd), m(att)


def _fmt_clock(seconds: float) -> str:
    seconds = seconds % 3600
    m, s = divmod(seconds, 60)
    return f"00:{int(m):02d}:{s:06.3f}"


def generate_corpus(root, *, competition_id: int = 9001, season_id: int = 1,
                    n_teams: int = 8, n_matches: int = 12, events_per_match: int = 360,
                    seed: int = 0) -> Path:
    """Write a synthetic tournament under ``root`` and return the root path.

    The last ``n_teams // 2`` matches are labelled "Round of 16" so the best-16
    style team filter has something to select; the final one also goes to a
    penalty shootout.
    """
    rng = np.random.default_rng(seed)
    root = Path(root)
    for sub in ("matches/%d" % competition_id, "events", "three-sixty"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    teams = [100 + t for t in range(n_teams)]
    compactness = {t: float(s) for t, s in zip(teams, rng.uniform(5.0, 14.0, n_teams))}
    n_knockout = n_teams // 2
    pairs = []
    while len(pairs) < n_matches - n_knockout:
        a, b = rng.choice(teams, 2, replace=False)
        pairs.append((int(a), int(b), "Group Stage"))
    order = rng.permutation(teams)
    for k in range(n_knockout):
        pairs.append((int(order[2 * k]), int(order[2 * k + 1]), "Round of 16"))

    matches = []
    for m, (home, away, stage) in enumerate(pairs):
        match_id = 3_900_000 + seed * 1000 + m
        sim = _MatchSim(rng, match_id, home, away, events_per_match,
                        shootout=(m == len(pairs) - 1), compactness=compactness)
        events, frames = sim.run()
        goals = {home: 0, away: 0}
        for e in events:
            if e["period"] > 4:
                continue
            if e["type"]["name"] == "Shot" and e["shot"]["outcome"]["name"] == "Goal":
                goals[e["team"]["id"]] += 1
            elif e["type"]["name"] == "Own Goal Against":
                goals[home if e["team"]["id"] == away else away] += 1
        (root / "events" / f"{match_id}.json").write_text(json.dumps(events))
        (root / "three-sixty" / f"{match_id}.json").write_text(json.dumps(frames))
        matches.append({
            "match_id": match_id,
            "match_date": f"2021-06-{11 + m // 3:02d}",
            "kick_off": "18:00:00.000",
            "competition": {"competition_id": competition_id, "competition_name": "Synthetic Cup"},
            "season": {"season_id": season_id, "season_name": "2021"},
            "home_team": {"home_team_id": home, "home_team_name": f"Team {home}"},
            "away_team": {"away_team_id": away, "away_team_name": f"Team {away}"},
            "home_score": goals[home],
            "away_score": goals[away],
            "competition_stage": {"id": 1, "name": stage},
        })
    (root / "matches" / str(competition_id) / f"{season_id}.json").write_text(json.dumps(matches))
    return root
