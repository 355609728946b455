from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gvdep.config import LabelConfig
from gvdep.labeling import (EventRef, detect_attack_events, detect_gain_events, detect_goal_events,
                            label_match, label_window, write_labels_csv)
from sb import AWAY, HOME, actions_of, event, pass_, shot


def tackle(i, team, outcome="Won"):
    return event(i, "Duel", team, duel={"type": {"name": "Tackle"}, "outcome": {"name": outcome}})


def replace_period(ev, period):
    ev["period"] = period
    return ev


def test_goal_window_scores_and_concedes():
    raw = [pass_(i) for i in range(12)] + [shot(12, goal=True)] + [pass_(13, team=AWAY)]
    acts = actions_of(raw)
    lab = label_match(acts)
    assert lab.goal_events == [EventRef(77, 12, HOME)]
    assert np.flatnonzero(lab.scores).tolist() == list(range(3, 13))  # j-9 .. j
    assert not lab.concedes.any()
    assert not lab.scores[13]


def test_concedes_from_acting_team_perspective():
    acts = actions_of([pass_(1, team=AWAY), pass_(2), shot(3, goal=True)])
    lab = label_match(acts)
    assert lab.concedes.tolist() == [True, False, False]
    assert lab.scores.tolist() == [False, True, True]


def test_gain_events():
    acts = actions_of([pass_(1), tackle(2, AWAY), pass_(3, team=AWAY),
                       event(4, "Interception", HOME, interception={"outcome": {"name": "Lost Out"}}),
                       pass_(5, team=AWAY, outcome="Pass Offside"), event(6, "Foul Committed", HOME),
                       pass_(7, team=AWAY), tackle(8, AWAY)])
    gains = detect_gain_events(acts)
    # tackle won at 1; offside at 4 credited to the next team at 5; the lost interception and a
    # tackle without a change of team do not count
    assert gains == [EventRef(77, 1, AWAY), EventRef(77, 5, HOME)]
    lab = label_match(acts, LabelConfig(k=2))
    # state 0 (HOME acting, AWAY defending) sees AWAY's gain at state 1
    assert lab.gains.tolist()[:2] == [True, False]
    no_offside = detect_gain_events(acts, LabelConfig(gain_triggers=("tackle", "interception")))
    assert no_offside == [EventRef(77, 1, AWAY)]


def test_gain_needs_same_period():
    acts = actions_of([pass_(1), replace_period(tackle(2, AWAY), 2)])
    assert detect_gain_events(acts) == []


def test_attack_events():
    acts = actions_of([pass_(1, start=(90, 40), end=(110, 40)), pass_(2, start=(105, 40), end=(110, 30)),
                       event(3, "Carry", carry={"end_location": [103, 30]}, loc=(95, 30)),
                       pass_(4, start=(90, 40), end=(110, 40), outcome="Incomplete"), shot(5, loc=(80, 40))])
    assert [e.state_index for e in detect_attack_events(acts)] == [0, 2, 3, 4]
    strict = detect_attack_events(acts, LabelConfig(attack_requires_success=True))
    assert [e.state_index for e in strict] == [0, 2, 4]


def test_window_truncated_at_period():
    acts = actions_of([pass_(1), pass_(2), replace_period(shot(3, goal=True), 2)])
    lab = label_match(acts)
    assert lab.scores.tolist() == [False, False, True]


def test_window_validation():
    with pytest.raises(ValueError):
        label_window([], [], 0, "attacking")
    with pytest.raises(ValueError):
        label_window([], [], 1, "sideways")


@given(st.lists(st.tuples(st.booleans(), st.integers(1, 2)), min_size=1, max_size=40),
       st.lists(st.integers(0, 39), max_size=8), st.integers(1, 6))
def test_window_properties(spec, event_at, k):
    template = actions_of([pass_(0)])[0]
    acts = [replace(template, state_index=i, team_id=HOME if h else AWAY,
                    opponent_id=AWAY if h else HOME, period=p)
            for i, (h, p) in enumerate(sorted(spec, key=lambda s: s[1]))]
    events = [EventRef(77, j, acts[j].team_id) for j in sorted(set(event_at)) if j < len(acts)]
    big = label_window(acts, events, k, "attacking")
    small = label_window(acts, events, 1, "attacking")
    assert np.all(small <= big)  # shrinking the horizon never adds positives
    assert len(events) <= big.sum() <= k * len(events)
    for i in np.flatnonzero(big):
        hits = [j for j in range(i, min(i + k, len(acts)))
                if acts[j].period == acts[i].period and any(e.state_index == j and e.team == acts[i].team_id
                                                            for e in events)]
        assert hits


def test_count_identity_on_synthetic(syn_dataset):
    for m, lab in syn_dataset.labels.items():
        assert len(lab.gain_events) <= lab.gains.sum() <= 5 * len(lab.gain_events)
        assert len(lab.goal_events) == len(detect_goal_events(syn_dataset.actions[m]))
        k1 = label_match(syn_dataset.actions[m], LabelConfig(k=1))
        assert np.all(k1.attacked <= lab.attacked)


def test_labels_csv(tmp_path, syn_dataset):
    write_labels_csv(tmp_path / "l.csv", syn_dataset.actions, syn_dataset.labels)
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == ("match_id,state_index,scores,concedes,gains,attacked,"
                        "is_gain_event,is_attacked_event,credited_team")
    assert len(lines) - 1 == sum(len(a) for a in syn_dataset.actions.values())
