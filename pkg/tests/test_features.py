import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gvdep.features import (N_OFFBALL, SENTINEL, SchemaMismatch, StateFeatures, assemble,
                            column_specs, offball_features, onball_features, read_matrix,
                            schema_id, truncation_mask, write_matrix)
from gvdep.ingest import FramePlayer, FreezeFrame
from oracles import sorted_by_distance
from sb import actions_of, pass_


def one_action(start=(100.0, 40.0), end=(120.0, 40.0)):
    (a,) = actions_of([pass_(1, start=start, end=end)])
    return a


def test_onball_geometry_at_goal():
    v = onball_features(one_action())
    assert v.shape == (21,)
    assert list(v[13:16]) == [20.0, 0.0, 20.0]
    assert v[18] == 0.0 and v[19] == 0.0
    assert v[16] == 20.0 and v[17] == 0.0
    assert v[0] == 1.0 and v[:4].sum() == 1.0


def test_onball_zero_movement():
    v = onball_features(one_action((50, 30), (50, 30)))
    assert list(v[13:16]) == [0.0, 0.0, 0.0]


@given(st.tuples(st.floats(0, 120), st.floats(0, 80)), st.tuples(st.floats(0, 120), st.floats(0, 80)))
def test_onball_norm_and_angles(start, end):
    v = onball_features(one_action(start, end))
    assert v[15] == pytest.approx(math.sqrt(v[13] ** 2 + v[14] ** 2))
    assert -math.pi <= v[17] <= math.pi and -math.pi <= v[19] <= math.pi


def frame_of(players):
    return FreezeFrame("f", tuple(FramePlayer(x, y, t, False, False) for x, y, t in players))


def test_offball_truncation_zero_is_all_sentinel():
    fr = frame_of([(10, 10, True), (20, 20, False)])
    out = offball_features(fr, (0, 0), 0)
    assert out.shape == (N_OFFBALL,)
    assert np.array_equal(out, np.tile(SENTINEL, 22))
    assert np.array_equal(offball_features(None, (0, 0)), out)


def test_offball_attacker_at_ball():
    out = offball_features(frame_of([(30, 30, True)]), (30, 30))
    assert list(out[:4]) == [30.0, 30.0, 0.0, 0.0]
    assert list(out[4:8]) == list(SENTINEL)


players_st = st.lists(st.tuples(st.floats(0, 120), st.floats(0, 80), st.booleans()), max_size=22)


@given(players_st, st.tuples(st.floats(0, 120), st.floats(0, 80)))
def test_offball_sorted_like_oracle(players, ball):
    out = offball_features(frame_of(players), ball).reshape(22, 4)
    for block, team in enumerate((True, False)):
        pts = [(x, y) for x, y, t in players if t == team]
        order = sorted_by_distance(pts, ball)[:11]
        got = out[block * 11: block * 11 + len(order)]
        assert got[:, :2].tolist() == [list(pts[i]) for i in order]
        assert np.all(np.diff(got[:, 2]) >= 0)
        assert np.all(np.abs(got[:, 3]) <= math.pi)


@settings(max_examples=30)
@given(players_st, st.integers(0, 10))
def test_truncation_nesting(players, n):
    fr = frame_of(players)
    a = offball_features(fr, (60, 40), n).reshape(2, 11, 4)
    b = offball_features(fr, (60, 40), n + 1).reshape(2, 11, 4)
    assert np.array_equal(a[:, :n], b[:, :n])
    assert np.array_equal(offball_features(fr, (60, 40), n)[truncation_mask(n)],
                          np.tile(SENTINEL, 22)[truncation_mask(n)])


def test_assemble_schemas():
    a = one_action()
    fr = frame_of([(100, 40, True), (105, 42, False)])
    vaep = assemble(a, None, fr, "vaep_133")
    vdep = assemble(a, None, fr, "vdep_109")
    assert vaep.values.shape == (133,) and vdep.values.shape == (109,)
    assert np.array_equal(vaep.values[24:], vdep.values)
    assert vaep.values[:24].sum() == 1.0
    assert assemble(a, None, fr, "vdep_109", 3).schema_id == "vdep_truncated(3)"
    with pytest.raises(SchemaMismatch):
        assemble(a, None, fr, "vaep_999")


def test_state_features_match_per_state_builder(syn_dataset):
    sf = syn_dataset.features()
    states = syn_dataset.states[:40]
    for n in (0, 3, 11):
        mat = sf.matrix("vaep_133", n)
        for i, s in enumerate(states):
            assert np.array_equal(mat[i], assemble(s, None, s.frame, "vaep_133", n).values)
    assert not np.isnan(sf.matrix("vdep_109")).any()


def test_swapped_features_flip_teams(syn_dataset):
    s = syn_dataset.states[0]
    swapped = StateFeatures([s], swapped=True).matrix("vdep_109")[0]
    direct = StateFeatures([s]).matrix("vdep_109")[0]
    assert swapped[20] == 1 - direct[20]  # visitor flag
    assert swapped[9] == pytest.approx(120 - direct[9])


def test_matrix_file_round_trip(tmp_path, syn_dataset):
    X = syn_dataset.matrix("gains", 4)
    refs = [(s.match_id, s.state_index) for s in syn_dataset.states]
    write_matrix(tmp_path / "m.f8", X, "vdep_109", 4, refs)
    back, meta = read_matrix(tmp_path / "m.f8")
    assert np.array_equal(back, X)
    assert meta["schema_id"] == "vdep_truncated(4)" and meta["n_cols"] == 109
    assert [c["name"] for c in meta["columns"]] == [c["name"] for c in column_specs("vdep_109")]
    assert (tmp_path / "m.f8").stat().st_size == X.size * 8
    with pytest.raises(SchemaMismatch):
        write_matrix(tmp_path / "x.f8", X, "vaep_133", 4, refs)


def test_schema_ids():
    assert schema_id("vaep_133") == "vaep_133"
    assert schema_id("vdep_109", 0) == "vdep_truncated(0)"
    assert len(column_specs("vaep_133")) == 133
