import numpy as np

from gvdep.evaluation import make_folds
from gvdep.gbt import GbtModel, TrainConfig
from gvdep.labeling import TARGETS
from gvdep.valuation import value_states
from conftest import FAST


def test_stats_are_consistent(syn_dataset):
    st = syn_dataset.stats()
    assert st.n_observed + st.n_unobserved == st.n_states
    assert st.n_observed == len(syn_dataset.states) > 0
    assert st.n_unobserved > 0  # the generator leaves some events without players
    assert st.frame_quantiles[0] >= 1 and st.frame_quantiles[-1] <= 22
    assert all(0 < st.positives[t] < st.n_observed for t in TARGETS)
    assert st.n_gain_events == len(syn_dataset.gain_events())


def test_legacy_constants(syn_dataset):
    c = syn_dataset.legacy_constants()
    assert c["labels"] == syn_dataset.y["gains"].sum() / syn_dataset.y["attacked"].sum()
    assert c["events"] == len(syn_dataset.gain_events()) / len(syn_dataset.attack_events())


def test_goals_match_metadata(syn_dataset):
    goals = syn_dataset.goals()
    for m in syn_dataset.corpus.matches:
        assert goals[m.match_id] == {m.home_team_id: m.home_score, m.away_team_id: m.away_score}


def test_out_of_fold_probabilities(syn_dataset):
    folds = make_folds(syn_dataset.match_ids, 4, seed=0)
    models = {}
    probs = syn_dataset.out_of_fold(folds, FAST, models=models)
    assert len(models) == 16 and all(isinstance(m, GbtModel) for m in models.values())
    for t in TARGETS:
        assert np.all((probs.p[t] > 0) & (probs.p[t] < 1))
    # defending team is the actor's opponent on every row
    assert np.all(probs.acting_team != probs.defending_team)
    val = value_states(probs, syn_dataset.gain_events(), syn_dataset.attack_events(), 0.3)
    assert np.isfinite(val.v_gvdep).all()
    assert val.weights.n_gains <= len(syn_dataset.gain_events())


def test_zero_information_models_give_zero_values(syn_dataset):
    n = len(syn_dataset.states)
    const = {t: np.full(n, 0.2) for t in TARGETS}
    probs = syn_dataset.state_probs(const, const)
    val = value_states(probs, syn_dataset.gain_events(), syn_dataset.attack_events(), 0.3)
    assert not val.v_gvdep.any() and not val.v_vaep.any()


def test_out_of_fold_deterministic(syn_dataset):
    folds = make_folds(syn_dataset.match_ids, 4, seed=2)
    cfg = TrainConfig(n_trees=2, max_depth=2)
    a = syn_dataset.out_of_fold(folds, cfg)
    b = syn_dataset.out_of_fold(folds, cfg)
    for t in TARGETS:
        assert np.array_equal(a.p[t], b.p[t]) and np.array_equal(a.p_swapped[t], b.p_swapped[t])
