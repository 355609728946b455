"""Corpus → states → labels → features → out-of-fold probabilities."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gvdep.actions import Action, corpus_actions
from gvdep.config import FileConfig, load_config
from gvdep.evaluation import FoldPlan
from gvdep.features import SLOTS_PER_TEAM, StateFeatures, schema_id
from gvdep.gbt import GbtModel, TrainConfig, predict_proba, train
from gvdep.ingest import Corpus, frame_player_count_histogram, histogram_quantiles, is_observed
from gvdep.labeling import TARGETS, EventRef, MatchLabels, label_match
from gvdep.valuation import StateProbs, Valuation, legacy_constant, value_states

logger = logging.getLogger(__name__)

# outcome classifiers see the action type; defensive ones do not
TARGET_SCHEMA = {"scores": "vaep_133", "concedes": "vaep_133",
                 "gains": "vdep_109", "attacked": "vdep_109"}


@dataclass(frozen=True)
class DatasetStats:
    n_matches: int
    n_states: int          # retained on-ball states before the frame filter
    n_unobserved: int      # of those, states with no frame or an empty frame
    n_observed: int
    positives: dict        # target -> positive labels among observed states
    n_goal_events: int
    n_gain_events: int
    n_attack_events: int
    frame_quantiles: list  # player count min/q1/median/q3/max over observed states


class Dataset:
    """All per-state artifacts for one tournament.

    Labels are computed on the full retained action stream, so look-ahead
    windows see every on-ball action. Classifier rows are then restricted to
    observed states (those with a non-empty frame).
    """

    def __init__(self, corpus: Corpus, config: FileConfig | None = None, *, orientation: str = "actor"):
        self.corpus = corpus
        self.config = config or load_config()
        self.actions: dict[int, list[Action]] = corpus_actions(corpus, self.config.action_map,
                                                               orientation=orientation)
        self.labels: dict[int, MatchLabels] = {m: label_match(a, self.config.labels)
                                               for m, a in self.actions.items()}
        states, ys = [], {t: [] for t in TARGETS}
        for m in self.match_ids:
            lab = self.labels[m]
            for a in self.actions[m]:
                if is_observed(a.frame):
                    states.append(a)
                    for t in TARGETS:
                        ys[t].append(bool(lab.target(t)[a.state_index]))
        self.states = states
        self.y = {t: np.asarray(v, dtype=bool) for t, v in ys.items()}
        self.row_match = np.asarray([s.match_id for s in states], dtype=np.int64)
        self._features: dict[bool, StateFeatures] = {}
        self._matrices: dict[tuple, np.ndarray] = {}
        self._names: dict[str, str] | None = None

    @property
    def match_ids(self) -> list[int]:
        return [m.match_id for m in self.corpus.matches]

    # -- summaries -----------------------------------------------------------
    def stats(self) -> DatasetStats:
        n_states = sum(len(a) for a in self.actions.values())
        hist = frame_player_count_histogram(self.corpus, [s.event_id for s in self.states])
        return DatasetStats(
            n_matches=len(self.actions),
            n_states=n_states,
            n_unobserved=n_states - len(self.states),
            n_observed=len(self.states),
            positives={t: int(self.y[t].sum()) for t in TARGETS},
            n_goal_events=sum(len(lab.goal_events) for lab in self.labels.values()),
            n_gain_events=len(self.gain_events()),
            n_attack_events=len(self.attack_events()),
            frame_quantiles=histogram_quantiles(hist),
        )

    def gain_events(self) -> list[EventRef]:
        return [e for m in self.match_ids for e in self.labels[m].gain_events]

    def attack_events(self) -> list[EventRef]:
        return [e for m in self.match_ids for e in self.labels[m].attack_events]

    def goals(self) -> dict[int, dict[int, int]]:
        out = {}
        for m, acts in self.actions.items():
            meta = self.corpus.match(m)
            tally = {meta.home_team_id: 0, meta.away_team_id: 0}
            for a in acts:
                if a.goal_team is not None:
                    tally[a.goal_team] += 1
            out[m] = tally
        return out

    def legacy_constants(self) -> dict[str, float]:
        """Gain/attacked ratio from positive labels and from event counts."""
        return {"labels": legacy_constant(int(self.y["gains"].sum()), int(self.y["attacked"].sum())),
                "events": legacy_constant(len(self.gain_events()), len(self.attack_events()))}

    # -- features ------------------------------------------------------------
    def features(self, swapped: bool = False) -> StateFeatures:
        if swapped not in self._features:
            self._features[swapped] = StateFeatures(self.states, swapped=swapped)
        return self._features[swapped]

    def matrix(self, target: str, n_nearest: int = SLOTS_PER_TEAM, swapped: bool = False) -> np.ndarray:
        key = (TARGET_SCHEMA[target], n_nearest, swapped)
        if key not in self._matrices:
            self._matrices[key] = self.features(swapped).matrix(TARGET_SCHEMA[target], n_nearest)
        return self._matrices[key]

    def rows(self, match_ids: Sequence[int]) -> np.ndarray:
        return np.flatnonzero(np.isin(self.row_match, np.asarray(match_ids, dtype=np.int64)))

    # -- modelling -----------------------------------------------------------
    def fit(self, target: str, match_ids: Sequence[int], cfg: TrainConfig,
            n_nearest: int = SLOTS_PER_TEAM) -> GbtModel:
        rows = self.rows(match_ids)
        X = self.matrix(target, n_nearest)[rows]
        return train(X, self.y[target][rows], cfg,
                     schema_id=schema_id(TARGET_SCHEMA[target], n_nearest), target=target)

    def fold_predictor(self, cfg: TrainConfig):
        """Callable for :func:`gvdep.evaluation.ablate`."""
        def predict(target, n_nearest, train_ids, test_ids):
            model = self.fit(target, train_ids, cfg, n_nearest)
            rows = self.rows(test_ids)
            probs = predict_proba(model, self.matrix(target, n_nearest)[rows])
            return probs, self.y[target][rows]
        return predict

    def out_of_fold(self, folds: FoldPlan, cfg: TrainConfig, n_nearest: int = SLOTS_PER_TEAM,
                    models: dict | None = None) -> StateProbs:
        """Probabilities for every observed state from the fold that held its match out.

        Each state is also scored with teams swapped, which the deltas need at
        possession changes. Fitted models are stored into ``models`` keyed by
        (fold, target) when a dict is passed.
        """
        n = len(self.states)
        p = {t: np.full(n, np.nan) for t in TARGETS}
        ps = {t: np.full(n, np.nan) for t in TARGETS}
        for k in range(folds.n_folds):
            rows = self.rows(folds.test[k])
            for t in TARGETS:
                model = self.fit(t, folds.train(k), cfg, n_nearest)
                if models is not None:
                    models[(k, t)] = model
                p[t][rows] = predict_proba(model, self.matrix(t, n_nearest)[rows])
                ps[t][rows] = predict_proba(model, self.matrix(t, n_nearest, swapped=True)[rows])
            logger.info("fold %d/%d scored (%d states)", k + 1, folds.n_folds, len(rows))
        missing = [t for t in TARGETS if np.isnan(p[t]).any()]
        if missing:
            raise ValueError(f"states not covered by any test fold for {missing}")
        return self.state_probs(p, ps)

    def state_probs(self, p: dict, p_swapped: dict) -> StateProbs:
        s = self.states
        return StateProbs(
            match_id=self.row_match,
            state_index=np.asarray([a.state_index for a in s], dtype=np.int64),
            period=np.asarray([a.period for a in s], dtype=np.int64),
            acting_team=np.asarray([a.team_id for a in s], dtype=np.int64),
            defending_team=np.asarray([a.opponent_id for a in s], dtype=np.int64),
            p=p, p_swapped=p_swapped,
            event_id=[a.event_id for a in s],
            player=[self._player_name(a) for a in s],
            action=[a.action_type.name for a in s],
        )

    def _player_name(self, a: Action) -> str:
        if self._names is None:
            self._names = {e.event_id: e.player_name or "" for evs in self.corpus.events_by_match.values()
                           for e in evs}
        return self._names.get(a.event_id, "")


def run_valuation(ds: Dataset, folds: FoldPlan, cfg: TrainConfig, n_nearest: int = SLOTS_PER_TEAM,
                  models: dict | None = None, corpus_id: str = "") -> Valuation:
    """Out-of-fold probabilities turned into per-state values (legacy C from label counts)."""
    probs = ds.out_of_fold(folds, cfg, n_nearest, models)
    return value_states(probs, ds.gain_events(), ds.attack_events(),
                        ds.legacy_constants()["labels"], corpus_id)
