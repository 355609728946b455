"""Second-order gradient tree boosting with logistic loss, exact greedy splits.

Rows are put in a canonical order (lexicographic over features, then label)
before training, so the fitted model depends only on the multiset of rows and
never on their input order. Every accumulation runs in that fixed order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np

MODEL_FORMAT = "gvdep-gbt"
MODEL_VERSION = 1

# Relative margin a candidate split must beat the incumbent by; candidates are
# scanned by feature index then ascending threshold, so near-ties resolve to
# the lowest feature and the lowest threshold.
SPLIT_TIE_TOL = 1e-12


class DegenerateLabels(ValueError):
    pass


class EmptyMatrix(ValueError):
    pass


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    n_trees: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    l2_reg: float = 1.0
    min_split_gain: float = 0.0
    min_child_hessian: float = 1.0
    base_score: float | None = 0.5  # None: use the training base rate

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be >= 0")
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.base_score is not None and not 0 < self.base_score < 1:
            raise ValueError("base_score must lie in (0, 1)")


@dataclass
class Tree:
    """Flat node arrays; node 0 is the root, ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack += [(int(self.left[node]), d + 1), (int(self.right[node]), d + 1)]
        return best

    def to_records(self) -> list[dict]:
        recs = []
        for i in range(self.n_nodes):
            if self.feature[i] < 0:
                recs.append({"id": i, "leaf": float(self.value[i])})
            else:
                recs.append({"id": i, "feature": int(self.feature[i]),
                             "threshold": float(self.threshold[i]),
                             "left": int(self.left[i]), "right": int(self.right[i]),
                             "default_left": bool(self.default_left[i])})
        return recs

    @classmethod
    def from_records(cls, recs: list[dict]) -> "Tree":
        n = len(recs)
        t = cls(np.full(n, -1, np.int64), np.zeros(n), np.full(n, -1, np.int64),
                np.full(n, -1, np.int64), np.zeros(n, np.bool_), np.zeros(n))
        for r in recs:
            i = r["id"]
            if "leaf" in r:
                t.value[i] = r["leaf"]
            else:
                t.feature[i] = r["feature"]
                t.threshold[i] = r["threshold"]
                t.left[i] = r["left"]
                t.right[i] = r["right"]
                t.default_left[i] = r["default_left"]
        return t


@dataclass
class GbtModel:
    trees: list[Tree]
    config: TrainConfig
    n_features: int
    base_margin: float
    schema_id: str = ""
    target_name: str = ""
    train_loss: list[float] = field(default_factory=list)

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.full(X.shape[0], self.base_margin)
        for t in self.trees:
            out += _tree_values(X, t.feature, t.threshold, t.left, t.right, t.default_left, t.value)
        return out

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "target": self.target_name,
            "schema_id": self.schema_id,
            "n_features": self.n_features,
            "base_margin": self.base_margin,
            "config": asdict(self.config),
            "train_loss": list(self.train_loss),
            "trees": [{"nodes": t.to_records()} for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError(f"not a {MODEL_FORMAT} v{MODEL_VERSION} model")
        return cls(
            trees=[Tree.from_records(t["nodes"]) for t in d["trees"]],
            config=TrainConfig(**d["config"]),
            n_features=d["n_features"],
            base_margin=d["base_margin"],
            schema_id=d["schema_id"],
            target_name=d["target"],
            train_loss=list(d["train_loss"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "GbtModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _split_gain(gl, hl, gr, hr, parent, lam, gamma):
    """Loss reduction of a split; ``parent`` is G^2/(H+lambda) of the node."""
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma


@numba.njit(cache=True)
def _beats(gain, best):
    return gain > best + SPLIT_TIE_TOL * max(1.0, abs(best))


@numba.njit(cache=True)
def _find_splits(vals, idx, nnz, pack, n_slots, g_tot, h_tot, lam, gamma, min_child_h):
    """Best split per frontier node. ``pack`` rows hold (g, h, slot) so that the
    random access per sorted row touches a single cache line."""
    n_feat = vals.shape[0]
    best_gain = np.zeros(n_slots)
    best_feat = np.full(n_slots, -1, np.int64)
    best_thr = np.zeros(n_slots)
    best_defl = np.zeros(n_slots, np.bool_)
    gl = np.zeros(n_slots)
    hl = np.zeros(n_slots)
    g_nm = np.zeros(n_slots)
    h_nm = np.zeros(n_slots)
    last = np.zeros(n_slots)
    has_last = np.zeros(n_slots, np.bool_)
    n_rows = pack.shape[0]
    parent = g_tot * g_tot / (h_tot + lam)
    for f in range(n_feat):
        m = nnz[f]
        if m == 0 or vals[f, 0] == vals[f, m - 1]:
            continue
        gl[:] = 0.0
        hl[:] = 0.0
        has_last[:] = False
        if m < n_rows:
            g_nm[:] = 0.0
            h_nm[:] = 0.0
            for t in range(m):
                r = idx[f, t]
                s = int(pack[r, 2])
                if s >= 0:
                    g_nm[s] += pack[r, 0]
                    h_nm[s] += pack[r, 1]
        else:
            g_nm[:] = g_tot
            h_nm[:] = h_tot
        for t in range(m):
            r = idx[f, t]
            s = int(pack[r, 2])
            if s < 0:
                continue
            v = vals[f, t]
            if has_last[s] and v > last[s]:
                thr = last[s] + (v - last[s]) * 0.5
                if thr <= last[s]:
                    thr = v
                gls = gl[s]
                hls = hl[s]
                gr = g_nm[s] - gls
                hr = h_nm[s] - hls
                gm = g_tot[s] - g_nm[s]
                hm = h_tot[s] - h_nm[s]
                # missing values routed right
                if hls >= min_child_h and hr + hm >= min_child_h:
                    gain = _split_gain(gls, hls, gr + gm, hr + hm, parent[s], lam, gamma)
                    if _beats(gain, best_gain[s]):
                        best_gain[s] = gain
                        best_feat[s] = f
                        best_thr[s] = thr
                        best_defl[s] = False
                # missing values routed left, only when some are present
                if hm > 0.0 and hls + hm >= min_child_h and hr >= min_child_h:
                    gain = _split_gain(gls + gm, hls + hm, gr, hr, parent[s], lam, gamma)
                    if _beats(gain, best_gain[s]):
                        best_gain[s] = gain
                        best_feat[s] = f
                        best_thr[s] = thr
                        best_defl[s] = True
            gl[s] += pack[r, 0]
            hl[s] += pack[r, 1]
            last[s] = v
            has_last[s] = True
    return best_gain, best_feat, best_thr, best_defl


@numba.njit(cache=True)
def _route(X, node_of, split_feat, split_thr, split_defl, left_id, right_id):
    """Move rows of split nodes to their children; arrays are indexed by node id."""
    for r in range(X.shape[0]):
        nd = node_of[r]
        f = split_feat[nd]
        if f < 0:
            continue
        x = X[r, f]
        if math.isnan(x):
            go_left = split_defl[nd]
        else:
            go_left = x < split_thr[nd]
        node_of[r] = left_id[nd] if go_left else right_id[nd]


@numba.njit(cache=True)
def _tree_values(X, feature, threshold, left, right, default_left, value):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        nd = 0
        while feature[nd] >= 0:
            x = X[r, feature[nd]]
            if math.isnan(x):
                nd = left[nd] if default_left[nd] else right[nd]
            elif x < threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[r] = value[nd]
    return out


# ---------------------------------------------------------------------------
# training


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def logistic_loss(y: np.ndarray, margin: np.ndarray) -> float:
    """Total negative log-likelihood, computed stably from margins."""
    return float(np.sum(np.logaddexp(0.0, margin) - y * margin))


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    keys = [y] + [X[:, f] for f in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


class _Presorted:
    def __init__(self, X: np.ndarray):
        n, n_feat = X.shape
        self.idx = np.empty((n_feat, n), np.int64)
        self.vals = np.empty((n_feat, n))
        self.nnz = np.empty(n_feat, np.int64)
        for f in range(n_feat):
            col = X[:, f]
            order = np.argsort(col, kind="stable")  # NaN sorts last
            self.idx[f] = order
            self.vals[f] = col[order]
            self.nnz[f] = n - int(np.isnan(col).sum())


def _grow_tree(X, pre: _Presorted, g, h, cfg: TrainConfig) -> tuple[Tree, np.ndarray]:
    n = X.shape[0]
    lam = cfg.l2_reg
    feature, threshold, left, right, defl = [-1], [0.0], [-1], [-1], [False]
    node_of = np.zeros(n, np.int64)
    frontier = [0]
    depth = 0
    while frontier and depth < cfg.max_depth:
        n_nodes = len(feature)
        slot_index = np.full(n_nodes, -1, np.int64)
        slot_index[frontier] = np.arange(len(frontier))
        pack = np.empty((n, 4))
        pack[:, 0] = g
        pack[:, 1] = h
        pack[:, 2] = slot_index[node_of]
        g_tot = np.bincount(node_of, weights=g, minlength=n_nodes)[frontier]
        h_tot = np.bincount(node_of, weights=h, minlength=n_nodes)[frontier]
        gain, feat, thr, dl = _find_splits(pre.vals, pre.idx, pre.nnz, pack,
                                           len(frontier), g_tot, h_tot, lam,
                                           cfg.min_split_gain, cfg.min_child_hessian)
        next_frontier = []
        for s, nd in enumerate(frontier):
            if feat[s] < 0:
                continue
            feature[nd], threshold[nd], defl[nd] = int(feat[s]), float(thr[s]), bool(dl[s])
            for side in (left, right):
                side[nd] = len(feature)
                next_frontier.append(len(feature))
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                defl.append(False)
        if not next_frontier:
            break
        f_arr = np.asarray(feature, np.int64)
        # only nodes split at this level route rows
        mask = np.zeros(len(feature), np.bool_)
        mask[[nd for nd in frontier if feature[nd] >= 0]] = True
        _route(X, node_of, np.where(mask, f_arr, -1), np.asarray(threshold),
               np.asarray(defl, np.bool_), np.asarray(left, np.int64), np.asarray(right, np.int64))
        frontier = next_frontier
        depth += 1

    n_nodes = len(feature)
    G = np.bincount(node_of, weights=g, minlength=n_nodes)
    H = np.bincount(node_of, weights=h, minlength=n_nodes)
    value = np.zeros(n_nodes)
    f_arr = np.asarray(feature, np.int64)
    leaves = f_arr < 0
    value[leaves] = -G[leaves] / (H[leaves] + lam) * cfg.learning_rate
    tree = Tree(f_arr, np.asarray(threshold), np.asarray(left, np.int64),
                np.asarray(right, np.int64), np.asarray(defl, np.bool_), value)
    return tree, value[node_of]


def train(X, y, config: TrainConfig = TrainConfig(), *, schema_id: str = "",
          target: str = "") -> GbtModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("training matrix is empty")
    if len(y) != X.shape[0]:
        raise ValueError("X and y lengths differ")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    if y.min() == y.max():
        raise DegenerateLabels("training labels contain a single class")

    order = canonical_order(X, y)
    X = np.ascontiguousarray(X[order])
    y = y[order]
    pre = _Presorted(X)

    base = config.base_score if config.base_score is not None else float(y.mean())
    base_margin = math.log(base / (1.0 - base))
    margin = np.full(len(y), base_margin)
    trees: list[Tree] = []
    losses = [logistic_loss(y, margin)]
    for _ in range(config.n_trees):
        p = sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree, leaf_vals = _grow_tree(X, pre, g, h, config)
        trees.append(tree)
        margin = margin + leaf_vals
        losses.append(logistic_loss(y, margin))
    return GbtModel(trees, config, X.shape[1], base_margin, schema_id, target, losses)


def predict_proba(model: GbtModel, x) -> np.ndarray | float:
    """Probability for one feature vector (returns float) or a matrix of rows."""
    from gvdep.features import FeatureVector, schema_width

    if isinstance(x, FeatureVector):
        if model.schema_id and schema_width(x.schema_id) != schema_width(model.schema_id):
            raise SchemaMismatch(f"{x.schema_id} vector for a {model.schema_id} model")
        x = x.values
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.n_features:
        raise SchemaMismatch(f"{X.shape[1]} features for a {model.n_features}-feature model")
    p = sigmoid(model.margin(X))
    return float(p[0]) if single else p
