"""CART trees grown best-first and a bagged random forest with OOB bookkeeping."""

import hashlib
import heapq
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import xlogy

from .errors import ForestTrainMismatch

CRITERIA = ("gini", "entropy")
FOREST_FORMAT_VERSION = 1

# gains closer than this are ties; a split must beat it to count as a gain
GAIN_TOL = 1e-12
_LN2 = np.log(2.0)


@dataclass(frozen=True)
class Hyperparams:
    criterion: str = "entropy"
    max_leaf_nodes: int = 10
    max_features: int = 4
    n_trees: int = 10
    min_samples_split: int = 7
    # "split" draws candidate features at every node, "tree" once per tree
    max_features_mode: str = "split"

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.max_leaf_nodes < 2:
            raise ValueError("max_leaf_nodes must be >= 2")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_features_mode not in ("split", "tree"):
            raise ValueError("max_features_mode must be 'split' or 'tree'")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# entropy, max_leaf_nodes, max_features, n_trees, min_samples_split reported
# for the mean model of the Florida study
REPORTED_OPTIMUM = Hyperparams("entropy", 10, 4, 10, 7)


def impurity(class_counts, criterion="gini"):
    """Impurity of a node holding ``class_counts`` samples per class."""
    counts = np.asarray(class_counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("class counts must sum to at least 1")
    p = counts / total
    if criterion == "gini":
        return float(1.0 - np.sum(p * p))
    if criterion == "entropy":
        p = p[p > 0]
        return float(-np.sum(p * np.log2(p))) + 0.0
    raise ValueError(f"unknown criterion {criterion!r}")


def _binary_impurity(n0, n1, criterion):
    # vectorised over arrays of (n0, n1) with n0 + n1 > 0
    n = n0 + n1
    if criterion == "gini":
        return 1.0 - (n0 * n0 + n1 * n1) / (n * n)
    return (xlogy(n, n) - xlogy(n0, n0) - xlogy(n1, n1)) / (n * _LN2)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def _midpoint(a, b):
    t = a + (b - a) / 2.0
    # adjacent floats: keep ``b`` on the right side
    return a if t >= b else t


def best_split(X, y, features, criterion="gini") -> Optional[Split]:
    """Best impurity-decreasing split of the samples ``(X, y)``.

    Thresholds are midpoints between consecutive distinct values of a
    feature; ``value <= threshold`` goes left. Ties (within ``GAIN_TOL``)
    go to the lower feature index, then the lower threshold. Returns
    None when no split has positive gain.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n = y.shape[0]
    if n < 2:
        return None
    n1 = int(np.count_nonzero(y))
    parent = float(_binary_impurity(np.float64(n - n1), np.float64(n1), criterion))
    if parent <= 0.0:
        return None

    feats = np.array(sorted(int(f) for f in features), dtype=np.intp)
    V = X[:, feats]
    order = np.argsort(V, axis=0, kind="stable")
    vs = np.take_along_axis(V, order, axis=0)
    valid = vs[1:] > vs[:-1]                      # (n-1, n_feat)
    if not valid.any():
        return None
    l1 = np.cumsum(y[order], axis=0)[:-1].astype(float)
    nl = np.arange(1, n, dtype=float)[:, None]
    nr = n - nl
    r1 = n1 - l1
    with np.errstate(divide="ignore", invalid="ignore"):
        child = (nl * _binary_impurity(nl - l1, l1, criterion)
                 + nr * _binary_impurity(nr - r1, r1, criterion)) / n
    gain = np.where(valid, parent - child, -np.inf)
    best_gain = float(gain.max())
    if best_gain <= GAIN_TOL:
        return None
    # transpose so flat order is (feature, threshold) ascending
    hits = np.flatnonzero(gain.T >= best_gain - GAIN_TOL)
    j, i = divmod(int(hits[0]), n - 1)
    return Split(int(feats[j]), float(_midpoint(vs[i, j], vs[i + 1, j])), float(gain[i, j]))


@dataclass
class Tree:
    """Flat array form of a binary tree; node 0 is the root, leaves have feature -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray      # (n_nodes, 2) training class counts
    impurity: np.ndarray

    @property
    def n_nodes(self):
        return int(self.feature.shape[0])

    @property
    def n_leaves(self):
        return int(np.count_nonzero(self.feature < 0))

    @property
    def leaf_vote(self):
        # ties vote class 0
        return (self.counts[:, 1] > self.counts[:, 0]).astype(np.int8)

    def used_features(self):
        return set(int(f) for f in self.feature[self.feature >= 0])

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X):
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.arange(X.shape[0])
        while active.size:
            f = self.feature[node[active]]
            internal = f >= 0
            active = active[internal]
            if not active.size:
                break
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def vote(self, X):
        return self.leaf_vote[self.apply(X)]

    def to_dict(self, i=0):
        if self.feature[i] < 0:
            return {"counts": [int(c) for c in self.counts[i]]}
        return {
            "feature": int(self.feature[i]),
            "threshold": float(self.threshold[i]),
            "counts": [int(c) for c in self.counts[i]],
            "left": self.to_dict(int(self.left[i])),
            "right": self.to_dict(int(self.right[i])),
        }

    @classmethod
    def from_dict(cls, d, criterion="gini"):
        feature, threshold, left, right, counts = [], [], [], [], []

        def visit(node):
            i = len(feature)
            feature.append(node.get("feature", -1))
            threshold.append(node.get("threshold", 0.0))
            left.append(-1)
            right.append(-1)
            counts.append(node["counts"])
            if "left" in node:
                left[i] = visit(node["left"])
                right[i] = visit(node["right"])
            return i

        visit(d)
        counts = np.array(counts, dtype=np.int64).reshape(-1, 2)
        imp = _binary_impurity(counts[:, 0].astype(float), counts[:, 1].astype(float), criterion)
        return cls(np.array(feature, dtype=np.intp), np.array(threshold, dtype=float),
                   np.array(left, dtype=np.intp), np.array(right, dtype=np.intp), counts, imp)


def _draw_features(rng, pool, k):
    if k >= len(pool):
        return pool
    return np.sort(rng.choice(pool, size=k, replace=False))


def grow_tree(X, y, hp: Hyperparams, rng, allowed_features=None) -> Tree:
    """Grow a CART tree best-first until ``hp.max_leaf_nodes`` leaves.

    The pending leaf with the largest gain is split next. Nodes with fewer
    than ``hp.min_samples_split`` samples, or without a positive-gain split,
    stay leaves. ``allowed_features`` restricts the candidate pool.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    if y.shape[0] < 1:
        raise ValueError("cannot grow a tree on zero samples")
    pool = np.arange(X.shape[1]) if allowed_features is None else np.array(sorted(allowed_features), dtype=np.intp)
    if hp.max_features_mode == "tree":
        pool = _draw_features(rng, pool, hp.max_features)

    feature, threshold, left, right, counts, imps, members = [], [], [], [], [], [], []

    def add_node(idx):
        i = len(feature)
        n1 = int(np.count_nonzero(y[idx]))
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((idx.size - n1, n1))
        imps.append(float(_binary_impurity(np.float64(idx.size - n1), np.float64(n1), hp.criterion)))
        members.append(idx)
        return i

    heap = []

    def consider(i):
        idx = members[i]
        if idx.size < hp.min_samples_split or imps[i] <= 0.0:
            return
        cand = pool if hp.max_features_mode == "tree" else _draw_features(rng, pool, hp.max_features)
        split = best_split(X[idx], y[idx], cand, hp.criterion)
        if split is not None:
            heapq.heappush(heap, (-split.gain, i, split))

    consider(add_node(np.arange(y.shape[0])))
    n_leaves = 1
    while heap and n_leaves < hp.max_leaf_nodes:
        _, i, split = heapq.heappop(heap)
        idx = members[i]
        go_left = X[idx, split.feature] <= split.threshold
        feature[i] = split.feature
        threshold[i] = split.threshold
        left[i] = add_node(idx[go_left])
        right[i] = add_node(idx[~go_left])
        n_leaves += 1
        if n_leaves < hp.max_leaf_nodes:
            consider(left[i])
            consider(right[i])

    return Tree(np.array(feature, dtype=np.intp), np.array(threshold, dtype=float),
                np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                np.array(counts, dtype=np.int64).reshape(-1, 2), np.array(imps, dtype=float))


def _digest(X):
    X = np.ascontiguousarray(X, dtype=float)
    return hashlib.sha1(repr(X.shape).encode() + X.tobytes()).hexdigest()


@dataclass
class Forest:
    trees: list
    bootstrap_indices: list
    hyperparams: Hyperparams
    seed: int
    n_features: int
    n_train: int
    train_digest: str
    feature_ids: list = field(default_factory=list)

    @property
    def oob_mask(self):
        masks = []
        for boot in self.bootstrap_indices:
            m = np.ones(self.n_train, dtype=bool)
            m[boot] = False
            masks.append(m)
        return masks

    def used_features(self):
        used = set()
        for t in self.trees:
            used |= t.used_features()
        return used

    def vote_matrix(self, X):
        X = np.asarray(X, dtype=float)
        return np.array([t.vote(X) for t in self.trees], dtype=np.int8).reshape(len(self.trees), X.shape[0])

    def predict_proba(self, X):
        """Fraction of trees voting class 1 for every row of ``X``."""
        return self.vote_matrix(X).mean(axis=0)

    def predict(self, X, prob_threshold=0.5):
        return (self.predict_proba(X) >= prob_threshold).astype(np.int8)

    def to_dict(self):
        return {
            "format": "gridfall-forest",
            "version": FOREST_FORMAT_VERSION,
            "hyperparams": self.hyperparams.to_dict(),
            "seed": self.seed,
            "n_features": self.n_features,
            "n_train": self.n_train,
            "train_digest": self.train_digest,
            "feature_ids": list(self.feature_ids),
            "trees": [
                {"bootstrap": [int(i) for i in b], "root": t.to_dict()}
                for t, b in zip(self.trees, self.bootstrap_indices)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != "gridfall-forest" or d.get("version") != FOREST_FORMAT_VERSION:
            raise ValueError("not a gridfall forest document of a supported version")
        hp = Hyperparams.from_dict(d["hyperparams"])
        trees = [Tree.from_dict(t["root"], hp.criterion) for t in d["trees"]]
        boots = [np.array(t["bootstrap"], dtype=np.intp) for t in d["trees"]]
        return cls(trees, boots, hp, d["seed"], d["n_features"], d["n_train"],
                   d["train_digest"], list(d["feature_ids"]))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def tree_rng(seed, tree_index):
    return np.random.default_rng([int(seed), int(tree_index)])


def fit_forest(X, y, hp: Hyperparams, seed=0, allowed_features=None, feature_ids=None) -> Forest:
    """Bagged forest: each tree sees a bootstrap of size ``len(y)``.

    Tree ``t`` draws its bootstrap and its feature candidates from a stream
    keyed by ``(seed, t)``, so the result does not depend on training order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    n, d = X.shape
    if n < 1:
        raise ValueError("cannot fit a forest on zero samples")
    if hp.max_features > d:
        raise ValueError(f"max_features={hp.max_features} exceeds the {d} available features")
    trees, boots = [], []
    for t in range(hp.n_trees):
        rng = tree_rng(seed, t)
        boot = rng.integers(0, n, size=n)
        trees.append(grow_tree(X[boot], y[boot], hp, rng, allowed_features))
        boots.append(boot)
    return Forest(trees, boots, hp, int(seed), d, n, _digest(X),
                  list(feature_ids) if feature_ids is not None else list(range(d)))


def oob_vote_counts(forest: Forest, X):
    """Per training row: (trees voting 1 while holding it OOB, trees holding it OOB)."""
    X = np.asarray(X, dtype=float)
    if X.shape != (forest.n_train, forest.n_features) or _digest(X) != forest.train_digest:
        raise ForestTrainMismatch("forest was not fit on this training matrix")
    masks = np.array(forest.oob_mask).reshape(len(forest.trees), forest.n_train)
    votes = forest.vote_matrix(X)
    return (votes * masks).sum(axis=0), masks.sum(axis=0)


def oob_predictions(forest: Forest, X):
    """Per training row, ``(probability, vote)`` from its OOB trees or None.

    The OOB vote is a strict majority; a tie votes class 0.
    """
    ones, held = oob_vote_counts(forest, X)
    out = []
    for a, b in zip(ones, held):
        if b == 0:
            out.append(None)
        else:
            out.append((a / b, int(2 * a > b)))
    return out


def oob_accuracy(forest: Forest, X, y):
    ones, held = oob_vote_counts(forest, X)
    covered = held > 0
    if not covered.any():
        return float("nan")
    vote = (2 * ones > held)
    return float(np.mean(vote[covered] == (np.asarray(y)[covered] == 1)))
