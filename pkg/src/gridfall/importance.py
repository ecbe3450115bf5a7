"""Variable importance: mean decrease impurity and OOB permutation (MDA)."""

import numpy as np

from .errors import NoOobCoverage
from .forest import Forest, oob_vote_counts

DEFAULT_SHUFFLES = 10


def mdi(forest: Forest, X=None):
    """Mean decrease impurity per feature, averaged over trees.

    Each split contributes its node's share of the tree's samples times
    the weighted impurity decrease it achieved. ``X`` is accepted for
    symmetry with :func:`mda` and is not needed.
    """
    total = np.zeros(forest.n_features)
    for tree in forest.trees:
        n_root = tree.counts[0].sum()
        for i in np.flatnonzero(tree.feature >= 0):
            n = tree.counts[i].sum()
            l, r = tree.left[i], tree.right[i]
            nl, nr = tree.counts[l].sum(), tree.counts[r].sum()
            decrease = tree.impurity[i] - (nl * tree.impurity[l] + nr * tree.impurity[r]) / n
            total[tree.feature[i]] += (n / n_root) * decrease
    return total / len(forest.trees)


def permutation_rng(seed, feature, shuffle):
    return np.random.default_rng([int(seed), int(feature), int(shuffle)])


def mda(forest: Forest, X, y, shuffles=DEFAULT_SHUFFLES, seed=0):
    """Raw OOB permutation importance for every feature of ``X``.

    The baseline is the OOB accuracy of the forest on its own training set.
    For each feature, its column is permuted among the OOB-covered rows of
    an evaluation copy and the OOB accuracy recomputed; the importance is
    the baseline minus the mean permuted accuracy. Permutation ``s`` of
    feature ``f`` is drawn from a stream keyed by ``(seed, f, s)``.
    Features that no tree consults score exactly 0.
    """
    if shuffles < 1:
        raise ValueError("shuffles must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    ones, held = oob_vote_counts(forest, X)
    covered = np.flatnonzero(held > 0)
    if covered.size == 0:
        raise NoOobCoverage("no training sample is out-of-bag for any tree")
    yc = y[covered]
    # integer tallies keep unaffected features at exactly zero
    base_correct = int(np.sum((2 * ones[covered] > held[covered]) == (yc == 1)))

    raw = np.zeros(forest.n_features)
    used = sorted(forest.used_features())
    if not used:
        return raw
    slot = {f: k for k, f in enumerate(used)}
    # permuted copies of every used column, restricted to covered rows
    perm_cols = np.empty((len(used), shuffles, X.shape[0]))
    for f in used:
        for s in range(shuffles):
            col = X[:, f].copy()
            col[covered] = X[covered, f][permutation_rng(seed, f, s).permutation(covered.size)]
            perm_cols[slot[f], s] = col

    # change in "votes for 1" per (feature, shuffle, row)
    delta = np.zeros((len(used), shuffles, X.shape[0]), dtype=np.int64)
    for tree, oob in zip(forest.trees, forest.oob_mask):
        rows = np.flatnonzero(oob)
        feats = sorted(tree.used_features())
        if not rows.size or not feats:
            continue
        base_vote = tree.vote(X[rows])
        block = np.tile(X[rows], (len(feats) * shuffles, 1))
        for a, f in enumerate(feats):
            for s in range(shuffles):
                start = (a * shuffles + s) * rows.size
                block[start:start + rows.size, f] = perm_cols[slot[f], s, rows]
        votes = tree.vote(block).reshape(len(feats), shuffles, rows.size)
        for a, f in enumerate(feats):
            delta[slot[f], :, rows] += (votes[a] - base_vote).T

    for f in used:
        permuted_ones = ones[covered][None, :] + delta[slot[f]][:, covered]
        correct = int(np.sum((2 * permuted_ones > held[covered][None, :]) == (yc == 1)[None, :]))
        raw[f] = (base_correct * shuffles - correct) / (covered.size * shuffles)
    return raw


def holdout_mda(forest: Forest, X, y, shuffles=DEFAULT_SHUFFLES, seed=0, prob_threshold=0.5):
    """Permutation importance on a held-out set scored with the full forest."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    if X.shape[0] == 0:
        raise NoOobCoverage("empty evaluation set")
    base_correct = int(np.sum(forest.predict(X, prob_threshold) == y))
    raw = np.zeros(forest.n_features)
    for f in sorted(forest.used_features()):
        correct = 0
        for s in range(shuffles):
            Xp = X.copy()
            Xp[:, f] = X[permutation_rng(seed, f, s).permutation(X.shape[0]), f]
            correct += int(np.sum(forest.predict(Xp, prob_threshold) == y))
        raw[f] = (base_correct * shuffles - correct) / (X.shape[0] * shuffles)
    return raw


def normalize_importance(raw):
    """Clip negatives to 0 and rescale to percentages summing to 100."""
    clipped = np.clip(np.asarray(raw, dtype=float), 0.0, None)
    if clipped.size == 0:
        raise ValueError("no features to normalize")
    total = clipped.sum()
    if total <= 0:
        return np.zeros_like(clipped)
    return 100.0 * clipped / total
