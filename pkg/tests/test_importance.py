import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridfall.dataset import synth_corpus, to_matrix
from gridfall.errors import NoOobCoverage
from gridfall.forest import REPORTED_OPTIMUM, Forest, Hyperparams, Tree, fit_forest, grow_tree, impurity
from gridfall.importance import holdout_mda, mda, mdi, normalize_importance, permutation_rng
from gridfall.variables import feature_index


def naive_mda(forest, X, y, shuffles, seed):
    """Direct recomputation: permute, re-vote every OOB tree, re-score."""
    masks = forest.oob_mask

    def oob_acc(Xe):
        votes = np.array([t.vote(Xe) for t in forest.trees])
        ones = (votes * masks).sum(axis=0)
        held = np.sum(masks, axis=0)
        cov = held > 0
        return np.mean(((2 * ones > held) == (y == 1))[cov]), cov

    base, cov = oob_acc(X)
    idx = np.flatnonzero(cov)
    out = np.zeros(X.shape[1])
    for f in range(X.shape[1]):
        accs = []
        for s in range(shuffles):
            Xp = X.copy()
            Xp[idx, f] = X[idx, f][permutation_rng(seed, f, s).permutation(idx.size)]
            accs.append(oob_acc(Xp)[0])
        out[f] = base - np.mean(accs)
    return out


def test_normalize_examples():
    assert np.allclose(normalize_importance([3, 1, 0]), [75, 25, 0])
    assert np.allclose(normalize_importance([-0.02, 0.5]), [0, 100])
    assert np.array_equal(normalize_importance([0, -1, 0]), [0, 0, 0])
    with pytest.raises(ValueError):
        normalize_importance([])


def test_worst_model_column_arithmetic():
    # the worst model's five nonzero entries of the published importance table
    raw = np.zeros(27)
    raw[[0, 3, 7, 12, 25]] = [0.4062, 0.1875, 0.1875, 0.125, 0.0938]
    pct = normalize_importance(raw)
    assert pct.sum() == pytest.approx(100, abs=1e-9)
    assert np.allclose(pct[[0, 3, 7, 12, 25]], [40.62, 18.75, 18.75, 12.5, 9.38])
    assert 40.62 + 18.75 + 18.75 + 12.5 + 9.38 == pytest.approx(100)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30))
def test_normalize_properties(raw):
    pct = normalize_importance(raw)
    assert np.all(pct >= 0) and np.all(pct <= 100 + 1e-9)
    assert np.all(pct[np.asarray(raw) <= 0] == 0)
    if any(r > 0 for r in raw):
        assert pct.sum() == pytest.approx(100, abs=1e-9)
        assert np.allclose(normalize_importance(pct), pct, atol=1e-9)
    else:
        assert pct.sum() == 0


def test_mdi_examples():
    X = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    y = np.array([0, 0, 1, 1])
    stump = grow_tree(X, y, Hyperparams("gini", 2, 2, 1, 2), np.random.default_rng(0))
    f = Forest([stump], [np.arange(4)], Hyperparams("gini", 2, 2, 1, 2), 0, 2, 4, "")
    m = mdi(f)
    # one split, full node share, gain 0.5
    assert m[0] == pytest.approx(0.5) and m[1] == 0.0


def test_mdi_hand_trace():
    # root splits on x0 at 1.5 -> (0,0 | 1,0,1 ...), then the right child splits on x1
    X = np.array([[0, 0], [1, 0], [2, 0], [3, 1], [4, 1], [5, 0]], dtype=float)
    y = np.array([0, 0, 1, 1, 1, 0])
    hp = Hyperparams("gini", 3, 2, 1, 2)
    tree = grow_tree(X, y, hp, np.random.default_rng(0))
    f = Forest([tree], [np.arange(6)], hp, 0, 2, 6, "")
    expected = np.zeros(2)
    for i in range(tree.n_nodes):
        if tree.feature[i] >= 0:
            l, r = tree.left[i], tree.right[i]
            n, nl, nr = (int(tree.counts[j].sum()) for j in (i, l, r))
            dec = (impurity(tree.counts[i], "gini") - nl / n * impurity(tree.counts[l], "gini")
                   - nr / n * impurity(tree.counts[r], "gini"))
            expected[tree.feature[i]] += n / 6 * dec
    assert np.allclose(mdi(f), expected)
    assert tree.n_leaves == 3


def test_mda_matches_naive(strong_xy):
    X, y = strong_xy
    f = fit_forest(X, y, REPORTED_OPTIMUM, seed=3)
    fast = mda(f, X, y, shuffles=4, seed=9)
    slow = naive_mda(f, X, y, 4, 9)
    assert np.allclose(fast, slow, atol=1e-15)
    unused = set(range(27)) - f.used_features()
    assert all(fast[j] == 0.0 for j in unused)


def test_mda_signal_feature_largest(strong_xy):
    X, y = strong_xy
    raw = mda(fit_forest(X, y, REPORTED_OPTIMUM, seed=0), X, y, seed=0)
    assert int(np.argmax(raw)) == feature_index("past_max_v3")


def test_mda_independent_of_excluded_feature(strong_xy):
    X, y = strong_xy
    for seed in range(5):
        f = fit_forest(X, y, REPORTED_OPTIMUM, seed=seed, allowed_features=[j for j in range(27) if j != 25])
        assert mda(f, X, y, seed=seed)[25] == 0.0


def test_mda_single_covered_row_is_zero():
    # one OOB row: every permutation of one element is the identity
    X = np.array([[0.0], [1.0], [2.0]])
    y = np.array([0, 1, 1])
    tree = Tree.from_dict({"feature": 0, "threshold": 0.5, "counts": [1, 2],
                           "left": {"counts": [1, 0]}, "right": {"counts": [0, 2]}})
    f = fit_forest(X, y, Hyperparams("gini", 2, 1, 1, 2), seed=0)
    f = Forest([tree], [np.array([0, 1, 1])], f.hyperparams, 0, 1, 3, f.train_digest)
    assert mda(f, X, y, shuffles=5)[0] == 0.0


def test_mda_no_coverage():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    f = fit_forest(X, y, Hyperparams("gini", 2, 1, 1, 2), seed=0)
    f = Forest(f.trees, [np.array([0, 1])], f.hyperparams, 0, 1, 2, f.train_digest)
    with pytest.raises(NoOobCoverage):
        mda(f, X, y)


def test_mda_feature_order_and_scale_invariance(strong_xy):
    X, y = strong_xy
    f = fit_forest(X, y, REPORTED_OPTIMUM, seed=4)
    base = mda(f, X, y, seed=1)
    # scaling a column by c > 0 gives an identically shaped forest and the same MDA
    Xs = X.copy()
    Xs[:, 25] *= 3.7
    fs = fit_forest(Xs, y, REPORTED_OPTIMUM, seed=4)
    assert np.array_equal(mda(fs, Xs, y, seed=1), base)
    # each feature's value depends only on its own permutation streams
    perm = np.random.default_rng(2).permutation(27)
    for j in perm[:6]:
        assert naive_mda(f, X, y, 10, 1)[j] == pytest.approx(base[j], abs=1e-15)


def test_more_shuffles_less_variance(strong_xy):
    X, y = strong_xy
    f = fit_forest(X, y, REPORTED_OPTIMUM, seed=0)
    j = feature_index("past_max_v3")
    few = [mda(f, X, y, shuffles=1, seed=s)[j] for s in range(30)]
    many = [mda(f, X, y, shuffles=20, seed=s)[j] for s in range(30)]
    assert np.var(many) < np.var(few)


def test_holdout_mda(strong_xy):
    X, y = strong_xy
    f = fit_forest(X[:230], y[:230], REPORTED_OPTIMUM, seed=0)
    raw = holdout_mda(f, X[230:], y[230:], seed=0)
    assert int(np.argmax(raw)) == feature_index("past_max_v3")
    for j in set(range(27)) - f.used_features():
        assert raw[j] == 0.0
    with pytest.raises(NoOobCoverage):
        holdout_mda(f, X[:0], y[:0])


def test_training_data_not_mutated(strong_xy):
    X, y = strong_xy
    f = fit_forest(X, y, REPORTED_OPTIMUM, seed=0)
    before = X.copy()
    mda(f, X, y)
    assert np.array_equal(X, before)


def test_null_corpus_mda_near_zero():
    X, y = to_matrix(synth_corpus(5, 335, 0.11, {"past_max_v3": 0.0}))
    raw = mda(fit_forest(X, y, REPORTED_OPTIMUM, seed=0), X, y)
    assert np.max(np.abs(raw)) < 0.05
