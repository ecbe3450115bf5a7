"""Random-search successive halving with stratified k-fold CV scoring.

The resource is the number of training samples: early rounds score many
candidates on small stratified subsamples, later rounds fewer candidates
on more data, and the last round uses all of it.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import stratified_order
from .errors import ScheduleInfeasible, TooFewSamples
from .forest import CRITERIA, Hyperparams, fit_forest

DEFAULT_K = 5
DEFAULT_FACTOR = 3
DEFAULT_CANDIDATES = 27
MIN_RESOURCE_FLOOR = 10


@dataclass(frozen=True)
class SearchSpace:
    """Candidate values per hyperparameter, as ``range`` objects or tuples."""

    criterion: tuple = CRITERIA
    max_leaf_nodes: range = range(2, 51)
    max_features: range = range(1, 28)
    n_trees: range = range(5, 201)
    min_samples_split: range = range(2, 21)

    def contains(self, hp: Hyperparams):
        return (hp.criterion in self.criterion and hp.max_leaf_nodes in self.max_leaf_nodes
                and hp.max_features in self.max_features and hp.n_trees in self.n_trees
                and hp.min_samples_split in self.min_samples_split)

    def capped(self, n_features):
        """Same space with ``max_features`` limited to the available columns."""
        mf = [v for v in self.max_features if v <= n_features]
        return SearchSpace(self.criterion, self.max_leaf_nodes, tuple(mf), self.n_trees,
                           self.min_samples_split)


def sample_candidates(space: SearchSpace, n, seed=0):
    """``n`` independent uniform draws from ``space`` (duplicates allowed)."""
    if n < 2:
        raise ValueError("need at least 2 candidates")
    rng = np.random.default_rng([int(seed), 0xC4])

    def pick(values):
        return values[int(rng.integers(len(values)))]

    return [Hyperparams(str(pick(space.criterion)), int(pick(space.max_leaf_nodes)),
                        int(pick(space.max_features)), int(pick(space.n_trees)),
                        int(pick(space.min_samples_split)))
            for _ in range(n)]


def fold_assignments(y, k, seed=0):
    """Fold id per sample: classes are shuffled and dealt round-robin over the folds."""
    y = np.asarray(y)
    if y.shape[0] < k:
        raise TooFewSamples(f"{y.shape[0]} samples cannot fill {k} folds")
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng([int(seed), 0xF0])
    order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
    folds = np.empty(y.shape[0], dtype=np.intp)
    folds[order] = np.arange(order.size) % k
    return folds


def derived_seed(*keys):
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def kfold_cv_score(candidate: Hyperparams, X, y, k=DEFAULT_K, seed=0):
    """Mean held-out accuracy over ``k`` stratified folds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    folds = fold_assignments(y, k, seed)
    scores = []
    for j in range(k):
        test = folds == j
        forest = fit_forest(X[~test], y[~test], candidate, derived_seed(seed, j))
        scores.append(float(np.mean(forest.predict(X[test]) == y[test])))
    return float(np.mean(scores))


@dataclass(frozen=True)
class HalvingSchedule:
    n_candidates: int = DEFAULT_CANDIDATES
    factor: int = DEFAULT_FACTOR
    min_resource: int = None    # None: the smallest start that ends on max_resource
    max_resource: int = None    # None: every sample

    def __post_init__(self):
        if self.n_candidates < 2:
            raise ValueError("n_candidates must be >= 2")
        if self.factor < 2:
            raise ValueError("factor must be >= 2")

    @property
    def n_rounds(self):
        rounds, reach = 1, self.factor
        while reach < self.n_candidates:
            rounds += 1
            reach *= self.factor
        return rounds

    def survivors(self, r):
        return -(-self.n_candidates // self.factor ** r)

    def resources(self, n_samples, k=DEFAULT_K):
        """Sample count per round; the last round always uses ``max_resource``."""
        max_res = n_samples if self.max_resource is None else self.max_resource
        if max_res > n_samples:
            raise ScheduleInfeasible(f"max_resource {max_res} exceeds the {n_samples} samples")
        rounds = self.n_rounds
        if self.min_resource is None:
            min_res = max(MIN_RESOURCE_FLOOR, max_res // self.factor ** (rounds - 1))
        else:
            min_res = self.min_resource
        if min_res < MIN_RESOURCE_FLOOR:
            raise ScheduleInfeasible(f"min_resource must be >= {MIN_RESOURCE_FLOOR}")
        if min_res > max_res:
            raise ScheduleInfeasible(f"min_resource {min_res} exceeds max_resource {max_res}")
        if min_res < k:
            raise ScheduleInfeasible(f"min_resource {min_res} cannot fill {k} folds")
        res = [min(min_res * self.factor ** r, max_res) for r in range(rounds - 1)]
        return res + [max_res]


@dataclass
class HalvingResult:
    best: Hyperparams
    best_index: int
    rounds: list = field(default_factory=list)
    n_fits: int = 0

    def to_dict(self):
        return {
            "best": self.best.to_dict(),
            "best_index": self.best_index,
            "n_fits": self.n_fits,
            "rounds": self.rounds,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def halving_search(space_or_candidates, schedule: HalvingSchedule, X, y, k=DEFAULT_K, seed=0):
    """Successive halving over a sampled (or given) candidate list.

    Round ``r`` scores its survivors by k-fold CV on a stratified subsample
    of ``resources[r]`` rows and keeps the best ``survivors(r + 1)``, ties
    going to the lower candidate index. The last round runs on the full
    ``max_resource`` rows and its argmax is returned.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(np.int8)
    if isinstance(space_or_candidates, SearchSpace):
        candidates = sample_candidates(space_or_candidates.capped(X.shape[1]), schedule.n_candidates, seed)
    else:
        candidates = list(space_or_candidates)
        if len(candidates) != schedule.n_candidates:
            raise ValueError("candidate list length must match schedule.n_candidates")
    resources = schedule.resources(y.shape[0], k)
    order = stratified_order(y, np.random.default_rng([int(seed), 0x5B]))

    alive = list(range(len(candidates)))
    rounds, n_fits = [], 0
    for r, resource in enumerate(resources):
        rows = np.arange(y.shape[0]) if resource == y.shape[0] else np.sort(order[:resource])
        scores = {i: kfold_cv_score(candidates[i], X[rows], y[rows], k, seed) for i in alive}
        n_fits += len(alive) * k
        rounds.append({
            "round": r,
            "resource": int(resource),
            "candidates": [{"index": i, "hyperparams": candidates[i].to_dict(), "cv_score": scores[i]}
                           for i in alive],
        })
        ranked = sorted(alive, key=lambda i: (-scores[i], i))
        if r == len(resources) - 1:
            alive = ranked[:1]
        else:
            alive = sorted(ranked[:schedule.survivors(r + 1)])
    best = alive[0]
    return HalvingResult(candidates[best], best, rounds, n_fits)


def exhaustive_search(candidates, X, y, k=DEFAULT_K, seed=0):
    """CV score of every candidate on all rows; returns ``(best_index, scores)``."""
    scores = [kfold_cv_score(c, X, y, k, seed) for c in candidates]
    best = min(range(len(scores)), key=lambda i: (-scores[i], i))
    return best, scores

