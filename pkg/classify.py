"""
Classify Module

Degree-class prediction for the MAI-effect experiment:
- Degree-class binning of yearly averages (UK bands, configurable)
- Gaussian Naive Bayes with a variance floor
- Random Forest of gini decision trees, seeded per tree from one integer
- Confusion matrix, CA, macro precision/recall/F1 and one-vs-rest AUC
- Year-2 prediction with and without average MAI as a feature
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from scipy.special import logsumexp
from scipy.stats import rankdata

from observability import get_logger
from refine import student_averages
from transcript_model import MarkClass, MarkPipelineError, RefinedRecord

logger = get_logger("classify")

N_CLASSES = len(MarkClass)
ALL_CLASSES = tuple(MarkClass)

# Previously reported scores on real transcripts; shown next to results, never targets
REFERENCE_CA = {"with_mai": 0.942, "without_mai": 0.874}
REFERENCE_SCORES = {
    "RandomForest": {"auc": 0.827, "ca": 0.942, "f1": 0.194, "precision": 0.273, "recall": 0.15},
    "NaiveBayes": {"auc": 0.876, "ca": 0.924, "f1": 0.330, "precision": 0.281, "recall": 0.40},
}


class ClassifierError(MarkPipelineError):
    """Raised for unusable training data or malformed queries"""

    pass


@dataclass(frozen=True)
class DegreeBoundaries:
    """Lower bounds of each degree class above Fail"""

    pass_from: float = 40.0
    third_from: float = 45.0
    lower_second_from: float = 50.0
    upper_second_from: float = 60.0
    first_from: float = 70.0

    def __post_init__(self):
        bounds = self.ordered()
        if any(b <= a for a, b in zip(bounds, bounds[1:])) or not (
            0.0 < bounds[0] and bounds[-1] <= 100.0
        ):
            raise ClassifierError(f"degree boundaries must increase within (0, 100]: {bounds}")

    def ordered(self) -> Tuple[float, ...]:
        return (
            self.pass_from,
            self.third_from,
            self.lower_second_from,
            self.upper_second_from,
            self.first_from,
        )

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "DegreeBoundaries":
        """
        Load boundaries from YAML

        Keys: pass, third, lower_second, upper_second, first
        """
        keys = {
            "pass": "pass_from",
            "third": "third_from",
            "lower_second": "lower_second_from",
            "upper_second": "upper_second_from",
            "first": "first_from",
        }
        try:
            data = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ClassifierError(f"cannot read degree boundaries from {path}: {e}")
        unknown = set(data) - set(keys)
        if unknown:
            raise ClassifierError(f"unknown boundary keys: {sorted(unknown)}")
        return cls(**{keys[k]: float(v) for k, v in data.items()})


UK_BOUNDARIES = DegreeBoundaries()


def bin_degree_class(
    average_mark: float, boundaries: DegreeBoundaries = UK_BOUNDARIES
) -> MarkClass:
    """
    Degree class of a yearly average

    Default bands: Fail [0,40), Pass [40,45), Third [45,50),
    LowerSecond [50,60), UpperSecond [60,70), First [70,100]

    Raises:
        ClassifierError: Mark outside [0, 100]
    """
    if not 0.0 <= average_mark <= 100.0:
        raise ClassifierError(f"average mark {average_mark} outside [0, 100]")
    band = MarkClass.FAIL
    for mark_class, lower in zip(ALL_CLASSES[1:], boundaries.ordered()):
        if average_mark >= lower:
            band = mark_class
    return band


@dataclass
class LabeledDataset:
    """Feature matrix with one degree-class label per row"""

    features: np.ndarray
    labels: np.ndarray
    feature_names: Tuple[str, ...]

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray([int(label) for label in self.labels], dtype=int)
        self.feature_names = tuple(self.feature_names)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ClassifierError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.features.shape[1] != len(self.feature_names):
            raise ClassifierError(
                f"{self.features.shape[1]} features but {len(self.feature_names)} names"
            )

    @classmethod
    def from_rows(
        cls, rows: Sequence[Tuple[Sequence[float], MarkClass]], feature_names: Sequence[str]
    ) -> "LabeledDataset":
        return cls(
            features=np.array([r[0] for r in rows], dtype=float).reshape(len(rows), len(feature_names)),
            labels=np.array([int(r[1]) for r in rows], dtype=int),
            feature_names=tuple(feature_names),
        )

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def rows(self) -> List[Tuple[np.ndarray, MarkClass]]:
        return [(x, MarkClass(y)) for x, y in zip(self.features, self.labels)]

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(self.features[indices], self.labels[indices], self.feature_names)

    def require_trainable(self):
        if len(np.unique(self.labels)) < 2:
            raise ClassifierError("training data needs at least 2 distinct labels")


class GaussianNaiveBayes:
    """Gaussian Naive Bayes over continuous features"""

    name = "NaiveBayes"

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "GaussianNaiveBayes":
        """
        Per-class feature means and variances plus class priors

        The variance floor 1e-9 * (global variance + 1) is added to every
        class variance.
        """
        self.n_features = features.shape[1]
        self.classes_ = np.unique(labels)
        floor = 1e-9 * (features.var(axis=0) + 1.0)

        self.means_ = np.zeros((len(self.classes_), self.n_features))
        self.vars_ = np.zeros((len(self.classes_), self.n_features))
        self.log_priors_ = np.zeros(len(self.classes_))
        for k, cls in enumerate(self.classes_):
            members = features[labels == cls]
            self.means_[k] = members.mean(axis=0)
            self.vars_[k] = members.var(axis=0) + floor
            self.log_priors_[k] = math.log(members.shape[0] / features.shape[0])
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Probabilities over all degree classes, shape (n, 6)"""
        features = np.atleast_2d(features)
        log_like = -0.5 * (
            np.log(2.0 * np.pi * self.vars_)[None, :, :]
            + (features[:, None, :] - self.means_[None, :, :]) ** 2 / self.vars_[None, :, :]
        ).sum(axis=2)
        joint = log_like + self.log_priors_[None, :]
        posterior = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))

        proba = np.zeros((features.shape[0], N_CLASSES))
        proba[:, self.classes_] = posterior
        return proba


def _gini_children(counts_left: np.ndarray, counts_right: np.ndarray) -> np.ndarray:
    n_left = counts_left.sum(axis=1)
    n_right = counts_right.sum(axis=1)
    gini_left = 1.0 - ((counts_left / n_left[:, None]) ** 2).sum(axis=1)
    gini_right = 1.0 - ((counts_right / n_right[:, None]) ** 2).sum(axis=1)
    return (n_left * gini_left + n_right * gini_right) / (n_left + n_right)


class DecisionTree:
    """
    Gini decision tree over a random feature subset at each split

    Nodes live in parallel arrays; leaves have feature -1.
    """

    def __init__(
        self,
        max_depth: Optional[int] = None,
        min_leaf: int = 1,
        max_features: Optional[int] = None,
    ):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features

    def fit(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        rng: Optional[np.random.Generator] = None,
    ) -> "DecisionTree":
        features = np.atleast_2d(np.asarray(features, dtype=float))
        labels = np.asarray(labels, dtype=int)
        if rng is None:
            rng = np.random.default_rng(0)
        n, d = features.shape
        self.n_features = d
        k = self.max_features or d

        self._feature: List[int] = []
        self._threshold: List[float] = []
        self._left: List[int] = []
        self._right: List[int] = []
        self._value: List[int] = []

        root = self._new_node(labels)
        stack = [(root, np.arange(n), 0)]
        while stack:
            node, idx, depth = stack.pop()
            y = labels[idx]
            if np.all(y == y[0]) or len(idx) < 2 * self.min_leaf:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue

            order = rng.permutation(d)
            split = self._best_split(features[idx], y, order[:k])
            if split is None and k < d:
                split = self._best_split(features[idx], y, order[k:])
            if split is None:
                continue

            feature, threshold = split
            go_left = features[idx, feature] <= threshold
            left_idx, right_idx = idx[go_left], idx[~go_left]
            if left_idx.size == 0 or right_idx.size == 0:
                continue
            left = self._new_node(labels[left_idx])
            right = self._new_node(labels[right_idx])
            self._feature[node] = feature
            self._threshold[node] = threshold
            self._left[node] = left
            self._right[node] = right
            stack.append((right, right_idx, depth + 1))
            stack.append((left, left_idx, depth + 1))

        self._feature_arr = np.array(self._feature)
        self._threshold_arr = np.array(self._threshold)
        self._left_arr = np.array(self._left)
        self._right_arr = np.array(self._right)
        self._value_arr = np.array(self._value)
        return self

    def _new_node(self, labels: np.ndarray) -> int:
        counts = np.bincount(labels, minlength=N_CLASSES)
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        self._value.append(int(np.argmax(counts)))
        return len(self._value) - 1

    def _best_split(
        self, features: np.ndarray, labels: np.ndarray, candidates: np.ndarray
    ) -> Optional[Tuple[int, float]]:
        m = labels.shape[0]
        best_score = math.inf
        best: Optional[Tuple[int, float]] = None
        for feature in candidates:
            order = np.argsort(features[:, feature], kind="mergesort")
            xs = features[order, feature]
            onehot = np.zeros((m, N_CLASSES))
            onehot[np.arange(m), labels[order]] = 1.0
            left = np.cumsum(onehot, axis=0)[:-1]
            right = left[-1] + onehot[-1] - left

            n_left = np.arange(1, m)
            valid = (
                (xs[1:] > xs[:-1])
                & (n_left >= self.min_leaf)
                & (m - n_left >= self.min_leaf)
            )
            if not valid.any():
                continue
            scores = np.where(valid, _gini_children(left, right), math.inf)
            i = int(np.argmin(scores))
            if scores[i] < best_score:
                best_score = scores[i]
                threshold = (xs[i] + xs[i + 1]) / 2.0
                # adjacent floats: the midpoint can round up to the upper value
                if threshold >= xs[i + 1]:
                    threshold = xs[i]
                best = (int(feature), float(threshold))
        return best

    def predict_class(self, features: np.ndarray) -> np.ndarray:
        """Leaf majority class for each row"""
        nodes = np.zeros(features.shape[0], dtype=int)
        rows = np.arange(features.shape[0])
        while True:
            internal = self._feature_arr[nodes] >= 0
            if not internal.any():
                break
            active = nodes[internal]
            go_left = (
                features[rows[internal], self._feature_arr[active]]
                <= self._threshold_arr[active]
            )
            nodes[internal] = np.where(
                go_left, self._left_arr[active], self._right_arr[active]
            )
        return self._value_arr[nodes]


class RandomForest:
    """
    Bagged gini trees with sqrt feature subsetting and majority vote

    Each tree's RNG stream is spawned from the forest seed up front, so the
    fitted forest does not depend on worker scheduling.
    """

    name = "RandomForest"

    def __init__(
        self,
        n_trees: int = 100,
        max_depth: Optional[int] = None,
        min_leaf: int = 1,
        seed: int = 0,
        n_jobs: int = 1,
    ):
        if n_trees < 1:
            raise ClassifierError(f"trees must be >= 1, got {n_trees}")
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, features: np.ndarray, labels: np.ndarray) -> "RandomForest":
        n, d = features.shape
        self.n_features = d
        max_features = max(1, math.ceil(math.sqrt(d)))
        streams = np.random.SeedSequence(self.seed).spawn(self.n_trees)

        def grow(stream: np.random.SeedSequence) -> DecisionTree:
            rng = np.random.default_rng(stream)
            sample = rng.integers(0, n, size=n)
            tree = DecisionTree(self.max_depth, self.min_leaf, max_features)
            return tree.fit(features[sample], labels[sample], rng)

        if self.n_jobs > 1:
            with ThreadPoolExecutor(max_workers=self.n_jobs) as pool:
                self.trees_ = list(pool.map(grow, streams))
        else:
            self.trees_ = [grow(s) for s in streams]
        return self

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Vote share of each degree class, shape (n, 6)"""
        features = np.atleast_2d(features)
        votes = np.zeros((features.shape[0], N_CLASSES))
        rows = np.arange(features.shape[0])
        for tree in self.trees_:
            votes[rows, tree.predict_class(features)] += 1.0
        return votes / self.n_trees


Model = Union[GaussianNaiveBayes, RandomForest]


def train_naive_bayes(data: LabeledDataset) -> GaussianNaiveBayes:
    """
    Fit Gaussian Naive Bayes

    Raises:
        ClassifierError: Fewer than 2 distinct labels
    """
    data.require_trainable()
    return GaussianNaiveBayes().fit(data.features, data.labels)


def train_random_forest(
    data: LabeledDataset,
    trees: int = 100,
    max_depth: Optional[int] = None,
    seed: int = 0,
    min_leaf: int = 1,
    n_jobs: int = 1,
) -> RandomForest:
    """
    Fit a Random Forest, deterministic given the seed

    Raises:
        ClassifierError: Fewer than 2 distinct labels or trees < 1
    """
    data.require_trainable()
    forest = RandomForest(trees, max_depth, min_leaf, seed, n_jobs)
    return forest.fit(data.features, data.labels)


def predict(model: Model, features: Sequence[float]) -> Tuple[MarkClass, np.ndarray]:
    """
    Predict one row

    Returns:
        (argmax class with ties broken by class order, probability vector
        over all six classes)

    Raises:
        ClassifierError: Feature length differs from training
    """
    row = np.asarray(features, dtype=float)
    if row.ndim != 1 or row.shape[0] != model.n_features:
        raise ClassifierError(
            f"expected {model.n_features} features, got {row.shape}"
        )
    proba = model.predict_proba(row[None, :])[0]
    return MarkClass(int(np.argmax(proba))), proba


@dataclass
class Metrics:
    """Confusion matrix (rows actual, columns predicted) and scalar scores"""

    labels: Tuple[MarkClass, ...]
    confusion: np.ndarray
    ca: float
    auc: float
    f1: float
    precision: float
    recall: float
    flags: List[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    def column_percentages(self) -> np.ndarray:
        """Each predicted-class column as percentages of its total"""
        totals = self.confusion.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = 100.0 * self.confusion / totals[None, :]
        return np.where(totals[None, :] > 0, pct, np.nan)

    def as_dict(self) -> Dict[str, float]:
        return {
            "auc": self.auc,
            "ca": self.ca,
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
        }


def _ovr_auc(positive: np.ndarray, scores: np.ndarray) -> float:
    ranks = rankdata(scores)
    n_pos = int(positive.sum())
    n_neg = positive.shape[0] - n_pos
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(
    predictions: Sequence[Tuple[MarkClass, MarkClass, Sequence[float]]],
    labels: Optional[Sequence[MarkClass]] = None,
) -> Metrics:
    """
    Score a list of (actual, predicted, probabilities) triples

    Precision, recall and F1 are macro averages over the label set (by
    default every class seen as actual or predicted); undefined per-class
    terms count as 0 and are flagged. AUC is the macro one-vs-rest ranking
    AUC over classes that have both positive and negative actual cases.

    Probability vectors are indexed by MarkClass value when they have one
    entry per MarkClass, otherwise by position in ``labels`` and must then
    have one entry per label.

    Raises:
        ClassifierError: Empty input or probability vectors of another length
    """
    if not predictions:
        raise ClassifierError("no predictions to evaluate")

    actual = np.array([int(p[0]) for p in predictions])
    predicted = np.array([int(p[1]) for p in predictions])

    if labels is None:
        labels = sorted(set(actual.tolist()) | set(predicted.tolist()))
    label_ids = [int(label) for label in labels]
    position = {label: i for i, label in enumerate(label_ids)}

    lengths = {len(p[2]) for p in predictions}
    if lengths == {N_CLASSES}:
        score_column = {label: label for label in label_ids}
    elif lengths == {len(label_ids)}:
        score_column = position
    else:
        raise ClassifierError(
            f"probability vectors need {N_CLASSES} entries or one per label "
            f"({len(label_ids)}), got lengths {sorted(lengths)}"
        )
    scores = np.array([np.asarray(p[2], dtype=float) for p in predictions])

    confusion = np.zeros((len(label_ids), len(label_ids)), dtype=int)
    for a, p in zip(actual, predicted):
        confusion[position[a], position[p]] += 1

    flags: List[str] = []
    precisions, recalls, f1s = [], [], []
    for i, label in enumerate(label_ids):
        name = MarkClass(label).label
        tp = confusion[i, i]
        predicted_total = confusion[:, i].sum()
        actual_total = confusion[i, :].sum()
        if predicted_total == 0:
            flags.append(f"precision undefined for {name}")
            p = 0.0
        else:
            p = tp / predicted_total
        if actual_total == 0:
            flags.append(f"recall undefined for {name}")
            r = 0.0
        else:
            r = tp / actual_total
        precisions.append(p)
        recalls.append(r)
        f1s.append(2 * p * r / (p + r) if p + r > 0 else 0.0)

    aucs = []
    for label in label_ids:
        positive = actual == label
        if positive.all() or not positive.any():
            continue
        aucs.append(_ovr_auc(positive, scores[:, score_column[label]]))
    if not aucs:
        flags.append("auc undefined: fewer than 2 actual classes")

    return Metrics(
        labels=tuple(MarkClass(label) for label in label_ids),
        confusion=confusion,
        ca=float(np.trace(confusion) / confusion.sum()),
        auc=float(np.mean(aucs)) if aucs else 0.0,
        f1=float(np.mean(f1s)),
        precision=float(np.mean(precisions)),
        recall=float(np.mean(recalls)),
        flags=flags,
    )


def stratified_split(
    labels: np.ndarray, train_fraction: float = 0.7, seed: int = 0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-class shuffled holdout split

    Each class with at least 2 members contributes to both sides; singleton
    classes go to training.

    Returns:
        (train indices, test indices), each sorted
    """
    if not 0.0 < train_fraction < 1.0:
        raise ClassifierError(f"train fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    train, test = [], []
    for label in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == label))
        if members.size == 1:
            train.extend(members)
            continue
        n_train = min(members.size - 1, max(1, int(round(members.size * train_fraction))))
        train.extend(members[:n_train])
        test.extend(members[n_train:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def _holdout_metrics(model: Model, test: LabeledDataset) -> Metrics:
    proba = model.predict_proba(test.features)
    predicted = np.argmax(proba, axis=1)
    triples = [
        (MarkClass(int(a)), MarkClass(int(p)), row)
        for a, p, row in zip(test.labels, predicted, proba)
    ]
    return evaluate(triples)


@dataclass
class ClassifierComparison:
    """Holdout metrics of both classifiers on one split"""

    metrics: Dict[str, Metrics]
    train_size: int
    test_size: int


def compare_classifiers(
    data: LabeledDataset,
    split: float = 0.7,
    seed: int = 0,
    trees: int = 100,
    max_depth: Optional[int] = None,
    n_jobs: int = 1,
) -> ClassifierComparison:
    """Train NB and RF on one stratified split and score both on the holdout"""
    train_idx, test_idx = stratified_split(data.labels, split, seed)
    train, test = data.subset(train_idx), data.subset(test_idx)
    if len(test) == 0:
        raise ClassifierError("holdout set is empty")

    models = [
        train_naive_bayes(train),
        train_random_forest(train, trees=trees, max_depth=max_depth, seed=seed, n_jobs=n_jobs),
    ]
    return ClassifierComparison(
        metrics={m.name: _holdout_metrics(m, test) for m in models},
        train_size=len(train),
        test_size=len(test),
    )


@dataclass(frozen=True)
class StudentCohortRow:
    """One student's yearly averages for the prediction experiment"""

    regno: str
    year1_average: float
    year1_mai: float
    year2_average: float
    both_years_mai: float


def build_cohort(records: List[RefinedRecord]) -> List[StudentCohortRow]:
    """
    Collect students with both year-1 and year-2 records

    Averages use the original module marks. Students whose year-1 records are
    all unrefined (no MAI) are left out.
    """
    by_student: Dict[str, Dict[int, object]] = {}
    for avg in student_averages(records):
        by_student.setdefault(avg.regno, {})[avg.year_of_study] = avg

    cohort = []
    for regno, years in by_student.items():
        first, second = years.get(1), years.get(2)
        if first is None or second is None or first.mean_mai is None:
            continue
        mais = [
            (y.mean_mai, y.module_count) for y in (first, second) if y.mean_mai is not None
        ]
        both = sum(m * c for m, c in mais) / sum(c for _, c in mais)
        cohort.append(
            StudentCohortRow(
                regno=regno,
                year1_average=first.mean_mm,
                year1_mai=first.mean_mai,
                year2_average=second.mean_mm,
                both_years_mai=both,
            )
        )
    return cohort


@dataclass
class MaiEffectReport:
    """Holdout metrics with and without average MAI as a feature"""

    without_mai: Dict[str, Metrics]
    with_mai: Dict[str, Metrics]
    train_size: int
    test_size: int
    mai_scope: str = "year1"
    reference_ca: Dict[str, float] = field(default_factory=lambda: dict(REFERENCE_CA))

    def ca_delta(self, classifier: str) -> float:
        return self.with_mai[classifier].ca - self.without_mai[classifier].ca


def mai_effect_experiment(
    students: List[StudentCohortRow],
    split: float = 0.7,
    seed: int = 0,
    trees: int = 100,
    max_depth: Optional[int] = None,
    boundaries: DegreeBoundaries = UK_BOUNDARIES,
    mai_scope: str = "year1",
    n_jobs: int = 1,
) -> MaiEffectReport:
    """
    Predict the year-2 degree class from the year-1 average, with and without
    the average MAI

    Both feature sets use the same stratified split.

    Args:
        students: Cohort rows
        split: Training fraction
        seed: Seed for the split and the forest
        mai_scope: "year1" (year-1 average MAI) or "both" (both years)

    Raises:
        ClassifierError: Fewer than 2 degree classes after binning
    """
    if mai_scope not in ("year1", "both"):
        raise ClassifierError(f"mai_scope must be 'year1' or 'both', got {mai_scope!r}")
    labels = np.array(
        [int(bin_degree_class(s.year2_average, boundaries)) for s in students], dtype=int
    )
    if len(np.unique(labels)) < 2:
        raise ClassifierError("fewer than 2 degree classes after binning")

    mai_values = [s.year1_mai if mai_scope == "year1" else s.both_years_mai for s in students]
    feature_sets = {
        "without": LabeledDataset(
            np.array([[s.year1_average] for s in students]), labels, ("year1_average",)
        ),
        "with": LabeledDataset(
            np.array([[s.year1_average, m] for s, m in zip(students, mai_values)]),
            labels,
            ("year1_average", "average_mai"),
        ),
    }

    results = {
        key: compare_classifiers(data, split, seed, trees, max_depth, n_jobs)
        for key, data in feature_sets.items()
    }
    report = MaiEffectReport(
        without_mai=results["without"].metrics,
        with_mai=results["with"].metrics,
        train_size=results["with"].train_size,
        test_size=results["with"].test_size,
        mai_scope=mai_scope,
    )
    for name in report.with_mai:
        logger.info(
            "MAI effect",
            classifier=name,
            ca_without=report.without_mai[name].ca,
            ca_with=report.with_mai[name].ca,
            delta=report.ca_delta(name),
        )
    return report
