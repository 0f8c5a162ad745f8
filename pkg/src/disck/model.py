"""Log-linear relevance model and its L1-regularized trainer.

Training minimizes::

    (1/n) Σ log(1 + exp(-y_i θ·f_i)) + λ ‖θ‖₁,    y_i ∈ {-1, +1}

by batch proximal gradient (ISTA) with backtracking. There is no intercept:
a constant offset shifts every candidate equally and would not survive
projection into a query vector anyway.
"""

from __future__ import annotations

import logging
import math
import random
import re
from collections.abc import Callable, Collection, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from .errors import DataError, FeatureFormatError, SamplingError, TrainingError
from .features import Feature, Join, SparseVector, dot, parse_feature, serialize

log = logging.getLogger(__name__)

DEFAULT_GRID = (0.01, 0.03, 0.1, 0.3, 1.0, 3.0)
MODEL_HEADER = "#disck-model v1"
_HEADER_RE = re.compile(r"#disck-model v1 lambda=(\S+) seed=(-?\d+)\Z")


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 5000
    tolerance: float = 1e-8
    seed: int = 0


@dataclass(frozen=True)
class Model:
    """Trained weight vector θ plus the configuration that produced it."""

    weights: SparseVector
    lam: float = 0.0
    seed: int = 0
    iterations: int | None = field(default=None, compare=False)

    def score(self, f: SparseVector) -> float:
        return dot(self.weights, f)

    def predict_prob(self, f: SparseVector) -> float:
        return sigmoid(self.score(f))

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class TrainingInstance:
    features: SparseVector
    label: bool
    query_id: str = ""
    doc_id: str = ""


def sigmoid(s: float) -> float:
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def score(model: Model, f: SparseVector) -> float:
    return model.score(f)


def predict_prob(model: Model, f: SparseVector) -> float:
    return model.predict_prob(f)


def tfidf_baseline_model() -> Model:
    """The model whose only weight is ``(word~word) = 1``: plain tf-idf retrieval."""
    return Model(SparseVector.unit([Feature(Join("word", "word"), 1)]))


# ---------------------------------------------------------------------------
# trainer
# ---------------------------------------------------------------------------


def design_matrix(instances: Sequence[TrainingInstance]):
    """Return ``(X, y, features)`` with columns ordered by serialized feature."""
    vocab = sorted({f for inst in instances for f in inst.features._w}, key=serialize)
    column = {f: j for j, f in enumerate(vocab)}
    rows, cols, vals = [], [], []
    for i, inst in enumerate(instances):
        for f, w in inst.features.items():
            if not math.isfinite(w):
                raise TrainingError(f"non-finite weight {w} for {serialize(f)} in instance {i}")
            rows.append(i)
            cols.append(column[f])
            vals.append(w)
    X = sparse.csr_matrix(
        (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(len(instances), len(vocab)),
    )
    y = np.array([1.0 if inst.label else -1.0 for inst in instances])
    return X, y, vocab


def logistic_loss(theta: np.ndarray, X, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient (the smooth part)."""
    margins = y * (X @ theta)
    value = float(np.mean(np.logaddexp(0.0, -margins)))
    grad = -(X.T @ (y * expit(-margins))) / X.shape[0]
    return value, grad


def _loss_only(theta, X, y) -> float:
    return float(np.mean(np.logaddexp(0.0, -(y * (X @ theta)))))


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _instance_key(inst: TrainingInstance):
    return (bool(inst.label), [(serialize(f), w) for f, w in inst.features.items()])


def train(
    instances: Sequence[TrainingInstance],
    lam: float,
    config: TrainConfig | None = None,
    *,
    on_iteration: Callable[[int, float], None] | None = None,
) -> Model:
    """Fit θ by ISTA with backtracking.

    ``on_iteration(i, objective)`` is called with the regularized objective
    at the start (i=0) and after every accepted step.
    """
    config = config or TrainConfig()
    if lam < 0 or not math.isfinite(lam):
        raise TrainingError(f"lambda must be finite and >= 0, got {lam}")
    labels = {bool(inst.label) for inst in instances}
    if labels != {True, False}:
        raise TrainingError("training needs at least one relevant and one irrelevant instance")

    # canonical row order makes the floating-point sums, and so the model,
    # independent of the order instances arrive in
    ordered = sorted(instances, key=_instance_key)
    X, y, vocab = design_matrix(ordered)
    theta = np.zeros(X.shape[1])
    loss = _loss_only(theta, X, y)
    objective = loss
    if on_iteration:
        on_iteration(0, objective)

    step = 1.0
    it = 0
    for it in range(1, config.max_iters + 1):
        loss, grad = logistic_loss(theta, X, y)
        while True:
            cand = soft_threshold(theta - step * grad, step * lam)
            diff = cand - theta
            cand_loss = _loss_only(cand, X, y)
            bound = loss + float(grad @ diff) + float(diff @ diff) / (2.0 * step)
            if cand_loss <= bound or step < 1e-12:
                break
            step *= 0.5
        cand_obj = cand_loss + lam * float(np.abs(cand).sum())
        decrease = objective - cand_obj
        if decrease < 0:
            # rounding at the optimum; keep the current iterate
            break
        theta, objective = cand, cand_obj
        if on_iteration:
            on_iteration(it, objective)
        if decrease <= config.tolerance * max(1.0, abs(objective)):
            break
        step *= 2.0

    nz = np.flatnonzero(theta)
    weights = SparseVector._wrap({vocab[j]: float(theta[j]) for j in nz})
    log.debug("trained lambda=%g: %d iterations, %d nonzero weights, objective %.6g",
              lam, it, len(weights), objective)
    return Model(weights, lam=float(lam), seed=config.seed, iterations=it)


def undersample_negatives(
    query_id: str,
    candidate_ids: Sequence[str],
    relevant_ids: Collection[str],
    k: int,
    seed: int,
) -> list[str]:
    """Draw ``k`` distinct non-relevant ids uniformly without replacement.

    The generator is seeded from ``(seed, query_id)`` so each query gets its
    own reproducible sample.
    """
    if k < 0:
        raise SamplingError(f"k must be >= 0, got {k}")
    if len(candidate_ids) < k + len(relevant_ids):
        raise SamplingError(
            f"query {query_id}: corpus of {len(candidate_ids)} cannot supply {k} negatives "
            f"beside {len(relevant_ids)} relevant"
        )
    relevant = set(relevant_ids)
    pool = [c for c in candidate_ids if c not in relevant]
    if len(pool) < k:
        raise SamplingError(f"query {query_id}: only {len(pool)} non-relevant candidates for k={k}")
    rng = random.Random(f"{seed}:{query_id}")
    return rng.sample(pool, k)


def tune_lambda(
    grid: Iterable[float],
    train_set: Sequence[TrainingInstance],
    dev_set,
    evaluator: Callable[[Model, object], float],
    config: TrainConfig | None = None,
) -> tuple[float, Model]:
    """Train one model per λ and keep the one with the best dev score.

    Ties go to the larger λ (the sparser model).
    """
    grid = sorted(set(float(g) for g in grid))
    if not grid:
        raise TrainingError("lambda grid is empty")
    best = None
    for lam in grid:
        model = train(train_set, lam, config)
        value = evaluator(model, dev_set)
        log.info("lambda=%g nonzero=%d dev=%.6f", lam, len(model), value)
        if best is None or value >= best[0]:
            best = (value, lam, model)
    _, lam, model = best
    return lam, model


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------


def save_model(model: Model, path: str | Path) -> None:
    lines = [f"{MODEL_HEADER} lambda={model.lam!r} seed={model.seed}"]
    lines.extend(f"{serialize(f)}\t{w!r}" for f, w in model.weights.items())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> Model:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DataError("empty model file", path=path)
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise DataError(f"bad model header {lines[0]!r}", path=path, line=1)
    lam, seed = float(m.group(1)), int(m.group(2))
    entries = {}
    for n, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        feat_text, sep, weight_text = line.rpartition("\t")
        if not sep:
            raise DataError("expected 'feature<TAB>weight'", path=path, line=n)
        try:
            feat = parse_feature(feat_text)
            weight = float(weight_text)
        except (FeatureFormatError, ValueError) as exc:
            raise DataError(str(exc), path=path, line=n) from exc
        if feat in entries:
            raise DataError(f"duplicate feature {feat_text}", path=path, line=n)
        if weight == 0.0 or not math.isfinite(weight):
            raise DataError(f"invalid weight {weight_text}", path=path, line=n)
        entries[feat] = weight
    return Model(SparseVector(entries), lam=lam, seed=seed)
