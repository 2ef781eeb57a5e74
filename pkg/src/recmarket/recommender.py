"""Per-recommender model training and slate serving.

Each recommender retrains once per cycle on the profile data visible to it
and serves top-n slates. Serving falls back through three tiers: model
scores for known consumers, click popularity among the recommender's
current subscribers for unknown consumers, and a seeded sample of a shared
global popular list when the recommender has no usable data at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import InteractionLog
from .errors import ConfigError, TrainingError

ALL_GENRES = "All"


@dataclass(frozen=True)
class RecommenderConfig:
    """Identity, specialization, and model hyperparameters for one recommender.

    ``specialization`` is either ``"All"`` or a genre name; a genre-specialized
    recommender serves only items carrying that genre.
    """

    recommender_id: str
    specialization: str = ALL_GENRES
    latent_factors: int = 32
    epochs: int = 10
    regularization: float = 0.1
    confidence_weight: float = 40.0
    popular_list_size: int = 100

    def validate(self) -> None:
        if self.latent_factors < 1:
            raise ConfigError(f"{self.recommender_id}: latent_factors must be >= 1")
        if self.epochs < 1:
            raise ConfigError(f"{self.recommender_id}: epochs must be >= 1")
        if self.regularization < 0:
            raise ConfigError(f"{self.recommender_id}: regularization must be >= 0")
        if self.confidence_weight < 0:
            raise ConfigError(f"{self.recommender_id}: confidence_weight must be >= 0")
        if self.popular_list_size < 1:
            raise ConfigError(f"{self.recommender_id}: popular_list_size must be >= 1")


class Provenance(enum.Enum):
    MODEL = "Model"
    USER_POPULARITY = "UserPopularity"
    GLOBAL_POPULAR_FALLBACK = "GlobalPopularFallback"


@dataclass(frozen=True)
class Slate:
    recommender_id: str
    consumer_id: int
    item_ids: tuple[int, ...]
    provenance: Provenance


@dataclass(frozen=True)
class TrainedModel:
    """Immutable factor matrices keyed by consumer and item id."""

    user_index: dict[int, int]
    item_index: dict[int, int]
    user_factors: np.ndarray
    item_factors: np.ndarray
    trained_at_cycle: int = 0

    @classmethod
    def empty(cls, latent_factors: int, trained_at_cycle: int = 0) -> "TrainedModel":
        z = np.zeros((0, latent_factors))
        return cls({}, {}, z, z, trained_at_cycle)

    def knows_consumer(self, consumer_id: int) -> bool:
        return consumer_id in self.user_index

    def score(self, consumer_id: int, item_ids: Sequence[int]) -> np.ndarray:
        """Dot-product scores; items unseen in training score 0."""
        u = self.user_index.get(consumer_id)
        if u is None:
            return np.zeros(len(item_ids))
        scores = np.zeros(len(item_ids))
        uvec = self.user_factors[u]
        for k, item_id in enumerate(item_ids):
            row = self.item_index.get(item_id)
            if row is not None:
                scores[k] = float(uvec @ self.item_factors[row])
        return scores

    def dump(self, path: str | Path) -> None:
        """Write factor matrices as ``id,f1,...,fd`` rows (debug aid)."""
        lines = ["# user factors"]
        for cid in sorted(self.user_index):
            row = self.user_factors[self.user_index[cid]]
            lines.append(",".join([str(cid)] + [repr(float(v)) for v in row]))
        lines.append("# item factors")
        for iid in sorted(self.item_index):
            row = self.item_factors[self.item_index[iid]]
            lines.append(",".join([str(iid)] + [repr(float(v)) for v in row]))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


TrainingSnapshot = Mapping[int, Sequence[tuple[int, int]]]


def train(
    snapshot: TrainingSnapshot,
    config: RecommenderConfig,
    seed: int,
    trained_at_cycle: int = 0,
) -> TrainedModel:
    """Fit implicit-feedback matrix factorization by alternating least squares.

    Every (consumer, item) pair present in the snapshot is an observation of
    weight 1 with confidence ``1 + confidence_weight``; unobserved pairs have
    zero preference. Iteration order is by sorted ids, so the result is a
    deterministic function of (snapshot contents, seed, config).
    """
    users = sorted(c for c, entries in snapshot.items() if entries)
    item_set: set[int] = set()
    for c in users:
        item_set.update(item for item, _day in snapshot[c])
    items = sorted(item_set)
    if not users or not items:
        return TrainedModel.empty(config.latent_factors, trained_at_cycle)

    user_index = {c: k for k, c in enumerate(users)}
    item_index = {i: k for k, i in enumerate(items)}
    user_items: list[np.ndarray] = []
    for c in users:
        cols = sorted({item_index[item] for item, _day in snapshot[c]})
        user_items.append(np.array(cols, dtype=np.intp))
    item_users: list[list[int]] = [[] for _ in items]
    for u, cols in enumerate(user_items):
        for col in cols:
            item_users[col].append(u)
    item_users_arr = [np.array(rows, dtype=np.intp) for rows in item_users]

    rng = np.random.default_rng(seed)
    d = config.latent_factors
    user_mat = rng.standard_normal((len(users), d)) * 0.01
    item_mat = rng.standard_normal((len(items), d)) * 0.01

    alpha = config.confidence_weight
    reg = config.regularization
    for epoch in range(config.epochs):
        user_mat = _solve_side(user_items, item_mat, alpha, reg)
        item_mat = _solve_side(item_users_arr, user_mat, alpha, reg)
        if not (np.isfinite(user_mat).all() and np.isfinite(item_mat).all()):
            raise TrainingError(
                f"{config.recommender_id}: non-finite factors in epoch {epoch}, "
                f"cycle {trained_at_cycle}"
            )
    return TrainedModel(user_index, item_index, user_mat, item_mat, trained_at_cycle)


def _solve_side(
    observed: Sequence[np.ndarray], other: np.ndarray, alpha: float, reg: float
) -> np.ndarray:
    """One half of an ALS round: ridge solve per row against the fixed side."""
    d = other.shape[1]
    gram = other.T @ other + reg * np.eye(d)
    out = np.zeros((len(observed), d))
    for r, cols in enumerate(observed):
        if cols.size == 0:
            continue
        m = other[cols]
        a = gram + alpha * (m.T @ m)
        b = (1.0 + alpha) * m.sum(axis=0)
        out[r] = np.linalg.solve(a, b)
    return out


def popular_list(source: InteractionLog | TrainingSnapshot, k: int) -> list[int]:
    """Items by descending interaction count, ties by ascending id, cut to k."""
    counts: dict[int, int] = {}
    if isinstance(source, InteractionLog):
        event_items: Iterable[int] = (rec.item_id for rec in source.records)
    else:
        event_items = (item for entries in source.values() for item, _day in entries)
    for item in event_items:
        counts[item] = counts.get(item, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [item for item, _n in ranked[: max(k, 0)]]


@dataclass(frozen=True)
class ServingContext:
    """Fallback inputs assembled by the engine for one recommender.

    ``subscriber_counts`` holds click counts over the visible profiles of the
    consumers currently attached to this recommender; ``global_popular`` is
    the shared popular list computed once from the initial interaction log.
    """

    subscriber_counts: Mapping[int, int] = field(default_factory=dict)
    global_popular: Sequence[int] = ()


def recommend(
    consumer_id: int,
    model: TrainedModel,
    candidates: Sequence[int],
    n: int,
    rng: np.random.Generator,
    context: ServingContext,
    recommender_id: str = "",
) -> Slate:
    """Serve a top-n slate from exactly one provenance tier.

    ``candidates`` must already be filtered by specialization and by the
    consumer's visible profile at this recommender. A short (possibly empty)
    slate is returned when candidates run out; tiers never pad each other.
    """
    rid = recommender_id
    cand = np.asarray(sorted(candidates), dtype=np.int64)
    if cand.size == 0:
        tier = (
            Provenance.MODEL
            if model.knows_consumer(consumer_id)
            else Provenance.GLOBAL_POPULAR_FALLBACK
        )
        return Slate(rid, consumer_id, (), tier)

    if model.knows_consumer(consumer_id):
        scores = model.score(consumer_id, cand)
        order = np.lexsort((cand, -scores))
        picks = cand[order[:n]]
        return Slate(rid, consumer_id, tuple(int(i) for i in picks), Provenance.MODEL)

    counts = np.array([context.subscriber_counts.get(int(i), 0) for i in cand])
    if counts.sum() > 0:
        order = np.lexsort((cand, -counts))
        picks = cand[order[:n]]
        return Slate(rid, consumer_id, tuple(int(i) for i in picks), Provenance.USER_POPULARITY)

    cand_set = set(int(i) for i in cand)
    pool = [int(i) for i in context.global_popular if int(i) in cand_set]
    if len(pool) > n:
        picks = rng.choice(np.array(pool, dtype=np.int64), size=n, replace=False)
        chosen = tuple(int(i) for i in picks)
    else:
        chosen = tuple(pool)
    return Slate(rid, consumer_id, chosen, Provenance.GLOBAL_POPULAR_FALLBACK)
