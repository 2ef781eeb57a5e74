"""Consumer decision model: slate utility, recency-weighted satisfaction,
item selection, and the threshold rule for switching recommenders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Catalog
from .errors import ConfigError
from .recommender import Slate


@dataclass(frozen=True)
class BehaviorParams:
    """Tunable constants of the decision model.

    ``recency_bias`` weights the running satisfaction estimate toward its
    previous value; ``satisfaction_threshold`` is the estimate level below
    which a consumer considers switching; ``select_threshold`` is the minimum
    similarity an item needs to be clickable.
    """

    recency_bias: float = 2.0
    satisfaction_threshold: float = 0.2
    select_threshold: float = 0.2

    def validate(self) -> None:
        if self.recency_bias < 0:
            raise ConfigError("recency_bias (beta) must be >= 0")
        if not 0.0 <= self.satisfaction_threshold <= 1.0:
            raise ConfigError("satisfaction_threshold (tau) must lie in [0, 1]")
        if not 0.0 <= self.select_threshold <= 1.0:
            raise ConfigError("select_threshold must lie in [0, 1]")


@dataclass
class ConsumerState:
    """Mutable per-consumer simulation state."""

    consumer_id: int
    preference_vector: tuple[float, ...]
    type_label: str
    current_recommender: str
    utility_estimates: dict[str, float] = field(default_factory=dict)
    tried: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.tried.add(self.current_recommender)


def genre_similarity(preference: Sequence[float], genre_vector: Sequence[int]) -> float:
    """Cosine similarity; 0 when either vector is all zeros."""
    p = np.asarray(preference, dtype=float)
    g = np.asarray(genre_vector, dtype=float)
    pn = math.sqrt(float(p @ p))
    gn = math.sqrt(float(g @ g))
    if pn == 0.0 or gn == 0.0:
        return 0.0
    return float(p @ g) / (pn * gn)


def list_utility(consumer: ConsumerState, slate: Slate, catalog: Catalog) -> float:
    """Mean similarity of slate items to the consumer's preferences (0 if empty)."""
    if not slate.item_ids:
        return 0.0
    sims = [
        genre_similarity(consumer.preference_vector, catalog.items[i].genre_vector)
        for i in slate.item_ids
    ]
    return sum(sims) / len(sims)


def update_utility(prev: float, observed: float, recency_bias: float) -> float:
    """Recency-weighted update: (prev * bias + observed) / (1 + bias).

    The exact formula never leaves the closed interval between its two
    inputs, so the float result is clamped to it; that keeps the fixed
    point (prev == observed) exact, and bias == 0 returns ``observed``
    unchanged.
    """
    value = (prev * recency_bias + observed) / (1.0 + recency_bias)
    lo, hi = (prev, observed) if prev <= observed else (observed, prev)
    return min(max(value, lo), hi)


@dataclass(frozen=True)
class SwitchDecision:
    switched: bool
    destination: str | None = None

    @staticmethod
    def stay() -> "SwitchDecision":
        return SwitchDecision(False, None)


def select_item(
    consumer: ConsumerState,
    slate: Slate,
    catalog: Catalog,
    params: BehaviorParams,
    rng: np.random.Generator,
) -> int | None:
    """Pick one slate item with probability proportional to similarity.

    Items below ``select_threshold`` are not candidates; if nothing on the
    slate qualifies (or all qualifying similarities are zero), the consumer
    selects nothing.
    """
    if not slate.item_ids:
        return None
    sims = np.array(
        [
            genre_similarity(consumer.preference_vector, catalog.items[i].genre_vector)
            for i in slate.item_ids
        ]
    )
    mask = sims >= params.select_threshold
    if not mask.any():
        return None
    weights = sims[mask]
    total = float(weights.sum())
    if total <= 0.0:
        return None
    ids = np.array(slate.item_ids)[mask]
    pick = rng.choice(ids, p=weights / total)
    return int(pick)


def maybe_switch(
    consumer: ConsumerState,
    params: BehaviorParams,
    active: Sequence[str],
) -> SwitchDecision:
    """Apply the threshold switching rule; mutates the consumer on a switch.

    A consumer satisfied with the current recommender (estimate at or above
    the threshold) stays. Otherwise it moves to the most promising eligible
    alternative: one it has not tried (ranked above everything), or one whose
    estimate is at least the current one. Ties break by recommender id.
    """
    current = consumer.current_recommender
    current_estimate = consumer.utility_estimates[current]
    if current_estimate >= params.satisfaction_threshold:
        return SwitchDecision.stay()

    best: tuple[float, str] | None = None
    for other in sorted(set(active) - {current}):
        untried = other not in consumer.tried
        estimate = consumer.utility_estimates.get(other, 0.0)
        if not untried and estimate < current_estimate:
            continue
        rank = math.inf if untried else estimate
        if best is None or rank > best[0]:
            best = (rank, other)
    if best is None:
        return SwitchDecision.stay()

    destination = best[1]
    consumer.current_recommender = destination
    consumer.tried.add(destination)
    return SwitchDecision(True, destination)
