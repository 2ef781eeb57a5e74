"""Shared test machinery: a reference ledger for profile-store semantics.

The reference implementation below is deliberately naive: it tracks every
consumer's clicks and applies policy rules with plain dict/list operations,
independently of the production store. Property suites replay random event
sequences through both and compare final states.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from recmarket.portability import (
    AuditTrail,
    PortabilityPolicy,
    ProfileStore,
    on_switch,
    record_click,
    store_state,
)

RECS = ["generic", "niche"]


@dataclass
class ReferenceLedger:
    """Policy semantics re-implemented from scratch as the oracle."""

    policy: PortabilityPolicy
    shared: dict[int, list[tuple[int, int]]] = field(default_factory=dict)
    per_rec: dict[str, dict[int, list[tuple[int, int]]]] = field(
        default_factory=lambda: {r: {} for r in RECS}
    )
    all_clicks: dict[int, list[tuple[int, int]]] = field(default_factory=dict)

    def click(self, consumer: int, rec: str, item: int, day: int) -> None:
        entry = (item, day)
        self.all_clicks.setdefault(consumer, []).append(entry)
        if self.policy is PortabilityPolicy.UNIVERSAL:
            self.shared.setdefault(consumer, []).append(entry)
        else:
            self.per_rec[rec].setdefault(consumer, []).append(entry)

    def switch(self, consumer: int, src: str, dst: str) -> None:
        if self.policy in (
            PortabilityPolicy.ALGORITHM_SPECIFIC,
            PortabilityPolicy.UNIVERSAL,
        ):
            return
        entries = self.per_rec[src].pop(consumer, [])
        if not entries:
            return
        if self.policy is PortabilityPolicy.USER_OWNERSHIP:
            kept = self.per_rec[dst].setdefault(consumer, [])
            seen = set(kept)
            kept.extend(e for e in entries if e not in seen)
            kept.sort(key=lambda e: e[1])

    def state(self) -> dict:
        per_rec = {}
        for r, bucket in sorted(self.per_rec.items()):
            cleaned = {c: list(v) for c, v in sorted(bucket.items()) if v}
            if cleaned:
                per_rec[r] = cleaned
        return {
            "shared": {c: list(v) for c, v in sorted(self.shared.items()) if v},
            "per_recommender": per_rec,
        }


@dataclass
class EventRun:
    policy: PortabilityPolicy
    store: ProfileStore
    reference: ReferenceLedger
    trail: AuditTrail
    events: list[tuple]  # ("click", c, rec, item, day) | ("switch", c, src, dst)


def run_random_events(seed: int, policy: PortabilityPolicy, n_events: int = 60) -> EventRun:
    """Drive store and reference ledger through one random event sequence.

    Clicks respect simulation realism: at most one click per consumer per
    day, recorded at the consumer's currently attached recommender.
    """
    rng = random.Random(seed)
    trail = AuditTrail()
    store = ProfileStore.create(policy, RECS, audit=trail)
    reference = ReferenceLedger(policy)
    attached = {c: RECS[0] for c in range(4)}
    next_day = {c: 0 for c in attached}
    events: list[tuple] = []
    for _ in range(n_events):
        consumer = rng.randrange(4)
        if rng.random() < 0.75:
            rec = attached[consumer]
            item = rng.randrange(12)
            day = next_day[consumer]
            next_day[consumer] += 1
            record_click(store, policy, consumer, rec, item, day)
            reference.click(consumer, rec, item, day)
            events.append(("click", consumer, rec, item, day))
        else:
            src = attached[consumer]
            dst = RECS[1] if src == RECS[0] else RECS[0]
            on_switch(store, policy, consumer, src, dst)
            reference.switch(consumer, src, dst)
            attached[consumer] = dst
            events.append(("switch", consumer, src, dst))
    return EventRun(policy, store, reference, trail, events)


def assert_store_matches_reference(run: EventRun) -> None:
    assert store_state(run.store) == run.reference.state()
