"""Simulation orchestration: cycles, days, switching, and metrics.

A scenario run is fully deterministic given (config, data): consumers are
processed in ascending id order and every random stream is derived from the
root seed by stable hashing, so results never depend on map iteration order
or scheduling.
"""

from __future__ import annotations

import enum
import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import behavior, portability, recommender
from .behavior import BehaviorParams, ConsumerState
from .dataset import (
    GENERIC,
    NICHE,
    Catalog,
    InteractionLog,
    build_preferences,
    classify_providers,
)
from .errors import ConfigError
from .portability import AuditTrail, PortabilityPolicy, ProfileStore
from .recommender import ALL_GENRES, Provenance, RecommenderConfig, Slate, TrainedModel

GENERIC_RECOMMENDER = "generic"
NICHE_RECOMMENDER = "niche"


class SwitchTiming(enum.Enum):
    END_OF_CYCLE = "end_of_cycle"
    PER_DAY = "per_day"


def default_recommenders(niche_genre: str) -> tuple[RecommenderConfig, RecommenderConfig]:
    return (
        RecommenderConfig(GENERIC_RECOMMENDER, specialization=ALL_GENRES),
        RecommenderConfig(NICHE_RECOMMENDER, specialization=niche_genre),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """All constants of one scenario run.

    ``policy=None`` marks the non-switching baseline with a single
    recommender; any other value enables switching under that portability
    policy.
    """

    seed: int
    niche_genre: str
    policy: PortabilityPolicy | None
    recommenders: tuple[RecommenderConfig, ...]
    cycles: int = 10
    days_per_cycle: int = 10
    slate_size: int = 10
    warmup_cycles: int = 2
    behavior: BehaviorParams = BehaviorParams()
    switch_timing: SwitchTiming = SwitchTiming.END_OF_CYCLE
    history_threshold: float = 4.0
    name: str = ""

    @property
    def is_baseline(self) -> bool:
        return self.policy is None

    @property
    def scenario_name(self) -> str:
        if self.name:
            return self.name
        return "baseline" if self.policy is None else self.policy.value

    def validate(self) -> None:
        if self.cycles < 1 or self.days_per_cycle < 1 or self.slate_size < 1:
            raise ConfigError("cycles, days_per_cycle and slate_size must be >= 1")
        if not 0 <= self.warmup_cycles < self.cycles:
            raise ConfigError("warmup_cycles must satisfy 0 <= warmup < cycles")
        self.behavior.validate()
        if not self.recommenders:
            raise ConfigError("at least one recommender is required")
        ids = [r.recommender_id for r in self.recommenders]
        if len(set(ids)) != len(ids):
            raise ConfigError("recommender ids must be unique")
        for rec in self.recommenders:
            rec.validate()
            if rec.popular_list_size < self.slate_size:
                raise ConfigError(
                    f"{rec.recommender_id}: popular_list_size must be >= slate_size"
                )
        if self.is_baseline and len(self.recommenders) != 1:
            raise ConfigError("baseline scenario must have exactly one recommender")
        if len(self.recommenders) == 2:
            specialized = [r for r in self.recommenders if r.specialization != ALL_GENRES]
            if len(specialized) != 1:
                raise ConfigError(
                    "two-recommender setup requires exactly one genre-specialized recommender"
                )
        if not any(r.specialization == ALL_GENRES for r in self.recommenders):
            raise ConfigError("one recommender must serve all genres (the consumers' home)")

    def shared_key(self) -> tuple:
        """Constants that must agree across a comparison suite."""
        return (
            self.seed,
            self.niche_genre,
            self.cycles,
            self.days_per_cycle,
            self.slate_size,
            self.warmup_cycles,
            self.behavior,
            self.switch_timing,
            self.history_threshold,
        )


def standard_suite(
    seed: int,
    niche_genre: str,
    recommenders: tuple[RecommenderConfig, ...] | None = None,
    **overrides,
) -> list[ScenarioConfig]:
    """Baseline plus the four portability policies with shared constants."""
    recs = recommenders or default_recommenders(niche_genre)
    home = tuple(r for r in recs if r.specialization == ALL_GENRES)
    configs = [
        ScenarioConfig(
            seed=seed, niche_genre=niche_genre, policy=None, recommenders=home, **overrides
        )
    ]
    for policy in PortabilityPolicy:
        configs.append(
            ScenarioConfig(
                seed=seed, niche_genre=niche_genre, policy=policy, recommenders=recs, **overrides
            )
        )
    return configs


def derive_seed(root: int, *parts: object) -> int:
    """Stable 64-bit stream seed from the root seed and a role path."""
    material = ":".join([str(root), *(str(p) for p in parts)])
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(root: int, *parts: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *parts))


class CycleUtilityRow(NamedTuple):
    cycle: int
    consumer_type: str
    mean_utility: float
    n: int


class DayUtilityRow(NamedTuple):
    cycle: int
    day: int
    consumer_type: str
    mean_utility: float
    n: int


class SwitchEvent(NamedTuple):
    cycle: int
    day: int
    consumer_id: int
    consumer_type: str
    from_id: str
    to_id: str


@dataclass(frozen=True)
class MetricsReport:
    """Everything a scenario run reports."""

    scenario: str
    seed: int
    baseline: bool
    cycle_utilities: tuple[CycleUtilityRow, ...]
    last_cycle_utility: dict[str, float]
    provider_clicks: dict[str, int]
    total_clicks: int
    switch_events: tuple[SwitchEvent, ...]
    provenance_counts: dict[str, int]
    day_utilities: tuple[DayUtilityRow, ...] = ()

    def switch_count_rows(self) -> list[tuple[int, str, str, int]]:
        counts = Counter(
            (e.cycle, e.consumer_type, e.to_id) for e in self.switch_events
        )
        return [(c, t, to, n) for (c, t, to), n in sorted(counts.items())]

    def to_json_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "baseline": self.baseline,
            "last_cycle_utility": dict(sorted(self.last_cycle_utility.items())),
            "provider_clicks": dict(sorted(self.provider_clicks.items())),
            "total_clicks": self.total_clicks,
            "switch_totals": {
                f"{ctype}->{to_id}": n
                for (ctype, to_id), n in sorted(
                    Counter((e.consumer_type, e.to_id) for e in self.switch_events).items()
                )
            },
            "provenance_counts": dict(sorted(self.provenance_counts.items())),
            "cycle_utilities": [list(r) for r in self.cycle_utilities],
        }


# ---------------------------------------------------------------------------
# Precomputed lookup structures
# ---------------------------------------------------------------------------


@dataclass
class _SimIndex:
    item_ids: np.ndarray  # sorted catalog item ids
    row_of_item: dict[int, int]
    provider_type_of_item: list[str]
    pools: dict[str, np.ndarray]  # recommender id -> candidate item ids (sorted)
    sims: np.ndarray  # consumer row x item row cosine similarity
    row_of_consumer: dict[int, int]


def _build_index(
    catalog: Catalog,
    consumers: Sequence[ConsumerState],
    recommenders: Sequence[RecommenderConfig],
) -> _SimIndex:
    item_ids = np.array(sorted(catalog.items), dtype=np.int64)
    row_of_item = {int(i): k for k, i in enumerate(item_ids)}
    genre_mat = np.array(
        [catalog.items[int(i)].genre_vector for i in item_ids], dtype=float
    )
    provider_type = [
        catalog.providers[catalog.items[int(i)].provider_id].type_label or GENERIC
        for i in item_ids
    ]

    pools: dict[str, np.ndarray] = {}
    for rec in recommenders:
        if rec.specialization == ALL_GENRES:
            pools[rec.recommender_id] = item_ids.copy()
        else:
            g = catalog.genre_index(rec.specialization)
            if g is None:
                raise ConfigError(
                    f"{rec.recommender_id}: specialization genre "
                    f"{rec.specialization!r} not in catalog taxonomy"
                )
            mask = genre_mat[:, g] > 0
            pools[rec.recommender_id] = item_ids[mask]

    pref = np.array([c.preference_vector for c in consumers], dtype=float)
    pref_norm = np.linalg.norm(pref, axis=1, keepdims=True)
    pref_norm[pref_norm == 0.0] = 1.0
    genre_norm = np.linalg.norm(genre_mat, axis=1, keepdims=True)
    genre_norm[genre_norm == 0.0] = 1.0
    sims = (pref / pref_norm) @ (genre_mat / genre_norm).T
    row_of_consumer = {c.consumer_id: k for k, c in enumerate(consumers)}
    return _SimIndex(item_ids, row_of_item, provider_type, pools, sims, row_of_consumer)


@dataclass
class _ModelView:
    """A trained model aligned to catalog item rows for fast scoring."""

    model: TrainedModel
    item_factors_aligned: np.ndarray  # n_catalog_items x d

    @classmethod
    def build(cls, model: TrainedModel, index: _SimIndex, d: int) -> "_ModelView":
        aligned = np.zeros((len(index.item_ids), d))
        for item_id, row in model.item_index.items():
            cat_row = index.row_of_item.get(item_id)
            if cat_row is not None:
                aligned[cat_row] = model.item_factors[row]
        return cls(model, aligned)


# ---------------------------------------------------------------------------
# Ecosystem state and the simulation loop
# ---------------------------------------------------------------------------


@dataclass
class _MetricsAccumulator:
    n_consumers: int
    cycle_sum: np.ndarray
    rows: list[CycleUtilityRow] = field(default_factory=list)
    day_rows: list[DayUtilityRow] = field(default_factory=list)
    provider_clicks: Counter = field(default_factory=Counter)
    provenance: Counter = field(default_factory=Counter)
    switch_events: list[SwitchEvent] = field(default_factory=list)
    total_clicks: int = 0


@dataclass
class EcosystemState:
    config: ScenarioConfig
    catalog: Catalog
    consumers: list[ConsumerState]  # ascending consumer id
    store: ProfileStore
    store_policy: PortabilityPolicy
    active: list[str]  # sorted recommender ids
    rec_configs: dict[str, RecommenderConfig]
    index: _SimIndex
    global_popular: dict[str, list[int]]
    consumer_rngs: dict[int, np.random.Generator]
    models: dict[str, _ModelView] = field(default_factory=dict)
    cycle: int = 0
    day: int = 0  # global day counter
    metrics: _MetricsAccumulator = None  # type: ignore[assignment]
    collect_day_rows: bool = False
    # per-day cache of subscriber click counts for fallback serving
    _fallback_counts: dict[str, dict[int, int]] = field(default_factory=dict)

    def consumer_types(self) -> list[str]:
        return sorted({c.type_label for c in self.consumers})


def prepare_state(
    config: ScenarioConfig,
    data: tuple[InteractionLog, Catalog],
    audit: AuditTrail | None = None,
    collect_day_rows: bool = False,
) -> EcosystemState:
    """Validate the config, derive consumer profiles, and seed the store."""
    config.validate()
    log, catalog = data
    catalog = classify_providers(catalog, config.niche_genre)
    seeds = build_preferences(
        log, catalog, config.niche_genre, history_threshold=config.history_threshold
    )
    if not seeds:
        raise ConfigError("no usable consumers in the interaction log")

    home = next(
        r.recommender_id for r in config.recommenders if r.specialization == ALL_GENRES
    )
    consumers = [
        ConsumerState(
            consumer_id=s.consumer_id,
            preference_vector=s.preference_vector,
            type_label=s.type_label,
            current_recommender=home,
        )
        for s in sorted(seeds, key=lambda s: s.consumer_id)
    ]

    active = sorted(r.recommender_id for r in config.recommenders)
    rec_configs = {r.recommender_id: r for r in config.recommenders}
    store_policy = config.policy if config.policy is not None else PortabilityPolicy.UNIVERSAL
    store = ProfileStore.create(store_policy, active, audit=audit)
    for s in sorted(seeds, key=lambda s: s.consumer_id):
        portability.seed_history(store, store_policy, s.consumer_id, home, s.initial_history)

    index = _build_index(catalog, consumers, config.recommenders)
    global_popular = {
        rid: recommender.popular_list(log, rec_configs[rid].popular_list_size)
        for rid in active
    }
    consumer_rngs = {
        c.consumer_id: derive_rng(config.seed, "consumer", c.consumer_id) for c in consumers
    }
    metrics = _MetricsAccumulator(len(consumers), np.zeros(len(consumers)))
    return EcosystemState(
        config=config,
        catalog=catalog,
        consumers=consumers,
        store=store,
        store_policy=store_policy,
        active=active,
        rec_configs=rec_configs,
        index=index,
        global_popular=global_popular,
        consumer_rngs=consumer_rngs,
        metrics=metrics,
        collect_day_rows=collect_day_rows,
    )


def train_cycle(state: EcosystemState) -> None:
    """Retrain every active recommender on its current training view."""
    for rid in state.active:
        view = portability.training_view(state.store, state.store_policy, rid)
        cfg = state.rec_configs[rid]
        model = recommender.train(
            view,
            cfg,
            seed=derive_seed(state.config.seed, "train", rid, state.cycle),
            trained_at_cycle=state.cycle,
        )
        state.models[rid] = _ModelView.build(model, state.index, cfg.latent_factors)


def _subscriber_counts(state: EcosystemState, rid: str) -> dict[int, int]:
    """Click counts over current subscribers' visible profiles (lazy per day)."""
    cached = state._fallback_counts.get(rid)
    if cached is not None:
        return cached
    counts: dict[int, int] = {}
    shared = state.store_policy.shared_layout
    bucket = state.store.shared if shared else state.store.per_recommender.get(rid, {})
    for consumer in state.consumers:
        if consumer.current_recommender != rid:
            continue
        for item, _day in bucket.get(consumer.consumer_id, ()):
            counts[item] = counts.get(item, 0) + 1
    state._fallback_counts[rid] = counts
    return counts


def _serve(state: EcosystemState, consumer: ConsumerState) -> tuple[Slate, np.ndarray]:
    """Mirror of recommender.recommend over the precomputed index.

    Returns the slate plus the similarity row entries for its items, in
    slate order.
    """
    rid = consumer.current_recommender
    cid = consumer.consumer_id
    n = state.config.slate_size
    pool = state.index.pools[rid]
    seen = portability.visible_items(state.store, state.store_policy, rid, cid)
    if seen:
        mask = np.fromiter((int(i) not in seen for i in pool), bool, count=len(pool))
        cand = pool[mask]
    else:
        cand = pool
    view = state.models[rid]
    crow = state.index.row_of_consumer[cid]

    if cand.size == 0:
        tier = (
            Provenance.MODEL
            if view.model.knows_consumer(cid)
            else Provenance.GLOBAL_POPULAR_FALLBACK
        )
        return Slate(rid, cid, (), tier), np.zeros(0)

    cand_rows = np.fromiter(
        (state.index.row_of_item[int(i)] for i in cand), np.intp, count=len(cand)
    )
    if view.model.knows_consumer(cid):
        uvec = view.model.user_factors[view.model.user_index[cid]]
        scores = view.item_factors_aligned[cand_rows] @ uvec
        order = np.lexsort((cand, -scores))
        picks = order[:n]
        slate = Slate(rid, cid, tuple(int(i) for i in cand[picks]), Provenance.MODEL)
        return slate, state.index.sims[crow, cand_rows[picks]]

    counts_map = _subscriber_counts(state, rid)
    counts = np.fromiter((counts_map.get(int(i), 0) for i in cand), np.int64, count=len(cand))
    if counts.sum() > 0:
        order = np.lexsort((cand, -counts))
        picks = order[:n]
        slate = Slate(
            rid, cid, tuple(int(i) for i in cand[picks]), Provenance.USER_POPULARITY
        )
        return slate, state.index.sims[crow, cand_rows[picks]]

    cand_set = set(int(i) for i in cand)
    pool_ids = [i for i in state.global_popular[rid] if i in cand_set]
    rng = state.consumer_rngs[cid]
    if len(pool_ids) > n:
        chosen = tuple(
            int(i) for i in rng.choice(np.array(pool_ids, dtype=np.int64), size=n, replace=False)
        )
    else:
        chosen = tuple(pool_ids)
    rows = np.array([state.index.row_of_item[i] for i in chosen], dtype=np.intp)
    slate = Slate(rid, cid, chosen, Provenance.GLOBAL_POPULAR_FALLBACK)
    return slate, state.index.sims[crow, rows]


def _select(
    state: EcosystemState, consumer: ConsumerState, slate: Slate, sims: np.ndarray
) -> int | None:
    """Mirror of behavior.select_item over precomputed similarities."""
    if not slate.item_ids:
        return None
    mask = sims >= state.config.behavior.select_threshold
    if not mask.any():
        return None
    weights = sims[mask]
    total = float(weights.sum())
    if total <= 0.0:
        return None
    ids = np.array(slate.item_ids)[mask]
    return int(state.consumer_rngs[consumer.consumer_id].choice(ids, p=weights / total))


def _apply_switch(state: EcosystemState, consumer: ConsumerState, day_in_cycle: int) -> None:
    from_id = consumer.current_recommender
    decision = behavior.maybe_switch(consumer, state.config.behavior, state.active)
    if not decision.switched:
        return
    if state.store.audit is not None:
        state.store.audit.emit(
            "switch",
            consumer=consumer.consumer_id,
            source=from_id,
            destination=decision.destination,
            cycle=state.cycle,
            day=state.cycle * state.config.days_per_cycle + day_in_cycle,
        )
    portability.on_switch(
        state.store, state.store_policy, consumer.consumer_id, from_id, decision.destination
    )
    state.metrics.switch_events.append(
        SwitchEvent(
            state.cycle,
            day_in_cycle,
            consumer.consumer_id,
            consumer.type_label,
            from_id,
            decision.destination,
        )
    )


def run_day(state: EcosystemState) -> None:
    """Serve one slate per consumer, update estimates, record selections."""
    cfg = state.config
    state._fallback_counts = {}
    day_in_cycle = state.day - state.cycle * cfg.days_per_cycle
    per_day_switching = (
        cfg.switch_timing is SwitchTiming.PER_DAY
        and not cfg.is_baseline
        and state.cycle >= cfg.warmup_cycles
    )
    day_utility = np.zeros(len(state.consumers))
    for k, consumer in enumerate(state.consumers):
        rid = consumer.current_recommender
        slate, sims = _serve(state, consumer)
        state.metrics.provenance[slate.provenance.value] += 1
        mu = float(sims.mean()) if sims.size else 0.0
        prev = consumer.utility_estimates.get(rid)
        consumer.utility_estimates[rid] = (
            mu if prev is None else behavior.update_utility(prev, mu, cfg.behavior.recency_bias)
        )
        day_utility[k] = mu
        picked = _select(state, consumer, slate, sims)
        if picked is not None:
            portability.record_click(
                state.store, state.store_policy, consumer.consumer_id, rid, picked, state.day
            )
            ptype = state.index.provider_type_of_item[state.index.row_of_item[picked]]
            state.metrics.provider_clicks[ptype] += 1
            state.metrics.total_clicks += 1
        if per_day_switching:
            _apply_switch(state, consumer, day_in_cycle)
    state.metrics.cycle_sum += day_utility
    if state.collect_day_rows:
        for ctype in state.consumer_types():
            rows = [k for k, c in enumerate(state.consumers) if c.type_label == ctype]
            state.metrics.day_rows.append(
                DayUtilityRow(
                    state.cycle,
                    day_in_cycle,
                    ctype,
                    float(day_utility[rows].mean()),
                    len(rows),
                )
            )
    state.day += 1


def evaluate_switches(state: EcosystemState) -> list[SwitchEvent]:
    """End-of-cycle switch evaluation over all consumers in id order."""
    if state.cycle < state.config.warmup_cycles:
        raise ConfigError("switch evaluation before the warm-up period has ended")
    before = len(state.metrics.switch_events)
    for consumer in state.consumers:
        _apply_switch(state, consumer, state.config.days_per_cycle - 1)
    return state.metrics.switch_events[before:]


def _finish_cycle(state: EcosystemState) -> None:
    per_consumer = state.metrics.cycle_sum / state.config.days_per_cycle
    for ctype in state.consumer_types():
        rows = [k for k, c in enumerate(state.consumers) if c.type_label == ctype]
        state.metrics.rows.append(
            CycleUtilityRow(state.cycle, ctype, float(per_consumer[rows].mean()), len(rows))
        )
    state.metrics.cycle_sum = np.zeros(len(state.consumers))


def run_scenario(
    config: ScenarioConfig,
    data: tuple[InteractionLog, Catalog],
    audit: AuditTrail | None = None,
    collect_day_rows: bool = False,
) -> MetricsReport:
    """Execute a full scenario and return its metrics."""
    state = prepare_state(config, data, audit=audit, collect_day_rows=collect_day_rows)
    for cycle in range(config.cycles):
        state.cycle = cycle
        train_cycle(state)
        for _day in range(config.days_per_cycle):
            run_day(state)
        if (
            config.switch_timing is SwitchTiming.END_OF_CYCLE
            and not config.is_baseline
            and cycle >= config.warmup_cycles
        ):
            evaluate_switches(state)
        _finish_cycle(state)
    return _build_report(state)


def _build_report(state: EcosystemState) -> MetricsReport:
    cfg = state.config
    last = {
        row.consumer_type: row.mean_utility
        for row in state.metrics.rows
        if row.cycle == cfg.cycles - 1
    }
    provider_clicks = {
        label: int(state.metrics.provider_clicks.get(label, 0)) for label in (GENERIC, NICHE)
    }
    return MetricsReport(
        scenario=cfg.scenario_name,
        seed=cfg.seed,
        baseline=cfg.is_baseline,
        cycle_utilities=tuple(state.metrics.rows),
        last_cycle_utility=last,
        provider_clicks=provider_clicks,
        total_clicks=state.metrics.total_clicks,
        switch_events=tuple(state.metrics.switch_events),
        provenance_counts={k: int(v) for k, v in sorted(state.metrics.provenance.items())},
        day_utilities=tuple(state.metrics.day_rows),
    )


# ---------------------------------------------------------------------------
# Experiment suite and report emission
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentResult:
    reports: tuple[MetricsReport, ...]

    def report(self, scenario: str) -> MetricsReport:
        for r in self.reports:
            if r.scenario == scenario:
                return r
        raise KeyError(scenario)


def run_experiment_suite(
    configs: Sequence[ScenarioConfig],
    data: tuple[InteractionLog, Catalog],
    audits: Mapping[str, AuditTrail] | None = None,
    collect_day_rows: bool = False,
) -> ExperimentResult:
    """Run several scenarios over shared data and constants.

    All configs must agree on everything except the policy (and the
    recommender roster the policy implies).
    """
    if not configs:
        raise ConfigError("no scenarios to run")
    keys = {c.shared_key() for c in configs}
    if len(keys) != 1:
        raise ConfigError("suite scenarios must share all constants except the policy")
    names = [c.scenario_name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError("scenario names must be unique within a suite")
    reports = []
    for config in configs:
        audit = (audits or {}).get(config.scenario_name)
        reports.append(
            run_scenario(config, data, audit=audit, collect_day_rows=collect_day_rows)
        )
    return ExperimentResult(tuple(reports))


def cycle_csv_lines(reports: Iterable[MetricsReport]) -> list[str]:
    lines = ["scenario,cycle,consumer_type,mean_utility,n"]
    for report in reports:
        for row in report.cycle_utilities:
            lines.append(
                f"{report.scenario},{row.cycle},{row.consumer_type},"
                f"{row.mean_utility!r},{row.n}"
            )
    return lines


def provider_csv_lines(reports: Iterable[MetricsReport]) -> list[str]:
    lines = ["scenario,provider_type,cumulative_clicks"]
    for report in reports:
        for ptype, clicks in sorted(report.provider_clicks.items()):
            lines.append(f"{report.scenario},{ptype},{clicks}")
    return lines


def switch_csv_lines(reports: Iterable[MetricsReport]) -> list[str]:
    lines = ["scenario,cycle,consumer_type,to_recommender,count"]
    for report in reports:
        for cycle, ctype, to_id, count in report.switch_count_rows():
            lines.append(f"{report.scenario},{cycle},{ctype},{to_id},{count}")
    return lines


def day_csv_lines(reports: Iterable[MetricsReport]) -> list[str]:
    lines = ["scenario,cycle,day,consumer_type,mean_utility,n"]
    for report in reports:
        for row in report.day_utilities:
            lines.append(
                f"{report.scenario},{row.cycle},{row.day},{row.consumer_type},"
                f"{row.mean_utility!r},{row.n}"
            )
    return lines


def render_summary(reports: Sequence[MetricsReport]) -> str:
    """Delimited summary: last-cycle consumer utility, cumulative provider
    clicks, and total switch counts by destination, one row per
    (group, scenario)."""
    lines = ["consumer_type\tscenario\tlast_cycle_mean_utility"]
    types = sorted({t for r in reports for t in r.last_cycle_utility})
    for ctype in types:
        for report in reports:
            if ctype in report.last_cycle_utility:
                lines.append(
                    f"{ctype}\t{report.scenario}\t{report.last_cycle_utility[ctype]:.3f}"
                )
    lines.append("")
    lines.append("provider_type\tscenario\tcumulative_clicks")
    ptypes = sorted({t for r in reports for t in r.provider_clicks})
    for ptype in ptypes:
        for report in reports:
            lines.append(f"{ptype}\t{report.scenario}\t{report.provider_clicks.get(ptype, 0)}")
    switch_lines = []
    for report in reports:
        totals = Counter((e.consumer_type, e.to_id) for e in report.switch_events)
        for (ctype, to_id), count in sorted(totals.items()):
            switch_lines.append(f"{ctype}\t{report.scenario}\t{to_id}\t{count}")
    if switch_lines:
        lines.append("")
        lines.append("consumer_type\tscenario\tto_recommender\tswitches")
        lines.extend(switch_lines)
    return "\n".join(lines) + "\n"
