"""Dataset ingestion and stakeholder classification.

Builds the static inputs of a simulation run: the interaction log, the
item catalog with provider affiliations, per-consumer genre preference
vectors, and the Niche/Generic labels for consumers and providers.

All functions here are pure: they never mutate their inputs and are safe
to call concurrently.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

NICHE = "Niche"
GENERIC = "Generic"

DEFAULT_GENRES = (
    "Action",
    "Comedy",
    "Documentary",
    "Drama",
    "Horror",
    "Romance",
    "SciFi",
    "Thriller",
)


class RatingRecord(NamedTuple):
    consumer_id: int
    item_id: int
    rating: float
    timestamp: int


@dataclass(frozen=True)
class InteractionLog:
    """Deduplicated rating events; at most one record per (consumer, item)."""

    records: tuple[RatingRecord, ...]

    def __post_init__(self) -> None:
        if not self.records:
            raise DataError("no interactions")

    def consumers(self) -> list[int]:
        return sorted({r.consumer_id for r in self.records})

    def items(self) -> list[int]:
        return sorted({r.item_id for r in self.records})


@dataclass(frozen=True)
class ItemRecord:
    item_id: int
    genre_vector: tuple[int, ...]
    provider_id: str

    def genre_count(self) -> int:
        return sum(self.genre_vector)


@dataclass(frozen=True)
class ProviderRecord:
    provider_id: str
    item_ids: tuple[int, ...]
    type_label: str | None = None


@dataclass(frozen=True)
class Catalog:
    """Item and provider tables over a fixed, ordered genre taxonomy."""

    items: dict[int, ItemRecord]
    genres: tuple[str, ...]
    providers: dict[str, ProviderRecord]

    def genre_index(self, genre: str) -> int | None:
        try:
            return self.genres.index(genre)
        except ValueError:
            return None

    def items_with_genre(self, genre: str) -> list[int]:
        g = self.genre_index(genre)
        if g is None:
            return []
        return sorted(i for i, rec in self.items.items() if rec.genre_vector[g])


@dataclass(frozen=True)
class ConsumerProfileSeed:
    """Derived consumer profile: taste vector, label, and starting history."""

    consumer_id: int
    preference_vector: tuple[float, ...]
    type_label: str
    initial_history: tuple[int, ...]


# ---------------------------------------------------------------------------
# File loaders
# ---------------------------------------------------------------------------


def load_ratings(path: str | Path, fmt: str = "movielens-dat") -> InteractionLog:
    """Load a ratings file into a deduplicated InteractionLog.

    ``movielens-dat`` rows are ``UserID::MovieID::Rating::Timestamp``;
    ``csv`` expects a ``user,item,rating,timestamp`` header. Duplicate
    (user, item) pairs keep the record with the latest timestamp.
    """
    path = Path(path)
    if fmt == "movielens-dat":
        rows = _parse_dat_rows(path)
    elif fmt == "csv":
        rows = _parse_csv_rows(path)
    else:
        raise DataError(f"unknown ratings format: {fmt!r}")

    latest: dict[tuple[int, int], RatingRecord] = {}
    for rec in rows:
        key = (rec.consumer_id, rec.item_id)
        prior = latest.get(key)
        if prior is None or rec.timestamp >= prior.timestamp:
            latest[key] = rec
    if not latest:
        raise DataError(f"no interactions in {path}")
    records = tuple(latest[k] for k in sorted(latest))
    return InteractionLog(records)


def _parse_dat_rows(path: Path) -> Iterable[RatingRecord]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("::")
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 '::'-delimited fields")
        try:
            rec = RatingRecord(int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if not 1.0 <= rec.rating <= 5.0:
            raise DataError(f"{path}:{lineno}: rating {rec.rating} outside the 1-5 scale")
        yield rec


def _parse_csv_rows(path: Path) -> Iterable[RatingRecord]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None:
        raise DataError(f"no interactions in {path}")
    expected = ["user", "item", "rating", "timestamp"]
    if [h.strip().lower() for h in header] != expected:
        raise DataError(f"{path}:1: header must be {','.join(expected)}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 columns")
        try:
            rec = RatingRecord(int(row[0]), int(row[1]), float(row[2]), int(row[3]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if rec.rating <= 0.0:
            raise DataError(f"{path}:{lineno}: rating must be positive")
        yield rec


def load_catalog(
    items_path: str | Path,
    providers_path: str | Path,
    genres: Sequence[str] | None = None,
) -> Catalog:
    """Load the item table (``item,title,genres``) and provider map (``item,provider``).

    Genres are pipe-delimited within the items file. When ``genres`` is not
    given, the taxonomy is the sorted union of genres seen in the file.
    """
    items_path = Path(items_path)
    providers_path = Path(providers_path)

    raw_items: dict[int, list[str]] = {}
    try:
        text = items_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {items_path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["item", "title", "genres"]:
        raise DataError(f"{items_path}:1: header must be item,title,genres")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataError(f"{items_path}:{lineno}: expected 3 columns")
        try:
            item_id = int(row[0])
        except ValueError as exc:
            raise DataError(f"{items_path}:{lineno}: {exc}") from exc
        item_genres = [g.strip() for g in row[2].split("|") if g.strip()]
        if not item_genres:
            raise DataError(f"{items_path}:{lineno}: item {item_id} has no genres")
        raw_items[item_id] = item_genres

    provider_of: dict[int, str] = {}
    try:
        text = providers_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {providers_path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["item", "provider"]:
        raise DataError(f"{providers_path}:1: header must be item,provider")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise DataError(f"{providers_path}:{lineno}: expected 2 columns")
        try:
            provider_of[int(row[0])] = row[1].strip()
        except ValueError as exc:
            raise DataError(f"{providers_path}:{lineno}: {exc}") from exc

    missing = sorted(set(raw_items) - set(provider_of))
    if missing:
        raise DataError(f"{len(missing)} items missing from provider map, first: {missing[:5]}")

    if genres is None:
        taxonomy = tuple(sorted({g for gs in raw_items.values() for g in gs}))
    else:
        taxonomy = tuple(genres)
        unknown = sorted({g for gs in raw_items.values() for g in gs} - set(taxonomy))
        if unknown:
            raise DataError(f"items use genres outside the taxonomy: {unknown[:5]}")

    return build_catalog(
        [(i, gs, provider_of[i]) for i, gs in sorted(raw_items.items())], taxonomy
    )


def build_catalog(
    item_rows: Iterable[tuple[int, Sequence[str], str]],
    genres: Sequence[str],
) -> Catalog:
    """Assemble a Catalog from (item_id, genre names, provider_id) rows."""
    taxonomy = tuple(genres)
    index = {g: k for k, g in enumerate(taxonomy)}
    items: dict[int, ItemRecord] = {}
    provider_items: dict[str, list[int]] = {}
    for item_id, item_genres, provider_id in item_rows:
        vec = [0] * len(taxonomy)
        for g in item_genres:
            vec[index[g]] = 1
        if not any(vec):
            raise DataError(f"item {item_id} has no genres")
        items[item_id] = ItemRecord(item_id, tuple(vec), provider_id)
        provider_items.setdefault(provider_id, []).append(item_id)
    providers = {
        pid: ProviderRecord(pid, tuple(sorted(ids))) for pid, ids in provider_items.items()
    }
    return Catalog(items=items, genres=taxonomy, providers=providers)


# ---------------------------------------------------------------------------
# Preference vectors and classification
# ---------------------------------------------------------------------------


def build_preferences(
    log: InteractionLog,
    catalog: Catalog,
    niche_genre: str,
    history_threshold: float = 4.0,
) -> list[ConsumerProfileSeed]:
    """Derive per-consumer genre preference vectors and Niche/Generic labels.

    Each rating contributes its value split evenly across the item's genres;
    the per-genre sums are L1-normalized. A consumer is Niche when the unique
    argmax of their vector is the niche genre (a tie at the niche genre
    classifies as Generic). Items rated at or above ``history_threshold``
    form the consumer's initial implicit-feedback history.
    """
    n_genres = len(catalog.genres)
    niche_idx = catalog.genre_index(niche_genre)

    by_consumer: dict[int, list[RatingRecord]] = {}
    for rec in log.records:
        if rec.item_id not in catalog.items:
            raise DataError(f"rated item {rec.item_id} not in catalog")
        by_consumer.setdefault(rec.consumer_id, []).append(rec)

    seeds: list[ConsumerProfileSeed] = []
    skipped = 0
    for consumer_id in sorted(by_consumer):
        recs = by_consumer[consumer_id]
        if not recs:
            skipped += 1
            continue
        mass = np.zeros(n_genres)
        history: list[int] = []
        for rec in recs:
            item = catalog.items[rec.item_id]
            share = rec.rating / item.genre_count()
            for g, bit in enumerate(item.genre_vector):
                if bit:
                    mass[g] += share
            if rec.rating >= history_threshold:
                history.append(rec.item_id)
        total = float(mass.sum())
        if total <= 0.0:
            skipped += 1
            continue
        vector = tuple(float(v) for v in mass / total)
        label = _label_from_vector(vector, niche_idx)
        seeds.append(
            ConsumerProfileSeed(consumer_id, vector, label, tuple(sorted(history)))
        )
    if skipped:
        warnings.warn(f"excluded {skipped} consumers with no usable ratings", stacklevel=2)
    return seeds


def _label_from_vector(vector: Sequence[float], niche_idx: int | None) -> str:
    """Niche requires a strict, unique argmax at the niche genre."""
    if niche_idx is None:
        return GENERIC
    top = max(vector)
    winners = [g for g, v in enumerate(vector) if v == top]
    if winners == [niche_idx]:
        return NICHE
    return GENERIC


def classify_providers(catalog: Catalog, niche_genre: str) -> Catalog:
    """Return a catalog copy whose providers carry Niche/Generic labels.

    A provider is Niche when strictly more than half of its items carry the
    niche genre; providers with no items are labeled Generic with a warning.
    """
    niche_idx = catalog.genre_index(niche_genre)
    labeled: dict[str, ProviderRecord] = {}
    counts = {NICHE: 0, GENERIC: 0}
    empty = 0
    for pid in sorted(catalog.providers):
        rec = catalog.providers[pid]
        if not rec.item_ids:
            empty += 1
            label = GENERIC
        elif niche_idx is None:
            label = GENERIC
        else:
            niche_items = sum(
                1 for i in rec.item_ids if catalog.items[i].genre_vector[niche_idx]
            )
            label = NICHE if 2 * niche_items > len(rec.item_ids) else GENERIC
        counts[label] += 1
        labeled[pid] = replace(rec, type_label=label)
    if empty:
        warnings.warn(f"{empty} providers have no items; labeled Generic", stacklevel=2)
    logger.info("provider labels: %d Niche, %d Generic", counts[NICHE], counts[GENERIC])
    return replace(catalog, providers=labeled)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for a generated desk-scale dataset.

    The taste knobs are calibrated so that niche consumers rate mainstream
    items highly enough to look ordinary to a collaborative model trained on
    clicks, while their rating *concentration* still puts the niche genre at
    the top of the derived preference vector.
    """

    consumers: int
    items: int
    providers: int
    niche_fraction: float
    seed: int = 0
    genres: tuple[str, ...] = DEFAULT_GENRES
    niche_genre: str = "Horror"
    ratings_per_consumer: int = 24
    niche_item_fraction: float = 0.27
    crossover_item_fraction: float = 0.13
    niche_provider_count: int = 3
    canon_size: int = 12

    def validate(self) -> None:
        if self.consumers < 1 or self.items < 1 or self.providers < 1:
            raise DataError("population counts must be positive")
        if not 0.0 < self.niche_fraction < 1.0:
            raise DataError("niche_fraction must lie in (0, 1)")
        if len(self.genres) > 1:
            n_niche = round(self.consumers * self.niche_fraction)
            if not 1 <= n_niche <= self.consumers - 1:
                raise DataError(
                    f"infeasible spec: {self.consumers} consumers cannot realize "
                    f"a niche fraction of {self.niche_fraction}"
                )
        if self.providers > self.items:
            raise DataError("more providers than items")
        if self.ratings_per_consumer < 1:
            raise DataError("ratings_per_consumer must be positive")


def generate_synthetic(spec: SyntheticSpec) -> tuple[InteractionLog, Catalog]:
    """Generate a deterministic (log, catalog) pair matching ``spec``.

    For a fixed seed the output is byte-identical across calls. The realized
    Niche consumer count equals ``round(consumers * niche_fraction)`` except
    in the degenerate single-genre taxonomy, where labels are forced.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    genres = spec.genres
    niche_idx = genres.index(spec.niche_genre) if spec.niche_genre in genres else None

    if niche_idx is None or len(genres) == 1:
        return _generate_degenerate(spec, rng, niche_idx)

    other_idx = [g for g in range(len(genres)) if g != niche_idx]
    # Mildly skewed popularity over the non-niche genres drives both item
    # genre assignment and mainstream tastes; crossover items pair the niche
    # genre with tail genres so they stay unattractive to the mainstream.
    genre_weight = 1.0 / (1.0 + 0.35 * np.arange(len(other_idx)))
    genre_weight /= genre_weight.sum()
    tail_weight = genre_weight[::-1].copy()
    tail_weight /= tail_weight.sum()

    n_pure = max(1, round(spec.items * spec.niche_item_fraction))
    n_cross = round(spec.items * spec.crossover_item_fraction)
    n_pure = min(n_pure, spec.items)
    n_cross = min(n_cross, spec.items - n_pure)

    item_genres: list[list[int]] = []
    for i in range(spec.items):
        if i < n_pure:
            item_genres.append([niche_idx])
        elif i < n_pure + n_cross:
            extra = int(rng.choice(other_idx, p=tail_weight))
            item_genres.append(sorted([niche_idx, extra]))
        else:
            k = min(1 + int(rng.random() < 0.65), len(other_idx))
            picks = rng.choice(other_idx, size=k, replace=False, p=genre_weight)
            item_genres.append(sorted(int(g) for g in picks))

    provider_ids = [f"p{k:03d}" for k in range(spec.providers)]
    n_niche_prov = min(max(1, spec.niche_provider_count), spec.providers - 1, n_pure)
    provider_of: dict[int, str] = {}
    # Niche studios produce all niche-tagged output, crossovers included.
    for i in range(n_pure + n_cross):
        provider_of[i] = provider_ids[i % n_niche_prov]
    rest = list(range(n_pure + n_cross, spec.items))
    generic_providers = provider_ids[n_niche_prov:]
    for k, i in enumerate(rest):
        provider_of[i] = generic_providers[k % len(generic_providers)]

    catalog = build_catalog(
        [(i, [genres[g] for g in item_genres[i]], provider_of[i]) for i in range(spec.items)],
        genres,
    )

    n_niche_consumers = round(spec.consumers * spec.niche_fraction)
    order = rng.permutation(spec.consumers)
    niche_consumers = set(int(c) for c in order[:n_niche_consumers])

    pure_ids = np.arange(n_pure)
    canon = pure_ids[: min(spec.canon_size, n_pure)]
    tagged_ids = np.arange(n_pure + n_cross)
    generic_ids = np.arange(n_pure + n_cross, spec.items)

    # Popularity skew for mainstream items so the global popular list has a
    # realistic long tail.
    if len(generic_ids):
        generic_pop = 1.0 / (1.0 + np.arange(len(generic_ids)) * 0.05)
        generic_pop /= generic_pop.sum()

    records: list[RatingRecord] = []
    ts = 0
    for consumer in range(spec.consumers):
        per = spec.ratings_per_consumer
        rated: dict[int, float] = {}
        if consumer in niche_consumers:
            # Everyone in the niche audience knows the genre canon; those
            # shared ratings are what keeps canon items inside the global
            # popular list that cold recommenders fall back on.
            n_tag = min(max(per // 2, len(canon) + 2), len(tagged_ids))
            picks = list(canon[: min(len(canon), n_tag)])
            pool = np.setdiff1d(tagged_ids, np.array(picks, dtype=int))
            extra = min(n_tag - len(picks), len(pool))
            if extra > 0:
                picks += list(rng.choice(pool, size=extra, replace=False))
            for i in picks:
                # Concentrated but mid-level ratings: only some cross the
                # implicit-history threshold.
                rated[int(i)] = 4.0 if rng.random() < 0.35 else 3.0
            n_gen = per - len(rated)
            if len(generic_ids) and n_gen > 0:
                n_gen = min(n_gen, len(generic_ids))
                for i in rng.choice(generic_ids, size=n_gen, replace=False, p=generic_pop):
                    rated[int(i)] = 5.0 if rng.random() < 0.3 else 4.0
        else:
            # Diffuse mainstream taste: a mild personal boost on one or two
            # genres over a broad popularity-driven diet, so most of the
            # catalog stays moderately attractive even late in a run.
            n_like = min(1 + int(rng.random() < 0.5), len(other_idx))
            liked = {
                int(g)
                for g in rng.choice(other_idx, size=n_like, replace=False, p=genre_weight)
            }
            if len(generic_ids):
                match = np.array(
                    [i for i in generic_ids if liked & set(item_genres[i])], dtype=int
                )
            else:
                match = np.array([], dtype=int)
            n_match = min(len(match), max(1, round(per * 0.25)))
            if n_match > 0:
                for i in rng.choice(match, size=n_match, replace=False):
                    rated[int(i)] = 5.0
            fill_pool = np.setdiff1d(generic_ids, np.array(sorted(rated), dtype=int))
            n_fill = min(per - len(rated), len(fill_pool))
            if n_fill > 0:
                fill_pop = 1.0 / (1.0 + np.arange(len(fill_pool)) * 0.05)
                fill_pop /= fill_pop.sum()
                for i in rng.choice(fill_pool, size=n_fill, replace=False, p=fill_pop):
                    rated[int(i)] = 5.0 if rng.random() < 0.3 else 4.0
            # A niche-curious minority genuinely enjoys the genre canon; the
            # rest occasionally brush against it and bounce off.
            roll = rng.random()
            if roll < 0.15 and len(canon):
                k = min(len(canon), int(rng.integers(3, 6)))
                for i in rng.choice(canon, size=k, replace=False):
                    rated[int(i)] = 4.0
            elif roll < 0.35 and len(canon):
                i = int(rng.choice(canon))
                rated.setdefault(i, 2.0)
        for item_id in sorted(rated):
            records.append(RatingRecord(consumer, item_id, rated[item_id], ts))
            ts += 1

    log = InteractionLog(tuple(records))
    _check_realized_labels(log, catalog, spec, niche_consumers)
    return log, catalog


def _generate_degenerate(
    spec: SyntheticSpec, rng: np.random.Generator, niche_idx: int | None
) -> tuple[InteractionLog, Catalog]:
    # Single-genre taxonomy (or a niche genre outside it): labels are forced,
    # so the realized-fraction guarantee is waived.
    genre_names = [[spec.genres[0]]] if len(spec.genres) == 1 else None
    item_rows = []
    for i in range(spec.items):
        gs = genre_names[0] if genre_names else [spec.genres[int(rng.integers(len(spec.genres)))]]
        item_rows.append((i, gs, f"p{i % spec.providers:03d}"))
    catalog = build_catalog(item_rows, spec.genres)
    records = []
    ts = 0
    for consumer in range(spec.consumers):
        size = min(spec.ratings_per_consumer, spec.items)
        for item_id in sorted(int(i) for i in rng.choice(spec.items, size=size, replace=False)):
            records.append(RatingRecord(consumer, item_id, float(rng.integers(3, 6)), ts))
            ts += 1
    return InteractionLog(tuple(records)), catalog


def _check_realized_labels(
    log: InteractionLog,
    catalog: Catalog,
    spec: SyntheticSpec,
    designated: set[int],
) -> None:
    seeds = build_preferences(log, catalog, spec.niche_genre)
    realized = {s.consumer_id for s in seeds if s.type_label == NICHE}
    if abs(len(realized) - len(designated)) > 1:
        raise DataError(
            f"synthetic generation drifted: designated {len(designated)} niche "
            f"consumers, realized {len(realized)}"
        )
