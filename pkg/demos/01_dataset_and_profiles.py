"""Build a synthetic marketplace dataset and inspect the derived profiles.

Walks the ingestion layer end to end: generate interactions and a catalog,
derive genre preference vectors, and classify consumers and providers into
Niche and Generic groups.
"""

from collections import Counter

from recmarket.dataset import (
    SyntheticSpec,
    build_preferences,
    classify_providers,
    generate_synthetic,
)

spec = SyntheticSpec(consumers=200, items=150, providers=10, niche_fraction=0.1, seed=7)
log, catalog = generate_synthetic(spec)
print(f"interactions: {len(log.records)}")
print(f"items: {len(catalog.items)}  genres: {catalog.genres}")

seeds = build_preferences(log, catalog, "Horror")
labels = Counter(s.type_label for s in seeds)
print(f"consumers: {len(seeds)}  labels: {dict(labels)}")

niche_example = next(s for s in seeds if s.type_label == "Niche")
print("\none niche consumer's preference vector:")
for genre, weight in sorted(
    zip(catalog.genres, niche_example.preference_vector), key=lambda kv: -kv[1]
):
    if weight > 0.005:
        print(f"  {genre:12s} {weight:.3f}")
print(f"  initial history: {len(niche_example.initial_history)} items")

labeled = classify_providers(catalog, "Horror")
provider_labels = Counter(p.type_label for p in labeled.providers.values())
print(f"\nprovider labels: {dict(provider_labels)}")
for pid in sorted(labeled.providers):
    rec = labeled.providers[pid]
    print(f"  {pid}: {len(rec.item_ids):3d} items -> {rec.type_label}")
