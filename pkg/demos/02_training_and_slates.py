"""Train the implicit-feedback factorization and serve slates at every tier.

Shows the collaborative structure the trainer recovers on a tiny co-click
block, then drives the three serving tiers: personalized model scores,
subscriber click popularity, and the seeded global-popularity fallback.
"""

import numpy as np

from recmarket.recommender import (
    RecommenderConfig,
    ServingContext,
    TrainedModel,
    popular_list,
    recommend,
    train,
)

config = RecommenderConfig("demo", latent_factors=8, epochs=10)

# Two co-click communities; user 0 has not clicked item 2 yet.
snapshot = {
    0: [(0, 0), (1, 0)],
    1: [(1, 0), (2, 0)],
    2: [(0, 0), (2, 0)],
    3: [(3, 0), (4, 0)],
    4: [(3, 0)],
}
model = train(snapshot, config, seed=1)
print("scores for user 0 over unclicked items:")
for item, score in zip([2, 3, 4], model.score(0, [2, 3, 4])):
    print(f"  item {item}: {score:+.4f}")
print("-> the unclicked item from user 0's own community wins\n")

rng = np.random.default_rng(0)

slate = recommend(0, model, [2, 3, 4], 2, rng, ServingContext(), "demo")
print(f"known consumer:   {slate.item_ids} via {slate.provenance.value}")

ctx = ServingContext(subscriber_counts={2: 9, 3: 4}, global_popular=[0, 1, 2])
slate = recommend(99, model, [2, 3, 4], 2, rng, ctx, "demo")
print(f"new consumer:     {slate.item_ids} via {slate.provenance.value}")

cold = TrainedModel.empty(8)
ctx = ServingContext(subscriber_counts={}, global_popular=popular_list(snapshot, 100))
slate = recommend(99, cold, [0, 1, 2, 3, 4], 2, rng, ctx, "demo")
print(f"cold recommender: {slate.item_ids} via {slate.provenance.value}")
