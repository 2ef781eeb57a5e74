"""Run the full experiment suite at demo scale and compare the outcomes.

Baseline (single recommender, no switching) plus the four portability
policies over the same synthetic population and seed. Watch the niche
consumers' last-cycle utility and the niche providers' cumulative clicks
relative to the baseline.
"""

from recmarket.dataset import SyntheticSpec, generate_synthetic
from recmarket.engine import render_summary, run_experiment_suite, standard_suite

spec = SyntheticSpec(consumers=150, items=200, providers=12, niche_fraction=0.1, seed=11)
data = generate_synthetic(spec)
configs = standard_suite(seed=11, niche_genre="Horror", cycles=8)
result = run_experiment_suite(configs, data)

print(render_summary(result.reports))

base = result.report("baseline")
print("relative to baseline:")
for report in result.reports:
    if report.baseline:
        continue
    niche_ratio = report.last_cycle_utility["Niche"] / base.last_cycle_utility["Niche"]
    clicks_ratio = report.provider_clicks["Niche"] / max(base.provider_clicks["Niche"], 1)
    switches = len(report.switch_events)
    print(
        f"  {report.scenario:20s} niche-utility x{niche_ratio:4.2f}   "
        f"niche-clicks x{clicks_ratio:4.2f}   switch events {switches}"
    )
