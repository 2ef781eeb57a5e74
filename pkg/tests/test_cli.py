"""Config parsing, commands, emitted files, exit codes."""

import hashlib
import json

import pytest

from recmarket import cli, dataset
from recmarket.cli import (
    RunManifest,
    cmd_run,
    compare_reports,
    parse_config,
    serialize_config,
)
from recmarket.errors import ConfigError

MINIMAL = """
[scenario]
seed = 5
niche_genre = Horror

[data]
source = synthetic
consumers = 30
items = 60
providers = 5
niche_fraction = 0.1
"""

SMALL_RUN = """
[scenario]
seed = 5
niche_genre = Horror
cycles = 3
days_per_cycle = 2
slate_size = 4
warmup_cycles = 1

[data]
source = synthetic
consumers = 25
items = 60
providers = 5
niche_fraction = 0.12
"""


def write(tmp_path, text, name="config.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParseConfig:
    def test_minimal_config_gets_documented_defaults(self, tmp_path):
        spec = parse_config(write(tmp_path, MINIMAL))
        assert [c.scenario_name for c in spec.scenarios] == [
            "baseline",
            "algorithm_specific",
            "cold_start",
            "user_ownership",
            "universal",
        ]
        cfg = spec.scenarios[-1]
        assert cfg.cycles == 10
        assert cfg.days_per_cycle == 10
        assert cfg.slate_size == 10
        assert cfg.warmup_cycles == 2
        assert cfg.behavior.recency_bias == 2.0
        assert cfg.behavior.satisfaction_threshold == 0.2
        assert cfg.recommenders[0].latent_factors == 32
        assert cfg.recommenders[0].popular_list_size == 100

    def test_unknown_key_is_an_error(self, tmp_path):
        bad = MINIMAL + "\n[scenario]\nmystery = 1\n"
        with pytest.raises(ConfigError, match="mystery"):
            parse_config(write(tmp_path, bad))

    def test_unknown_section_is_an_error(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_config(write(tmp_path, MINIMAL + "\n[extras]\nx = 1\n"))

    def test_missing_seed_named_in_error(self, tmp_path):
        text = "[scenario]\nniche_genre = Horror\n"
        with pytest.raises(ConfigError, match="seed"):
            parse_config(write(tmp_path, text))

    def test_missing_niche_genre_named_in_error(self, tmp_path):
        text = "[scenario]\nseed = 3\n"
        with pytest.raises(ConfigError, match="niche_genre"):
            parse_config(write(tmp_path, text))

    def test_invalid_beta_rejected(self, tmp_path):
        text = MINIMAL + "\n[behavior]\nbeta = -1\n"
        with pytest.raises(ConfigError, match="beta"):
            parse_config(write(tmp_path, text))

    def test_round_trip(self, tmp_path):
        spec = parse_config(write(tmp_path, SMALL_RUN))
        text = serialize_config(spec)
        spec2 = parse_config(write(tmp_path, text, "rt.ini"))
        assert spec2 == spec

    def test_policy_subset(self, tmp_path):
        text = MINIMAL + "\n[scenario]\npolicies = baseline, universal\n"
        spec = parse_config(write(tmp_path, text))
        assert [c.scenario_name for c in spec.scenarios] == ["baseline", "universal"]

    def test_unknown_policy_rejected(self, tmp_path):
        text = MINIMAL + "\n[scenario]\npolicies = baseline, quantum\n"
        with pytest.raises(ConfigError, match="quantum"):
            parse_config(write(tmp_path, text))


class TestCmdRun:
    def run_once(self, tmp_path, out_name, emit=()):
        config = write(tmp_path, SMALL_RUN)
        manifest = RunManifest(
            config_path=config, out_dir=tmp_path / out_name, emit=tuple(emit)
        )
        assert cmd_run(manifest) == 0
        return tmp_path / out_name

    def test_writes_reports_and_summary(self, tmp_path, capsys):
        out = self.run_once(tmp_path, "out")
        names = {p.name for p in out.iterdir()}
        assert {
            "consumer_utility_per_cycle.csv",
            "provider_clicks.csv",
            "switch_events.csv",
            "summary.txt",
        } <= names
        assert {f"report_{s}.json" for s in (
            "baseline",
            "algorithm_specific",
            "cold_start",
            "user_ownership",
            "universal",
        )} <= names
        assert "consumer_type\tscenario" in capsys.readouterr().out

    def test_rerun_is_hash_identical(self, tmp_path):
        out1 = self.run_once(tmp_path, "a")
        out2 = self.run_once(tmp_path, "b")
        for p in sorted(out1.iterdir()):
            h1 = hashlib.sha256(p.read_bytes()).hexdigest()
            h2 = hashlib.sha256((out2 / p.name).read_bytes()).hexdigest()
            assert h1 == h2, p.name

    def test_emit_audit_log(self, tmp_path):
        out = self.run_once(tmp_path, "out", emit=("audit-log",))
        trail = (out / "audit_universal.jsonl").read_text().splitlines()
        events = [json.loads(line) for line in trail]
        assert {"click", "switch"} <= {e["event"] for e in events} or all(
            e["event"] == "click" for e in events
        )

    def test_emit_per_day_and_model_dump(self, tmp_path):
        out = self.run_once(tmp_path, "out", emit=("per-day", "model-dump"))
        assert (out / "consumer_utility_per_day.csv").exists()
        assert (out / "model_baseline_generic.txt").exists()

    def test_seed_override_changes_results(self, tmp_path):
        config = write(tmp_path, SMALL_RUN)
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert cmd_run(RunManifest(config, a)) == 0
        assert cmd_run(RunManifest(config, b, seed_override=99)) == 0
        assert (a / "summary.txt").read_text() != (b / "summary.txt").read_text()


class TestCompare:
    def reference_reports(self):
        # Published reference values for the two-table report shape.
        base = {
            "scenario": "baseline",
            "baseline": True,
            "last_cycle_utility": {"Generic": 0.413, "Niche": 0.246},
            "provider_clicks": {"Generic": 13712, "Niche": 68},
        }
        algo = {
            "scenario": "algorithm_specific",
            "baseline": False,
            "last_cycle_utility": {"Generic": 0.421, "Niche": 0.525},
            "provider_clicks": {"Generic": 12719, "Niche": 286},
        }
        uni = {
            "scenario": "universal",
            "baseline": False,
            "last_cycle_utility": {"Generic": 0.422, "Niche": 0.511},
            "provider_clicks": {"Generic": 14994, "Niche": 660},
        }
        return base, algo, uni

    def test_reference_ratios(self):
        base, algo, uni = self.reference_reports()
        rows = compare_reports([base, algo, uni])
        ratio = {
            (r["scenario"], r["metric"], r["group"]): r["ratio"] for r in rows
        }
        assert ratio[("algorithm_specific", "consumer_utility", "Niche")] == pytest.approx(
            2.13, abs=0.01
        )
        uni_vs_algo = (
            ratio[("universal", "provider_clicks", "Niche")]
            / ratio[("algorithm_specific", "provider_clicks", "Niche")]
        )
        assert uni_vs_algo == pytest.approx(660 / 286, abs=0.01)

    def test_self_comparison_is_zero_delta(self):
        base, _, _ = self.reference_reports()
        other = dict(base, scenario="baseline_copy", baseline=False)
        rows = compare_reports([base, other])
        assert all(r["delta"] == 0 for r in rows)
        assert all(r["ratio"] == 1.0 for r in rows)

    def test_schema_mismatch_rejected(self):
        base, algo, _ = self.reference_reports()
        broken = dict(algo)
        broken["last_cycle_utility"] = {"Generic": 0.4}
        with pytest.raises(ConfigError, match="mismatch"):
            compare_reports([base, broken])

    def test_missing_baseline_rejected(self):
        _, algo, uni = self.reference_reports()
        with pytest.raises(ConfigError, match="baseline"):
            compare_reports([algo, uni])


class TestMainEntry:
    def test_exit_code_validation_error(self, tmp_path):
        bad = write(tmp_path, "[scenario]\nseed = 1\n")  # no niche_genre
        assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1

    def test_exit_code_data_error(self, tmp_path):
        missing = tmp_path / "nope.ini"
        assert cli.main(["run", "--config", str(missing), "--out", str(tmp_path / "o")]) == 2

    def test_synth_then_run_from_files(self, tmp_path, capsys):
        assert (
            cli.main(
                [
                    "synth",
                    "--out",
                    str(tmp_path / "data"),
                    "--seed",
                    "5",
                    "--consumers",
                    "25",
                    "--items",
                    "60",
                    "--providers",
                    "5",
                    "--niche-fraction",
                    "0.12",
                ]
            )
            == 0
        )
        log = dataset.load_ratings(tmp_path / "data" / "ratings.csv", fmt="csv")
        catalog = dataset.load_catalog(
            tmp_path / "data" / "items.csv",
            tmp_path / "data" / "providers.csv",
            genres=dataset.DEFAULT_GENRES,
        )
        direct = dataset.generate_synthetic(
            dataset.SyntheticSpec(
                consumers=25, items=60, providers=5, niche_fraction=0.12, seed=5
            )
        )
        assert (log, catalog) == direct

        file_config = SMALL_RUN.replace(
            "source = synthetic",
            f"source = files\nratings = {tmp_path / 'data' / 'ratings.csv'}\n"
            f"items_file = {tmp_path / 'data' / 'items.csv'}\n"
            f"providers_file = {tmp_path / 'data' / 'providers.csv'}",
        )
        for line in ("consumers = 25", "items = 60", "providers = 5", "niche_fraction = 0.12"):
            file_config = file_config.replace(line, "")
        config = write(tmp_path, file_config, "files.ini")
        assert (
            cli.main(["run", "--config", str(config), "--out", str(tmp_path / "fo")]) == 0
        )
        capsys.readouterr()

    def test_compare_cli(self, tmp_path, capsys):
        base, algo, uni = TestCompare().reference_reports()
        paths = []
        for rep in (base, algo, uni):
            p = tmp_path / f"{rep['scenario']}.json"
            p.write_text(json.dumps(rep))
            paths.append(str(p))
        assert cli.main(["compare", *paths]) == 0
        out = capsys.readouterr().out
        assert "algorithm_specific" in out and "ratio" in out
