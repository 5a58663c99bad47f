import json
import tempfile
from collections import Counter
from pathlib import Path

import pandas as pd
from django.test import SimpleTestCase

from drift.citation_graph import forward_citations_5y
from drift.effect_decomposition import combination_table, decompose, partition_shares
from drift.exceptions import ConfigError
from drift.family_builder import build_families, green_families, in_window, with_citations
from drift.snapshot_ingest import ingest_snapshot
from drift.statistics import general_reclassification, rank_by_group, rank_by_office, trend
from drift.synth_generator import ASIAN_OFFICES, MANIFEST_COLUMNS, GeneratorConfig, generate, write_pair
from drift.tests.helpers import RawSnapshot

WINDOW = (1980, 2016)


def run_pipeline(pair, directory, threads=1):
    """Write the pair and ingest both sides; side -> (store, families with citations, report)."""
    write_pair(pair, directory)
    out = {}
    for side in ("old", "new"):
        folder = Path(directory) / side
        store, report = ingest_snapshot(
            folder / "applications.tsv", folder / "classifications.tsv", folder / "citations.tsv",
            label=side, threads=threads,
        )
        families = build_families(store, threads=threads)
        out[side] = (store, with_citations(families, forward_citations_5y(store, families)), report)
    return out


class GeneratorConfigTests(SimpleTestCase):
    def test_defaults_are_valid(self):
        config = GeneratorConfig()
        self.assertEqual(config.year_range, (1980, 2016))
        self.assertEqual(GeneratorConfig.from_dict(config.as_dict()), config)

    def test_invalid_values(self):
        for bad in ({"reclass_rate": 1.5}, {"green_share": -0.1}, {"expansion_rate": 1.0},
                    {"office_weights": {"US": 0}}, {"office_weights": {"USA": 1}},
                    {"members_per_family": {"min": 0, "max": 3, "zipf_a": 2}},
                    {"year_range": [2016, 1980]}, {"n_families": -1}, {"colour": "green"}):
            with self.subTest(config=bad), self.assertRaises(ConfigError):
                GeneratorConfig.from_dict(bad)

    def test_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.json"
            path.write_text(json.dumps({"seed": 9, "n_families": 10}), encoding="utf-8")
            config = GeneratorConfig.from_file(path)
            self.assertEqual((config.seed, config.n_families), (9, 10))
            path.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigError):
                GeneratorConfig.from_file(path)

    def test_green_share_too_large_for_rates(self):
        with self.assertRaises(ConfigError):
            generate(GeneratorConfig(n_families=100, green_share=1.0, green_to_nongreen_rate=0.5))


class GenerateTests(SimpleTestCase):
    def test_empty_config(self):
        pair = generate(GeneratorConfig(n_families=0))
        self.assertTrue(all(df.empty for df in pair.old.values()))
        self.assertTrue(all(df.empty for df in pair.new.values()))
        self.assertEqual(pair.truth.labels, {})
        with tempfile.TemporaryDirectory() as tmp:
            write_pair(pair, tmp)
            manifest = pd.read_csv(Path(tmp) / "manifest.csv")
            self.assertEqual(list(manifest.columns), MANIFEST_COLUMNS)
            self.assertEqual(len(manifest), 0)

    def test_same_seed_gives_identical_files(self):
        config = GeneratorConfig(seed=5, n_families=800, churn_rate=0.05, withdrawn_rate=0.02)
        with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
            first = write_pair(generate(config), a)
            second = write_pair(generate(config), b)
            for x, y in zip(first, second):
                self.assertEqual(x.relative_to(a), y.relative_to(b))
                self.assertEqual(x.read_bytes(), y.read_bytes(), x.name)

    def test_different_seeds_differ(self):
        one = generate(GeneratorConfig(seed=1, n_families=200))
        two = generate(GeneratorConfig(seed=2, n_families=200))
        self.assertFalse(one.new["applications"].equals(two.new["applications"]))

    def test_labels_shape_the_files(self):
        pair = generate(GeneratorConfig(seed=3, n_families=1500, asian_expansion_share=1.0))
        truth = pair.truth
        old_families = set(pair.old["applications"]["family_id"])
        new_families = set(pair.new["applications"]["family_id"])
        for fid in truth.families_in("D"):
            self.assertNotIn(fid, old_families)
            self.assertTrue(set(truth.offices[fid]) <= set(ASIAN_OFFICES))
        for fid in truth.families_in("C"):
            self.assertIn(fid, old_families)
            self.assertFalse(truth.is_green_old[fid])
            self.assertTrue(truth.is_green_new[fid])
        self.assertTrue(truth.families_in("W").isdisjoint(new_families))

    def test_planted_counts_follow_rates(self):
        pair = generate(GeneratorConfig(seed=4, n_families=10_000))
        sizes = pair.truth.group_sizes()
        self.assertAlmostEqual(sizes["C"] / (sizes["B"] + sizes["C"]), 0.092, delta=0.005)
        self.assertAlmostEqual(sizes["D"] / (sizes["B"] + sizes["D"]), 0.106, delta=0.005)


class PipelineOracleTests(SimpleTestCase):
    """Pipeline results on generated pairs against the manifest and brute-force recounts."""

    CONFIGS = [
        dict(seed=11, n_families=1000),
        dict(seed=12, n_families=1500, churn_rate=0.05),
        dict(seed=13, n_families=2000, withdrawn_rate=0.03, late_member_rate=0.3),
        dict(seed=14, n_families=1200, class_migration_rate=0.2, citation_intensity=3.0),
        dict(seed=15, n_families=2500, green_share=0.35, old_citation_coverage=0.3),
        dict(seed=16, n_families=1000, members_per_family={"min": 2, "zipf_a": 1.6, "max": 20}),
        dict(seed=17, n_families=3000, reclass_rate=0.2, expansion_rate=0.02),
        dict(seed=18, n_families=4000, reclass_rate=0.01, expansion_rate=0.3),
        dict(seed=19, n_families=5000, asian_expansion_share=1.0, churn_rate=0.02),
        dict(seed=20, n_families=6000, green_to_nongreen_rate=0.05, withdrawn_rate=0.01),
        dict(seed=21, n_families=8000, year_range=[1990, 2016], year_growth=0.0),
        dict(seed=22, n_families=10_000, citation_intensity=0.3, old_citation_coverage=1.0),
        dict(seed=23, n_families=12_000, green_share=0.1, class_migration_rate=0.05),
        dict(seed=24, n_families=15_000, late_member_rate=0.0, office_weights={"US": 1, "EP": 1, "JP": 1}),
        dict(seed=25, n_families=18_000, churn_rate=0.1, withdrawn_rate=0.05),
        dict(seed=26, n_families=20_000, class_size_exponent=0.5),
        dict(seed=27, n_families=25_000, members_per_family={"min": 1, "zipf_a": 3.0, "max": 4}),
        dict(seed=28, n_families=30_000, year_growth=0.15, citation_intensity=2.0),
        dict(seed=29, n_families=40_000, green_share=0.3, late_member_rate=0.2),
        dict(seed=30, n_families=50_000),
    ]

    def test_generated_pairs(self):
        for options in self.CONFIGS:
            with self.subTest(**{k: v for k, v in options.items() if not isinstance(v, dict)}):
                self._check(GeneratorConfig(**options))

    def _check(self, config):
        pair = generate(config)
        truth = pair.truth
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(pair, tmp, threads=2)
        _, new, report_new = result["new"]
        _, old, report_old = result["old"]

        # files are clean and complete
        for report, side in ((report_old, "old"), (report_new, "new")):
            self.assertEqual(report.malformed, 0)
            self.assertEqual(report.dangling, 0)
            for name in ("applications", "classifications", "citations"):
                self.assertEqual(getattr(report, name).rows, truth.emitted_rows[side][name])

        partition = decompose(old, new, WINDOW)
        planted = truth.group_sizes()
        self.assertEqual(partition.sizes(), {g: planted[g] for g in "ABCD"})
        for g in "ABCD":
            self.assertEqual(partition.group(g), truth.families_in(g))
        vanished = {fid for fid in truth.families_in("W") if truth.is_green_old[fid]}
        self.assertEqual(partition.vanished_green, len(vanished))

        # forward citations equal the planted counts and a raw recount
        raw_new, raw_old = RawSnapshot(pair.new), RawSnapshot(pair.old)
        self.assertEqual({fid: f.fwd_cit_5y for fid, f in new.items()},
                         {fid: truth.planted_citations.get(fid, 0) for fid in new})
        self.assertEqual({fid: f.fwd_cit_5y for fid, f in old.items()}, raw_old.fwd)

        # combination table against brute force
        green_old, green_new = raw_old.green_in(WINDOW), raw_new.green_in(WINDOW)
        for row in combination_table(old, new, partition):
            name = row.filter.cli_name
            kept_new = {fid for fid in green_new if raw_new.passes(fid, name)}
            self.assertEqual(row.count_old, sum(1 for fid in green_old if raw_old.passes(fid, name)), name)
            self.assertEqual(row.count_new, len(kept_new), name)
            self.assertEqual(row.count_reclass, len(kept_new & truth.families_in("C")), name)
            self.assertEqual(row.count_expansion, len(kept_new & truth.families_in("D")), name)

        # trend of new green families
        self.assertEqual(trend(green_families(new), WINDOW).points, raw_new.trend(green_new, WINDOW))

        # rankings of the reclassified set
        reclassified = {fid: new[fid] for fid in partition.group_c}
        reference = in_window(green_families(new), WINDOW)
        groups = rank_by_group(reclassified, reference, top_k=1000)
        expected_groups = Counter(g for fid in partition.group_c for g in raw_new.green_groups(fid))
        self.assertEqual({e.key: e.absolute for e in groups.by_absolute}, dict(expected_groups))
        offices = rank_by_office(reclassified, reference, top_k=1000)
        expected_offices = Counter(o for fid in partition.group_c for o in raw_new.offices[fid])
        self.assertEqual({e.key: e.absolute for e in offices.by_absolute}, dict(expected_offices))

        # class-level reclassification
        drift = general_reclassification(old, new, level="class", window=WINDOW)
        added, removed, size = Counter(), Counter(), Counter()
        for fid in raw_new.earliest:
            if not WINDOW[0] <= raw_new.earliest[fid] <= WINDOW[1]:
                continue
            size.update(raw_new.classes(fid))
            if fid in raw_old.earliest:
                added.update(raw_new.classes(fid) - raw_old.classes(fid))
                removed.update(raw_old.classes(fid) - raw_new.classes(fid))
        for point in drift.points:
            self.assertEqual(
                (point.size_new, point.added, point.removed),
                (size[point.class_code], added[point.class_code], removed[point.class_code]),
                point.class_code,
            )
        self.assertEqual({p.class_code for p in drift.points}, set(size) | set(added) | set(removed))
        # every migrated family leaves exactly one technology class
        self.assertEqual(sum(p.removed for p in drift.points if p.class_code != "Y02"), len(truth.migrated))

    def test_manifest_file_matches_truth(self):
        pair = generate(GeneratorConfig(seed=21, n_families=600, churn_rate=0.1))
        with tempfile.TemporaryDirectory() as tmp:
            write_pair(pair, tmp)
            manifest = pd.read_csv(Path(tmp) / "manifest.csv", dtype={"offices": str}, keep_default_na=False)
            summary = json.loads((Path(tmp) / "ground_truth.json").read_text(encoding="utf-8"))
        self.assertEqual(Counter(manifest["group"]), Counter(pair.truth.labels.values()))
        self.assertEqual(summary["group_sizes"], pair.truth.group_sizes())
        churned = {fid for fid in pair.truth.families_in("D") if fid > 600}
        self.assertEqual(len(churned), round(0.1 * (len(pair.truth.families_in("B")) + len(churned))))
        self.assertTrue(churned.isdisjoint(set(pair.old["applications"]["family_id"])))


class RateRecoveryTests(SimpleTestCase):
    def test_measured_shares_match_planted_rates(self):
        config = GeneratorConfig(seed=2023, n_families=50_000, reclass_rate=0.092, expansion_rate=0.106)
        pair = generate(config)
        with tempfile.TemporaryDirectory() as tmp:
            result = run_pipeline(pair, tmp, threads=4)
        _, old, _ = result["old"]
        _, new, _ = result["new"]
        shares = partition_shares(decompose(old, new, WINDOW), new)
        self.assertAlmostEqual(shares["reclassification_share"], 0.092, delta=0.005)
        self.assertAlmostEqual(shares["set_expansion_share"], 0.106, delta=0.005)
