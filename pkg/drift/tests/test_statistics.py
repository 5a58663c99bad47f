import math
import random

from django.test import SimpleTestCase

from drift.cpc_codes import parse_symbol
from drift.exceptions import InsufficientPoints
from drift.family_builder import QualityFilter
from drift.statistics import (
    ClassReclassPoint, TrendSeries, aggregate_rate, class_size_fits, general_reclassification, loglog_fit,
    office_by_filter, rank_by_group, rank_by_office, share_series, top_turbulent_classes, trend, trend_pair,
)
from drift.tests.helpers import family, families_of


def symbols(*raw):
    return frozenset(parse_symbol(s) for s in raw)


class TrendTests(SimpleTestCase):
    def test_every_year_present(self):
        families = families_of(family(1, year=2001), family(2, year=2001), family(3, year=2003), family(4, year=1999))
        series = trend(families, (2000, 2004), label="green")
        self.assertEqual(series.points, {2000: 0, 2001: 2, 2002: 0, 2003: 1, 2004: 0})
        self.assertEqual(series.total, 3)
        self.assertEqual(list(series.frame().columns), ["year", "count"])

    def test_empty_input(self):
        self.assertEqual(set(trend({}, (1980, 2016)).points.values()), {0})

    def test_share_series_skips_empty_years(self):
        numerator = TrendSeries.from_counts("c", {2001: 1}, (2000, 2002))
        denominator = TrendSeries.from_counts("g", {2001: 4, 2002: 2}, (2000, 2002))
        self.assertEqual(share_series(numerator, denominator), {2001: 0.25, 2002: 0.0})

    def test_trend_pair_with_filter(self):
        old = families_of(family(1, year=2001, offices=("EP",)), family(2, year=2002, green=False))
        new = families_of(family(1, year=2001, offices=("EP",)), family(3, year=2002, offices=("US",)))
        before, after = trend_pair(old, new, (2001, 2002), QualityFilter.EPO)
        self.assertEqual(before.points, {2001: 1, 2002: 0})
        self.assertEqual(after.points, {2001: 1, 2002: 0})


class RankingTests(SimpleTestCase):
    def test_rank_by_group_counts_multi_classified_families_fully(self):
        reclassified = families_of(
            family(1, symbols=symbols("Y02E60/10", "Y02P70/50")),
            family(2, symbols=symbols("Y02E60/16")),
            family(3, symbols=symbols("Y02W30/20")),
        )
        all_green = dict(reclassified)
        all_green.update(families_of(
            family(4, symbols=symbols("Y02E60/10")),
            family(5, symbols=symbols("Y02E60/10")),
            family(6, symbols=symbols("Y02P70/50")),
        ))
        ranking = rank_by_group(reclassified, all_green, top_k=10)
        self.assertEqual([(e.key, e.absolute) for e in ranking.by_absolute],
                         [("Y02E60", 2), ("Y02P70", 1), ("Y02W30", 1)])
        self.assertEqual([e.key for e in ranking.by_share], ["Y02W30", "Y02E60", "Y02P70"])
        self.assertAlmostEqual(ranking.by_absolute[0].share, 0.5)

    def test_rank_by_office_shares_only_for_top_offices(self):
        subset = families_of(
            family(1, offices=("US", "CN")), family(2, offices=("US",)), family(3, offices=("KR",)),
        )
        reference = dict(subset)
        reference.update(families_of(family(4, offices=("US",)), family(5, offices=("CN",)), family(6, offices=("CN",))))
        ranking = rank_by_office(subset, reference, top_k=2)
        self.assertEqual([(e.key, e.absolute) for e in ranking.by_absolute], [("US", 2), ("CN", 1)])
        # KR has share 1.0 but is outside the absolute top 2
        self.assertEqual([e.key for e in ranking.by_share], ["US", "CN"])

    def test_office_by_filter(self):
        families = families_of(
            family(1, year=2012, offices=("EP", "US", "JP"), fwd=2),
            family(2, year=2015, offices=("CN",), fwd=0),
            family(3, year=2005, offices=("US",), fwd=1),
        )
        table = office_by_filter(families, (2010, 2016))
        self.assertEqual(table[QualityFilter.NONE], {"CN": 1, "EP": 1, "JP": 1, "US": 1})
        self.assertEqual(table[QualityFilter.CITED_GT0], {"EP": 1, "JP": 1, "US": 1})
        self.assertEqual(table[QualityFilter.FAMSIZE_GT1], {"EP": 1, "JP": 1, "US": 1})


class GeneralReclassificationTests(SimpleTestCase):
    def setUp(self):
        self.old = families_of(
            family(1, symbols=symbols("H01M10/052")),
            family(2, symbols=symbols("H01M10/052", "B60L53/00")),
            family(3, symbols=symbols("A01B1/02")),
            family(4, year=1970, symbols=symbols("A01B1/02")),
        )
        self.new = families_of(
            family(1, symbols=symbols("H01M10/052", "Y02E60/10")),
            family(2, symbols=symbols("H01M10/052")),
            family(3, symbols=symbols("A01B1/02")),
            family(4, year=1970, symbols=symbols("C07C1/00")),
            family(5, symbols=symbols("H01M4/00")),
        )

    def test_points(self):
        drift = general_reclassification(self.old, self.new, level="class", window=(1980, 2016))
        points = {p.class_code: (p.size_new, p.added, p.removed) for p in drift.points}
        self.assertEqual(points, {"A01": (1, 0, 0), "B60": (0, 0, 1), "H01": (3, 0, 0), "Y02": (1, 1, 0)})
        self.assertAlmostEqual(drift.aggregate_rate, 2 / 5)
        self.assertEqual(drift.aggregation, "pooled")

    def test_subclass_level_and_no_window(self):
        drift = general_reclassification(self.old, self.new, level="subclass", aggregation="mean")
        points = {p.class_code: (p.size_new, p.added, p.removed) for p in drift.points}
        self.assertEqual(points["A01B"], (1, 0, 1))
        self.assertEqual(points["C07C"], (1, 1, 0))

    def test_identical_snapshots_are_quiet(self):
        drift = general_reclassification(self.old, self.old)
        self.assertTrue(all(p.turbulence == 0 for p in drift.points))
        self.assertEqual(drift.aggregate_rate, 0)

    def test_aggregations_differ(self):
        points = [ClassReclassPoint("A01", 100, 10, 0), ClassReclassPoint("B01", 10, 5, 5)]
        self.assertAlmostEqual(aggregate_rate(points, "pooled"), 20 / 110)
        self.assertAlmostEqual(aggregate_rate(points, "mean"), (0.1 + 1.0) / 2)
        self.assertIsNone(aggregate_rate([], "pooled"))

    def test_invalid_level(self):
        with self.assertRaises(ValueError):
            general_reclassification(self.old, self.new, level="group")


class LogLogFitTests(SimpleTestCase):
    def test_exactly_proportional_data_has_unit_slope(self):
        pairs = [(size, size // 10) for size in (1000, 2000, 5000, 10_000, 50_000, 200_000)]
        fit = loglog_fit(pairs, min_size=1000)
        self.assertAlmostEqual(fit.slope, 1.0, delta=1e-6)
        self.assertAlmostEqual(fit.intercept, -1.0, delta=1e-6)
        self.assertAlmostEqual(fit.r_squared, 1.0, delta=1e-9)
        self.assertEqual(fit.n_points, 6)

    def test_noisy_fixture_matches_closed_form(self):
        rng = random.Random(42)
        pairs = []
        for _ in range(50):
            size = rng.randint(1000, 500_000)
            pairs.append((size, max(1, int(size * 0.05 * math.exp(rng.gauss(0, 0.5))))))
        fit = loglog_fit(pairs, min_size=1000)

        xs = [math.log10(s) for s, _ in pairs]
        ys = [math.log10(c) for _, c in pairs]
        mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
        sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        sxx = sum((x - mx) ** 2 for x in xs)
        slope = sxy / sxx
        intercept = my - slope * mx
        ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
        ss_tot = sum((y - my) ** 2 for y in ys)

        self.assertAlmostEqual(fit.slope, slope, delta=1e-9)
        self.assertAlmostEqual(fit.intercept, intercept, delta=1e-9)
        self.assertAlmostEqual(fit.r_squared, 1 - ss_res / ss_tot, delta=1e-9)
        self.assertEqual(fit.as_dict()["n"], 50)

    def test_cutoff_and_zero_counts_are_excluded(self):
        pairs = [(10, 5), (999, 500), (1000, 0), (2000, 20), (4000, 40)]
        fit = loglog_fit(pairs, min_size=1000)
        self.assertEqual(fit.n_points, 2)
        self.assertAlmostEqual(fit.slope, 1.0)

    def test_insufficient_points(self):
        with self.assertRaises(InsufficientPoints):
            loglog_fit([(5000, 10)], min_size=1000)
        with self.assertRaises(InsufficientPoints):
            loglog_fit([(5000, 10), (5000, 20)], min_size=1000)

    def test_class_size_fits_reports_exclusions(self):
        points = [
            ClassReclassPoint("A01", 1000, 10, 0),
            ClassReclassPoint("B01", 10_000, 100, 0),
            ClassReclassPoint("C01", 100_000, 1000, 5),
            ClassReclassPoint("D01", 50, 10, 10),
        ]
        fits, excluded = class_size_fits(points, min_size=1000)
        self.assertAlmostEqual(fits["added"].slope, 1.0)
        self.assertIsNone(fits["removed"])
        self.assertEqual(excluded["added"], {"too_small": 1, "zero_count": 0})
        self.assertEqual(excluded["removed"], {"too_small": 1, "zero_count": 2})


class TurbulenceRankingTests(SimpleTestCase):
    def setUp(self):
        self.points = [
            ClassReclassPoint("A01", 5000, 100, 50),
            ClassReclassPoint("B01", 200, 150, 40),    # tiny but very turbulent
            ClassReclassPoint("C01", 1000, 300, 0),
            ClassReclassPoint("D01", 20_000, 200, 200),
        ]

    def test_absolute(self):
        top = top_turbulent_classes(self.points, top_k=2, mode="absolute", min_size=1000)
        self.assertEqual([p.class_code for p in top], ["D01", "C01"])

    def test_relative_respects_size_cutoff(self):
        top = top_turbulent_classes(self.points, top_k=10, mode="relative", min_size=1000)
        self.assertEqual([p.class_code for p in top], ["C01", "A01", "D01"])
        self.assertNotIn("B01", [p.class_code for p in top])

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            top_turbulent_classes(self.points, mode="median")

    def test_empty_classes_are_ignored_without_a_size_cutoff(self):
        points = self.points + [ClassReclassPoint("H01", 0, 0, 7)]
        top = top_turbulent_classes(points, top_k=10, mode="relative", min_size=0)
        self.assertNotIn("H01", [p.class_code for p in top])
        self.assertEqual([p.class_code for p in top][0], "B01")

    def test_fit_with_zero_cutoff_skips_empty_classes(self):
        points = [
            ClassReclassPoint("A01", 100, 10, 3),
            ClassReclassPoint("B01", 1000, 100, 30),
            ClassReclassPoint("H01", 0, 0, 7),
        ]
        fits, excluded = class_size_fits(points, min_size=0)
        self.assertEqual(fits["removed"].n_points, 2)
        self.assertEqual(excluded["removed"], {"too_small": 1, "zero_count": 0})
