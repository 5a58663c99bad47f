from drift.conf import setting
from drift.management.commands._base import DriftCommand, add_window_arguments
from drift.statistics import (
    aggregate_rate, class_size_fits, general_reclassification, points_frame, top_turbulent_classes,
    turbulence_frame,
)
from drift.utils.output import write_csv, write_json


class Command(DriftCommand):
    help = "Per-class reclassification between snapshots and its log-log relation to class size"
    path_options = ("old", "new", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--old", required=True, help="Store directory of the older snapshot")
        parser.add_argument("--new", required=True, help="Store directory of the newer snapshot")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--level", default="class", choices=["class", "subclass"])
        parser.add_argument("--min-size", type=int, default=None,
                            help="Smallest class used for fits and relative rankings (default: PATDRIFT_MIN_CLASS_SIZE)")
        parser.add_argument("--aggregation", default=None, choices=["pooled", "mean"],
                            help="Aggregate rate formula (default: PATDRIFT_RECLASS_AGGREGATION)")
        parser.add_argument("--top", type=int, default=10)
        add_window_arguments(parser)

    def run(self, **options):
        window = self.resolve_window(options)
        min_size = setting("MIN_CLASS_SIZE", 1000) if options["min_size"] is None else options["min_size"]
        out_dir = self.output_dir(options["out"])

        _, old_families = self.load_families(options["old"], citations=False)
        _, new_families = self.load_families(options["new"], citations=False)
        drift = general_reclassification(
            old_families, new_families, level=options["level"], window=window, aggregation=options["aggregation"],
        )
        fits, excluded = class_size_fits(drift.points, min_size)

        write_csv(points_frame(drift.points), self.output(out_dir / "class_points.csv"))
        write_json(
            {
                name: (fit.as_dict() if fit else None) for name, fit in fits.items()
            } | {"min_size": min_size, "excluded": excluded},
            self.output(out_dir / "fits.json"),
        )
        for mode in ("absolute", "relative"):
            top = top_turbulent_classes(drift.points, top_k=options["top"], mode=mode, min_size=min_size)
            write_csv(turbulence_frame(top), self.output(out_dir / f"turbulent_{mode}.csv"))
        write_json(
            {
                "level": options["level"],
                "classes": len(drift.points),
                "aggregation": drift.aggregation,
                "aggregate_rate": drift.aggregate_rate,
                "aggregate_rate_pooled": aggregate_rate(drift.points, "pooled"),
                "aggregate_rate_mean": aggregate_rate(drift.points, "mean"),
            },
            self.output(out_dir / "summary.json"),
        )

        slope = fits["added"].slope if fits["added"] else None
        self.success(
            f"{len(drift.points)} {options['level']}es; aggregate rate {drift.aggregate_rate}; "
            f"added-vs-size slope {slope}"
        )
        if not all(fits.values()):
            self.warning("Too few classes above the size cutoff for at least one fit")
        return out_dir
