from pathlib import Path

from drift.effect_decomposition import read_group_frame
from drift.exceptions import ConfigError
from drift.family_builder import QualityFilter, apply_filter, green_families
from drift.management.commands._base import DriftCommand, add_window_arguments
from drift.statistics import trend
from drift.store_io import STORE_FILENAME
from drift.utils.output import write_csv

FILTER_CHOICES = [f.cli_name for f in QualityFilter]


class Command(DriftCommand):
    help = "Families per earliest-priority year from a store or from one group of an effects run"
    path_options = ("input", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--input", required=True,
                            help="Store directory, or an effects output directory together with --group")
        parser.add_argument("--group", choices=["A", "B", "C", "D"],
                            help="Group of the effects output to count")
        parser.add_argument("--filter", default="none", choices=FILTER_CHOICES)
        parser.add_argument("--scope", default="green", choices=["green", "all"],
                            help="Count green families only (default) or every family of the store")
        parser.add_argument("--out", required=True, help="Output CSV file")
        add_window_arguments(parser)

    def run(self, **options):
        window = self.resolve_window(options)
        quality_filter = QualityFilter.parse(options["filter"])
        out = Path(options["out"])
        out_dir = self.output_dir(out.parent)

        if options["group"]:
            group_csv = Path(options["input"]) / f"group_{options['group']}.csv"
            families = read_group_frame(self.input_path(group_csv))
            label = f"group {options['group']}"
        else:
            source = Path(options["input"])
            if not (source / STORE_FILENAME).exists() and (source / "group_C.csv").exists():
                raise ConfigError("--input is an effects output directory; pass --group")
            needs_citations = quality_filter is QualityFilter.CITED_GT0
            _, families = self.load_families(options["input"], citations=needs_citations)
            if options["scope"] == "green":
                families = green_families(families)
            label = options["scope"]

        series = trend(apply_filter(families, quality_filter), window, label=f"{label}, {quality_filter.label}")
        write_csv(series.frame(), self.output(out))
        self.success(f"{series.total} families over {window[0]}-{window[1]} ({series.label}) written to {out}")
        return out_dir
