from pathlib import Path

import pandas as pd

from drift.effect_decomposition import decompose
from drift.exceptions import ConfigError
from drift.family_builder import QualityFilter, apply_filter, green_families, in_window
from drift.management.commands._base import DriftCommand, add_window_arguments
from drift.statistics import Ranking, office_by_filter, office_filter_frame, rank_by_group, rank_by_office
from drift.utils.output import write_csv

FILTER_CHOICES = [f.cli_name for f in QualityFilter] + ["all"]


class Command(DriftCommand):
    help = "Rank Y02 groups or filing offices by reclassified, set-expansion or filtered families"
    path_options = ("old", "new", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--by", required=True, choices=["group", "office"])
        parser.add_argument("--set", dest="family_set", required=True, choices=["reclass", "expansion", "filtered"])
        parser.add_argument("--old", help="Store directory of the older snapshot")
        parser.add_argument("--new", help="Store directory of the newer snapshot")
        parser.add_argument("--filter", default="none", choices=FILTER_CHOICES,
                            help="Quality filter for --set filtered; 'all' writes the office-by-filter table")
        parser.add_argument("--snapshot", default="new", choices=["old", "new"],
                            help="Snapshot whose families --set filtered ranks")
        parser.add_argument("--reference", default="new", choices=["old", "new"],
                            help="Snapshot whose green families in the window are the share denominator")
        parser.add_argument("--top", type=int, default=10)
        parser.add_argument("--out", required=True, help="Output CSV file")
        add_window_arguments(parser)

    def run(self, **options):
        window = self.resolve_window(options)
        if options["top"] < 1:
            raise ConfigError("--top must be at least 1")
        out = Path(options["out"])
        out_dir = self.output_dir(out.parent)

        if options["family_set"] == "filtered":
            store_dir = options[options["snapshot"]]
            needs_citations = options["filter"] in ("cited", "all")
            _, families = self.load_families(store_dir, citations=needs_citations)
            reference = in_window(green_families(families), window)
            if options["filter"] == "all":
                if options["by"] != "office":
                    raise ConfigError("--filter all is only available with --by office")
                write_csv(office_filter_frame(office_by_filter(families, window)), self.output(out))
                self.success(f"Wrote office-by-filter table for {window[0]}-{window[1]} to {out}")
                return out_dir
            selected = apply_filter(reference, QualityFilter.parse(options["filter"]))
        else:
            _, old_families = self.load_families(options["old"], citations=False)
            _, new_families = self.load_families(options["new"], citations=False)
            partition = decompose(old_families, new_families, window)
            members = partition.group_c if options["family_set"] == "reclass" else partition.group_d
            selected = {fid: new_families[fid] for fid in sorted(members)}
            source = new_families if options["reference"] == "new" else old_families
            reference = in_window(green_families(source), window)

        if options["by"] == "group":
            ranking = rank_by_group(selected, reference, top_k=options["top"])
        else:
            ranking = rank_by_office(selected, reference, top_k=options["top"])

        write_csv(_ranking_frame(ranking), self.output(out))
        self.success(f"Ranked {len(ranking.by_absolute)} {options['by']}s of {len(selected)} families into {out}")
        return out_dir


def _ranking_frame(ranking):
    frames = []
    for ordering, entries in (("absolute", ranking.by_absolute), ("share", ranking.by_share)):
        frame = Ranking.frame(entries)
        frame.insert(0, "rank", range(1, len(frame) + 1))
        frame.insert(0, "ordering", ordering)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)
