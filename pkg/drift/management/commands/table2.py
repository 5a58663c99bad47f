from pathlib import Path

import pandas as pd

from drift.effect_decomposition import (
    combination_frame, combination_table, decompose, load_table2_fixture, replay_table2,
)
from drift.management.commands._base import DriftCommand, add_window_arguments
from drift.utils.output import write_csv


class Command(DriftCommand):
    help = "Combination matrix: green families per quality filter with their reclassified and set-expansion parts"
    path_options = ("old", "new", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--old", help="Store directory of the older snapshot")
        parser.add_argument("--new", help="Store directory of the newer snapshot")
        parser.add_argument("--out", required=True, help="Output CSV file")
        parser.add_argument("--replay", action="store_true",
                            help="Write the published counts with every derived share instead")
        add_window_arguments(parser)

    def run(self, **options):
        out = Path(options["out"])
        out_dir = self.output_dir(out.parent)

        if options["replay"]:
            rows = load_table2_fixture()
            frame = combination_frame(rows)
            shares = pd.DataFrame(replay_table2(rows)).drop(columns=["filter"])
            write_csv(pd.concat([frame, shares], axis=1), self.output(out))
            self.success(f"Wrote combination table replay to {out}")
            return out_dir

        window = self.resolve_window(options)
        _, old_families = self.load_families(options["old"])
        _, new_families = self.load_families(options["new"])
        partition = decompose(old_families, new_families, window)
        rows = combination_table(old_families, new_families, partition)
        write_csv(combination_frame(rows), self.output(out))
        self.success(f"Wrote {len(rows)} filter rows to {out}")
        return out_dir
