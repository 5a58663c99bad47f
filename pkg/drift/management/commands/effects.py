import pandas as pd

from drift.effect_decomposition import (
    GROUPS, combination_frame, decompose, group_frame, load_table2_fixture, partition_shares,
    replay_table2, reverse_sizes,
)
from drift.family_builder import green_families, in_window
from drift.management.commands._base import DriftCommand, add_window_arguments
from drift.statistics import pair_frame, share_series, trend, trend_pair
from drift.utils.output import write_csv, write_json


class Command(DriftCommand):
    help = "Decompose green families of two snapshots into groups A-D and report the effect shares"
    path_options = ("old", "new", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--old", help="Store directory of the older snapshot")
        parser.add_argument("--new", help="Store directory of the newer snapshot")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--replay-table2", action="store_true",
                            help="Replay the published combination counts instead of reading stores")
        add_window_arguments(parser)

    def run(self, **options):
        out_dir = self.output_dir(options["out"])
        if options["replay_table2"]:
            return self.replay(out_dir)

        window = self.resolve_window(options)
        _, old_families = self.load_families(options["old"])
        _, new_families = self.load_families(options["new"])

        partition = decompose(old_families, new_families, window)
        for name in GROUPS:
            write_csv(group_frame(partition, name, new_families), self.output(out_dir / f"group_{name}.csv"))
            group = {fid: new_families[fid] for fid in partition.group(name)}
            write_csv(trend(group, window, label=name).frame(), self.output(out_dir / f"trend_group_{name}.csv"))

        old_series, new_series = trend_pair(
            in_window(old_families, window), in_window(new_families, window), window,
        )
        write_csv(pair_frame(old_series, new_series), self.output(out_dir / "trend_baseline.csv"))

        reclassified = {fid: new_families[fid] for fid in partition.group_c}
        shares_by_year = share_series(
            trend(reclassified, window), trend(green_families(new_families), window),
        )
        write_csv(
            pd.DataFrame({"year": list(shares_by_year), "share": list(shares_by_year.values())}),
            self.output(out_dir / "reclass_share_by_year.csv"),
        )

        shares = partition_shares(partition, new_families)
        shares["reverse"] = reverse_sizes(old_families, new_families, window)
        write_json(shares, self.output(out_dir / "shares.json"))
        write_json(partition.diagnostics(), self.output(out_dir / "diagnostics.json"))

        sizes = partition.sizes()
        self.success(
            f"A={sizes['A']} B={sizes['B']} C={sizes['C']} D={sizes['D']}; "
            f"reclassification {_percent(shares['reclassification_share'])}, "
            f"set expansion {_percent(shares['set_expansion_share'])}"
        )
        return out_dir

    def replay(self, out_dir):
        rows = load_table2_fixture()
        replay = replay_table2(rows)
        write_csv(combination_frame(rows), self.output(out_dir / "table2.csv"))
        write_json({"rows": replay}, self.output(out_dir / "shares.json"))
        unfiltered = replay[0]
        self.success(
            f"Combination table replay: reclassification {_percent(unfiltered['reclassification_share'])}, "
            f"set expansion {_percent(unfiltered['set_expansion_share'])}"
        )
        return out_dir


def _percent(value):
    return "undefined" if value is None else f"{value * 100:.2f}%"
