from pathlib import Path

from drift.cpc_codes import delta_frame, read_scheme, scheme_diff
from drift.management.commands._base import DriftCommand
from drift.utils.output import write_csv


class Command(DriftCommand):
    help = "Compare two classification scheme versions per subclass (deleted, new, retitled, re-indented codes)"
    path_options = ("old", "new", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--old", required=True, help="Scheme TSV: symbol, indent_level, title")
        parser.add_argument("--new", required=True, help="Scheme TSV of the later version")
        parser.add_argument("--out", required=True, help="Output CSV file")

    def run(self, **options):
        old = read_scheme(self.input_path(options["old"]))
        new = read_scheme(self.input_path(options["new"]))
        out = Path(options["out"])
        out_dir = self.output_dir(out.parent)

        deltas = scheme_diff(old, new)
        write_csv(delta_frame(deltas), self.output(out))
        self.success(f"{len(deltas)} subclasses changed; written to {out}")
        return out_dir
