from pathlib import Path

from drift.management.commands._base import DriftCommand
from drift.snapshot_ingest import ingest_snapshot
from drift.store_io import STORE_FILENAME, save_store
from drift.utils.output import write_json


class Command(DriftCommand):
    help = "Ingest one snapshot (applications, classifications, citations TSVs) into a binary store"
    path_options = ("applications", "classifications", "citations", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--applications", required=True, help="TSV: appln_id, family_id, authority, filing_date")
        parser.add_argument("--classifications", required=True, help="TSV: appln_id, cpc_symbol")
        parser.add_argument("--citations", required=True, help="TSV: citing_appln_id, cited_appln_id")
        parser.add_argument("--label", required=True, help="Snapshot label, e.g. 2019 or 2023")
        parser.add_argument("--out", required=True, help="Output directory for the store and report")
        parser.add_argument("--chunk-rows", type=int, default=None,
                            help="Rows per streamed chunk (default: PATDRIFT_INGEST_CHUNK_ROWS)")

    def run(self, **options):
        applications = self.input_path(options["applications"])
        classifications = self.input_path(options["classifications"])
        citations = self.input_path(options["citations"])
        out_dir = self.output_dir(options["out"])

        store, report = ingest_snapshot(
            applications, classifications, citations, options["label"],
            chunk_rows=options["chunk_rows"], threads=self.threads,
        )
        self.labels.append(store.label)

        save_store(store, self.output(Path(out_dir) / STORE_FILENAME))
        payload = report.to_dict()
        payload["store"] = store.describe()
        write_json(payload, self.output(Path(out_dir) / "ingest_report.json"))

        summary = store.describe()
        self.success(
            f"Ingested {summary['applications']} applications, {summary['classifications']} classifications "
            f"and {summary['citations']} citations into {out_dir}"
        )
        if report.malformed or report.dangling:
            self.warning(f"Skipped {report.malformed} malformed and {report.dangling} dangling rows")
        return out_dir
