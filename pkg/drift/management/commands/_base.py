import json
import logging
import shlex
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from drift.citation_graph import forward_citations_5y
from drift.conf import analysis_window
from drift.exceptions import ConfigError, DriftError, InvariantViolation
from drift.family_builder import build_families, with_citations
from drift.manifest import RunManifest, config_hash
from drift.snapshot_ingest import validate_window
from drift.store_io import STORE_FILENAME, load_store
from drift.utils.threads import resolve_threads

logger = logging.getLogger("drift.commands")

# options Django adds to every command; they never change results
_FRAMEWORK_OPTIONS = {
    "verbosity", "settings", "pythonpath", "traceback", "no_color", "force_color", "skip_checks", "threads",
}


def _plain(text):
    return text


class DriftCommand(BaseCommand):
    """
    Shared plumbing for every patdrift subcommand: --threads, structured
    error output with exit codes, removal of partial outputs on failure and
    the run manifest on success.

    Subclasses implement ``run(**options)`` and return the directory the
    run manifest goes to (or None to skip it).
    """

    # options naming files or directories; hashed by content, not by path
    path_options = ()

    def add_arguments(self, parser):
        self.add_command_arguments(parser)
        parser.add_argument(
            "--threads", type=int, default=None,
            help="Worker threads (default: PATDRIFT_THREADS, else all CPUs). Results do not depend on it.",
        )

    def add_command_arguments(self, parser):
        pass

    def run_from_argv(self, argv):
        self._argv = list(argv)
        return super().run_from_argv(argv)

    def handle(self, *args, **options):
        self.outputs = []
        self.inputs = []
        self.labels = []
        self.window = None
        self._created_dirs = []
        argv = getattr(self, "_argv", None) or [self.command_name()] + [
            f"--{k.replace('_', '-')}={v}" for k, v in sorted(options.items())
            if k not in _FRAMEWORK_OPTIONS and v not in (None, False)
        ]
        try:
            self.threads = resolve_threads(options.get("threads"))
            manifest_dir = self.run(**options)
            if manifest_dir is not None:
                self.write_manifest(manifest_dir, argv, options)
        except DriftError as exc:
            self.fail(exc.to_dict())
            raise CommandError(str(exc), returncode=exc.exit_code)
        except Exception as exc:
            logger.debug("Unexpected failure", exc_info=True)
            error = {"error": type(exc).__name__, "message": str(exc), "exit_code": InvariantViolation.exit_code}
            self.fail(error)
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=InvariantViolation.exit_code) from exc

    def fail(self, error):
        logger.error(f"{error['error']}: {error['message']}")
        self.stderr.write(json.dumps(error, sort_keys=True), style_func=_plain)
        self.remove_outputs()

    def run(self, **options):
        raise NotImplementedError("subclasses of DriftCommand must provide a run() method")

    def command_name(self):
        return self.__module__.rsplit(".", 1)[-1]

    # --- paths ----------------------------------------------------------

    def input_path(self, path, kind="file"):
        if path is None:
            raise ConfigError(f"Missing required input ({kind})")
        path = Path(path)
        if kind == "dir" and not path.is_dir():
            raise ConfigError(f"{path} is not a directory")
        if kind == "file" and not path.is_file():
            raise ConfigError(f"{path} does not exist")
        self.inputs.append(path)
        return path

    def output_dir(self, path):
        path = Path(path)
        if not path.exists():
            self._created_dirs.append(path)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def output(self, path):
        """Register a file this run is about to write."""
        path = Path(path)
        self.outputs.append(path)
        return path

    def remove_outputs(self):
        for path in self.outputs:
            if path.is_file():
                path.unlink()
        for directory in reversed(self._created_dirs):
            for sub in sorted(directory.rglob("*"), reverse=True):
                if sub.is_dir() and not any(sub.iterdir()):
                    sub.rmdir()
            if directory.is_dir() and not any(directory.iterdir()):
                directory.rmdir()

    def write_manifest(self, out_dir, argv, options):
        hashed = {k: v for k, v in options.items() if k not in _FRAMEWORK_OPTIONS and k not in self.path_options}
        manifest = RunManifest(
            command=self.command_name(),
            argv=[str(a) for a in argv],
            config_hash=config_hash(hashed, self.inputs),
            snapshot_labels=list(self.labels),
            window=list(self.window) if self.window else None,
        )
        manifest.finish(self.outputs, out_dir)
        path = manifest.write(out_dir)
        logger.info(f"Run manifest: {path} ({shlex.join(manifest.argv)})")
        return path

    # --- shared loading -------------------------------------------------

    def resolve_window(self, options):
        default_from, default_to = analysis_window()
        start = options.get("from_year")
        end = options.get("to_year")
        window = (default_from if start is None else start, default_to if end is None else end)
        if window[0] > window[1]:
            raise ConfigError(f"--from {window[0]} is after --to {window[1]}")
        self.window = window
        return window

    def load_families(self, store_dir, citations=True):
        """Store plus its families; forward citations are counted unless ``citations`` is False."""
        path = self.input_path(store_dir, kind="dir")
        self.inputs[-1] = path / STORE_FILENAME
        store = load_store(path)
        self.labels.append(store.label)
        if self.window is not None and validate_window(store, *self.window) == 0:
            message = f"Snapshot {store.label!r} has no applications filed in {self.window[0]}-{self.window[1]}"
            logger.warning(message)
            self.warning(message)
        families = build_families(store, threads=self.threads)
        if citations:
            families = with_citations(families, forward_citations_5y(store, families))
        return store, families

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))

    def warning(self, message):
        self.stdout.write(self.style.WARNING(message))


def add_window_arguments(parser):
    parser.add_argument("--from", dest="from_year", type=int, default=None,
                        help="First earliest-priority year (default: PATDRIFT_FROM_YEAR)")
    parser.add_argument("--to", dest="to_year", type=int, default=None,
                        help="Last earliest-priority year (default: PATDRIFT_TO_YEAR)")
