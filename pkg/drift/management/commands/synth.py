from drift.management.commands._base import DriftCommand
from drift.synth_generator import GeneratorConfig, generate, write_pair


class Command(DriftCommand):
    help = "Generate a paired synthetic snapshot with a ground-truth manifest"
    path_options = ("config", "out")

    def add_command_arguments(self, parser):
        parser.add_argument("--config", help="JSON generator config (defaults for every missing knob)")
        parser.add_argument("--out", required=True, help="Output directory")
        parser.add_argument("--seed", type=int, default=None, help="Override the config seed")
        parser.add_argument("--families", type=int, default=None, help="Override n_families")

    def run(self, **options):
        data = {}
        if options["config"]:
            data = GeneratorConfig.from_file(self.input_path(options["config"])).as_dict()
        if options["seed"] is not None:
            data["seed"] = options["seed"]
        if options["families"] is not None:
            data["n_families"] = options["families"]
        config = GeneratorConfig.from_dict(data)

        out_dir = self.output_dir(options["out"])
        pair = generate(config)
        # registered up front so a failed write leaves nothing behind
        for snapshot in ("old", "new"):
            for name in pair.old:
                self.output(out_dir / snapshot / f"{name}.tsv")
        self.output(out_dir / "manifest.csv")
        self.output(out_dir / "ground_truth.json")
        write_pair(pair, out_dir)

        sizes = pair.truth.group_sizes()
        self.success(
            f"Synthetic pair (seed={config.seed}, {config.n_families} families) written to {out_dir}: "
            + " ".join(f"{k}={v}" for k, v in sizes.items())
        )
        return out_dir
