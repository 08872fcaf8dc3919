"""
The platefusion command line application.

    platefusion run stream.jsonl [--output readouts.jsonl]
    platefusion simulate --plates 10 --output stream.jsonl --truth truth.jsonl
    platefusion bench --plates 1000 [--scenario scenario.yaml] [--json]
    platefusion bench stream.jsonl --truth truth.jsonl
    platefusion oracle --trials 1000

Exit status is 0 on success, 1 for usage and configuration errors, and 2 for
data errors.
"""

import json
import os
import sys

import numpy as np
from traitlets import Bool, Float, Integer, List, TraitError, Unicode, validate
from traitlets.config import Application, catch_config_error

from ._version import __version__
from .assignment import (
    BRUTE_FORCE_LIMIT,
    INFEASIBLE,
    AssignmentError,
    CostMatrix,
    brute_force_solve,
    solve,
)
from .ctm import CtmError
from .evaluate import METHODS, EvaluationError, evaluate, render_report
from .layout import LayoutError
from .objects import RecordError
from .reader import PlateReader
from .simulate import (
    ScenarioConfig,
    ScenarioError,
    apply_overrides,
    load_scenario_file,
    scenario_batch,
)
from .stream import StreamError, StreamReader, write_records, write_stream
from .utils import (
    flat_config_to_config,
    is_traitlets_config_file,
    parse_flat_config,
)

# errors caused by the data a command was given, exit status 2
DATA_ERRORS = (
    AssignmentError,
    CtmError,
    EvaluationError,
    LayoutError,
    OSError,
    RecordError,
    ScenarioError,
    StreamError,
    UnicodeError,
)

common_aliases = {
    'log-level': 'Application.log_level',
    'config': 'PlateFusionCommand.config_file',
    'epsilon': 'PlateReader.epsilon',
    'epsilon-mode': 'PlateReader.epsilon_mode',
    'min-hits': 'PlateReader.min_hits',
    'layout': 'PlateReader.layout',
    'workers': 'PlateReader.workers',
    'gamma-tilt-noise': 'ScenarioConfig.gamma_tilt_noise',
    'seed': 'ScenarioConfig.seed',
}

common_flags = {
    'debug': (
        {'Application': {'log_level': 10}},
        "Set log level to DEBUG",
    ),
    'strict': (
        {'StreamReader': {'strict': True}},
        "Abort on the first malformed stream record (default).",
    ),
    'lenient': (
        {'StreamReader': {'strict': False}},
        "Skip malformed stream records with a warning.",
    ),
    'rotation': (
        {'PlateReader': {'enable_rotation': True}},
        "Rectify plates with adaptive rotation (default).",
    ),
    'no-rotation': (
        {'PlateReader': {'enable_rotation': False}},
        "Track characters in raw plate coordinates.",
    ),
}

scenario_aliases = {
    'plates': 'PlateFusionCommand.n_plates',
    'scenario': 'PlateFusionCommand.scenario_file',
    'frames': 'ScenarioConfig.n_frames',
    'tilt': 'ScenarioConfig.tilt_deg',
    'jitter': 'ScenarioConfig.jitter_sigma',
    'miss-prob': 'ScenarioConfig.miss_prob',
    'confusion-prob': 'ScenarioConfig.confusion_prob',
    'plate-text': 'ScenarioConfig.plate_text',
}


class PlateFusionCommand(Application):
    """Base class of the platefusion subcommands: config files and error handling"""

    version = __version__

    classes = [PlateReader, StreamReader, ScenarioConfig]

    aliases = dict(common_aliases)
    flags = dict(common_flags)

    config_file = Unicode(
        "",
        config=True,
        help="""
        Config file to load.

        Files ending in `.py` or `.json` are traitlets config files
        (`c.PlateReader.min_hits = 3`). Anything else is read as flat
        `key = value` lines with the keys epsilon, epsilon_mode, min_hits,
        layout, enable_rotation, workers, gamma_tilt_noise, seed and strict.
        Command line flags override the file.
        """,
    )

    output = Unicode(
        "-",
        config=True,
        help="""
        Where to write results, `-` for stdout.
        """,
    )

    n_plates = Integer(
        100,
        config=True,
        help="""
        Number of simulated plates.
        """,
    )

    scenario_file = Unicode(
        "",
        config=True,
        help="""
        YAML file with ScenarioConfig settings and an optional `plates` list of
        ground-truth strings.
        """,
    )

    @catch_config_error
    def initialize(self, argv=None):
        super().initialize(argv)
        if self.config_file:
            self.load_config(self.config_file)

    def load_config(self, path):
        if not os.path.isfile(path):
            raise TraitError(f"config file {path} does not exist")
        self.log.info("Loading config from %s", path)
        if is_traitlets_config_file(path):
            path = os.path.abspath(path)
            self.load_config_file(os.path.basename(path), path=os.path.dirname(path))
            return
        with open(path, encoding="utf8") as f:
            values = parse_flat_config(f.read(), source=path)
        config = flat_config_to_config(values, self.classes)
        # command line flags override the file
        config.merge(self.cli_config)
        self.update_config(config)

    def make_reader(self) -> PlateReader:
        return PlateReader(parent=self)

    def make_scenario_config(self, reader: PlateReader) -> ScenarioConfig:
        """ScenarioConfig from config, the scenario file, and the reader's layout"""
        scenario = ScenarioConfig(parent=self)
        if 'layout' not in self.config.ScenarioConfig:
            scenario.layout = reader.layout
        self.plate_texts = []
        if self.scenario_file:
            overrides, self.plate_texts = load_scenario_file(self.scenario_file)
            apply_overrides(scenario, overrides)
        return scenario

    def run(self):
        raise NotImplementedError

    def start(self):
        try:
            return self.run()
        except TraitError as e:
            self.log.critical("Invalid configuration: %s", e)
            self.exit(1)
        except DATA_ERRORS as e:
            self.log.critical("%s", e)
            self.exit(2)

    def write_text(self, text):
        if self.output == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(self.output, "w", encoding="utf8") as f:
                f.write(text)


class RunCommand(PlateFusionCommand):
    name = "platefusion-run"
    description = """
    Read every plate of a detection stream and write one readout record per
    plate as line-delimited JSON.
    """
    examples = "platefusion run detections.jsonl --output readouts.jsonl"

    aliases = dict(common_aliases, output='PlateFusionCommand.output')

    def run(self):
        if len(self.extra_args) != 1:
            self.log.critical("run takes exactly one detection stream, got %s", self.extra_args)
            self.exit(1)
        reader = self.make_reader()
        groups = StreamReader(parent=self).read(self.extra_args[0])
        results = reader.read_all(groups)
        write_records(self.output, [r.to_record() for r in results])


class SimulateCommand(PlateFusionCommand):
    name = "platefusion-simulate"
    description = """
    Write a synthetic detection stream, as a fixed detector would report it,
    and the ground truth of every plate.
    """
    examples = "platefusion simulate --plates 10 --tilt 15 --output stream.jsonl --truth truth.jsonl"

    aliases = dict(
        common_aliases,
        output='PlateFusionCommand.output',
        truth='SimulateCommand.truth_file',
        **scenario_aliases,
    )

    truth_file = Unicode(
        "",
        config=True,
        help="""
        Where to write `{"plate_id": ..., "text": ...}` truth records.

        Left empty, truths are only logged.
        """,
    )

    def run(self):
        reader = self.make_reader()
        scenario = self.make_scenario_config(reader)
        plates = scenario_batch(scenario, self.n_plates, self.plate_texts)
        frames = [frame for plate in plates for frame in plate.frames()]
        write_stream(self.output, frames)
        truths = [{"plate_id": p.plate_id, "text": p.truth} for p in plates]
        if self.truth_file:
            write_records(self.truth_file, truths)
        else:
            for truth in truths:
                self.log.info("Truth of %s: %s", truth["plate_id"], truth["text"])
        self.log.info("Simulated %i plates, %i frames", len(plates), len(frames))


class BenchCommand(PlateFusionCommand):
    name = "platefusion-bench"
    description = """
    Compare per-frame readouts against the multi-frame readers, either on
    simulated plates or on a detection stream with known truths.
    """
    examples = "platefusion bench --plates 1000 --tilt 20 --json"

    aliases = dict(
        common_aliases,
        output='PlateFusionCommand.output',
        truth='BenchCommand.truth_file',
        template='BenchCommand.report_template',
        methods='BenchCommand.methods',
        **scenario_aliases,
    )
    flags = dict(
        common_flags,
        json=(
            {'BenchCommand': {'json_output': True}},
            "Write the report as JSON.",
        ),
    )

    methods = List(
        Unicode(),
        default_value=list(METHODS),
        config=True,
        help="""
        Methods to score, any of single_frame, single_frame_best,
        frame_majority, ctm and ar_ctm.
        """,
    )

    truth_file = Unicode(
        "",
        config=True,
        help="""
        Truth records for a benchmarked detection stream.
        """,
    )

    json_output = Bool(
        False,
        config=True,
        help="""
        Write the report as JSON instead of rendering `report_template`.
        """,
    )

    report_template = Unicode(
        "",
        config=True,
        help="""
        Literal Jinja2 template for the report.

        The `report` variable holds the EvalReport. When this is not set, a
        `report.md.j2` found in `additional_report_template_paths` is used, and
        otherwise the one shipped with platefusion.
        """,
    )

    additional_report_template_paths = List(
        Unicode(),
        config=True,
        help="""
        Additional paths to search for a `report.md.j2` jinja2 template.
        """,
    )

    def _load_truths(self, groups):
        truths = {}
        with open(self.truth_file, encoding="utf8") as f:
            for line_number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    truths[record["plate_id"]] = record["text"]
                except (ValueError, KeyError, TypeError):
                    raise StreamError(
                        line_number, "truth records need plate_id and text", self.truth_file
                    ) from None
        missing = [plate_id for plate_id in groups if plate_id not in truths]
        if missing:
            raise EvaluationError(f"no truth for plates {missing}")
        return [truths[plate_id] for plate_id in groups]

    def run(self):
        reader = self.make_reader()
        if self.extra_args:
            if len(self.extra_args) != 1 or not self.truth_file:
                self.log.critical("bench takes one detection stream and --truth")
                self.exit(1)
            groups = StreamReader(parent=self).read(self.extra_args[0])
            plates = list(groups.values())
            truths = self._load_truths(groups)
            source = self.extra_args[0]
        else:
            scenario = self.make_scenario_config(reader)
            batch = scenario_batch(scenario, self.n_plates, self.plate_texts)
            plates = batch
            truths = [p.truth for p in batch]
            source = f"{self.n_plates} simulated plates, seed {scenario.seed}"

        report = evaluate(
            plates,
            truths,
            methods=self.methods,
            config=reader.ctm_config,
            workers=reader.workers,
            log=self.log,
        )
        if self.json_output:
            self.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        else:
            self.write_text(
                render_report(
                    report,
                    template=self.report_template,
                    template_paths=self.additional_report_template_paths,
                    source=source,
                    layout=str(reader.layout_spec),
                )
            )


class OracleCommand(PlateFusionCommand):
    name = "platefusion-oracle"
    description = """
    Cross-check the assignment solver against brute force enumeration on
    random gated cost matrices.
    """
    examples = "platefusion oracle --trials 1000 --max-size 7"

    aliases = dict(
        common_aliases,
        trials='OracleCommand.trials',
        **{
            'max-size': 'OracleCommand.max_size',
            'infeasible': 'OracleCommand.infeasible_fraction',
        },
    )

    trials = Integer(1000, config=True, help="Number of random matrices.")

    max_size = Integer(
        7,
        config=True,
        help="""
        Largest number of rows and columns. Brute force is limited to 9.
        """,
    )

    infeasible_fraction = Float(
        0.2, config=True, help="Fraction of cells that are INFEASIBLE."
    )

    @validate("max_size")
    def _validate_max_size(self, proposal):
        if not 0 <= proposal.value <= BRUTE_FORCE_LIMIT:
            raise TraitError(
                f"max_size must be between 0 and {BRUTE_FORCE_LIMIT}, not {proposal.value}"
            )
        return proposal.value

    def random_matrix(self, rng) -> CostMatrix:
        rows, cols = rng.integers(0, self.max_size + 1, size=2)
        cost = rng.uniform(0.0, 100.0, size=(rows, cols))
        cost[rng.random((rows, cols)) < self.infeasible_fraction] = INFEASIBLE
        return CostMatrix(cost)

    def run(self):
        seed = ScenarioConfig(parent=self).seed
        rng = np.random.default_rng(seed)
        mismatches = 0
        for trial in range(self.trials):
            matrix = self.random_matrix(rng)
            fast = solve(matrix)
            reference = brute_force_solve(matrix)
            if len(fast.pairs) != len(reference.pairs) or fast.total_cost(
                matrix
            ) != reference.total_cost(matrix):
                mismatches += 1
                self.log.error(
                    "Trial %i: solver %s != brute force %s on %r",
                    trial,
                    fast.pairs,
                    reference.pairs,
                    matrix,
                )
        self.write_text(
            f"{self.trials} matrices up to {self.max_size}x{self.max_size}, "
            f"{mismatches} mismatches\n"
        )
        if mismatches:
            self.exit(2)


class PlateFusionApp(Application):
    name = "platefusion"
    version = __version__
    description = """
    Fuse per-frame character detections of tracked license plates into plate
    readings.
    """
    examples = "\n".join(
        line.strip() for line in __doc__.splitlines() if line.strip().startswith("platefusion")
    )

    aliases = {'log-level': 'Application.log_level'}

    subcommands = {
        'run': (RunCommand, "Read the plates of a detection stream."),
        'simulate': (SimulateCommand, "Write a synthetic detection stream and truths."),
        'bench': (BenchCommand, "Score single-frame and multi-frame readers."),
        'oracle': (OracleCommand, "Cross-check the assignment solver."),
    }

    def start(self):
        if self.subapp is None:
            self.print_help()
            self.log.critical("A subcommand is required: %s", ", ".join(self.subcommands))
            self.exit(1)
        return self.subapp.start()


main = PlateFusionApp.launch_instance
