"""
Accuracy of the multi-frame readers against per-frame readouts.

Methods:

- single_frame: every frame read on its own, scored per frame
- single_frame_best: the most complete frame of each plate, latest on ties
- frame_majority: the most frequent per-frame reading of each plate
- ctm: character tracking and voting on unrectified detections
- ar_ctm: the same with adaptive rotation; scenarios are rendered with the
  rotation the tracker applies at each frame
"""

import dataclasses
import math
import time
from collections import Counter
from typing import Dict, List, NamedTuple, Sequence

from jinja2 import ChoiceLoader, Environment, FileSystemLoader, PackageLoader
from traitlets.log import get_logger

from .ctm import CtmConfig, PlateTracker, TrackSet, ctm_update, finalize, resolve_epsilon
from .simulate import PlateScenario, expected_reading
from .utils import map_in_order

METHODS = ("single_frame", "single_frame_best", "frame_majority", "ctm", "ar_ctm")

DEFAULT_METHODS = METHODS


class EvaluationError(ValueError):
    """Raised for inputs that can't be scored."""


class MethodScore(NamedTuple):
    method: str
    plates: int
    exact_match: float
    char_accuracy: float
    seconds: float

    @property
    def plates_per_second(self) -> float:
        return self.plates / self.seconds if self.seconds > 0 else math.inf


class EvalReport(NamedTuple):
    scores: Dict[str, MethodScore]
    plates: int
    mean_frames: float
    seconds: float

    def to_dict(self) -> dict:
        return {
            "plates": self.plates,
            "mean_frames": self.mean_frames,
            "seconds": self.seconds,
            "methods": {
                name: {
                    "exact_match": s.exact_match,
                    "char_accuracy": s.char_accuracy,
                    "seconds": s.seconds,
                }
                for name, s in self.scores.items()
            },
        }


@dataclasses.dataclass
class _PlateScore:
    # method -> (exact match, character accuracy, seconds)
    results: Dict[str, tuple]
    frames: int


def char_accuracy(reading: str, truth: str) -> float:
    """Positional character matches over the longer of the two strings."""
    longest = max(len(reading), len(truth))
    if longest == 0:
        return 1.0
    return sum(a == b for a, b in zip(reading, truth)) / longest


def read_single_frame(frame, config: CtmConfig) -> str:
    """
    Read one frame on its own: each detection is a track with a single
    observation, read in layout order and disambiguated.
    """
    detections = list(frame.detections)
    if not detections:
        return ""
    tracks = ctm_update(TrackSet(), detections, resolve_epsilon(detections, config))
    _, _, _, h = frame.plate_box
    readout = finalize(
        tracks, config.layout, 1, alphabet=config.alphabet, mid_height=h / 2
    )
    return readout.text


def _frames_of(plate):
    if isinstance(plate, PlateScenario):
        return plate.frames()
    return list(plate)


def _read_tracked(plate, config: CtmConfig) -> str:
    tracker = PlateTracker(config)
    if isinstance(plate, PlateScenario):
        # the detector sees the crop rotated by the angle applied to each frame
        for t in range(plate.n_frames):
            tracker.update(plate.render(t, tracker.alpha))
    else:
        if not plate:
            return ""
        for frame in plate:
            tracker.update(frame)
    return tracker.finalize().text


def _score_plate(plate, truth: str, methods, config: CtmConfig) -> _PlateScore:
    results = {}
    frames = _frames_of(plate)

    start = time.perf_counter()
    single = [read_single_frame(f, config) for f in frames]
    single_seconds = time.perf_counter() - start

    def timed(method, fn):
        start = time.perf_counter()
        exact, chars = fn()
        seconds = time.perf_counter() - start
        if method.startswith(("single_frame", "frame_majority")):
            seconds += single_seconds
        results[method] = (exact, chars, seconds)

    def scored(reading):
        return float(reading == truth), char_accuracy(reading, truth)

    for method in methods:
        if method == "single_frame":
            timed(
                method,
                lambda: (
                    math.fsum(float(r == truth) for r in single) / max(len(single), 1),
                    math.fsum(char_accuracy(r, truth) for r in single)
                    / max(len(single), 1),
                ),
            )
        elif method == "single_frame_best":
            # most detections, latest frame on ties
            best = max(
                range(len(frames)),
                key=lambda i: (len(frames[i].detections), i),
                default=None,
            )
            timed(method, lambda: scored(single[best] if best is not None else ""))
        elif method == "frame_majority":
            counts = Counter(single)
            timed(
                method,
                lambda: scored(counts.most_common(1)[0][0] if counts else ""),
            )
        elif method == "ctm":
            plain = config._replace(enable_rotation=False)
            timed(method, lambda: scored(_read_tracked(frames, plain)))
        elif method == "ar_ctm":
            rotating = config._replace(enable_rotation=True)
            timed(method, lambda: scored(_read_tracked(plate, rotating)))
    return _PlateScore(results=results, frames=len(frames))


def evaluate(
    streams: Sequence,
    ground_truths: Sequence[str],
    methods: Sequence[str] = DEFAULT_METHODS,
    config: CtmConfig = CtmConfig(),
    workers: int = 1,
    log=None,
) -> EvalReport:
    """
    Score every method on aligned plates and truths.

    `streams` holds one entry per plate: a PlateScenario, or the plate's list
    of PlateFrame. Truths are compared after folding into the merged classes
    and resolving them against the layout, which is the best any reader of
    merged classes can do.
    """
    log = log or get_logger()
    if len(streams) != len(ground_truths):
        raise EvaluationError(
            f"{len(streams)} plates but {len(ground_truths)} ground truths"
        )
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise EvaluationError(
            f"unknown methods {unknown}, expected some of {list(METHODS)}"
        )
    methods = list(dict.fromkeys(methods))
    truths = [
        expected_reading(t, config.layout, config.alphabet) for t in ground_truths
    ]

    start = time.perf_counter()
    plate_scores: List[_PlateScore] = map_in_order(
        lambda item: _score_plate(item[0], item[1], methods, config),
        list(zip(streams, truths)),
        workers,
    )
    seconds = time.perf_counter() - start

    n = len(plate_scores)
    scores = {}
    for method in methods:
        rows = [p.results[method] for p in plate_scores]
        scores[method] = MethodScore(
            method=method,
            plates=n,
            exact_match=math.fsum(r[0] for r in rows) / n if n else 0.0,
            char_accuracy=math.fsum(r[1] for r in rows) / n if n else 0.0,
            seconds=math.fsum(r[2] for r in rows),
        )
        log.info(
            "%s: exact match %.4f, character accuracy %.4f over %i plates",
            method,
            scores[method].exact_match,
            scores[method].char_accuracy,
            n,
        )
    mean_frames = math.fsum(p.frames for p in plate_scores) / n if n else 0.0
    return EvalReport(scores=scores, plates=n, mean_frames=mean_frames, seconds=seconds)


def render_report(
    report: EvalReport,
    template: str = "",
    template_paths: Sequence[str] = (),
    **context,
) -> str:
    """
    Render an EvalReport with jinja2.

    The template rendered is either `template` as a literal template string,
    a `report.md.j2` found in `template_paths`, or the `report.md.j2` bundled
    with platefusion.
    """
    loader = ChoiceLoader(
        [
            FileSystemLoader(list(template_paths)),
            PackageLoader("platefusion", "templates"),
        ]
    )
    env = Environment(loader=loader, keep_trailing_newline=True)
    if template:
        report_template = env.from_string(template)
    else:
        report_template = env.get_template("report.md.j2")
    return report_template.render(report=report, **context)
