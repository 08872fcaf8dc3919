"""
Character Time-series Matching.

Each physical character of a plate is followed by a track. Per frame, tracks
are matched to detections with a gated linear assignment; matched tracks jump
to their detection, unmatched detections start new tracks, and unmatched
tracks are shifted by the mean displacement of the matched ones. Once the plate
is gone, every track votes for the class with the largest confidence sum.
"""

import dataclasses
import math
import statistics
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from traitlets.log import get_logger

from .assignment import build_cost_matrix, solve
from .geometry import (
    Point2,
    RotationState,
    rectify_points,
    residual_angle,
    update_rotation,
)
from .layout import (
    BRAZILIAN_LAYOUT,
    DEFAULT_ALPHABET,
    Alphabet,
    LayoutSpec,
    disambiguate,
    validate,
)


class CtmError(ValueError):
    """Raised for invalid tracker input."""


class CharDetection(NamedTuple):
    center: Point2
    width: float
    height: float
    class_id: int
    confidence: float


@dataclasses.dataclass
class Track:
    """One hypothesized character position and its observation history."""

    id: int
    position: Point2
    cls: List[int]
    conf: List[float]
    created_frame: int
    last_matched_frame: int
    # matched detection centers, for the mean position used in row clustering
    path: List[Point2] = dataclasses.field(default_factory=list)

    @property
    def matched_count(self) -> int:
        return len(self.cls)

    @property
    def mean_position(self) -> Point2:
        xs, ys = zip(*self.path)
        return Point2(math.fsum(xs) / len(xs), math.fsum(ys) / len(ys))


@dataclasses.dataclass
class TrackSet:
    tracks: List[Track] = dataclasses.field(default_factory=list)
    next_id: int = 0
    frame_index: int = 0


class VoteResult(NamedTuple):
    class_id: int
    score: float
    # (class_id, score) of the best losing class, if any other class was seen
    runner_up: Optional[Tuple[int, float]] = None


class CharReadout(NamedTuple):
    class_id: int
    label: str
    score: float
    track_id: int
    mean_position: Point2


class PlateReadout(NamedTuple):
    text: str
    per_char: List[CharReadout]
    rows: int
    diagnostics: Dict


class CtmConfig(NamedTuple):
    """
    Tracker settings for one plate.

    In "relative" mode `epsilon` is a factor on the median detection width of
    the current frame; in "absolute" mode it is the gate in pixels.
    """

    epsilon: float = 0.5
    epsilon_mode: str = "relative"
    min_hits: int = 2
    layout: LayoutSpec = BRAZILIAN_LAYOUT
    enable_rotation: bool = True
    alphabet: Alphabet = DEFAULT_ALPHABET


def check_detection(det: CharDetection, alphabet_size: int):
    if not 0.0 <= det.confidence <= 1.0:
        raise CtmError(f"confidence {det.confidence!r} is outside [0, 1]")
    if not (det.width > 0 and det.height > 0):
        raise CtmError(f"detection size {det.width!r}x{det.height!r} must be positive")
    if not 0 <= det.class_id < alphabet_size:
        raise CtmError(f"class id {det.class_id!r} is outside the alphabet")
    if not (math.isfinite(det.center[0]) and math.isfinite(det.center[1])):
        raise CtmError("invalid coordinate")


def resolve_epsilon(detections: Sequence[CharDetection], config: CtmConfig) -> float:
    if config.epsilon_mode == "absolute":
        return config.epsilon
    if config.epsilon_mode != "relative":
        raise CtmError(
            f"epsilon_mode must be 'absolute' or 'relative', not {config.epsilon_mode!r}"
        )
    if not detections:
        # nothing to gate
        return config.epsilon
    return config.epsilon * statistics.median(d.width for d in detections)


def ctm_update(
    state: TrackSet, detections: Sequence[CharDetection], epsilon: float
) -> TrackSet:
    """
    Apply one frame of detections to the track set.

    Returns a new TrackSet; `state` is not modified. Tracks are never removed
    here, so the result holds exactly the old tracks plus one new track per
    unmatched detection.
    """
    frame = state.frame_index
    tracks = state.tracks
    matrix = build_cost_matrix(
        [t.position for t in tracks], [d.center for d in detections], epsilon
    )
    assignment = solve(matrix)

    if assignment.pairs:
        shift = np.mean(
            [
                (
                    detections[c].center[0] - tracks[r].position[0],
                    detections[c].center[1] - tracks[r].position[1],
                )
                for r, c in assignment.pairs
            ],
            axis=0,
        )
        delta = Point2(float(shift[0]), float(shift[1]))
    else:
        delta = Point2(0.0, 0.0)

    matched = dict(assignment.pairs)
    updated = []
    for r, track in enumerate(tracks):
        if r in matched:
            det = detections[matched[r]]
            updated.append(
                dataclasses.replace(
                    track,
                    position=Point2(*det.center),
                    cls=track.cls + [det.class_id],
                    conf=track.conf + [det.confidence],
                    path=track.path + [Point2(*det.center)],
                    last_matched_frame=frame,
                )
            )
        else:
            updated.append(
                dataclasses.replace(
                    track,
                    position=Point2(
                        track.position[0] + delta.x, track.position[1] + delta.y
                    ),
                )
            )

    next_id = state.next_id
    for c in assignment.unmatched_cols:
        det = detections[c]
        updated.append(
            Track(
                id=next_id,
                position=Point2(*det.center),
                cls=[det.class_id],
                conf=[det.confidence],
                created_frame=frame,
                last_matched_frame=frame,
                path=[Point2(*det.center)],
            )
        )
        next_id += 1

    return TrackSet(tracks=updated, next_id=next_id, frame_index=frame + 1)


def vote(track: Track, alphabet_size: int) -> VoteResult:
    """
    Weighted-sum vote: K_c is the sum of confidences of the observations of
    class c, the winner is argmax K_c with ties going to the lower class id.
    """
    if track.matched_count == 0:
        raise CtmError(f"track {track.id} has no observations")
    if max(track.cls) >= alphabet_size or min(track.cls) < 0:
        raise CtmError(f"track {track.id} has class ids outside the alphabet")

    scores = np.bincount(track.cls, weights=track.conf, minlength=alphabet_size)
    # only observed classes compete, highest score first, then lowest id
    ranked = sorted(set(track.cls), key=lambda c: (-scores[c], c))
    winner = ranked[0]
    runner_up = None
    if len(ranked) > 1:
        runner_up = (ranked[1], float(scores[ranked[1]]))
    return VoteResult(class_id=winner, score=float(scores[winner]), runner_up=runner_up)


def _reading_order(tracks: List[Track], rows: int, mid_height: Optional[float]):
    if rows == 1 or not tracks:
        return [sorted(tracks, key=lambda t: (t.mean_position.x, t.id))]
    if mid_height is None:
        ys = [t.mean_position.y for t in tracks]
        mid_height = (min(ys) + max(ys)) / 2
    top = [t for t in tracks if t.mean_position.y < mid_height]
    bottom = [t for t in tracks if t.mean_position.y >= mid_height]
    return [
        sorted(row, key=lambda t: (t.mean_position.x, t.id)) for row in (top, bottom)
    ]


def finalize(
    state: TrackSet,
    layout: LayoutSpec,
    min_hits: int,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    mid_height: Optional[float] = None,
) -> PlateReadout:
    """
    Turn the track set of a finished plate into its reading.

    Tracks seen fewer than `min_hits` times are dropped. For two-row layouts,
    tracks whose mean center lies above `mid_height` (smaller y) form the first
    row. Each row reads left to right, each track contributes its vote, and
    merged classes are resolved against the layout.
    """
    survivors = [t for t in state.tracks if t.matched_count >= min_hits]
    diagnostics = {
        "tracks": len(state.tracks),
        "dropped_tracks": len(state.tracks) - len(survivors),
        "frames": state.frame_index,
    }
    if not survivors:
        diagnostics["empty"] = True
        diagnostics["violations"] = []
        return PlateReadout(text="", per_char=[], rows=layout.rows, diagnostics=diagnostics)

    ordered = [
        t for row in _reading_order(survivors, layout.rows, mid_height) for t in row
    ]
    votes = [vote(t, len(alphabet)) for t in ordered]
    merged_text = ''.join(alphabet.label(v.class_id) for v in votes)
    text = disambiguate(merged_text, layout)

    per_char = [
        CharReadout(
            class_id=v.class_id,
            label=label,
            score=v.score,
            track_id=t.id,
            mean_position=t.mean_position,
        )
        for t, v, label in zip(ordered, votes, text)
    ]
    diagnostics["empty"] = False
    diagnostics["violations"] = [tuple(v) for v in validate(text, layout)]
    return PlateReadout(
        text=text, per_char=per_char, rows=layout.rows, diagnostics=diagnostics
    )


class PlateTracker:
    """
    Per-plate state: the rotation estimate and the track set.

    Frames must be fed in chronological order. Detections are rectified with
    the rotation in effect for the frame, the frame's residual tilt updates the
    rotation for the next one, and the rectified detections update the tracks.
    Tracks live in the rectified space of the last frame they saw, and are
    rotated along whenever the rotation changes.
    """

    def __init__(self, config: CtmConfig = CtmConfig(), log=None):
        self.config = config
        self.log = log or get_logger()
        self.rotation = RotationState()
        self.tracks = TrackSet()
        self.pivot = None
        self._track_alpha = 0.0

    @property
    def alpha(self) -> float:
        """Rotation applied to the next frame."""
        return self.rotation.alpha if self.config.enable_rotation else 0.0

    def update(self, frame) -> TrackSet:
        _, _, w, h = frame.plate_box
        self.pivot = Point2(w / 2, h / 2)
        alphabet_size = len(self.config.alphabet)
        for det in frame.detections:
            check_detection(det, alphabet_size)

        applied = self.alpha
        self._align_tracks(applied)
        rectified = rectify_points(
            [d.center for d in frame.detections], applied, self.pivot
        )
        detections = [d._replace(center=c) for d, c in zip(frame.detections, rectified)]

        if self.config.enable_rotation:
            self.rotation = update_rotation(self.rotation, residual_angle(rectified))

        before = len(self.tracks.tracks)
        self.tracks = ctm_update(
            self.tracks, detections, resolve_epsilon(detections, self.config)
        )
        self.log.debug(
            "frame %s: %i detections, %i new tracks, next alpha %.3f deg",
            frame.frame_index,
            len(detections),
            len(self.tracks.tracks) - before,
            math.degrees(self.alpha),
        )
        return self.tracks

    def _align_tracks(self, alpha: float):
        delta = alpha - self._track_alpha
        self._track_alpha = alpha
        tracks = self.tracks.tracks
        if delta == 0.0 or not tracks:
            return
        points = [t.position for t in tracks]
        for t in tracks:
            points.extend(t.path)
        moved = rectify_points(points, delta, self.pivot)
        offset = len(tracks)
        aligned = []
        for t, position in zip(tracks, moved):
            n = len(t.path)
            aligned.append(
                dataclasses.replace(t, position=position, path=moved[offset : offset + n])
            )
            offset += n
        self.tracks = dataclasses.replace(self.tracks, tracks=aligned)

    def finalize(self) -> PlateReadout:
        mid_height = self.pivot.y if self.pivot is not None else None
        return finalize(
            self.tracks,
            self.config.layout,
            self.config.min_hits,
            alphabet=self.config.alphabet,
            mid_height=mid_height,
        )


def run_plate(frames: Sequence, config: CtmConfig = CtmConfig()) -> PlateReadout:
    """Read one plate from its frames, in chronological order."""
    if not frames:
        raise CtmError("no frames to read")
    tracker = PlateTracker(config)
    for frame in frames:
        tracker.update(frame)
    return tracker.finalize()
