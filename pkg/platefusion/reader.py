"""
The PlateReader turns the frames of tracked plates into plate readouts.

Each plate is read by its own PlateTracker; plates are spread over a thread
pool and results come back in input order.
"""

import math
from typing import Dict, List, NamedTuple, Optional, Sequence

from traitlets import Bool, Enum, Float, Integer, TraitError, Unicode, validate
from traitlets.config import LoggingConfigurable

from .ctm import CtmConfig, CtmError, PlateReadout, PlateTracker
from .layout import DEFAULT_ALPHABET, LayoutError, LayoutSpec
from .objects import PlateFrame, associate_vehicle, readout_to_record, vehicle_class_of
from .utils import map_in_order


class PlateResult(NamedTuple):
    plate_id: str
    readout: PlateReadout
    vehicle_id: Optional[str]
    vehicle_class: Optional[str]
    # rotation that would be applied to the next frame, radians
    alpha: float

    def to_record(self) -> dict:
        return readout_to_record(
            self.plate_id,
            self.readout,
            self.vehicle_id,
            self.alpha,
            vehicle_class=self.vehicle_class,
        )


class PlateReader(LoggingConfigurable):
    """
    Reads plates from character detections with adaptive rotation and
    character time-series matching.
    """

    epsilon = Float(
        0.5,
        config=True,
        help="""
        Matching gate between a track and a detection.

        With `epsilon_mode = "relative"` this is a factor on the median width of
        the detections in the current frame; with "absolute" it is a distance
        in pixels. Pairs at this distance or further never match.
        """,
    )

    epsilon_mode = Enum(
        ["absolute", "relative"],
        default_value="relative",
        config=True,
        help="""
        How `epsilon` is interpreted, "absolute" pixels or "relative" to the
        median character width.
        """,
    )

    min_hits = Integer(
        2,
        config=True,
        help="""
        Tracks matched fewer times than this are dropped when the plate is read.

        Set to 1 to keep every track, including one-off spurious detections.
        """,
    )

    layout = Unicode(
        "AAANNNN",
        config=True,
        help="""
        Layout template of the plates being read.

        `A` marks an alphabetic slot, `N` a numeric one, `?` any character.
        Separators are ignored and `/` starts the second row of a two-row
        plate, e.g. "AAA-NNNN" or "NNA/NNNNN". Merged classes (0/O, 1/I) are
        resolved by the slot they land in.
        """,
    )

    enable_rotation = Bool(
        True,
        config=True,
        help="""
        Rectify each frame with the rotation estimated from the previous ones.

        Set this to false to track characters in raw plate coordinates.
        """,
    )

    workers = Integer(
        1,
        config=True,
        help="""
        Number of threads plates are read on. Readouts don't depend on it.
        """,
    )

    @validate("epsilon")
    def _validate_epsilon(self, proposal):
        if not proposal.value > 0:
            raise TraitError(f"epsilon must be positive, not {proposal.value}")
        return proposal.value

    @validate("min_hits", "workers")
    def _validate_at_least_one(self, proposal):
        if proposal.value < 1:
            raise TraitError(
                f"{proposal.trait.name} must be at least 1, not {proposal.value}"
            )
        return proposal.value

    @validate("layout")
    def _validate_layout(self, proposal):
        try:
            LayoutSpec.parse(proposal.value)
        except LayoutError as e:
            raise TraitError(str(e))
        return proposal.value

    @property
    def layout_spec(self) -> LayoutSpec:
        return LayoutSpec.parse(self.layout)

    @property
    def ctm_config(self) -> CtmConfig:
        return CtmConfig(
            epsilon=self.epsilon,
            epsilon_mode=self.epsilon_mode,
            min_hits=self.min_hits,
            layout=self.layout_spec,
            enable_rotation=self.enable_rotation,
            alphabet=DEFAULT_ALPHABET,
        )

    def read_plate(self, plate_id: str, frames: Sequence[PlateFrame]) -> PlateResult:
        if not frames:
            raise CtmError(f"no frames to read for plate {plate_id}")
        tracker = PlateTracker(self.ctm_config, log=self.log)
        for frame in frames:
            tracker.update(frame)
        readout = tracker.finalize()
        vehicle_id = associate_vehicle(frames)
        vehicle_class = vehicle_class_of(frames, vehicle_id)
        self.log.debug(
            "Plate %s read as %r from %i frames (vehicle %s, alpha %.2f deg)",
            plate_id,
            readout.text,
            len(frames),
            vehicle_id,
            math.degrees(tracker.alpha),
        )
        if readout.diagnostics["empty"]:
            self.log.warning("Plate %s has no track with enough observations", plate_id)
        elif readout.diagnostics["violations"]:
            self.log.info(
                "Plate %s reading %r does not fit layout %s",
                plate_id,
                readout.text,
                self.layout_spec,
            )
        return PlateResult(
            plate_id=plate_id,
            readout=readout,
            vehicle_id=vehicle_id,
            vehicle_class=vehicle_class,
            alpha=tracker.alpha,
        )

    def read_all(self, groups: Dict[str, List[PlateFrame]]) -> List[PlateResult]:
        """Read every plate of a grouped stream, in the order of `groups`."""
        results = map_in_order(
            lambda item: self.read_plate(*item), list(groups.items()), self.workers
        )
        self.log.info("Read %i plates with %i workers", len(results), self.workers)
        return results
