"""
Helper methods for generating plate stream objects from JSON records, and
records from objects.
"""

import math
from collections import Counter
from typing import List, NamedTuple, Optional, Sequence

from .ctm import CharDetection, PlateReadout
from .geometry import Point2
from .layout import DEFAULT_ALPHABET, Alphabet, LayoutError


class RecordError(ValueError):
    """Raised for records that don't follow the stream schema."""


class Box(NamedTuple):
    x: float
    y: float
    w: float
    h: float

    @property
    def center(self) -> Point2:
        return Point2(self.x + self.w / 2, self.y + self.h / 2)

    @property
    def area(self) -> float:
        return self.w * self.h

    def contains(self, point: Point2) -> bool:
        return (
            self.x <= point.x <= self.x + self.w
            and self.y <= point.y <= self.y + self.h
        )


class VehicleBox(NamedTuple):
    frame_index: int
    box: Box
    vehicle_id: str
    vehicle_class: str = ""


class PlateFrame(NamedTuple):
    """
    All character detections of one plate at one frame.

    `detections` are in raw plate-local coordinates, relative to the top left
    corner of `plate_box`. `tilt_hint` is only set by the simulator.
    """

    plate_id: str
    frame_index: int
    plate_box: Box
    detections: List[CharDetection]
    vehicles: List[VehicleBox] = []
    tilt_hint: Optional[float] = None


def _number(record, key, where):
    try:
        value = record[key]
    except KeyError:
        raise RecordError(f"missing field '{key}' in {where}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RecordError(f"field '{key}' in {where} must be a number, not {value!r}")
    if not math.isfinite(value):
        raise RecordError(f"field '{key}' in {where} must be finite")
    return float(value)


def make_box(values, where) -> Box:
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        raise RecordError(f"{where} must be [x, y, w, h], not {values!r}")
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RecordError(f"{where} must hold numbers, not {values!r}")
        if not math.isfinite(value):
            raise RecordError(f"{where} must hold finite numbers, not {values!r}")
    box = Box(*(float(v) for v in values))
    if box.w <= 0 or box.h <= 0:
        raise RecordError(f"{where} must have positive size, not {box.w}x{box.h}")
    return box


def make_detection(record, alphabet: Alphabet = DEFAULT_ALPHABET) -> CharDetection:
    """
    Build a CharDetection from a `chars` item of a stream record::

        {"cx": 12.0, "cy": 20.5, "w": 10.0, "h": 22.0, "class": "A", "conf": 0.91}
    """
    if not isinstance(record, dict):
        raise RecordError(f"character record must be an object, not {record!r}")
    where = "character"
    cx = _number(record, "cx", where)
    cy = _number(record, "cy", where)
    w = _number(record, "w", where)
    h = _number(record, "h", where)
    conf = _number(record, "conf", where)
    if w <= 0 or h <= 0:
        raise RecordError(f"character size must be positive, not {w}x{h}")
    if not 0.0 <= conf <= 1.0:
        raise RecordError(f"character confidence {conf} is outside [0, 1]")
    label = record.get("class")
    if not isinstance(label, str):
        raise RecordError(f"character class must be a string, not {label!r}")
    try:
        class_id = alphabet.class_id(label)
    except LayoutError as e:
        raise RecordError(str(e)) from None
    return CharDetection(
        center=Point2(cx, cy), width=w, height=h, class_id=class_id, confidence=conf
    )


def make_vehicle(record, frame_index: int) -> VehicleBox:
    if not isinstance(record, dict):
        raise RecordError(f"vehicle record must be an object, not {record!r}")
    vehicle_id = record.get("id")
    if not isinstance(vehicle_id, str):
        raise RecordError(f"vehicle id must be a string, not {vehicle_id!r}")
    return VehicleBox(
        frame_index=frame_index,
        box=make_box(record.get("box"), "vehicle box"),
        vehicle_id=vehicle_id,
        vehicle_class=str(record.get("class", "")),
    )


def make_frame(record, alphabet: Alphabet = DEFAULT_ALPHABET) -> PlateFrame:
    """
    Build a PlateFrame from one stream record::

        {
            "plate_id": "p-17",
            "frame": 4,
            "plate_box": [x, y, w, h],
            "vehicles": [{"id": "v-3", "box": [x, y, w, h], "class": "car"}],
            "chars": [{"cx": ..., "cy": ..., "w": ..., "h": ..., "class": "A", "conf": ...}],
        }
    """
    if not isinstance(record, dict):
        raise RecordError("record must be a JSON object")
    plate_id = record.get("plate_id")
    if not isinstance(plate_id, str):
        raise RecordError(f"plate_id must be a string, not {plate_id!r}")
    frame_index = record.get("frame")
    if isinstance(frame_index, bool) or not isinstance(frame_index, int):
        raise RecordError(f"frame must be an integer, not {frame_index!r}")
    chars = record.get("chars", [])
    vehicles = record.get("vehicles", [])
    if not isinstance(chars, list) or not isinstance(vehicles, list):
        raise RecordError("chars and vehicles must be lists")
    tilt_hint = record.get("tilt_hint")
    if tilt_hint is not None:
        tilt_hint = _number(record, "tilt_hint", "record")
    return PlateFrame(
        plate_id=plate_id,
        frame_index=frame_index,
        plate_box=make_box(record.get("plate_box"), "plate_box"),
        detections=[make_detection(c, alphabet) for c in chars],
        vehicles=[make_vehicle(v, frame_index) for v in vehicles],
        tilt_hint=tilt_hint,
    )


def frame_to_record(frame: PlateFrame, alphabet: Alphabet = DEFAULT_ALPHABET) -> dict:
    record = {
        "plate_id": frame.plate_id,
        "frame": frame.frame_index,
        "plate_box": list(frame.plate_box),
        "vehicles": [
            {"id": v.vehicle_id, "box": list(v.box), "class": v.vehicle_class}
            for v in frame.vehicles
        ],
        "chars": [
            {
                "cx": d.center[0],
                "cy": d.center[1],
                "w": d.width,
                "h": d.height,
                "class": alphabet.label(d.class_id),
                "conf": d.confidence,
            }
            for d in frame.detections
        ],
    }
    if frame.tilt_hint is not None:
        record["tilt_hint"] = frame.tilt_hint
    return record


def readout_to_record(
    plate_id: str,
    readout: PlateReadout,
    vehicle_id: Optional[str] = None,
    alpha_final: float = 0.0,
    vehicle_class: Optional[str] = None,
) -> dict:
    return {
        "plate_id": plate_id,
        "text": readout.text,
        "vehicle_id": vehicle_id,
        "vehicle_class": vehicle_class,
        "chars": [
            {
                "class": c.label,
                "score": c.score,
                "cx": c.mean_position.x,
                "cy": c.mean_position.y,
            }
            for c in readout.per_char
        ],
        "alpha_final_deg": math.degrees(alpha_final),
    }


def match_plate_to_vehicle(plate_box: Box, vehicles: Sequence[VehicleBox]) -> Optional[str]:
    """
    The vehicle whose box contains the plate center.

    Nested candidates resolve to the smallest box, then to the lowest id.
    """
    center = plate_box.center
    containing = [v for v in vehicles if v.box.contains(center)]
    if not containing:
        return None
    return min(containing, key=lambda v: (v.box.area, v.vehicle_id)).vehicle_id


def associate_vehicle(frames: Sequence[PlateFrame]) -> Optional[str]:
    """
    Vehicle of a whole plate track: the most frequent per-frame match, the
    earliest matched on ties.
    """
    matches = [match_plate_to_vehicle(f.plate_box, f.vehicles) for f in frames]
    matches = [m for m in matches if m is not None]
    if not matches:
        return None
    counts = Counter(matches)
    best = max(counts.values())
    return next(m for m in matches if counts[m] == best)


def vehicle_class_of(
    frames: Sequence[PlateFrame], vehicle_id: Optional[str]
) -> Optional[str]:
    """Most frequent class reported for `vehicle_id`, the earliest on ties."""
    classes = [
        v.vehicle_class
        for f in frames
        for v in f.vehicles
        if v.vehicle_id == vehicle_id and v.vehicle_class
    ]
    if not classes:
        return None
    counts = Counter(classes)
    best = max(counts.values())
    return next(c for c in classes if counts[c] == best)
