"""
Fuse the per-frame character detections of a tracked license plate into one
plate reading.

Plates are read from a line-delimited JSON detection stream with::

    platefusion run detections.jsonl

or from Python with `platefusion.PlateReader`.
"""

# We export the main entry points here, so users can simply import
# platefusion.PlateReader instead of platefusion.reader.PlateReader.
from ._version import __version__, version_info
from .ctm import CtmConfig, PlateTracker, run_plate
from .evaluate import evaluate
from .reader import PlateReader
from .simulate import PlateScenario, ScenarioConfig, simulate
from .stream import read_stream, write_stream
