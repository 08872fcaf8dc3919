"""
Line-delimited JSON detection streams: one frame record per line.
"""

import json
import sys
from collections import OrderedDict
from typing import Dict, Iterable, List, Union

from traitlets import Bool, Instance, List as ListTrait, default
from traitlets.config import LoggingConfigurable

from .layout import DEFAULT_ALPHABET, Alphabet
from .objects import PlateFrame, RecordError, frame_to_record, make_frame


class StreamError(ValueError):
    """A malformed stream line, with its 1-based line number."""

    def __init__(self, line_number, message, path=""):
        self.line_number = line_number
        self.message = message
        self.path = path
        super().__init__(f"{path or 'stream'}:{line_number}: {message}")


class StreamReader(LoggingConfigurable):
    """
    Reads a detection stream and groups its frames per plate.

    Plates are returned in order of first appearance, frames in stream order.
    In strict mode the first malformed line aborts the read; otherwise
    malformed lines are logged, collected in `errors`, and skipped.
    """

    strict = Bool(
        True,
        config=True,
        help="""
        Abort on the first malformed record.

        Set this to false to skip malformed records with a warning instead.
        """,
    )

    alphabet = Instance(Alphabet)

    errors = ListTrait(
        help="""
        StreamError for every record skipped by the last lenient read.
        """,
    )

    @default("alphabet")
    def _alphabet_default(self):
        return DEFAULT_ALPHABET

    def _fail(self, error):
        if self.strict:
            self.log.error("%s", error)
            raise error
        self.log.warning("Skipping frame record: %s", error)
        self.errors.append(error)

    def iter_frames(
        self, lines: Iterable[Union[str, bytes]], path=""
    ) -> Iterable[PlateFrame]:
        """Parse stream lines, given as text or as undecoded bytes."""
        last_frame = {}
        for line_number, line in enumerate(lines, start=1):
            if isinstance(line, bytes):
                try:
                    line = line.decode("utf8")
                except UnicodeDecodeError:
                    self._fail(StreamError(line_number, "invalid UTF-8", path))
                    continue
            if not line.strip():
                continue
            try:
                frame = make_frame(json.loads(line), self.alphabet)
            except json.JSONDecodeError as e:
                self._fail(StreamError(line_number, f"invalid JSON: {e.msg}", path))
                continue
            except RecordError as e:
                self._fail(StreamError(line_number, str(e), path))
                continue

            previous = last_frame.get(frame.plate_id)
            if previous is not None and frame.frame_index <= previous:
                self._fail(
                    StreamError(
                        line_number,
                        f"frame {frame.frame_index} of plate {frame.plate_id}"
                        f" does not follow frame {previous}",
                        path,
                    )
                )
                continue
            last_frame[frame.plate_id] = frame.frame_index
            yield frame

    def read(self, path) -> Dict[str, List[PlateFrame]]:
        """Read a stream file into {plate_id: [frames]}."""
        self.errors = []
        groups = OrderedDict()
        with open(path, "rb") as f:
            for frame in self.iter_frames(f, path=str(path)):
                groups.setdefault(frame.plate_id, []).append(frame)
        self.log.info(
            "Read %i frames of %i plates from %s (%i skipped)",
            sum(len(frames) for frames in groups.values()),
            len(groups),
            path,
            len(self.errors),
        )
        return groups


def read_stream(path, strict=True, **kwargs) -> Dict[str, List[PlateFrame]]:
    return StreamReader(strict=strict, **kwargs).read(path)


def _write_lines(path, records):
    if str(path) == "-":
        for record in records:
            sys.stdout.write(json.dumps(record) + "\n")
        return
    with open(path, "w", encoding="utf8") as f:
        for record in records:
            f.write(json.dumps(record))
            f.write("\n")


def write_stream(path, frames: Iterable[PlateFrame], alphabet: Alphabet = DEFAULT_ALPHABET):
    _write_lines(path, (frame_to_record(frame, alphabet) for frame in frames))


def write_records(path, records: Iterable[dict]):
    _write_lines(path, records)
