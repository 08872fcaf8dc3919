import json
import logging

import pytest

from conftest import plate_frame
from platefusion.stream import (
    StreamError,
    StreamReader,
    read_stream,
    write_records,
    write_stream,
)


def record(plate_id="p-1", frame=0, conf=0.9, **extra):
    data = {
        "plate_id": plate_id,
        "frame": frame,
        "plate_box": [100, 200, 84, 60],
        "chars": [
            {"cx": 28.0, "cy": 30.0, "w": 20.0, "h": 40.0, "class": "A", "conf": conf},
            {"cx": 56.0, "cy": 30.0, "w": 20.0, "h": 40.0, "class": "7", "conf": 0.8},
        ],
    }
    data.update(extra)
    return data


def write_lines(path, lines):
    path.write_text(
        "\n".join(line if isinstance(line, str) else json.dumps(line) for line in lines)
        + "\n"
    )
    return path


def test_read_stream(tmp_path):
    path = write_lines(tmp_path / "stream.jsonl", [record(frame=0), record(frame=1)])
    groups = read_stream(path)
    assert list(groups) == ["p-1"]
    assert [f.frame_index for f in groups["p-1"]] == [0, 1]
    assert len(groups["p-1"][0].detections) == 2


def test_read_stream_interleaved(tmp_path):
    path = write_lines(
        tmp_path / "stream.jsonl",
        [
            record("A", 0),
            record("B", 0),
            record("A", 1),
            record("B", 3),
            record("C", 7),
            record("A", 2),
        ],
    )
    groups = read_stream(path)
    assert list(groups) == ["A", "B", "C"]
    assert [f.frame_index for f in groups["A"]] == [0, 1, 2]
    assert [f.frame_index for f in groups["B"]] == [0, 3]


def test_read_stream_blank_lines(tmp_path):
    path = write_lines(tmp_path / "stream.jsonl", ["", record(frame=0), "   ", record(frame=1)])
    assert [f.frame_index for f in read_stream(path)["p-1"]] == [0, 1]


def test_strict_stream_error(tmp_path, caplog):
    path = write_lines(
        tmp_path / "stream.jsonl", [record(frame=0), record(frame=1, conf=1.7)]
    )
    with pytest.raises(StreamError) as exc_info:
        read_stream(path)
    error = exc_info.value
    assert error.line_number == 2
    assert "outside [0, 1]" in error.message
    assert str(error).startswith(f"{path}:2:")
    assert any(r.levelno == logging.ERROR for r in caplog.records)


def test_lenient_stream_skips(tmp_path, caplog):
    path = write_lines(
        tmp_path / "stream.jsonl",
        [record(frame=0), record(frame=1, conf=1.7), "{not json", record(frame=2)],
    )
    reader = StreamReader(strict=False)
    groups = reader.read(path)
    assert [f.frame_index for f in groups["p-1"]] == [0, 2]
    assert [e.line_number for e in reader.errors] == [2, 3]
    assert "invalid JSON" in reader.errors[1].message
    warnings = [r for r in caplog.records if r.levelno == logging.WARNING]
    assert len(warnings) == 2


def test_lenient_errors_reset(tmp_path):
    bad = write_lines(tmp_path / "bad.jsonl", ["[]"])
    good = write_lines(tmp_path / "good.jsonl", [record()])
    reader = StreamReader(strict=False)
    assert reader.read(bad) == {}
    assert len(reader.errors) == 1
    reader.read(good)
    assert reader.errors == []


def write_bytes_lines(path, lines):
    path.write_bytes(
        b"\n".join(
            line if isinstance(line, bytes) else json.dumps(line).encode()
            for line in lines
        )
        + b"\n"
    )
    return path


def test_invalid_utf8_line(tmp_path):
    path = write_bytes_lines(
        tmp_path / "stream.jsonl",
        [record(frame=0), b'{"plate_id": "\xff"}', record(frame=1)],
    )
    with pytest.raises(StreamError, match="invalid UTF-8") as exc_info:
        read_stream(path)
    assert exc_info.value.line_number == 2

    reader = StreamReader(strict=False)
    groups = reader.read(path)
    assert [f.frame_index for f in groups["p-1"]] == [0, 1]
    assert [e.line_number for e in reader.errors] == [2]


def test_non_ascii_plate_id(tmp_path):
    path = tmp_path / "stream.jsonl"
    line = json.dumps(record("placa-ção"), ensure_ascii=False)
    path.write_text(line + "\n", encoding="utf8")
    assert list(read_stream(path)) == ["placa-ção"]


@pytest.mark.parametrize("frames", [[0, 0], [3, 2]])
def test_non_increasing_frames(tmp_path, frames):
    path = write_lines(tmp_path / "stream.jsonl", [record(frame=f) for f in frames])
    with pytest.raises(StreamError, match="does not follow") as exc_info:
        read_stream(path)
    assert exc_info.value.line_number == 2


def test_invalid_json(tmp_path):
    path = write_lines(tmp_path / "stream.jsonl", [record(), '{"plate_id": '])
    with pytest.raises(StreamError, match="invalid JSON"):
        read_stream(path)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        read_stream(tmp_path / "nope.jsonl")


def test_write_read_stream(tmp_path):
    frames = [
        plate_frame("ABC1234", frame_index=0, plate_id="p-1"),
        plate_frame("XY", frame_index=0, plate_id="p-2"),
        plate_frame("ABC1234", frame_index=1, plate_id="p-1", missing=(0,)),
    ]
    path = tmp_path / "stream.jsonl"
    write_stream(path, frames)
    groups = read_stream(path)
    assert list(groups) == ["p-1", "p-2"]
    assert groups["p-1"] == [frames[0], frames[2]]
    assert groups["p-2"] == [frames[1]]


def test_write_records(tmp_path):
    path = tmp_path / "out.jsonl"
    write_records(path, [{"plate_id": "a", "text": "ABC1234"}, {"plate_id": "b"}])
    lines = path.read_text().splitlines()
    assert [json.loads(line)["plate_id"] for line in lines] == ["a", "b"]


def test_write_records_stdout(capsys):
    write_records("-", [{"plate_id": "a"}])
    assert json.loads(capsys.readouterr().out) == {"plate_id": "a"}
