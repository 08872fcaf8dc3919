"""Test the PlateReader configurable"""

import math

import pytest
from traitlets import TraitError

from conftest import plate_frame, vehicle
from platefusion.ctm import CtmError
from platefusion.layout import LayoutSpec
from platefusion.reader import PlateReader
from platefusion.simulate import ScenarioConfig, scenario_batch


def test_defaults():
    reader = PlateReader()
    assert reader.epsilon == 0.5
    assert reader.epsilon_mode == "relative"
    assert reader.min_hits == 2
    assert reader.layout_spec == LayoutSpec.parse("AAANNNN")
    assert reader.enable_rotation
    assert reader.workers == 1


def test_from_config(config):
    config.PlateReader.min_hits = 4
    config.PlateReader.epsilon_mode = "absolute"
    config.PlateReader.epsilon = 6.0
    reader = PlateReader(config=config)
    ctm = reader.ctm_config
    assert ctm.min_hits == 4
    assert ctm.epsilon_mode == "absolute"
    assert ctm.epsilon == 6.0
    assert ctm.layout == LayoutSpec.parse("AAA-NNNN")
    assert ctm.enable_rotation


@pytest.mark.parametrize(
    "trait, value",
    [
        ("epsilon", 0.0),
        ("epsilon", -1.0),
        ("min_hits", 0),
        ("workers", 0),
        ("layout", "AAX"),
        ("epsilon_mode", "pixels"),
    ],
)
def test_invalid_traits(trait, value):
    with pytest.raises(TraitError):
        PlateReader(**{trait: value})


def test_read_plate():
    box = (0, 0, 1000, 1000)
    frames = [
        plate_frame(
            "ABC1234", frame_index=i, tilt_deg=8, vehicles=[vehicle("v-7", box, i)]
        )
        for i in range(6)
    ]
    result = PlateReader().read_plate("p-1", frames)
    assert result.plate_id == "p-1"
    assert result.readout.text == "ABC1234"
    assert result.vehicle_id == "v-7"
    assert result.vehicle_class == "car"
    assert math.degrees(result.alpha) == pytest.approx(8.0, abs=1e-6)

    record = result.to_record()
    assert record["text"] == "ABC1234"
    assert record["vehicle_id"] == "v-7"
    assert record["vehicle_class"] == "car"
    assert record["alpha_final_deg"] == pytest.approx(8.0, abs=1e-6)


def test_read_plate_without_rotation():
    frames = [plate_frame("ABC1234", frame_index=i, tilt_deg=8) for i in range(3)]
    result = PlateReader(enable_rotation=False).read_plate("p-1", frames)
    assert result.alpha == 0.0
    assert result.vehicle_id is None
    assert result.vehicle_class is None
    assert result.readout.text == "ABC1234"


def test_read_plate_logs_layout_mismatch(caplog):
    frames = [plate_frame("ABC123", frame_index=i) for i in range(3)]
    result = PlateReader().read_plate("p-short", frames)
    assert result.readout.text == "ABC123"
    assert any("does not fit layout" in r.getMessage() for r in caplog.records)


def test_read_plate_logs_empty(caplog):
    result = PlateReader().read_plate("p-once", [plate_frame("ABC1234")])
    assert result.readout.text == ""
    assert any("enough observations" in r.getMessage() for r in caplog.records)


def test_read_plate_no_frames():
    with pytest.raises(CtmError):
        PlateReader().read_plate("p-1", [])


def test_read_all_keeps_order():
    groups = {
        plate_id: [plate_frame(text, i, plate_id=plate_id) for i in range(3)]
        for plate_id, text in [("z", "ZZZ9999"), ("a", "AAA1111"), ("m", "MMM5555")]
    }
    results = PlateReader(workers=3).read_all(groups)
    assert [r.plate_id for r in results] == ["z", "a", "m"]
    assert [r.readout.text for r in results] == ["ZZZ9999", "AAA1111", "MMM5555"]


def test_workers_do_not_change_readouts(config):
    cfg = ScenarioConfig(config=config, tilt_deg=12.0, n_frames=12)
    groups = {p.plate_id: p.frames() for p in scenario_batch(cfg, 30)}
    serial = PlateReader(config=config).read_all(groups)
    parallel = PlateReader(config=config, workers=4).read_all(groups)
    assert serial == parallel
