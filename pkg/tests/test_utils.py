import threading
import time

import pytest
from traitlets import TraitError

from platefusion.reader import PlateReader
from platefusion.simulate import ScenarioConfig
from platefusion.stream import StreamReader
from platefusion.utils import (
    flat_config_to_config,
    is_traitlets_config_file,
    map_in_order,
    parse_flat_config,
)

CLASSES = [PlateReader, StreamReader, ScenarioConfig]


def test_parse_flat_config():
    text = """
    # reader settings
    epsilon = 0.6
    min_hits=3
    layout = AAA-NNNN

    enable_rotation = false
    min_hits = 4
    """
    values = parse_flat_config(text)
    assert values == {
        "epsilon": "0.6",
        "min_hits": "4",
        "layout": "AAA-NNNN",
        "enable_rotation": "false",
    }


@pytest.mark.parametrize(
    "text, message",
    [
        ("epsilon 0.5", "expected 'key = value'"),
        ("= 3", "expected 'key = value'"),
        ("tilt = 3", "unknown config key 'tilt'"),
    ],
)
def test_parse_flat_config_errors(text, message):
    with pytest.raises(TraitError, match=message):
        parse_flat_config("\n" + text, source="flat.cfg")
    with pytest.raises(TraitError, match="flat.cfg:2"):
        parse_flat_config("\n" + text, source="flat.cfg")


def test_flat_config_to_config():
    values = parse_flat_config(
        "epsilon = 0.25\nepsilon_mode = absolute\nmin_hits = 3\n"
        "enable_rotation = False\nworkers = 2\nseed = 9\n"
        "gamma_tilt_noise = 0.5\nstrict = false\nlayout = NNA/NNNNN\n"
    )
    config = flat_config_to_config(values, CLASSES)
    assert config.PlateReader.epsilon == 0.25
    assert config.PlateReader.epsilon_mode == "absolute"
    assert config.PlateReader.min_hits == 3
    assert config.PlateReader.enable_rotation is False
    assert config.PlateReader.workers == 2
    assert config.PlateReader.layout == "NNA/NNNNN"
    assert config.ScenarioConfig.seed == 9
    assert config.ScenarioConfig.gamma_tilt_noise == 0.5
    assert config.StreamReader.strict is False

    reader = PlateReader(config=config)
    assert reader.min_hits == 3
    assert reader.layout_spec.rows == 2


@pytest.mark.parametrize(
    "text", ["min_hits = three", "epsilon = wide", "enable_rotation = maybe"]
)
def test_flat_config_bad_values(text):
    with pytest.raises(TraitError, match="invalid value"):
        flat_config_to_config(parse_flat_config(text), CLASSES)


@pytest.mark.parametrize(
    "path, expected",
    [
        ("platefusion_config.py", True),
        ("/etc/platefusion.json", True),
        ("platefusion.cfg", False),
        ("config", False),
    ],
)
def test_is_traitlets_config_file(path, expected):
    assert is_traitlets_config_file(path) == expected


@pytest.mark.parametrize("workers", [1, 2, 8])
def test_map_in_order(workers):
    def slow_square(x):
        # later items finish first
        time.sleep(0.001 * (10 - x))
        return x * x

    assert map_in_order(slow_square, range(10), workers) == [x * x for x in range(10)]


def test_map_in_order_serial_runs_in_caller():
    caller = threading.get_ident()
    assert map_in_order(lambda _: threading.get_ident(), [1, 2, 3], 1) == [caller] * 3
    assert map_in_order(str, [], 4) == []
