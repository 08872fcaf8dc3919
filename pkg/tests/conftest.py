"""pytest fixtures for platefusion"""

import logging
import math

import pytest
from traitlets.config import Config

from platefusion.app import (
    BenchCommand,
    OracleCommand,
    PlateFusionApp,
    PlateFusionCommand,
    RunCommand,
    SimulateCommand,
)
from platefusion.ctm import CharDetection
from platefusion.geometry import Point2
from platefusion.layout import DEFAULT_ALPHABET
from platefusion.objects import Box, PlateFrame, VehicleBox

PITCH = 28.0


@pytest.fixture(autouse=True)
def traitlets_logging():
    """Ensure traitlets default logging is enabled

    so platefusion logs are captured by pytest.
    By default, there is a "NullHandler" so no logs are produced.
    """
    logger = logging.getLogger('traitlets')
    logger.setLevel(logging.DEBUG)
    logger.handlers = []


@pytest.fixture
def config():
    """Return a traitlets Config object

    The base configuration for testing.
    Use when constructing PlateReaders and ScenarioConfigs for tests
    """
    cfg = Config()
    cfg.PlateReader.layout = "AAA-NNNN"
    cfg.PlateReader.min_hits = 2
    cfg.ScenarioConfig.n_frames = 30
    cfg.ScenarioConfig.seed = 1234
    return cfg


@pytest.fixture
def noiseless(config):
    """Config for scenarios without jitter, misses or confusions"""
    config.ScenarioConfig.jitter_sigma = 0.0
    config.ScenarioConfig.miss_prob = 0.0
    config.ScenarioConfig.confusion_prob = 0.0
    return config


@pytest.fixture(autouse=True)
def clear_apps():
    """Applications are singletons, start every test without them"""
    classes = [
        PlateFusionApp,
        PlateFusionCommand,
        RunCommand,
        SimulateCommand,
        BenchCommand,
        OracleCommand,
    ]
    for cls in classes:
        cls.clear_instance()
    yield
    for cls in classes:
        cls.clear_instance()


def plate_frame(
    text,
    frame_index=0,
    tilt_deg=0.0,
    shift=(0.0, 0.0),
    plate_id="p-1",
    confidence=0.9,
    missing=(),
    vehicles=(),
):
    """A frame with one detection per character of `text`

    Characters sit on a line through the plate center, tilted by `tilt_deg`,
    `PITCH` pixels apart, and shifted by `shift` in plate coordinates.
    Indices in `missing` are left out.
    """
    width = PITCH * (len(text) + 1)
    height = 60.0
    theta = math.radians(tilt_deg)
    detections = []
    for i, char in enumerate(text):
        if i in missing:
            continue
        d = (i - (len(text) - 1) / 2) * PITCH
        detections.append(
            CharDetection(
                center=Point2(
                    width / 2 + d * math.cos(theta) + shift[0],
                    height / 2 + d * math.sin(theta) + shift[1],
                ),
                width=20.0,
                height=40.0,
                class_id=DEFAULT_ALPHABET.class_id(char),
                confidence=confidence,
            )
        )
    return PlateFrame(
        plate_id=plate_id,
        frame_index=frame_index,
        plate_box=Box(100.0 + frame_index, 200.0, width, height),
        detections=detections,
        vehicles=list(vehicles),
    )


def vehicle(vehicle_id, box, frame_index=0, vehicle_class="car"):
    return VehicleBox(
        frame_index=frame_index,
        box=Box(*box),
        vehicle_id=vehicle_id,
        vehicle_class=vehicle_class,
    )
