"""
Synthetic plate scenarios standing in for the character detector.

A scenario places the characters of a ground-truth plate on a line tilted by
`tilt_deg`, drifts them by `velocity` per frame and perturbs them with
Gaussian jitter. Every frame, each character may be missed, or read as a
visually similar class.

All random numbers of a scenario are drawn up front from one seeded
generator, so rendering the same frame under different applied rotations
uses the same draws and the only difference is the tilt seen by the
detector.
"""

import math
import string
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from traitlets import Dict as DictTrait
from traitlets import Float, Integer, List as ListTrait, TraitError, Unicode
from traitlets import default, validate
from traitlets.config import LoggingConfigurable

from .ctm import CharDetection
from .geometry import Point2
from .layout import DEFAULT_ALPHABET, Alphabet, LayoutError, LayoutSpec, disambiguate
from .objects import Box, PlateFrame, VehicleBox

# nominal character geometry, plate-local pixels
CHAR_WIDTH = 20.0
CHAR_HEIGHT = 40.0
CHAR_PITCH = 28.0
PLATE_MARGIN = 10.0

# plate box motion in image pixels per frame
_image_step = Point2(4.0, 0.0)
_image_origin = Point2(100.0, 300.0)

# tilt at which the confusion multiplier reaches 1 + gamma
TILT_NOISE_SCALE_DEG = 30.0

# pairs of classes a character detector plausibly mixes up, keyed by the
# merged class labels of the default alphabet
_similar_glyphs = {
    '0': ['D', 'Q', '8'],
    '1': ['7', 'T', 'L'],
    '2': ['Z'],
    '3': ['8'],
    '4': ['A'],
    '5': ['S'],
    '6': ['G'],
    '7': ['1', 'T'],
    '8': ['B', '3'],
    '9': ['6'],
    'A': ['4'],
    'B': ['8'],
    'C': ['G'],
    'D': ['0'],
    'E': ['F'],
    'F': ['E', 'P'],
    'G': ['6', 'C'],
    'H': ['M', 'N'],
    'J': ['U'],
    'K': ['X'],
    'L': ['1'],
    'M': ['H', 'N'],
    'N': ['M', 'H'],
    'P': ['R', 'F'],
    'Q': ['0'],
    'R': ['P'],
    'S': ['5'],
    'T': ['7', '1'],
    'U': ['V', 'J'],
    'V': ['U', 'Y'],
    'W': ['V'],
    'X': ['K', 'Y'],
    'Y': ['V', 'X'],
    'Z': ['2'],
}


class ScenarioError(ValueError):
    """Raised for scenarios that can't be generated."""


class ScenarioConfig(LoggingConfigurable):
    """Knobs of a synthetic plate scenario."""

    plate_text = Unicode(
        "",
        config=True,
        help="""
        Ground-truth plate string.

        Leave empty to draw a random string that fits `layout`.
        """,
    )

    layout = Unicode(
        "AAANNNN",
        config=True,
        help="""
        Layout template of the simulated plates, e.g. "AAA-NNNN" or "NNA/NNNNN".
        """,
    )

    n_frames = Integer(
        30,
        config=True,
        help="""
        Number of frames the plate is visible for.
        """,
    )

    tilt_deg = Float(
        0.0,
        config=True,
        help="""
        Static tilt of the plate in degrees, positive tilting down to the right.
        """,
    )

    jitter_sigma = Float(
        1.0,
        config=True,
        help="""
        Standard deviation in pixels of the Gaussian jitter on each character center.
        """,
    )

    miss_prob = Float(
        0.1,
        config=True,
        help="""
        Probability that a character is not detected in a frame.
        """,
    )

    confusion_prob = Float(
        0.15,
        config=True,
        help="""
        Probability that a detected character is read as another class in a
        frame, before the tilt multiplier.
        """,
    )

    confusion_table = DictTrait(
        config=True,
        help="""
        Classes each class may be confused with, by merged class label.

        Classes without an entry are confused with any other class.
        """,
    )

    velocity = ListTrait(
        Float(),
        default_value=[0.5, 0.0],
        minlen=2,
        maxlen=2,
        config=True,
        help="""
        Drift of the characters inside the plate box, in pixels per frame.
        """,
    )

    gamma_tilt_noise = Float(
        1.0,
        config=True,
        help="""
        Strength of the tilt-dependent confusion multiplier.

        A detector looking at a plate that is still tilted by `t` degrees
        confuses characters with probability
        `confusion_prob * (1 + gamma_tilt_noise * |t| / 30)`.
        The added part of that probability is drawn once per character, as a
        glyph distorted at a given tilt tends to be misread in every frame.
        Voting over frames cannot outvote such a misreading, so this
        correlation is what separates reading with and without adaptive
        rotation on tilted plates. Drawn per frame alone, the extra
        confusions mostly average out over the frames.
        """,
    )

    seed = Integer(
        0,
        config=True,
        help="""
        Seed of the random generator. Fixed seeds give identical scenarios.
        """,
    )

    @validate("miss_prob", "confusion_prob")
    def _validate_probability(self, proposal):
        value = proposal.value
        if not 0.0 <= value <= 1.0:
            raise TraitError(
                f"{proposal.trait.name} must be a probability in [0, 1], not {value}"
            )
        return value

    @validate("n_frames")
    def _validate_n_frames(self, proposal):
        if proposal.value < 1:
            raise TraitError(f"n_frames must be at least 1, not {proposal.value}")
        return proposal.value

    @validate("jitter_sigma", "gamma_tilt_noise")
    def _validate_non_negative(self, proposal):
        if not proposal.value >= 0:
            raise TraitError(
                f"{proposal.trait.name} must be non-negative, not {proposal.value}"
            )
        return proposal.value

    @validate("layout")
    def _validate_layout(self, proposal):
        try:
            LayoutSpec.parse(proposal.value)
        except LayoutError as e:
            raise TraitError(str(e))
        return proposal.value

    @default("confusion_table")
    def _confusion_table_default(self):
        return {label: list(similar) for label, similar in _similar_glyphs.items()}


def random_plate_text(layout: LayoutSpec, rng, alphabet: Alphabet = DEFAULT_ALPHABET):
    """Draw a plate string that fits `layout`.

    '?' slots only draw canonical classes, so the string has a single correct
    reading.
    """
    letters = string.ascii_uppercase
    digits = string.digits
    chars = []
    for slot in layout.pattern:
        pool = {'A': letters, 'N': digits}.get(slot, alphabet.classes)
        chars.append(pool[int(rng.integers(len(pool)))])
    return ''.join(chars)


def expected_reading(text: str, layout: LayoutSpec, alphabet: Alphabet = DEFAULT_ALPHABET):
    """The reading a perfect merged-class reader produces for `text`."""
    return disambiguate(alphabet.canonical(text.upper()), layout)


def _nominal_offsets(layout: LayoutSpec) -> Tuple[np.ndarray, float, float]:
    """Character offsets from the plate center for an untilted plate, and the plate size."""
    if layout.rows == 2:
        row_lengths = [layout.split, len(layout.pattern) - layout.split]
    else:
        row_lengths = [len(layout.pattern)]
    offsets = []
    row_gap = CHAR_HEIGHT + PLATE_MARGIN
    for row, length in enumerate(row_lengths):
        dy = (row - (len(row_lengths) - 1) / 2) * row_gap
        for i in range(length):
            offsets.append(((i - (length - 1) / 2) * CHAR_PITCH, dy))
    width = 2 * PLATE_MARGIN + CHAR_PITCH * (max(row_lengths) - 1) + CHAR_WIDTH
    height = len(row_lengths) * CHAR_HEIGHT + (len(row_lengths) + 1) * PLATE_MARGIN
    return np.array(offsets, dtype=float).reshape(-1, 2), width, height


class PlateScenario:
    """
    One simulated plate with all of its random draws.

    `render(frame_index, applied_alpha)` is a pure function of its arguments:
    character positions are always emitted in raw, unrectified plate
    coordinates, and `applied_alpha` only changes the tilt the simulated
    detector sees.
    """

    def __init__(
        self,
        config: ScenarioConfig,
        plate_id: str = "plate-0",
        seed: Optional[int] = None,
        plate_text: Optional[str] = None,
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ):
        try:
            self.layout = LayoutSpec.parse(config.layout)
        except LayoutError as e:
            raise ScenarioError(str(e)) from None
        self.config = config
        self.plate_id = plate_id
        self.alphabet = alphabet
        rng = np.random.default_rng(config.seed if seed is None else seed)

        text = (plate_text or config.plate_text).upper()
        if not text:
            text = random_plate_text(self.layout, rng, alphabet)
        if len(text) != len(self.layout.pattern):
            raise ScenarioError(
                f"plate text '{text}' does not fit layout {self.layout}"
            )
        unknown = [c for c in text if c not in alphabet]
        if unknown:
            raise ScenarioError(f"plate text '{text}' has unknown characters {unknown}")
        self.truth = text
        self.class_ids = [alphabet.class_id(c) for c in text]
        self._confusions = [self._confusion_options(c) for c in self.class_ids]

        n = len(text)
        frames = config.n_frames
        self._offsets, self.width, self.height = _nominal_offsets(self.layout)
        # draw order is fixed, every draw is made whether or not it is used
        self._jitter = rng.normal(0.0, 1.0, (frames, n, 2)) * config.jitter_sigma
        self._u_miss = rng.random((frames, n))
        self._u_confuse = rng.random((frames, n))
        self._u_choice = rng.random((frames, n))
        self._conf_true = rng.uniform(0.6, 0.95, (frames, n))
        self._conf_false = rng.uniform(0.3, 0.8, (frames, n))
        self._u_glyph = rng.random(n)
        self._u_glyph_choice = rng.random(n)

    def _confusion_options(self, class_id: int) -> List[int]:
        label = self.alphabet.label(class_id)
        similar = self.config.confusion_table.get(label)
        if similar:
            options = []
            for other in similar:
                try:
                    other_id = self.alphabet.class_id(other)
                except LayoutError:
                    raise ScenarioError(
                        f"confusion table entry '{other}' for '{label}' is not in the alphabet"
                    ) from None
                if other_id != class_id and other_id not in options:
                    options.append(other_id)
            if options:
                return options
        return [c for c in range(len(self.alphabet)) if c != class_id]

    @property
    def n_frames(self) -> int:
        return self.config.n_frames

    def tilt_confusion_prob(self, applied_alpha: float = 0.0) -> float:
        """Per-frame confusion probability at the tilt the detector sees."""
        effective = abs(self.config.tilt_deg - math.degrees(applied_alpha))
        multiplier = 1.0 + self.config.gamma_tilt_noise * effective / TILT_NOISE_SCALE_DEG
        return min(1.0, self.config.confusion_prob * multiplier)

    def centers(self, frame_index: int) -> np.ndarray:
        """Raw plate-local centers of every character at a frame, detected or not."""
        theta = math.radians(self.config.tilt_deg)
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        rotation = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
        tilted = self._offsets @ rotation.T
        drift = np.asarray(self.config.velocity, dtype=float) * frame_index
        center = np.array([self.width / 2, self.height / 2])
        return center + tilted + drift + self._jitter[frame_index]

    def plate_box(self, frame_index: int) -> Box:
        return Box(
            _image_origin.x + _image_step.x * frame_index,
            _image_origin.y + _image_step.y * frame_index,
            self.width,
            self.height,
        )

    def render(self, frame_index: int, applied_alpha: float = 0.0) -> PlateFrame:
        """Detections of one frame, seen through a crop rotated by `applied_alpha`."""
        if not 0 <= frame_index < self.n_frames:
            raise ScenarioError(
                f"frame {frame_index} is outside the scenario's {self.n_frames} frames"
            )
        t = frame_index
        base_prob = self.config.confusion_prob
        excess = self.tilt_confusion_prob(applied_alpha) - base_prob
        # the tilt excess only hits frames the base confusion left alone
        glyph_prob = excess / (1.0 - base_prob) if base_prob < 1.0 else 0.0

        detections = []
        for i, (cx, cy) in enumerate(self.centers(t)):
            if self._u_miss[t, i] < self.config.miss_prob:
                continue
            options = self._confusions[i]
            if self._u_confuse[t, i] < base_prob:
                class_id = options[int(self._u_choice[t, i] * len(options))]
                confidence = self._conf_false[t, i]
            elif self._u_glyph[i] < glyph_prob:
                class_id = options[int(self._u_glyph_choice[i] * len(options))]
                confidence = self._conf_false[t, i]
            else:
                class_id = self.class_ids[i]
                confidence = self._conf_true[t, i]
            detections.append(
                CharDetection(
                    center=Point2(float(cx), float(cy)),
                    width=CHAR_WIDTH,
                    height=CHAR_HEIGHT,
                    class_id=class_id,
                    confidence=float(confidence),
                )
            )

        box = self.plate_box(t)
        vehicle = VehicleBox(
            frame_index=t,
            box=Box(box.x - 60.0, box.y - 120.0, box.w + 120.0, box.h + 160.0),
            vehicle_id=f"vehicle-{self.plate_id}",
            vehicle_class="car",
        )
        return PlateFrame(
            plate_id=self.plate_id,
            frame_index=t,
            plate_box=box,
            detections=detections,
            vehicles=[vehicle],
            tilt_hint=self.config.tilt_deg,
        )

    def frames(self, applied_alpha: float = 0.0) -> List[PlateFrame]:
        return [self.render(t, applied_alpha) for t in range(self.n_frames)]


def simulate(config: ScenarioConfig, plate_id: str = "plate-0") -> Tuple[List[PlateFrame], str]:
    """Frames of one scenario as a fixed detector would report them, and the truth."""
    scenario = PlateScenario(config, plate_id=plate_id)
    return scenario.frames(), scenario.truth


def scenario_batch(
    config: ScenarioConfig,
    n_plates: int,
    plate_texts: Sequence[str] = (),
    alphabet: Alphabet = DEFAULT_ALPHABET,
) -> List[PlateScenario]:
    """
    `n_plates` independent scenarios sharing `config`.

    Per-plate seeds are spawned from `config.seed`. Explicit `plate_texts`
    are used in turn for the first plates.
    """
    if n_plates < 0:
        raise ScenarioError(f"number of plates must be non-negative, not {n_plates}")
    seeds = np.random.SeedSequence(config.seed).spawn(n_plates)
    width = max(4, len(str(max(n_plates - 1, 0))))
    scenarios = []
    for i, seed in enumerate(seeds):
        text = plate_texts[i] if i < len(plate_texts) else None
        scenarios.append(
            PlateScenario(
                config,
                plate_id=f"plate-{i:0{width}d}",
                seed=int(seed.generate_state(1)[0]),
                plate_text=text,
                alphabet=alphabet,
            )
        )
    return scenarios


def load_scenario_file(path) -> Tuple[Dict, List[str]]:
    """
    Read a YAML scenario file::

        tilt_deg: 20
        miss_prob: 0.1
        plates: [ABC1234, AIQ1056]

    Returns the ScenarioConfig overrides and the explicit plate texts.
    """
    with open(path, encoding="utf8") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ScenarioError(f"invalid scenario file {path}: {e}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"scenario file {path} must hold a mapping")
    data = dict(data)
    plates = data.pop("plates", None) or []
    if not isinstance(plates, list) or not all(isinstance(p, str) for p in plates):
        raise ScenarioError(f"'plates' in {path} must be a list of strings")
    known = ScenarioConfig.class_trait_names(config=True)
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ScenarioError(f"unknown scenario settings in {path}: {', '.join(unknown)}")
    return data, plates


def apply_overrides(config: ScenarioConfig, overrides: Dict):
    for key, value in overrides.items():
        try:
            setattr(config, key, value)
        except TraitError as e:
            raise ScenarioError(f"invalid scenario setting {key}: {e}") from None
