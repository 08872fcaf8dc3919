"""
Plate geometry: slope estimation over character centers, accumulation of the
rectification angle across frames, and rotation of plate-local coordinates.

Coordinates are plate-local pixels with y pointing down. Angles are radians
everywhere in this module; degrees only appear at I/O boundaries.
"""

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np

# slope denominators below this are treated as a vertical stack of points
SLOPE_TOLERANCE = 1e-9

# |alpha| never reaches vertical
MAX_ALPHA = math.radians(89.0)


class GeometryError(ValueError):
    """Raised for invalid geometric input."""


class Point2(NamedTuple):
    x: float
    y: float


class SlopeEstimate(NamedTuple):
    """Least-squares slope of the line through a set of character centers.

    When `defined` is False the slope `a` is meaningless and must not be read.
    """

    a: float
    n: int
    defined: bool


class RotationState(NamedTuple):
    """Per-plate rectification state.

    `alpha` is the accumulated angle applied to the current frame, `beta` the
    residual angle estimated on the last processed frame.
    """

    alpha: float = 0.0
    beta: float = 0.0
    frame_index: int = 0


def _as_array(centers):
    points = np.asarray(centers, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(points)):
        raise GeometryError("invalid coordinate")
    return points


def estimate_slope(centers: Sequence[Point2]) -> SlopeEstimate:
    """
    Estimate the slope of the line through character centers.

    Computes::

        a = (sum(x_i * y_i) - n * mean(x) * mean(y)) / (sum(x_i ** 2) - n * mean(x) ** 2)

    in its centered form, which is algebraically identical but keeps
    translated inputs exact. Fewer than two points, or points stacked on a
    vertical line, give an undefined estimate.
    """
    if len(centers) == 0:
        raise GeometryError("no character centers")
    points = _as_array(centers)
    n = len(points)
    if n < 2:
        return SlopeEstimate(a=0.0, n=n, defined=False)

    dx = points[:, 0] - points[:, 0].mean()
    dy = points[:, 1] - points[:, 1].mean()
    den = float(np.dot(dx, dx))
    if den < SLOPE_TOLERANCE:
        return SlopeEstimate(a=0.0, n=n, defined=False)
    return SlopeEstimate(a=float(np.dot(dx, dy)) / den, n=n, defined=True)


def slope_to_angle(est: SlopeEstimate) -> float:
    """Angle between the fitted line and the horizontal axis, in (-pi/2, pi/2)."""
    if not est.defined:
        raise GeometryError("degenerate slope")
    return math.atan(est.a)


def residual_angle(centers: Sequence[Point2]) -> float:
    """
    Residual tilt of already rectified centers.

    Frames without a usable slope (no centers, a single center, or a vertical
    stack) contribute 0 so the rotation state is carried forward unchanged.
    """
    if len(centers) == 0:
        return 0.0
    est = estimate_slope(centers)
    if not est.defined:
        return 0.0
    return slope_to_angle(est)


def clamp_angle(alpha: float) -> float:
    return max(-MAX_ALPHA, min(MAX_ALPHA, alpha))


def update_rotation(state: RotationState, beta: Optional[float]) -> RotationState:
    """
    Accumulate one frame's residual angle: alpha_t = alpha_{t-1} + beta_{t-1}.

    `beta` is None for a frame that produced no defined slope, which is the
    same as a zero residual.
    """
    if beta is None:
        beta = 0.0
    if not (math.isfinite(beta) and math.isfinite(state.alpha)):
        raise GeometryError("invalid angle")
    return RotationState(
        alpha=clamp_angle(state.alpha + beta),
        beta=beta,
        frame_index=state.frame_index + 1,
    )


def rectify_points(centers: Sequence[Point2], alpha: float, pivot: Point2):
    """
    Rotate every center by -alpha about the pivot.

    A plate whose characters lie on a line of angle alpha comes out with its
    characters on a horizontal line. Pairwise distances are preserved.
    """
    if not math.isfinite(alpha):
        raise GeometryError("invalid angle")
    if len(centers) == 0:
        return []
    points = _as_array(centers)
    px, py = pivot
    cos_a = math.cos(alpha)
    sin_a = math.sin(alpha)
    dx = points[:, 0] - px
    dy = points[:, 1] - py
    xs = px + dx * cos_a + dy * sin_a
    ys = py - dx * sin_a + dy * cos_a
    return [Point2(float(x), float(y)) for x, y in zip(xs, ys)]
