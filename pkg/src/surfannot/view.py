"""Per-vertex display attributes: thresholding, opacity overrides, render modes.

Everything here is a pure function over snapshots; the session owner is the
only writer of OpacityOverride state.  Display output is a (V, 4) uint8
array laid out r, g, b, a per vertex, shipped to clients as raw bytes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mesh import ChannelData

# Fixed palette; centralized so a future configuration hook has one place to go.
LABEL_COLOUR = (255, 255, 0)
BLOCKOUT_COLOUR = (40, 40, 40)


class RenderMode(enum.Enum):
    ORIGINAL = "original"
    TWO_TONE = "twotone"
    CUT_OUT = "cutout"


@dataclass(frozen=True)
class ThresholdWindow:
    """Contrast window for one colour channel.

    Values at or below ``lo`` map to 0, at or above ``hi`` to 255, with a
    linear rescale between.  The default (0, 255) window is the identity.
    """

    lo: int = 0
    hi: int = 255
    enabled: bool = True

    def __post_init__(self):
        if not (0 <= self.lo <= 255 and 0 <= self.hi <= 255):
            raise ValueError(f"window bounds must lie in [0, 255], got ({self.lo}, {self.hi})")
        if self.lo > self.hi:
            raise ValueError(f"window bounds out of order: lo {self.lo} > hi {self.hi}")


DEFAULT_WINDOWS = (ThresholdWindow(), ThresholdWindow())


def apply_threshold(value, window: ThresholdWindow):
    """Window-rescale a byte value (or array of bytes) to [0, 255].

    Disabled windows are the identity.  A degenerate window (lo == hi) acts
    as a binary cut: 0 below the bound, 255 at or above it.
    """
    values = np.asarray(value)
    scalar = values.ndim == 0
    values = np.atleast_1d(values).astype(np.int64)
    if window.enabled:
        if window.lo == window.hi:
            out = np.where(values >= window.lo, 255, 0)
        else:
            scaled = (values - window.lo) * 255.0 / (window.hi - window.lo)
            out = np.floor(scaled + 0.5).astype(np.int64)
            out = np.clip(out, 0, 255)
            out[values <= window.lo] = 0
            out[values >= window.hi] = 255
    else:
        out = values
    out = out.astype(np.uint8)
    return int(out[0]) if scalar else out


class OpacityOverride:
    """Per-vertex alpha values in [0, 1]; defaults to fully opaque."""

    __slots__ = ("values",)

    def __init__(self, values):
        self.values = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
        if ((self.values < 0) | (self.values > 1)).any():
            raise ValueError("alpha values must lie in [0, 1]")

    @classmethod
    def full(cls, n: int) -> "OpacityOverride":
        return cls(np.ones(n))

    def __len__(self) -> int:
        return self.values.shape[0]


def set_opacity_region(opacity: OpacityOverride, region, alpha: float) -> OpacityOverride:
    """New override with ``alpha`` written on exactly the given vertices."""
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    region = np.asarray(sorted(region), dtype=np.int64)
    n = len(opacity)
    if region.size and (region.min() < 0 or region.max() >= n):
        raise IndexError(f"region vertex out of range for {n} vertices")
    values = opacity.values.copy()
    values[region] = alpha
    return OpacityOverride(values)


def compose_display(
    colours: ChannelData,
    labels: np.ndarray | None,
    thresholds: tuple[ThresholdWindow, ThresholdWindow] = DEFAULT_WINDOWS,
    opacity: OpacityOverride | None = None,
    mode: RenderMode = RenderMode.ORIGINAL,
) -> np.ndarray:
    """Compose per-vertex rgba bytes for one frame.

    Original shows thresholded channel colours (blue stays 0); TwoTone paints
    labelled vertices in the label colour on a dark base; CutOut keeps
    original colours on labelled vertices and blocks out the rest.  Alpha is
    the opacity override in every mode.

    Returns a (vertex_count, 4) uint8 array.
    """
    n = len(colours)
    if labels is not None and len(labels) != n:
        raise ValueError(f"labels length {len(labels)} does not match {n} vertices")
    if opacity is not None and len(opacity) != n:
        raise ValueError(f"opacity length {len(opacity)} does not match {n} vertices")
    mask = (
        np.asarray(labels, dtype=bool)
        if labels is not None
        else np.zeros(n, dtype=bool)
    )
    out = np.empty((n, 4), dtype=np.uint8)
    if mode is RenderMode.TWO_TONE:
        out[:, :3] = BLOCKOUT_COLOUR
        out[mask, :3] = LABEL_COLOUR
    else:
        out[:, 0] = apply_threshold(colours.channel0, thresholds[0])
        out[:, 1] = apply_threshold(colours.channel1, thresholds[1])
        out[:, 2] = 0
        if mode is RenderMode.CUT_OUT:
            out[~mask, :3] = BLOCKOUT_COLOUR
    if opacity is None:
        out[:, 3] = 255
    else:
        out[:, 3] = np.floor(opacity.values * 255.0 + 0.5).astype(np.uint8)
    return out
