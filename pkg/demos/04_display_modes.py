"""
Contrast windows, render modes, opacity
=======================================

Display values never touch the stored data.  A threshold window
rescales one channel for contrast, a render mode decides how labels are
shown, and an opacity override fades chosen vertices.
"""

import numpy as np

from surfannot import (
    ChannelData,
    OpacityOverride,
    RenderMode,
    ThresholdWindow,
    apply_threshold,
    compose_display,
    set_opacity_region,
)

values = np.array([0, 60, 120, 180, 255], dtype=np.uint8)

# map 60..180 onto the full 0..255 range
window = ThresholdWindow(lo=60, hi=180)
print("windowed:", apply_threshold(values, window).tolist())

# the default window is the identity, a disabled one too
print("identity:", apply_threshold(values, ThresholdWindow()).tolist())
print("disabled:", apply_threshold(values, ThresholdWindow(60, 180, enabled=False)).tolist())

# five vertices, middle three labelled
colours = ChannelData(values, values[::-1].copy())
labels = np.array([False, True, True, True, False])

rgba = compose_display(colours, labels, mode=RenderMode.ORIGINAL)
print("original:")
print(rgba)

# TwoTone ignores the channels completely: label colour on a dark base
rgba = compose_display(colours, labels, mode=RenderMode.TWO_TONE)
print("twotone:")
print(rgba)

# CutOut keeps real colours on labelled vertices, blocks out the rest
rgba = compose_display(colours, labels, mode=RenderMode.CUT_OUT)
print("cutout:")
print(rgba)

# fade vertices 0..2 to one quarter opacity
opacity = set_opacity_region(OpacityOverride.full(5), [0, 1, 2], 0.25)
rgba = compose_display(colours, labels, opacity=opacity, mode=RenderMode.ORIGINAL)
print("alpha bytes:", rgba[:, 3].tolist())
