"""Superpixel graph tracker: Python bindings over the C++ core."""

import json

from ._gcntrack import *  # noqa: F401,F403
from ._gcntrack import (
    _default_tracker_config,
    _synth,
    _synthetic_suite,
    _track,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def default_tracker_config():
    return json.loads(_default_tracker_config())


def synthetic_suite():
    return json.loads(_synthetic_suite())


def synth(spec=None):
    """Renders a synthetic sequence; returns (frames, masks) as uint8 arrays."""
    return _synth(json.dumps(spec or {}))


def track(frames, initial_mask, config=None):
    """Tracks from `initial_mask` on frames[0].

    Returns (masks, boxes, diagnostics); boxes are (x, y, w, h) or None.
    """
    return _track(list(frames), initial_mask, json.dumps(config) if config else "")
