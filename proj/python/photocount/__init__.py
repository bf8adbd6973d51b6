"""Photon-number statistics through a lossy number-resolving detector."""

import json as _json

from ._photocount import *  # noqa: F401,F403
from ._photocount import _analyze_histogram_json, _source_from_json


def source_from_dict(spec):
    """Build a SourceSpec from the run-config ``source`` block."""
    return _source_from_json(_json.dumps(spec))


def analyze_histogram(histogram, cutoff=10):
    """Full histogram analysis as a dict (same layout as analysis.json)."""
    return _json.loads(_analyze_histogram_json(histogram, cutoff))
