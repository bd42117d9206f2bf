"""Python access to the seqchart engine.

Manifests, strategies and reports are exchanged as JSON; this wrapper
accepts and returns plain Python objects.
"""

import json

from . import _seqchart
from ._seqchart import ChartError, InapplicableStrategy, ManifestError

__all__ = [
    "ChartError",
    "InapplicableStrategy",
    "ManifestError",
    "compile",
    "course_length",
    "explore",
    "simulate",
    "validate",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def _strategy(strategy):
    return "" if strategy is None else _text(strategy)


def validate(manifest):
    """List of (node_id, rule, message) violations; empty when valid."""
    return list(_seqchart.validate(_text(manifest)))


def course_length(manifest):
    return _seqchart.course_length(_text(manifest))


def compile(manifest, strategy=None):
    """Returns (chart, compilation_map) as dicts."""
    chart, mapping = _seqchart.compile(_text(manifest), _strategy(strategy))
    return json.loads(chart), json.loads(mapping)


def simulate(manifest, policy="always-pass", seed=0, max_steps=10000, strategy=None):
    """Runs one session; returns (records, terminal) with terminal the status line."""
    lines = _seqchart.simulate(_text(manifest), policy, seed, max_steps, _strategy(strategy))
    parsed = [json.loads(line) for line in lines.splitlines()]
    return parsed[:-1], parsed[-1]


def explore(manifest, outcomes=("passed", "failed"), strategy=None):
    return json.loads(_seqchart.explore(_text(manifest), ",".join(outcomes), _strategy(strategy)))
