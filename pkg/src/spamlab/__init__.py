"""Deterministic email-traffic simulation and spam-filter benchmarking.

The package generates labelled ham and spam streams, runs them through
builtin and external filters at user or server level, and ranks the
filters by false acceptance rate, false rejection rate, and a combined
wrongness metric.
"""

from .corpus import (
    Corpus,
    Label,
    Message,
    load_corpus,
    parse_message,
    render_message,
    tokenize,
)
from .errors import SpamlabError
from .filters import FilterBinding, Level, Verdict, build_filter
from .trafficgen import (
    SimConfig,
    World,
    calibrate_spam_fraction,
    measure_spam_fraction,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "FilterBinding",
    "Label",
    "Level",
    "Message",
    "SimConfig",
    "SpamlabError",
    "Verdict",
    "World",
    "__version__",
    "build_filter",
    "calibrate_spam_fraction",
    "load_corpus",
    "measure_spam_fraction",
    "parse_message",
    "render_message",
    "step",
    "tokenize",
]
