"""Exception types raised across the package."""


class SpamlabError(Exception):
    """Base class for all spamlab errors."""


class MissingPath(SpamlabError):
    """A corpus path does not exist."""


class EmptyCorpus(SpamlabError):
    """A corpus source yielded zero bodies."""


class MalformedAddress(SpamlabError):
    """An email address is missing its '@' separator."""


class EmptyDictionary(SpamlabError):
    """Random-word injection was requested with an empty dictionary."""


class CalibrationFailed(SpamlabError):
    """The target spam fraction is unreachable with the configured senders."""


class WrapperCrashed(SpamlabError):
    """An external filter process exited nonzero or produced malformed output."""


class TrainerFailed(SpamlabError):
    """A filter trainer could not be run or rejected its input."""


class EmptyTrainingSet(SpamlabError):
    """A training mbox contained no messages."""


class IoFailure(SpamlabError):
    """Writing training sets or reports failed at the filesystem level."""


class NoSpamEvaluated(SpamlabError):
    """FAR is undefined: no spam messages were evaluated."""


class NoHamEvaluated(SpamlabError):
    """FRR is undefined: no ham messages were evaluated."""


class ConfigInvalid(SpamlabError):
    """A simulation or scenario config file failed validation."""


class CorpusMissing(SpamlabError):
    """A scenario references a corpus path that cannot be loaded."""
