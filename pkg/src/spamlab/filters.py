"""Filter abstraction: builtin filters, the external wrapper protocol, the
trainer protocol, and training-set emission.

External filters are arbitrary commands that read one rendered message on
stdin and print one line "spam" or "ham" (case-insensitive), optionally
followed by a score. Server-level filters find the connection-log path in
the SPAMLAB_CONNLOG environment variable. Trainers are commands invoked
with the ham and spam mbox paths as their two arguments.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import Label, Message, render_message, write_mbox
from .errors import IoFailure, TrainerFailed, WrapperCrashed

CONNLOG_ENV_VAR = "SPAMLAB_CONNLOG"


class Level(Enum):
    """Deployment level of a filter."""

    USER = "U"
    SERVER = "S"


@dataclass(frozen=True)
class Verdict:
    """A filter's classification, with an optional confidence score."""

    label: Label
    score: float | None = None


@dataclass(frozen=True)
class FilterBinding:
    """How one filter participates in an evaluation run.

    Exactly one of builtin/command is set. needs_connection_log implies
    SERVER level: user-level filters never see the log.
    """

    name: str
    level: Level
    builtin: str | None = None
    command: str | None = None
    trainer_command: str | None = None
    needs_training: bool = False
    needs_connection_log: bool = False

    def __post_init__(self):
        if (self.builtin is None) == (self.command is None):
            raise ValueError("binding needs exactly one of builtin or command")
        if self.needs_connection_log and self.level is not Level.SERVER:
            raise ValueError("needs_connection_log requires SERVER level")


class BayesFilterState:
    """Builtin Bayes filter: a general model plus optional per-user models.

    A mailbox gets its own model only once it has seen at least
    min_user_messages of each class in training; thinner mailboxes stay on
    the general model, whose vocabulary coverage is far better.
    """

    def __init__(
        self,
        binding: FilterBinding,
        n: int,
        threshold: float,
        min_user_messages: int = 5,
    ):
        self.binding = binding
        self.n = n
        self.threshold = threshold
        self.min_user_messages = min_user_messages
        self.model = None
        self.user_models: dict[str, object] = {}

    def train(self, ham, spam) -> None:
        from . import bayes

        self.model = bayes.train_bayes(ham, spam, self.n, self.threshold)

    def classify(self, m: Message, context=None) -> Verdict:
        from . import bayes

        model = self.model
        if self.user_models:
            # user-level deployment: the first recipient's mailbox filter
            model = self.user_models.get(m.recipients[0], model)
        if model is None:
            raise TrainerFailed(f"{self.binding.name}: classify before train")
        return bayes.bayes_classify(model, m)


class VolumeFilterState:
    """Builtin volume filter over its own view of the connection stream."""

    def __init__(self, binding, window_size, threshold, count_recipients):
        from .bulk import VolumeWindow

        self.binding = binding
        self.window = VolumeWindow(
            window_size=window_size,
            threshold=threshold,
            count_recipients=count_recipients,
        )

    def classify(self, m: Message, context=None) -> Verdict:
        from . import bulk

        return bulk.volume_classify(self.window, m)


class ChecksumFilterState:
    """Builtin checksum clearinghouse filter with a local database."""

    def __init__(self, binding, fuzzy: bool, bulk_threshold: int):
        from .bulk import ChecksumDB

        self.binding = binding
        self.fuzzy = fuzzy
        self.db = ChecksumDB(bulk_threshold=bulk_threshold)

    def classify(self, m: Message, context=None) -> Verdict:
        from . import bulk

        return bulk.checksum_classify(self.db, m, self.fuzzy)


class ConstantFilterState:
    """Reference filter that returns one fixed label."""

    def __init__(self, binding, label: Label):
        self.binding = binding
        self.label = label

    def classify(self, m: Message, context=None) -> Verdict:
        return Verdict(self.label, None)


class ExternalFilterState:
    """Wrapper around an external classify command and optional trainer."""

    def __init__(self, binding: FilterBinding):
        self.binding = binding

    def train(self, ham, spam) -> None:
        if not self.binding.trainer_command:
            raise TrainerFailed(f"{self.binding.name}: no trainer command")
        argv = shlex.split(self.binding.trainer_command) + [str(ham), str(spam)]
        try:
            proc = subprocess.run(argv, capture_output=True)
        except OSError as exc:
            raise TrainerFailed(f"{self.binding.name}: {exc}") from exc
        if proc.returncode != 0:
            raise TrainerFailed(
                f"{self.binding.name}: trainer exited {proc.returncode}"
            )

    def classify(self, m: Message, context=None) -> Verdict:
        argv = shlex.split(self.binding.command)
        env = None
        if self.binding.needs_connection_log:
            env = os.environ.copy()
            env[CONNLOG_ENV_VAR] = str(context)
        try:
            proc = subprocess.run(
                argv,
                input=render_message(m).encode("utf-8"),
                capture_output=True,
                env=env,
            )
        except OSError as exc:
            raise WrapperCrashed(f"{self.binding.name}: {exc}") from exc
        if proc.returncode != 0:
            raise WrapperCrashed(
                f"{self.binding.name}: exited {proc.returncode}"
            )
        return _parse_wrapper_output(self.binding.name, proc.stdout)


def _parse_wrapper_output(name: str, stdout: bytes) -> Verdict:
    lines = [
        line for line in stdout.decode("utf-8", errors="replace").splitlines()
        if line.strip()
    ]
    if not lines:
        raise WrapperCrashed(f"{name}: no output")
    parts = lines[0].split()
    if len(parts) > 2 or parts[0].lower() not in ("spam", "ham"):
        raise WrapperCrashed(f"{name}: malformed output {lines[0]!r}")
    score = None
    if len(parts) == 2:
        try:
            score = float(parts[1])
        except ValueError as exc:
            raise WrapperCrashed(f"{name}: bad score {parts[1]!r}") from exc
    label = Label.SPAM if parts[0].lower() == "spam" else Label.HAM
    return Verdict(label, score)


def _build_bayes(binding, options):
    from . import bayes

    return BayesFilterState(
        binding,
        n=int(options.get("n", bayes.DEFAULT_N_INTERESTING)),
        threshold=float(options.get("threshold", bayes.DEFAULT_THRESHOLD)),
        min_user_messages=int(options.get("min_user_messages", 5)),
    )


def _build_volume(binding, options):
    from . import bulk

    return VolumeFilterState(
        binding,
        window_size=int(options.get("window", bulk.DEFAULT_WINDOW_SIZE)),
        threshold=int(options.get("threshold", bulk.DEFAULT_VOLUME_THRESHOLD)),
        count_recipients=options.get("count_recipients", "false").lower()
        in ("1", "true", "yes"),
    )


def _build_checksum(fuzzy):
    def build(binding, options):
        from . import bulk

        return ChecksumFilterState(
            binding,
            fuzzy=fuzzy,
            bulk_threshold=int(
                options.get("threshold", bulk.DEFAULT_BULK_THRESHOLD)
            ),
        )

    return build


BUILTIN_FILTERS = {
    "bayes": _build_bayes,
    "volume": _build_volume,
    "checksum": _build_checksum(fuzzy=False),
    "checksum-fuzzy": _build_checksum(fuzzy=True),
    "pass-all": lambda binding, options: ConstantFilterState(binding, Label.HAM),
    "block-all": lambda binding, options: ConstantFilterState(binding, Label.SPAM),
}

# builtin ids with intrinsic protocol needs
BUILTIN_NEEDS_TRAINING = {"bayes"}
BUILTIN_NEEDS_CONNLOG = {"volume"}


def build_filter(binding: FilterBinding, options: dict | None = None):
    """Instantiate the stateful filter object for a binding."""
    options = options or {}
    if binding.builtin is not None:
        try:
            factory = BUILTIN_FILTERS[binding.builtin]
        except KeyError:
            raise ValueError(f"unknown builtin filter {binding.builtin!r}")
        return factory(binding, options)
    return ExternalFilterState(binding)


def classify(filt, m: Message, context=None) -> Verdict:
    """Classify one message with a built filter.

    context is the connection-log path and must be provided exactly when
    the binding requires it.
    """
    if filt.binding.needs_connection_log and context is None:
        raise ValueError(f"{filt.binding.name}: connection log required")
    if not filt.binding.needs_connection_log:
        context = None
    return filt.classify(m, context)


def train(filt, ham, spam) -> None:
    """Train a built filter from a ham and a spam mbox path."""
    if not filt.binding.needs_training:
        raise TrainerFailed(f"{filt.binding.name}: filter takes no training")
    for path in (ham, spam):
        if not Path(path).is_file():
            raise TrainerFailed(f"{filt.binding.name}: missing {path}")
    filt.train(ham, spam)


def _safe_filename(address: str) -> str:
    return "".join(
        c if c.isalnum() or c in ".-+" else "_" for c in address
    )


def emit_training_sets(stream, per_user: bool, out_dir):
    """Write labelled traffic to training mboxes.

    per_user=False writes ham.mbox and spam.mbox with every message.
    per_user=True writes one <recipient>.ham.mbox / <recipient>.spam.mbox
    pair per recipient address, each containing the messages delivered to
    that recipient. Returns (ham paths, spam paths).
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not per_user:
            ham_path = out / "ham.mbox"
            spam_path = out / "spam.mbox"
            write_mbox(ham_path, [m for m in stream if m.truth is Label.HAM])
            write_mbox(spam_path, [m for m in stream if m.truth is Label.SPAM])
            return [ham_path], [spam_path]
        by_recipient: dict[str, list[Message]] = {}
        for m in stream:
            for addr in m.recipients:
                by_recipient.setdefault(addr, []).append(m)
        ham_paths, spam_paths = [], []
        for addr in sorted(by_recipient):
            base = _safe_filename(addr)
            ham_path = out / f"{base}.ham.mbox"
            spam_path = out / f"{base}.spam.mbox"
            delivered = by_recipient[addr]
            write_mbox(ham_path, [m for m in delivered if m.truth is Label.HAM])
            write_mbox(spam_path, [m for m in delivered if m.truth is Label.SPAM])
            ham_paths.append(ham_path)
            spam_paths.append(spam_path)
        return ham_paths, spam_paths
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
