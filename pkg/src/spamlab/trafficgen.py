"""Simulated email traffic generation.

Normal users draw bodies from topic-grouped corpora and send to
normally-distributed neighbours; mailing lists iterate their subscriber
database one delivery per step; spammers burst-deliver a payload to their
address database, optionally personalizing it, forging Received headers,
or appending random dictionary words. Every emitted message carries a
connection-log entry, and a fixed seed reproduces the stream bit for bit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from pathlib import Path

from .corpus import Corpus, Label, Message, tokenize
from .errors import (
    CalibrationFailed,
    ConfigInvalid,
    EmptyDictionary,
    MalformedAddress,
)

IDLE = "idle"
SENDING = "sending"

# Recipients of one non-personalized spam delivery batch share one message
# via Bcc; personalized spam is one message per recipient.
BCC_BATCH_SIZE = 50

_SUBJECT_MAX = 60
_FAKE_DOMAINS = (
    "mail-hub.example.com",
    "relay.fastmail.example",
    "smtp.zone.example.org",
    "mx.bulkpost.example.net",
)


@dataclass
class SimConfig:
    """Traffic topology and rate knobs; read from a key = value file."""

    n_users: int = 500
    n_mailing_lists: int = 5
    n_spammers: int = 10
    sigma: float = 10.0
    seed: int = 0
    steps: int = 1000
    target_spam_fraction: float = 0.4
    recipients_mean: float = 1.3
    send_prob: float = 0.1
    activation_prob: float = 0.05
    burst_rate: int = 50
    spammer_db_size: int = 20

    def validate(self) -> None:
        if self.sigma <= 0:
            raise ConfigInvalid("sigma must be > 0")
        if self.n_users < 2:
            raise ConfigInvalid("n_users must be >= 2")
        if not 0.0 <= self.target_spam_fraction <= 1.0:
            raise ConfigInvalid("target_spam_fraction must be in [0, 1]")
        if self.burst_rate < 1:
            raise ConfigInvalid("burst_rate must be >= 1")


_SIM_FIELD_TYPES = {
    "n_users": int,
    "n_mailing_lists": int,
    "n_spammers": int,
    "sigma": float,
    "seed": int,
    "steps": int,
    "target_spam_fraction": float,
    "recipients_mean": float,
    "send_prob": float,
    "activation_prob": float,
    "burst_rate": int,
    "spammer_db_size": int,
}


def parse_kv(path) -> dict[str, str]:
    """Parse a "key = value" config file; '#' lines are comments."""
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigInvalid(f"{path}: expected 'key = value', got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def load_sim_config(path) -> SimConfig:
    """Load a SimConfig from a key = value file and validate it."""
    values = parse_kv(path)
    kwargs = {}
    for key, text in values.items():
        if key not in _SIM_FIELD_TYPES:
            raise ConfigInvalid(f"{path}: unknown key {key!r}")
        try:
            kwargs[key] = _SIM_FIELD_TYPES[key](text)
        except ValueError as exc:
            raise ConfigInvalid(f"{path}: bad value for {key}: {text!r}") from exc
    config = SimConfig(**kwargs)
    config.validate()
    return config


@dataclass(frozen=True)
class ConnectionLogEntry:
    """One simulated server-log line."""

    step: int
    origin_host: str
    sender_addr: str
    recipient_count: int

    def as_line(self) -> str:
        return (
            f"{self.step}\t{self.origin_host}\t{self.sender_addr}"
            f"\t{self.recipient_count}"
        )


@dataclass
class NormalUser:
    index: int
    address: str
    host: str
    topic: str
    send_prob: float
    body_cursor: int = 0


@dataclass
class MailingList:
    index: int
    address: str
    host: str
    topic: str
    send_prob: float
    subscribers: tuple[str, ...] = ()
    cursor: int = 0
    current_body: str | None = None
    body_cursor: int = 0


@dataclass
class Spammer:
    index: int
    address: str
    host: str
    targets: tuple[str, ...] = ()
    activation_prob: float = 0.05
    burst_rate: int = 50
    personalize: bool = False
    bogus_headers: bool = False
    random_words: bool = False
    state: str = IDLE
    cursor: int = 0
    current_body: str = ""
    body_cursor: int = 0


def _round_away(x: float) -> int:
    # round half away from zero
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def select_recipients(sender_index, n_users, sigma, k, rng) -> list[int]:
    """Pick k distinct recipient indices near the sender.

    Each draw is (sender_index + round(o)) mod n_users with o from
    Normal(0, sigma^2); draws that land on the sender or on an already
    selected index are redrawn. k < n_users guarantees termination.
    """
    if k >= n_users:
        raise ValueError("k must be < n_users")
    chosen: list[int] = []
    taken = {sender_index}
    while len(chosen) < k:
        offset = _round_away(rng.normalvariate(0.0, sigma))
        idx = (sender_index + offset) % n_users
        if idx in taken:
            continue
        taken.add(idx)
        chosen.append(idx)
    return chosen


def personalize(body: str, recipient: str) -> str:
    """Prepend "Dear <login>,\\n" for the recipient's local part."""
    login, sep, _ = recipient.partition("@")
    if not sep:
        raise MalformedAddress(recipient)
    return f"Dear {login},\n{body}"


def add_bogus_received(m: Message, count: int, rng) -> Message:
    """Prepend count forged Received: entries before the real ones."""
    if count == 0:
        return m
    forged = tuple(
        f"from mx{rng.randrange(10000)}.{rng.choice(_FAKE_DOMAINS)}"
        f" by {rng.choice(_FAKE_DOMAINS)}; t{rng.randrange(86400):05d}"
        for _ in range(count)
    )
    return replace(m, received_headers=forged + m.received_headers)


def add_random_words(body: str, dictionary, count: int, rng) -> str:
    """Append a paragraph of count dictionary words after a blank line."""
    if count == 0:
        return body
    if not dictionary:
        raise EmptyDictionary("random-word injection needs a dictionary")
    words = " ".join(rng.choice(dictionary) for _ in range(count))
    return body + "\n\n" + words


def _geometric(rng, p: float) -> int:
    # inverse-CDF draw on {1, 2, ...} with mean 1/p
    if p >= 1.0:
        return 1
    return int(math.log(1.0 - rng.random()) / math.log(1.0 - p)) + 1


class World:
    """Mutable simulation state: sender profiles, corpora, and counters.

    Single-owner; advance with step(world, rng). Parallel runs should use
    independent worlds and independent rngs.
    """

    def __init__(
        self,
        config: SimConfig,
        ham_corpora: list[Corpus],
        spam_corpus: Corpus | None,
        rng,
        *,
        personalize_spam: bool = False,
        bogus_headers: bool = False,
        random_words: bool = False,
    ):
        config.validate()
        if not ham_corpora:
            raise ConfigInvalid("at least one ham corpus is required")
        if config.n_spammers > 0 and spam_corpus is None:
            raise ConfigInvalid("spammers configured but no spam corpus given")
        self.config = config
        self.corpora = {c.topic: c for c in ham_corpora}
        self.spam_corpus = spam_corpus
        self.step_no = 0
        self.msg_seq = 0

        topics = [c.topic for c in ham_corpora]
        addresses = [f"user{i}@example.org" for i in range(config.n_users)]
        self.users = [
            NormalUser(
                index=i,
                address=addresses[i],
                host=f"host{i}.client.example",
                topic=rng.choice(topics),
                send_prob=config.send_prob,
                body_cursor=i,
            )
            for i in range(config.n_users)
        ]
        n_subscribers = min(config.n_users, max(5, config.n_users // 10))
        self.mailing_lists = [
            MailingList(
                index=config.n_users + j,
                address=f"list{j}@lists.example.org",
                host=f"list{j}.lists.example",
                topic=rng.choice(topics),
                send_prob=config.send_prob,
                subscribers=tuple(rng.sample(addresses, n_subscribers)),
                body_cursor=j,
            )
            for j in range(config.n_mailing_lists)
        ]
        db_size = min(config.n_users, config.spammer_db_size)
        self.spammers = [
            Spammer(
                index=config.n_users + config.n_mailing_lists + k,
                address=f"deals{k}@bulkmail.example.net",
                host=f"relay{k}.open.example",
                targets=tuple(rng.sample(addresses, db_size)),
                activation_prob=config.activation_prob,
                burst_rate=config.burst_rate,
                personalize=personalize_spam,
                bogus_headers=bogus_headers,
                random_words=random_words,
            )
            for k in range(config.n_spammers)
        ]
        self.dictionary: list[str] = []
        if random_words:
            seen = set()
            for c in ham_corpora:
                for body in c.bodies:
                    seen.update(tokenize(body))
            self.dictionary = sorted(seen)[:2000]

    def _next_message_id(self, host: str) -> str:
        self.msg_seq += 1
        return f"<{self.msg_seq}.{self.step_no}@{host}>"


def _subject_for(body: str) -> str:
    for line in body.split("\n"):
        line = " ".join(line.split())
        if line:
            return line[:_SUBJECT_MAX]
    return "(no subject)"


def _received_for(host: str, step: int, seq: int) -> tuple[str, ...]:
    return (f"from {host} by mx.example.org; step {step} seq {seq}",)


def _build_message(world, sender, body, to, cc, bcc, truth) -> Message:
    mid = world._next_message_id(sender.host)
    return Message(
        from_addr=sender.address,
        to_addrs=tuple(to),
        cc_addrs=tuple(cc),
        bcc_addrs=tuple(bcc),
        subject=_subject_for(body),
        message_id=mid,
        received_headers=_received_for(sender.host, world.step_no, world.msg_seq),
        body=body,
        truth=truth,
        origin_host=sender.host,
        step=world.step_no,
    )


def _log_entry(world, m: Message) -> ConnectionLogEntry:
    return ConnectionLogEntry(
        step=world.step_no,
        origin_host=m.origin_host,
        sender_addr=m.from_addr,
        recipient_count=len(m.recipients),
    )


def _emit(world, out, sender, body, to, cc, bcc, truth):
    m = _build_message(world, sender, body, to, cc, bcc, truth)
    out.append((m, _log_entry(world, m)))
    return m


def _step_user(world, out, user, rng):
    config = world.config
    if rng.random() >= user.send_prob:
        return
    p = 1.0 / max(config.recipients_mean, 1.0)
    k = max(1, min(_geometric(rng, p), config.n_users - 1))
    indices = select_recipients(user.index, config.n_users, config.sigma, k, rng)
    to, cc, bcc = [], [], []
    for idx in indices:
        rng.choice((to, cc, bcc)).append(world.users[idx].address)
    corpus = world.corpora[user.topic]
    body = corpus.bodies[user.body_cursor % len(corpus.bodies)]
    user.body_cursor += 1
    _emit(world, out, user, body, to, cc, bcc, Label.HAM)


def _step_mailing_list(world, out, ml, rng):
    if ml.current_body is None:
        if rng.random() >= ml.send_prob or not ml.subscribers:
            return
        corpus = world.corpora[ml.topic]
        ml.current_body = corpus.bodies[ml.body_cursor % len(corpus.bodies)]
        ml.body_cursor += 1
        ml.cursor = 0
    _emit(
        world, out, ml, ml.current_body,
        [ml.subscribers[ml.cursor]], [], [], Label.HAM,
    )
    ml.cursor += 1
    if ml.cursor >= len(ml.subscribers):
        ml.cursor = 0
        ml.current_body = None


def _step_spammer(world, out, sp, rng):
    if sp.state == IDLE:
        if rng.random() >= sp.activation_prob or not sp.targets:
            return
        sp.state = SENDING
        sp.cursor = 0
        bodies = world.spam_corpus.bodies
        sp.current_body = bodies[sp.body_cursor % len(bodies)]
        sp.body_cursor += 1
    chunk = sp.targets[sp.cursor : sp.cursor + sp.burst_rate]
    if sp.personalize:
        batches = [[t] for t in chunk]
    else:
        batches = [
            list(chunk[i : i + BCC_BATCH_SIZE])
            for i in range(0, len(chunk), BCC_BATCH_SIZE)
        ]
    for batch in batches:
        body = sp.current_body
        to: list[str] = []
        bcc: list[str] = []
        if sp.personalize:
            body = personalize(body, batch[0])
            to = batch
        else:
            bcc = batch
        if sp.random_words:
            body = add_random_words(
                body, world.dictionary, rng.randint(10, 30), rng
            )
        m = _emit(world, out, sp, body, to, [], bcc, Label.SPAM)
        if sp.bogus_headers:
            forged = add_bogus_received(m, rng.randint(1, 3), rng)
            out[-1] = (forged, out[-1][1])
    sp.cursor += len(chunk)
    if sp.cursor >= len(sp.targets):
        sp.state = IDLE
        sp.cursor = 0


def step(world: World, rng) -> list[tuple[Message, ConnectionLogEntry]]:
    """Advance the simulation by one step.

    Senders are visited in global index order (users, then mailing lists,
    then spammers); each emitted message is paired with its connection-log
    entry.
    """
    out: list[tuple[Message, ConnectionLogEntry]] = []
    for user in world.users:
        _step_user(world, out, user, rng)
    for ml in world.mailing_lists:
        _step_mailing_list(world, out, ml, rng)
    for sp in world.spammers:
        _step_spammer(world, out, sp, rng)
    world.step_no += 1
    return out


def write_connection_log(entries, path) -> None:
    """Write log entries as tab-separated lines."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for entry in entries:
            fh.write(entry.as_line() + "\n")


def measure_spam_fraction(messages) -> float:
    """Recipient-weighted spam share of a message stream.

    Weighting by recipients reflects what lands in mailboxes: one Bcc
    delivery batch to 50 targets counts 50, the same as 50 personalized
    copies of it.
    """
    spam = ham = 0
    for m in messages:
        if m.truth is Label.SPAM:
            spam += len(m.recipients)
        else:
            ham += len(m.recipients)
    if spam + ham == 0:
        return 0.0
    return spam / (spam + ham)


def _pilot_spam_fraction(config: SimConfig, multiplier: float, steps: int, seed: int) -> float:
    """Dry-run estimate of the recipient-weighted spam fraction.

    Mirrors the sender state machines of step() while counting deliveries
    only, so calibration pilots cost no message construction.
    """
    rng = random.Random(seed)
    n_subscribers = min(config.n_users, max(5, config.n_users // 10))
    db_size = min(config.n_users, config.spammer_db_size)
    activation = min(1.0, config.activation_prob * multiplier)
    p = 1.0 / max(config.recipients_mean, 1.0)

    list_remaining = [0] * config.n_mailing_lists
    spam_remaining = [0] * config.n_spammers
    ham = spam = 0
    for _ in range(steps):
        for _user in range(config.n_users):
            if rng.random() < config.send_prob:
                ham += max(1, min(_geometric(rng, p), config.n_users - 1))
        for j in range(config.n_mailing_lists):
            if list_remaining[j] == 0:
                if rng.random() >= config.send_prob:
                    continue
                list_remaining[j] = n_subscribers
            ham += 1
            list_remaining[j] -= 1
        for k in range(config.n_spammers):
            if spam_remaining[k] == 0:
                if rng.random() >= activation:
                    continue
                spam_remaining[k] = db_size
            sent = min(config.burst_rate, spam_remaining[k])
            spam += sent
            spam_remaining[k] -= sent
    if ham + spam == 0:
        return 0.0
    return spam / (ham + spam)


def calibrate_spam_fraction(
    config: SimConfig,
    *,
    pilot_steps: int | None = None,
    tolerance: float = 0.02,
    max_iterations: int = 26,
) -> SimConfig:
    """Adjust spammer activation probability to hit the target fraction.

    Runs seeded dry-run pilots (config.steps long by default) and bisects
    a global multiplier on activation_prob until the pilot's
    recipient-weighted spam fraction is within the tolerance of
    target_spam_fraction. Raises CalibrationFailed when the target exceeds
    what permanently-active spammers can produce.
    """
    config.validate()
    if pilot_steps is None:
        pilot_steps = max(500, config.steps)
    target = config.target_spam_fraction
    if config.n_spammers == 0 or config.spammer_db_size == 0:
        if target == 0.0:
            return config
        raise CalibrationFailed("no spammers configured")
    if target == 0.0:
        return replace(config, activation_prob=0.0)
    if config.activation_prob <= 0:
        raise ConfigInvalid("activation_prob must be > 0 to calibrate")

    pilot_seed = config.seed * 1_000_003 + 17
    hi = 1.0 / config.activation_prob  # multiplier that saturates at 1.0

    def fraction_at(multiplier: float) -> float:
        # averaged over fixed pilot seeds: spam arrives in bursts, so a
        # single pilot's fraction estimate is too noisy to bisect on
        estimates = [
            _pilot_spam_fraction(config, multiplier, pilot_steps, pilot_seed + salt)
            for salt in (0, 1, 2)
        ]
        return sum(estimates) / len(estimates)

    ceiling = fraction_at(hi)
    if ceiling + tolerance < target:
        raise CalibrationFailed(
            f"target {target:.3f} unreachable: ceiling at full activation"
            f" is {ceiling:.3f}"
        )
    lo = 0.0
    best = hi
    best_err = abs(ceiling - target)
    for _ in range(max_iterations):
        mid = (lo + hi) / 2.0
        f = fraction_at(mid)
        err = abs(f - target)
        if err < best_err:
            best, best_err = mid, err
        if err <= tolerance / 2.0:
            best = mid
            break
        if f < target:
            lo = mid
        else:
            hi = mid
    return replace(
        config, activation_prob=min(1.0, config.activation_prob * best)
    )
