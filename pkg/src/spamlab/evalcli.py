"""Scenario orchestration: run labelled traffic through filters, compute
FAR/FRR/wrongness, rank the filters, and emit reports.

A scenario is a key = value file naming the corpora, the traffic config,
and the filter lineup. Running it trains the trainable filters on one
generated stream, evaluates everything on a second stream, and writes
results.txt (ranked table), results.csv, and farfrr.svg into the run
directory.
"""

from __future__ import annotations

import argparse
import csv
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import trafficgen
from .corpus import Label, load_corpus
from .errors import (
    ConfigInvalid,
    CorpusMissing,
    EmptyTrainingSet,
    NoHamEvaluated,
    NoSpamEvaluated,
    SpamlabError,
    WrapperCrashed,
)
from .filters import (
    BUILTIN_FILTERS,
    BUILTIN_NEEDS_CONNLOG,
    BUILTIN_NEEDS_TRAINING,
    BayesFilterState,
    FilterBinding,
    Level,
    build_filter,
    classify,
    emit_training_sets,
    train,
)
from .trafficgen import SimConfig, World, parse_kv, step

DEFAULT_EPSILON = 0.01
DEFAULT_TRAINING_STEPS = 2000
DEFAULT_EVAL_STEPS = 10000


@dataclass
class ConfusionCounts:
    """Per-filter confusion counts over one evaluation run."""

    ss: int = 0  # spam classified spam
    sh: int = 0  # spam classified ham (false acceptance)
    hs: int = 0  # ham classified spam (false rejection)
    hh: int = 0  # ham classified ham

    def record(self, truth: Label, predicted: Label) -> None:
        if truth is Label.SPAM:
            if predicted is Label.SPAM:
                self.ss += 1
            else:
                self.sh += 1
        else:
            if predicted is Label.SPAM:
                self.hs += 1
            else:
                self.hh += 1

    @property
    def n_spam(self) -> int:
        return self.ss + self.sh

    @property
    def n_ham(self) -> int:
        return self.hs + self.hh


def far(c: ConfusionCounts) -> float:
    """False acceptance rate: spam delivered as ham over spam evaluated."""
    if c.n_spam == 0:
        raise NoSpamEvaluated("no spam messages evaluated")
    return c.sh / c.n_spam


def frr(c: ConfusionCounts) -> float:
    """False rejection rate: ham blocked as spam over ham evaluated."""
    if c.n_ham == 0:
        raise NoHamEvaluated("no ham messages evaluated")
    return c.hs / c.n_ham


def wrongness(far_value: float, frr_value: float, eps: float = DEFAULT_EPSILON) -> float:
    """Scalar ranking metric (FRR+eps)^2 * (FAR+eps).

    False rejections are penalized quadratically: losing legitimate mail
    is worse than letting spam through.
    """
    return (frr_value + eps) ** 2 * (far_value + eps)


@dataclass
class FilterResult:
    """One filter's outcome: counts, rates, wrongness, wrapper errors."""

    name: str
    level: Level
    counts: ConfusionCounts
    far: float | None
    frr: float | None
    wrongness: float | None
    wrapper_errors: int = 0


def rank(results: list[FilterResult]) -> list[FilterResult]:
    """Order results by ascending wrongness, ties broken by name.

    Results without a wrongness value (degenerate runs) sort last.
    """
    return sorted(
        results,
        key=lambda r: (r.wrongness is None, r.wrongness or 0.0, r.name),
    )


@dataclass
class Scenario:
    """One evaluation configuration: corpora, traffic, filters, phases."""

    name: str
    personalized: bool
    spam_corpus: str
    ham_corpus: str
    level: Level
    sim: SimConfig
    filters: list[FilterBinding]
    training_steps: int = DEFAULT_TRAINING_STEPS
    eval_steps: int = DEFAULT_EVAL_STEPS
    bogus_headers: bool = False
    random_words: bool = False
    filter_options: dict[str, dict[str, str]] = field(default_factory=dict)

    def validate(self) -> None:
        if self.training_steps < 0:
            raise ConfigInvalid("training_steps must be >= 0")
        if self.eval_steps < 1:
            raise ConfigInvalid("eval_steps must be >= 1")
        if not self.filters:
            raise ConfigInvalid("at least one filter is required")
        names = [b.name for b in self.filters]
        if len(set(names)) != len(names):
            raise ConfigInvalid("filter names must be unique")


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _parse_filter_entry(entry: str, values: dict[str, str], default_level: Level) -> FilterBinding:
    tokens = entry.split()
    if not tokens:
        raise ConfigInvalid("empty filter entry")
    name = tokens[0]
    level = default_level
    builtin_id = name
    if len(tokens) >= 2:
        try:
            level = Level(tokens[1].upper())
        except ValueError:
            raise ConfigInvalid(f"filter {name}: bad level {tokens[1]!r}")
    if len(tokens) >= 3:
        builtin_id = tokens[2]
    if len(tokens) > 3:
        raise ConfigInvalid(f"filter entry {entry!r} has too many tokens")

    command = values.get(f"external.{name}")
    trainer = values.get(f"trainer.{name}")
    wants_log = _parse_bool(values.get(f"connlog.{name}", "false"))
    if command is not None:
        return FilterBinding(
            name=name,
            level=level,
            command=command,
            trainer_command=trainer,
            needs_training=trainer is not None,
            needs_connection_log=wants_log,
        )
    if builtin_id not in BUILTIN_FILTERS:
        raise ConfigInvalid(
            f"filter {name}: not a builtin and no external.{name} command"
        )
    return FilterBinding(
        name=name,
        level=level,
        builtin=builtin_id,
        needs_training=builtin_id in BUILTIN_NEEDS_TRAINING,
        needs_connection_log=builtin_id in BUILTIN_NEEDS_CONNLOG or wants_log,
    )


def load_scenario(path) -> Scenario:
    """Load and validate a scenario config file."""
    path = Path(path)
    values = parse_kv(path)
    for key in ("spam_corpus", "ham_corpus", "sim", "filters"):
        if key not in values:
            raise ConfigInvalid(f"{path}: missing key {key!r}")
    base = path.parent
    try:
        level = Level(values.get("level", "U").upper())
    except ValueError:
        raise ConfigInvalid(f"{path}: bad level {values['level']!r}")
    sim = trafficgen.load_sim_config(base / values["sim"])

    bindings = [
        _parse_filter_entry(entry.strip(), values, level)
        for entry in values["filters"].split(";")
        if entry.strip()
    ]
    filter_options: dict[str, dict[str, str]] = {}
    known = {b.name for b in bindings}
    for key, value in values.items():
        owner, sep, option = key.partition(".")
        if sep and owner in known and owner not in ("external", "trainer", "connlog"):
            filter_options.setdefault(owner, {})[option] = value

    scenario = Scenario(
        name=values.get("name", path.stem),
        personalized=_parse_bool(values.get("personalized", "false")),
        spam_corpus=str(base / values["spam_corpus"]),
        ham_corpus=str(base / values["ham_corpus"]),
        level=level,
        sim=sim,
        filters=bindings,
        training_steps=int(values.get("training_steps", DEFAULT_TRAINING_STEPS)),
        eval_steps=int(values.get("eval_steps", DEFAULT_EVAL_STEPS)),
        bogus_headers=_parse_bool(values.get("bogus_headers", "false")),
        random_words=_parse_bool(values.get("random_words", "false")),
        filter_options=filter_options,
    )
    scenario.validate()
    return scenario


def _load_ham_corpora(root: str):
    root_path = Path(root)
    if not root_path.is_dir():
        raise CorpusMissing(f"ham corpus directory not found: {root}")
    topic_dirs = sorted(
        (d for d in root_path.iterdir() if d.is_dir()), key=lambda d: d.name
    )
    try:
        if topic_dirs:
            return [load_corpus(d, d.name) for d in topic_dirs]
        return [load_corpus(root_path, root_path.name or "general")]
    except SpamlabError as exc:
        raise CorpusMissing(str(exc)) from exc


def _build_world(scenario: Scenario, rng) -> World:
    ham_corpora = _load_ham_corpora(scenario.ham_corpus)
    spam_corpus = None
    if scenario.sim.n_spammers > 0:
        try:
            spam_corpus = load_corpus(scenario.spam_corpus, "spam")
        except SpamlabError as exc:
            raise CorpusMissing(str(exc)) from exc
    return World(
        scenario.sim,
        ham_corpora,
        spam_corpus,
        rng,
        personalize_spam=scenario.personalized,
        bogus_headers=scenario.bogus_headers,
        random_words=scenario.random_words,
    )


def _train_filters(scenario, filters, stream, out_dir):
    """Phase 1: emit training mboxes and train every trainable filter.

    Server-level trainables get the general ham/spam pair; user-level
    builtin Bayes filters get one model per recipient, falling back to the
    general model for users whose training mail is one-sided.
    """
    trainables = [f for f in filters if f.binding.needs_training]
    if not trainables:
        return
    general_dir = Path(out_dir) / "training"
    ham_paths, spam_paths = emit_training_sets(stream, False, general_dir)
    per_user_needed = any(
        f.binding.level is Level.USER and isinstance(f, BayesFilterState)
        for f in trainables
    )
    user_pairs: list[tuple[Path, Path]] = []
    if per_user_needed:
        user_dir = Path(out_dir) / "training" / "per-user"
        user_ham, user_spam = emit_training_sets(stream, True, user_dir)
        user_pairs = list(zip(user_ham, user_spam))
    addresses = sorted({a for m in stream for a in m.recipients})

    for f in trainables:
        train(f, ham_paths[0], spam_paths[0])
        if f.binding.level is Level.USER and isinstance(f, BayesFilterState):
            from . import bayes

            for addr, (ham_path, spam_path) in zip(addresses, user_pairs):
                try:
                    model = bayes.train_bayes(ham_path, spam_path, f.n, f.threshold)
                except EmptyTrainingSet:
                    continue  # general model covers this mailbox
                if min(model.n_spam_msgs, model.n_ham_msgs) >= f.min_user_messages:
                    f.user_models[addr] = model


def run_scenario(scenario: Scenario, out_dir) -> list[FilterResult]:
    """Run one scenario end to end and write its reports.

    Phase 1 generates training_steps of labelled traffic for the trainable
    filters; phase 2 generates eval_steps, maintains the connection log,
    classifies every message with every filter in stream order, and
    accumulates confusion counts. Wrapper crashes are tallied per filter
    and excluded from the counts.
    """
    scenario.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(scenario.sim.seed)
    world = _build_world(scenario, rng)
    filters = [
        build_filter(b, scenario.filter_options.get(b.name))
        for b in scenario.filters
    ]

    training_stream = [
        m
        for _ in range(scenario.training_steps)
        for (m, _e) in step(world, rng)
    ]
    _train_filters(scenario, filters, training_stream, out)

    log_path = out / "connections.log"
    counts = {f.binding.name: ConfusionCounts() for f in filters}
    errors = {f.binding.name: 0 for f in filters}
    with open(log_path, "w", encoding="utf-8", newline="\n") as log:
        for _ in range(scenario.eval_steps):
            for m, entry in step(world, rng):
                log.write(entry.as_line() + "\n")
                log.flush()
                for f in filters:
                    name = f.binding.name
                    context = (
                        str(log_path) if f.binding.needs_connection_log else None
                    )
                    try:
                        verdict = classify(f, m, context)
                    except WrapperCrashed:
                        errors[name] += 1
                        continue
                    counts[name].record(m.truth, verdict.label)

    results = []
    footnotes = []
    for f in filters:
        name = f.binding.name
        c = counts[name]
        try:
            far_value = far(c)
        except NoSpamEvaluated:
            far_value = None
            footnotes.append(f"{name}: no spam evaluated; FAR and W undefined")
        try:
            frr_value = frr(c)
        except NoHamEvaluated:
            frr_value = None
            footnotes.append(f"{name}: no ham evaluated; FRR and W undefined")
        w = (
            wrongness(far_value, frr_value)
            if far_value is not None and frr_value is not None
            else None
        )
        if errors[name]:
            footnotes.append(
                f"{name}: {errors[name]} wrapper errors excluded from counts"
            )
        results.append(
            FilterResult(
                name=name,
                level=f.binding.level,
                counts=c,
                far=far_value,
                frr=frr_value,
                wrongness=w,
                wrapper_errors=errors[name],
            )
        )
    ranked = rank(results)
    write_reports(ranked, out, footnotes)
    return ranked


def _fmt(value, spec, missing="-"):
    return format(value, spec) if value is not None else missing


def write_reports(ranked: list[FilterResult], out_dir, footnotes=()) -> None:
    """Write results.txt, results.csv, and farfrr.svg for ranked results."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    lines = [
        f"{'Filter':<20}{'Level':<7}{'FRR':>8}{'FAR':>8}{'W*10^5':>10}",
        "-" * 53,
    ]
    for r in ranked:
        w_e5 = r.wrongness * 1e5 if r.wrongness is not None else None
        lines.append(
            f"{r.name:<20}{r.level.value:<7}"
            f"{_fmt(r.frr, '.4f'):>8}{_fmt(r.far, '.3f'):>8}"
            f"{_fmt(w_e5, '.2f'):>10}"
        )
    for note in footnotes:
        lines.append(f"note: {note}")
    (out / "results.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    with open(out / "results.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "filter", "level", "n_spam", "n_ham",
                "ss", "sh", "hs", "hh", "wrapper_errors",
                "frr", "far", "wrongness",
            ]
        )
        for r in ranked:
            writer.writerow(
                [
                    r.name, r.level.value, r.counts.n_spam, r.counts.n_ham,
                    r.counts.ss, r.counts.sh, r.counts.hs, r.counts.hh,
                    r.wrapper_errors,
                    _fmt(r.frr, ".10g", ""), _fmt(r.far, ".10g", ""),
                    _fmt(r.wrongness, ".10g", ""),
                ]
            )

    (out / "farfrr.svg").write_text(render_far_frr_svg(ranked), encoding="utf-8")


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
               "#8c564b", "#e377c2", "#7f7f7f", "#17becf")


def render_far_frr_svg(results, frr_max: float = 0.02, far_max: float = 1.0) -> str:
    """Scatter plot of filters in the FAR/FRR plane.

    FRR runs horizontally on [0, 0.02], FAR vertically on [0, 1]; points
    beyond the FRR range are clamped to the right edge.
    """
    width, height = 640, 480
    left, right, top, bottom = 70, 620, 20, 420

    def x_of(v):
        return left + (min(v, frr_max) / frr_max) * (right - left)

    def y_of(v):
        return bottom - (min(v, far_max) / far_max) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}"'
        f' height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"'
        ' stroke="black"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}"'
        ' stroke="black"/>',
    ]
    for tick in (0.0, 0.01, 0.02):
        x = x_of(tick)
        parts.append(
            f'<line x1="{x:.1f}" y1="{bottom}" x2="{x:.1f}" y2="{bottom + 6}"'
            ' stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{bottom + 22}" font-size="12"'
            f' text-anchor="middle">{tick:g}</text>'
        )
    for tick in (0.0, 0.5, 1.0):
        y = y_of(tick)
        parts.append(
            f'<line x1="{left - 6}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}"'
            ' stroke="black"/>'
        )
        parts.append(
            f'<text x="{left - 10}" y="{y + 4:.1f}" font-size="12"'
            f' text-anchor="end">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{(left + right) // 2}" y="{bottom + 44}" font-size="14"'
        ' text-anchor="middle">FRR</text>'
    )
    parts.append(
        f'<text x="18" y="{(top + bottom) // 2}" font-size="14"'
        f' text-anchor="middle" transform="rotate(-90 18'
        f' {(top + bottom) // 2})">FAR</text>'
    )
    plotted = [r for r in results if r.far is not None and r.frr is not None]
    for i, r in enumerate(plotted):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        x, y = x_of(r.frr), y_of(r.far)
        parts.append(
            f'<circle cx="{x:.1f}" cy="{y:.1f}" r="4" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{x + 7:.1f}" y="{y + 4:.1f}" font-size="11"'
            f' fill="{color}">{r.name} ({r.level.value})</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _read_results_csv(path) -> list[FilterResult]:
    results = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            counts = ConfusionCounts(
                ss=int(row["ss"]), sh=int(row["sh"]),
                hs=int(row["hs"]), hh=int(row["hh"]),
            )
            results.append(
                FilterResult(
                    name=row["filter"],
                    level=Level(row["level"]),
                    counts=counts,
                    far=float(row["far"]) if row["far"] else None,
                    frr=float(row["frr"]) if row["frr"] else None,
                    wrongness=float(row["wrongness"]) if row["wrongness"] else None,
                    wrapper_errors=int(row["wrapper_errors"]),
                )
            )
    return results


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spamlab",
        description="Email traffic simulation and spam filter benchmarking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write reports")
    p_run.add_argument("scenario", help="scenario config file")
    p_run.add_argument("-o", "--out", help="run directory (default runs/<name>)")

    p_cal = sub.add_parser(
        "calibrate", help="calibrate spammer activation for the spam target"
    )
    p_cal.add_argument("scenario", help="scenario config file")
    p_cal.add_argument("-o", "--out", help="write the calibrated sim config here")

    p_rep = sub.add_parser("report", help="regenerate reports from results.csv")
    p_rep.add_argument("rundir", help="run directory containing results.csv")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            scenario = load_scenario(args.scenario)
            out = args.out or str(Path("runs") / scenario.name)
            ranked = run_scenario(scenario, out)
            print((Path(out) / "results.txt").read_text(encoding="utf-8"), end="")
            print(f"reports written to {out}")
        elif args.command == "calibrate":
            scenario = load_scenario(args.scenario)
            calibrated = trafficgen.calibrate_spam_fraction(scenario.sim)
            print(
                f"activation_prob: {scenario.sim.activation_prob}"
                f" -> {calibrated.activation_prob:.6f}"
            )
            if args.out:
                _write_sim_config(calibrated, args.out)
                print(f"calibrated sim config written to {args.out}")
        elif args.command == "report":
            rundir = Path(args.rundir)
            ranked = rank(_read_results_csv(rundir / "results.csv"))
            write_reports(ranked, rundir)
            print(f"reports rewritten in {rundir}")
    except SpamlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _write_sim_config(config: SimConfig, path) -> None:
    lines = [f"{name} = {getattr(config, name)}"
             for name in trafficgen._SIM_FIELD_TYPES]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
