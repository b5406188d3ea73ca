import shlex
import sys

import pytest

from conftest import make_message
from spamlab.corpus import Label, parse_message, split_mbox
from spamlab.errors import TrainerFailed, WrapperCrashed
from spamlab.filters import (
    FilterBinding,
    Level,
    Verdict,
    build_filter,
    classify,
    emit_training_sets,
    train,
)


def external_binding(code, name="ext", level=Level.USER, **kw):
    """Binding whose wrapper is an inline python script."""
    command = f"{shlex.quote(sys.executable)} -c {shlex.quote(code)}"
    return FilterBinding(name=name, level=level, command=command, **kw)


class TestBindingInvariants:
    def test_connlog_requires_server_level(self):
        with pytest.raises(ValueError):
            FilterBinding(
                name="x", level=Level.USER, builtin="volume",
                needs_connection_log=True,
            )

    def test_exactly_one_mode(self):
        with pytest.raises(ValueError):
            FilterBinding(name="x", level=Level.USER)
        with pytest.raises(ValueError):
            FilterBinding(
                name="x", level=Level.USER, builtin="bayes", command="cat",
            )


class TestWrapperProtocol:
    def test_always_ham(self):
        f = build_filter(external_binding("print('ham')"))
        verdict = classify(f, make_message())
        assert verdict == Verdict(Label.HAM, None)

    def test_case_insensitive_label_with_score(self):
        f = build_filter(external_binding("print('SPAM 0.93')"))
        assert classify(f, make_message()) == Verdict(Label.SPAM, 0.93)

    def test_nonzero_exit_crashes(self):
        f = build_filter(external_binding("raise SystemExit(1)"))
        with pytest.raises(WrapperCrashed):
            classify(f, make_message())

    def test_empty_output_crashes(self):
        f = build_filter(external_binding("pass"))
        with pytest.raises(WrapperCrashed):
            classify(f, make_message())

    def test_malformed_label_crashes(self):
        f = build_filter(external_binding("print('maybe')"))
        with pytest.raises(WrapperCrashed):
            classify(f, make_message())

    def test_bad_score_crashes(self):
        f = build_filter(external_binding("print('spam high')"))
        with pytest.raises(WrapperCrashed):
            classify(f, make_message())

    def test_message_arrives_on_stdin(self):
        code = (
            "import sys\n"
            "text = sys.stdin.read()\n"
            "print('spam' if 'pills' in text else 'ham')\n"
        )
        f = build_filter(external_binding(code))
        assert classify(f, make_message(body="cheap pills")).label is Label.SPAM
        assert classify(f, make_message(body="meeting notes")).label is Label.HAM

    def test_connlog_env_var(self, tmp_path):
        log = tmp_path / "connections.log"
        log.write_text("0\thost9\ta@b\t1\n")
        code = (
            "import os, sys\n"
            "sys.stdin.read()\n"
            "path = os.environ['SPAMLAB_CONNLOG']\n"
            "print('spam' if 'host9' in open(path).read() else 'ham')\n"
        )
        f = build_filter(
            external_binding(code, level=Level.SERVER, needs_connection_log=True)
        )
        assert classify(f, make_message(), context=str(log)).label is Label.SPAM

    def test_context_required_when_binding_wants_log(self):
        f = build_filter(
            external_binding(
                "print('ham')", level=Level.SERVER, needs_connection_log=True
            )
        )
        with pytest.raises(ValueError):
            classify(f, make_message())

    def test_classify_does_not_mutate_message(self):
        f = build_filter(external_binding("print('ham')"))
        m = make_message()
        before = (m.body, m.subject, m.received_headers)
        classify(f, m)
        assert (m.body, m.subject, m.received_headers) == before


class TestEmitTrainingSets:
    def stream(self):
        ham = [
            make_message(body=f"ham {i}", truth=Label.HAM,
                         to=(f"user{i % 2}@example.org",))
            for i in range(3)
        ]
        spam = [
            make_message(body=f"spam {i}", truth=Label.SPAM,
                         to=("user0@example.org",))
            for i in range(2)
        ]
        return ham + spam

    def entries(self, path):
        return split_mbox(path.read_text(encoding="utf-8"))

    def test_general_partition_by_truth(self, tmp_path):
        ham_paths, spam_paths = emit_training_sets(self.stream(), False, tmp_path)
        assert len(self.entries(ham_paths[0])) == 3
        assert len(self.entries(spam_paths[0])) == 2

    def test_empty_stream_writes_empty_files(self, tmp_path):
        ham_paths, spam_paths = emit_training_sets([], False, tmp_path)
        assert ham_paths[0].read_text() == ""
        assert spam_paths[0].read_text() == ""

    def test_per_user_partition_by_recipient(self, tmp_path):
        stream = [
            make_message(body=f"h{i}", truth=Label.HAM, to=("u@example.org",))
            for i in range(4)
        ] + [
            make_message(body="s", truth=Label.SPAM, to=("u@example.org",)),
            make_message(body="other", truth=Label.HAM, to=("v@example.org",)),
        ]
        ham_paths, spam_paths = emit_training_sets(stream, True, tmp_path)
        assert len(ham_paths) == len(spam_paths) == 2
        u_ham = next(p for p in ham_paths if p.name.startswith("u_"))
        u_spam = next(p for p in spam_paths if p.name.startswith("u_"))
        assert len(self.entries(u_ham)) == 4
        assert len(self.entries(u_spam)) == 1

    def test_bcc_recipients_receive_copies(self, tmp_path):
        m = make_message(
            body="broadcast", truth=Label.SPAM, to=(),
            bcc=("a@example.org", "b@example.org"),
        )
        ham_paths, spam_paths = emit_training_sets([m], True, tmp_path)
        assert len(spam_paths) == 2
        for p in spam_paths:
            assert len(self.entries(p)) == 1

    def test_round_trip_preserves_subject_and_body(self, tmp_path):
        m = make_message(body="From here\nto there", subject="tricky")
        ham_paths, _ = emit_training_sets([m], False, tmp_path)
        parsed = parse_message(self.entries(ham_paths[0])[0])
        assert parsed.body == m.body
        assert parsed.subject == m.subject


class TestTrain:
    def bayes_binding(self):
        return FilterBinding(
            name="bayes", level=Level.USER, builtin="bayes", needs_training=True,
        )

    def test_builtin_bayes_trains_from_mboxes(self, tmp_path):
        stream = [
            make_message(body="hello colleagues", truth=Label.HAM),
            make_message(body="cheap pills", truth=Label.SPAM),
        ]
        ham_paths, spam_paths = emit_training_sets(stream, False, tmp_path)
        f = build_filter(self.bayes_binding())
        train(f, ham_paths[0], spam_paths[0])
        assert f.model.n_spam_msgs == 1
        assert f.model.n_ham_msgs == 1

    def test_missing_spam_file_fails(self, tmp_path):
        stream = [make_message(body="hi", truth=Label.HAM)]
        ham_paths, _ = emit_training_sets(stream, False, tmp_path)
        f = build_filter(self.bayes_binding())
        with pytest.raises(TrainerFailed):
            train(f, ham_paths[0], tmp_path / "missing.mbox")

    def test_classify_before_train_fails(self):
        f = build_filter(self.bayes_binding())
        with pytest.raises(TrainerFailed):
            classify(f, make_message())

    def test_external_trainer_success_and_failure(self, tmp_path):
        marker = tmp_path / "trained.txt"
        trainer_ok = (
            f"{shlex.quote(sys.executable)} -c "
            + shlex.quote(
                "import sys, pathlib\n"
                f"pathlib.Path({str(marker)!r}).write_text(' '.join(sys.argv[1:]))\n"
            )
        )
        binding = external_binding(
            "print('ham')", needs_training=True,
        )
        binding = FilterBinding(
            name=binding.name, level=binding.level, command=binding.command,
            trainer_command=trainer_ok, needs_training=True,
        )
        ham = tmp_path / "ham.mbox"
        spam = tmp_path / "spam.mbox"
        ham.write_text("")
        spam.write_text("")
        f = build_filter(binding)
        train(f, ham, spam)
        assert str(ham) in marker.read_text()
        assert str(spam) in marker.read_text()

        failing = FilterBinding(
            name="bad", level=Level.USER, command=binding.command,
            trainer_command=f"{shlex.quote(sys.executable)} -c 'raise SystemExit(3)'",
            needs_training=True,
        )
        with pytest.raises(TrainerFailed):
            train(build_filter(failing), ham, spam)


class TestBuiltinRegistry:
    def test_pass_all_and_block_all(self):
        passer = build_filter(
            FilterBinding(name="p", level=Level.USER, builtin="pass-all")
        )
        blocker = build_filter(
            FilterBinding(name="b", level=Level.USER, builtin="block-all")
        )
        spam = make_message(truth=Label.SPAM)
        assert classify(passer, spam).label is Label.HAM
        assert classify(blocker, spam).label is Label.SPAM

    def test_unknown_builtin_rejected(self):
        with pytest.raises(ValueError):
            build_filter(
                FilterBinding(name="x", level=Level.USER, builtin="psychic")
            )

    def test_builtin_options_respected(self):
        f = build_filter(
            FilterBinding(name="c", level=Level.USER, builtin="checksum"),
            {"threshold": "2"},
        )
        assert f.db.bulk_threshold == 2
