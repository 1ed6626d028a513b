import json

import numpy as np
import pytest

from qpir.cli import main
from qpir.errors import MessageFileError
from qpir.io import load_messages, messages_document, parse_messages, read_report, save_messages, write_report
from qpir.protocols.messages import random_density_messages, random_pure_messages, random_unitary_messages


def write(tmp_path, doc, name="m.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def pure_doc(**over):
    doc = {"schema": "qpir-messages/1", "kind": "pure-states", "d": 2,
           "messages": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}
    doc.update(over)
    return doc


# --- message files ---------------------------------------------------------


@pytest.mark.parametrize("make", [
    lambda r: random_pure_messages(3, 3, r),
    lambda r: random_pure_messages(3, (2, 3, 4), r),
    lambda r: random_unitary_messages(2, 3, r),
    lambda r: random_density_messages(2, (2, 3), r),
])
def test_messages_round_trip(tmp_path, make):
    ms = make(np.random.default_rng(0))
    path = tmp_path / "m.json"
    save_messages(ms, path)
    back = load_messages(path)
    assert back.kind == ms.kind and back.dims == ms.dims
    for a, b in zip(ms.payload, back.payload):
        assert np.array_equal(a, b)


@pytest.mark.parametrize("doc,where", [
    ([], "$"),
    (pure_doc(kind="vectors"), "$.kind"),
    (pure_doc(schema="other/9"), "$.schema"),
    (pure_doc(messages=[]), "$.messages"),
    (pure_doc(d=1), "$.d"),
    (pure_doc(dims=[2]), "$.dims"),
    (pure_doc(messages=[[[1, 0], [0, 0]], [[1, 0], [1, 0]]]), "$.messages[1]"),
    (pure_doc(messages=[[[1, 0], [0, 0]], [[1, 0]]]), "$.messages[1]"),
    (pure_doc(messages=[[[1, 0], [0, 0]], [[1, 0], "x"]]), "$.messages[1][1]"),
    (pure_doc(commutative="yes"), "$.commutative"),
])
def test_message_errors_are_positioned(doc, where):
    with pytest.raises(MessageFileError) as err:
        parse_messages(doc)
    assert err.value.position == where


def test_missing_dimension():
    doc = pure_doc()
    del doc["d"]
    with pytest.raises(MessageFileError, match="'d' or 'dims'"):
        parse_messages(doc)


def test_non_unitary_rejected():
    doc = {"kind": "unitaries", "d": 2, "messages": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                                                      [[[1, 0], [1, 0]], [[0, 0], [1, 0]]]]}
    with pytest.raises(MessageFileError) as err:
        parse_messages(doc)
    assert err.value.position == "$.messages[1]"


def test_noncommuting_rejected_with_position():
    ms = random_unitary_messages(3, 2, np.random.default_rng(1), commuting=False)
    doc = messages_document(ms, commutative=True)
    with pytest.raises(MessageFileError, match="does not commute with message 1") as err:
        parse_messages(doc)
    assert err.value.position == "$.messages[1]"


def test_json_syntax_error_has_line(tmp_path):
    path = write(tmp_path, '{\n "kind": "pure-states",\n "d": 2,,\n}')
    with pytest.raises(MessageFileError, match="line 3"):
        load_messages(path)


def test_report_round_trip_and_finite_check(tmp_path):
    doc = write_report({"command": "costs", "x": np.float64(1.5), "n": np.int64(2)}, tmp_path / "r.json")
    assert read_report(tmp_path / "r.json") == doc and doc["schema"] == "qpir-report/1"
    with pytest.raises(Exception, match="not finite"):
        write_report({"command": "costs", "bad": float("nan")}, tmp_path / "s.json")


# --- CLI -------------------------------------------------------------------


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(3)
    out = {}
    for name, ms, comm in [("q2", random_pure_messages(3, 2, rng), None),
                           ("q3", random_pure_messages(3, 3, rng), None),
                           ("u2", random_unitary_messages(3, 2, rng), True),
                           ("nc", random_unitary_messages(3, 3, rng, commuting=False), None)]:
        p = tmp_path / f"{name}.json"
        save_messages(ms, p, commutative=comm)
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


def test_run_and_show_round_trip(files, capsys):
    out = str(files["dir"] / "run.json")
    assert main(["run", "--protocol", "qubit", "--messages", files["q2"], "--trials", "20", "--seed", "4",
                 "--out", out]) == 0
    first = capsys.readouterr().out
    assert main(["show", out]) == 0
    assert capsys.readouterr().out == first
    assert "verdict PASS" in first and "successes 20/20" in first


def test_run_deterministic(files, capsys):
    argv = ["run", "--protocol", "qudit", "--messages", files["q2"], "--trials", "5", "--seed", "9"]
    main(argv)
    a = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == a


def test_run_each_protocol(files, capsys):
    cases = [["--protocol", "teleport", "--messages", files["q3"], "--cpir", "xor2"],
             ["--protocol", "commutative", "--messages", files["u2"]],
             ["--protocol", "commutative", "--messages", files["u2"], "--postselect"],
             ["--protocol", "qubit", "--messages", files["q2"], "--upload-entanglement"],
             ["--protocol", "qudit", "--messages", files["q3"]]]
    for c in cases:
        assert main(["run", *c, "--trials", "3"]) == 0, c


def test_run_literal_reports_failure(files, capsys):
    code = main(["run", "--protocol", "qudit", "--mode", "paper-literal", "--messages", files["q3"],
                 "--trials", "30", "--seed", "1"])
    out = capsys.readouterr().out
    assert code == 1 and "paper-literal:" in out and "verdict FAIL" in out


def test_target_zero_is_usage_error(files, capsys):
    assert main(["run", "--protocol", "qubit", "--messages", files["q2"], "--target", "0"]) == 2
    assert "--target" in capsys.readouterr().err


def test_noncommuting_file_rejected(files, capsys):
    assert main(["run", "--protocol", "commutative", "--messages", files["nc"]]) == 2
    assert "$.messages[1]" in capsys.readouterr().err


def test_missing_file(files, capsys):
    assert main(["run", "--protocol", "qubit", "--messages", str(files["dir"] / "nope.json")]) == 2


def test_bad_flag_exits_2(files):
    with pytest.raises(SystemExit) as e:
        main(["run", "--protocol", "quantum-magic", "--messages", files["q2"]])
    assert e.value.code == 2


def test_audit_pass_and_show(files, capsys):
    out = str(files["dir"] / "audit.json")
    assert main(["audit", "--protocol", "commutative", "--messages", files["u2"], "--pairs", "4", "--out", out]) == 0
    first = capsys.readouterr().out
    assert main(["show", out]) == 0
    assert capsys.readouterr().out == first


@pytest.mark.parametrize("inject,audit", [("broken-query", "user"), ("leak-message", "server"),
                                          ("wrong-complement", "correctness")])
def test_audit_negative_controls(files, capsys, inject, audit):
    code = main(["audit", "--protocol", "qubit", "--messages", files["q2"], "--audit", audit,
                 "--inject", inject, "--pairs", "3"])
    assert code == 1 and "FAIL" in capsys.readouterr().out


def test_audit_bound_refusal(tmp_path, capsys):
    p = tmp_path / "big.json"
    save_messages(random_pure_messages(2, 4, np.random.default_rng(0)), p)
    assert main(["audit", "--protocol", "qudit", "--messages", str(p), "--audit", "server", "--pairs", "1"]) == 3
    assert "d <= 3" in capsys.readouterr().err


def test_costs_table(tmp_path, capsys):
    out = str(tmp_path / "c.json")
    assert main(["costs", "--d", "3", "--messages-count", "4", "--out", out]) == 0
    text = capsys.readouterr().out
    assert "qudit strict, implemented" in text and "trivial download" in text and "1198.2317" in text
    doc = json.loads(open(out).read())
    assert doc["rows"][0]["qubits"] == pytest.approx(4 * np.log2(3))
    assert main(["show", out]) == 0
    assert capsys.readouterr().out == text


def test_costs_bad_dimension(capsys):
    assert main(["costs", "--d", "1", "--messages-count", "2"]) == 2
