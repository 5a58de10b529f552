import json
from pathlib import Path

import pytest

from pqnb.cli import FAIL, MALFORMED, OK, main
from pqnb.fileformat import dumps, load

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def sample(name: str) -> str:
    return str(SAMPLES / name)


def test_check_exit_codes(tmp_path, capsys):
    assert main(["check", sample("first_example.pqnb")]) == OK
    assert "overall: PASS" in capsys.readouterr().out
    assert main(["check", sample("first_example_broken.pqnb")]) == FAIL
    out = capsys.readouterr().out
    assert "[FAIL] torsion" in out
    empty = tmp_path / "empty.pqnb"
    empty.write_text("")
    assert main(["check", str(empty)]) == MALFORMED
    assert "empty" in capsys.readouterr().err


def test_missing_file_and_bad_arguments(tmp_path, capsys):
    assert main(["check", str(tmp_path / "nope.pqnb")]) == MALFORMED
    assert main(["check", sample("first_example.pqnb"), "--kind", "banana"]) == MALFORMED
    assert main([]) == MALFORMED
    capsys.readouterr()


def test_check_kinds(capsys):
    assert main(["check", sample("poisson.pqnb")]) == OK
    assert main(["check", sample("first_example.pqnb"), "--kind", "poisson"]) == OK
    capsys.readouterr()
    # without its background the first example is not a PN structure
    assert main(["check", sample("first_example.pqnb"), "--kind", "pn"]) == FAIL
    assert "[FAIL] concomitant" in capsys.readouterr().out


def test_gauge_then_inverse(tmp_path, capsys):
    out = tmp_path / "gauged.pqnb"
    assert main(["gauge", sample("first_example.pqnb"), "-o", str(out)]) == OK
    text = out.read_text()
    assert '[1,3] = "1 + x1^2"' in text
    assert "gauge" not in text
    out.write_text(text + 'gauge B { [2,3] = "1" }\n')
    back = tmp_path / "back.pqnb"
    assert main(["gauge", str(out), "--inverse", "-o", str(back)]) == OK
    original = load(sample("first_example.pqnb"))
    original.gauges = {}
    assert dumps(load(back)) == dumps(original)
    capsys.readouterr()


def test_gauge_to_stdout_sends_report_to_stderr(capsys):
    assert main(["gauge", sample("first_example.pqnb")]) == OK
    cap = capsys.readouterr()
    assert cap.out.startswith("manifold") and "overall: PASS" in cap.err


def test_gauge_needs_gauge_block(capsys):
    assert main(["gauge", sample("poisson.pqnb")]) == MALFORMED
    assert main(["gauge", sample("first_example.pqnb"), "--gauge", "Z"]) == MALFORMED
    capsys.readouterr()


def test_gauge_rejects_broken_input(capsys, tmp_path):
    broken = tmp_path / "b.pqnb"
    broken.write_text(Path(sample("first_example_broken.pqnb")).read_text() + 'gauge B { [2,3] = "1" }\n')
    assert main(["gauge", str(broken)]) == FAIL
    assert "torsion" in capsys.readouterr().err


def test_compose(tmp_path, capsys):
    f = tmp_path / "two.pqnb"
    f.write_text(Path(sample("first_example.pqnb")).read_text() + 'gauge C { [1,2] = "x3" }\n')
    assert main(["compose", str(f), "-o", str(tmp_path / "out.pqnb")]) == OK
    assert "composition" in capsys.readouterr().out
    assert main(["compose", sample("first_example.pqnb")]) == MALFORMED
    capsys.readouterr()


def test_conformal(tmp_path, capsys):
    out = tmp_path / "conf.pqnb"
    assert main(["conformal", sample("poisson.pqnb"), "-o", str(out)]) == OK
    assert "exp(x3)" in out.read_text()
    assert main(["conformal", sample("poisson.pqnb"), "--function", "x1"]) == FAIL
    assert main(["conformal", sample("first_example.pqnb")]) == MALFORMED
    capsys.readouterr()


def test_conformal_with_gauge_variants(tmp_path, capsys):
    f = tmp_path / "pg.pqnb"
    f.write_text(Path(sample("poisson.pqnb")).read_text() + 'gauge B { [1,3] = "x2" }\n')
    for variant in ("first", "second"):
        assert main(["conformal", str(f), "--variant", variant, "-o", str(tmp_path / "o.pqnb")]) == OK
    capsys.readouterr()


def test_reduce_and_recheck(tmp_path, capsys):
    out = tmp_path / "reduced.pqnb"
    assert main(["reduce", sample("block_example.pqnb"), "-o", str(out)]) == OK
    assert load(out).chart.coords == ("q1", "q2")
    assert main(["check", str(out)]) == OK
    assert main(["reduce", sample("first_example.pqnb")]) == MALFORMED
    capsys.readouterr()


def test_reduce_reports_failed_hypothesis(tmp_path, capsys):
    f = tmp_path / "sdep.pqnb"
    f.write_text("manifold dim=4 coords=q1,q2,s,c\n"
                 'bivector P { [1,2] = "s" }\n'
                 "reduction { q=q1,q2 s=s c=c c0=0 }\n")
    assert main(["reduce", str(f)]) == FAIL
    assert "failed condition: (i)" in capsys.readouterr().err


def test_commute(tmp_path, capsys):
    assert main(["commute", sample("block_example.pqnb")]) == OK
    assert "diagram" in capsys.readouterr().out
    f = tmp_path / "bad.pqnb"
    f.write_text(Path(sample("block_example.pqnb")).read_text().replace('[1,2] = "-q2 + q1^2"', '[1,3] = "1"'))
    assert main(["commute", str(f)]) == FAIL
    assert "failed condition: gauge (a)" in capsys.readouterr().err


def test_json_report_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["check", sample("first_example_broken.pqnb"), "--report", str(a), "--seed", "5"])
    main(["check", sample("first_example_broken.pqnb"), "--report", str(b), "--seed", "5"])
    assert a.read_text() == b.read_text()
    doc = json.loads(a.read_text())
    assert doc["seed"] == 5 and not doc["ok"]
    capsys.readouterr()


@pytest.mark.parametrize("name", ["first_example.pqnb", "block_example.pqnb"])
def test_trust_flag_skips_verification(name, capsys):
    assert main(["check", sample(name), "--trust"]) == OK
    capsys.readouterr()
