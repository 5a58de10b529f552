from pathlib import Path

import pytest

from pqnb.fileformat import FileFormatError, dumps, load, loads
from pqnb.instances import first_example
from pqnb.structures import check_pqnb

SAMPLES = Path(__file__).resolve().parent.parent / "samples"
HEAD = "manifold dim=3 coords=x1,x2,x3\n"


@pytest.mark.parametrize("name", ["first_example.pqnb", "first_example_broken.pqnb", "poisson.pqnb", "block_example.pqnb"])
def test_round_trip_is_canonical(name):
    sf = load(SAMPLES / name)
    text = dumps(sf)
    again = loads(text)
    assert dumps(again) == text
    for key, t in sf.tensors.items():
        assert again.tensors[key].equals_exact(t)


def test_first_sample_matches_builtin_example():
    sf = load(SAMPLES / "first_example.pqnb")
    assert sf.infer_kind() == "pqnb"
    assert sf.pqnb().equals_exact(first_example())
    assert check_pqnb(sf.pqnb()).ok
    assert sf.policy.seed == 0 and set(sf.gauges) == {"B"}


def test_reduction_block_is_read():
    sf = load(SAMPLES / "block_example.pqnb")
    assert sf.reduction.q == ("q1", "q2") and sf.reduction.c == ("c",)


def test_kind_inference():
    assert loads(HEAD + 'bivector P { [1,2] = "1" }').infer_kind() == "poisson"
    assert loads(HEAD + 'endo A { [1,1] = "1" }').infer_kind() == "pn"
    assert loads(HEAD + 'form sigma deg=2 { [1,2] = "1" }').infer_kind() == "gc"


def test_comments_and_whitespace():
    sf = loads("# leading comment\n" + HEAD + 'bivector P {\n  [1,2] = "x3"  # trailing\n}\n')
    assert str(sf.tensors["P"][0, 1].text()) == "x3"


@pytest.mark.parametrize("body,needle", [
    ('bivector P { [2,1] = "1" }', "strictly increasing"),
    ('bivector P { [1,2] = "1" [1,2] = "2" }', "duplicate"),
    ('bivector P { [1,4] = "1" }', "out of range"),
    ('bivector P { [1,2] = "x4" }', "bad expression"),
    ('bivector P { [1,2,3] = "1" }', "needs 2 indices"),
    ('form phi { [1,2,3] = "1" }', "deg"),
    ('frobnicate X { }', "unknown statement"),
    ('bivector P { [1,2] = "1/0" }', "division by zero"),
    ('bivector P { [1,2] = "1" }\nbivector P { [1,3] = "1" }', "defined twice"),
    ('policy { seed=abc }', "bad value"),
])
def test_malformed_inputs(body, needle):
    with pytest.raises(FileFormatError, match=needle):
        loads(HEAD + body)


def test_empty_and_headless_files():
    with pytest.raises(FileFormatError, match="empty"):
        loads("  # nothing here\n")
    with pytest.raises(FileFormatError, match="manifold"):
        loads('bivector P { [1,2] = "1" }')
    with pytest.raises(FileFormatError, match="dim"):
        loads("manifold dim=2 coords=x1,x2,x3\n")


def test_errors_carry_line_numbers():
    with pytest.raises(FileFormatError) as err:
        loads(HEAD + 'bivector P {\n [1,2] = "1"\n [3,1] = "2"\n}')
    assert err.value.line == 4
