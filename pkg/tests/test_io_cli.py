import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from darwinscope import io
from darwinscope.cli import main
from darwinscope.errors import FileFormatError
from darwinscope.ghz import random_ghz
from darwinscope.hilbert import PureState, SystemLayout, random_state
from darwinscope.partitions import Partition


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=1, max_size=4), st.integers(0, 2**31 - 1))
def test_state_round_trip_is_exact(dims, seed):
    st_ = random_state(SystemLayout(tuple(dims)), np.random.default_rng(seed))
    back = io.parse_state(io.format_state(st_))
    assert not back.renormalized
    assert np.array_equal(back.state.amplitudes, st_.amplitudes)


def test_decomposition_round_trip_is_exact(ambiguity, rng):
    for dec in list(ambiguity.decompositions.values()) + [
        random_ghz(SystemLayout((3, 2, 2)), Partition.parse("S:1|2|3"), 2, rng)
    ]:
        back = io.parse_decomposition(io.format_decomposition(dec))
        assert back.partition == dec.partition and back.orthonormal == dec.orthonormal
        assert np.array_equal(back.coefficients, dec.coefficients)
        assert all(np.array_equal(a, b) for a, b in zip(back.vectors, dec.vectors))


def test_state_comments_and_renormalization():
    text = "# header\ndims: 2\n0.70710678 0  # amp 0\n\n0.70710678 0\n"
    sf = io.parse_state(text)
    assert sf.renormalized and 0 < sf.norm_error <= 1e-6
    assert abs(np.linalg.norm(sf.state.amplitudes) - 1) < 1e-15


@pytest.mark.parametrize(
    "text,line,needle",
    [
        ("dims: 2\n1 0\nx 0\n", 3, "not a number"),
        ("dims: 2\n1 0\n0\n", 3, "expected 're im'"),
        ("dims: 2 1\n1 0\n0 0\n", 1, "bad dims"),
        ("dimz: 2\n1 0\n0 0\n", 1, "expected 'dims:'"),
        ("dims: 2\n1 0\n0 0\n0 0\n", 4, "3 amplitudes"),
        ("dims: 2\n1 0\nnan 0\n", 3, "non-finite"),
    ],
)
def test_state_errors_carry_line_numbers(text, line, needle):
    with pytest.raises(FileFormatError) as exc:
        io.parse_state(text, path="s.state")
    assert exc.value.line == line and needle in str(exc.value)
    assert str(exc.value).startswith(f"s.state:{line}:")


def test_state_norm_far_off_is_rejected():
    with pytest.raises(FileFormatError, match="norm"):
        io.parse_state("dims: 2\n1 0\n1 0\n")


def test_decomposition_errors_carry_line_numbers(ambiguity):
    good = io.format_decomposition(ambiguity.decompositions["A"]).splitlines()
    bad = list(good)
    bad[1] = "partition: 1|2|2"
    with pytest.raises(FileFormatError) as exc:
        io.parse_decomposition("\n".join(bad))
    assert exc.value.line == 2
    bad = list(good)
    bad[5] = "coef 1 0"
    with pytest.raises(FileFormatError) as exc:
        io.parse_decomposition("\n".join(bad))
    assert exc.value.line == 6 and "expected 'vec'" in str(exc.value)
    bad = list(good)
    bad[3] = "orthonormal: maybe"
    with pytest.raises(FileFormatError) as exc:
        io.parse_decomposition("\n".join(bad))
    assert exc.value.line == 4
    with pytest.raises(FileFormatError, match="ends inside branch"):
        io.parse_decomposition("\n".join(good[:-2]))
    with pytest.raises(FileFormatError) as exc:
        io.parse_decomposition("\n".join(good + ["vec 1 0"]))
    assert exc.value.line == len(good) + 1


def test_missing_file():
    with pytest.raises(FileFormatError, match="cannot read"):
        io.read_state("/nonexistent/x.state")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_comparable(capsys):
    code, out, _ = run(capsys, "comparable", "fig1a.A", "fig1a.B")
    assert code == 0 and "comparable=true witness=(1,2)" in out
    code, out, _ = run(capsys, "comparable", "S:1|2,3|4,5", "S:1|2,4|3,5", "--system-fixed")
    assert code == 1 and "relation=NonlocalOverlap" in out
    code, out, _ = run(capsys, "paircover", "fig1a.A", "fig1a.B")
    assert code == 0 and "pair_covers=true" in out


def test_cli_comparable_set(capsys):
    code, out, _ = run(capsys, "comparable-set", "fig1a.A")
    assert code == 0 and out.strip().endswith("count=85")
    code, _, err = run(capsys, "comparable-set", "1|2|3|4|5|6|7|8|9|10|11|12")
    assert code == 2 and "Bell" in err


def test_cli_detect_verify_match(capsys, tmp_path, ambiguity):
    st_path = tmp_path / "amb.state"
    io.write_state(st_path, ambiguity.state)
    out_a, ref_a = tmp_path / "a.dec", tmp_path / "ref.dec"
    io.write_decomposition(ref_a, ambiguity.decompositions["A"])
    code, out, _ = run(capsys, "detect", str(st_path), "S:1|2,3|4,5", "--out", str(out_a))
    assert code == 0 and "result=ghz branches=4" in out
    code, out, _ = run(capsys, "verify", str(st_path), str(out_a))
    assert code == 0 and "valid=true branches=4 orthonormal=true" in out
    code, out, _ = run(capsys, "match", str(out_a), str(ref_a))
    assert code == 0 and "match=true" in out
    code, out, _ = run(capsys, "match", "ambiguity4.A", "ambiguity4.B")
    assert code == 1 and "match=false" in out


def test_cli_detect_haar_state_is_negative(capsys, tmp_path):
    path = tmp_path / "random.state"
    io.write_state(path, random_state(SystemLayout.qubits(3), np.random.default_rng(8)))
    code, out, _ = run(capsys, "detect", str(path), "1|2|3")
    assert code == 1 and out.strip() == "result=none"


def test_cli_information_commands(capsys, tmp_path):
    code, out, _ = run(capsys, "mutualinfo", "ambiguity4.state", "--pointer", "1", "--fragment", "2,3")
    assert code == 0 and out.startswith("I_bits=")
    code, out, _ = run(capsys, "redundancy", "ambiguity4.state", "--dec", "ambiguity4.A")
    assert code == 0 and "R_delta=2" in out and "search=exhaustive" in out
    code, out, _ = run(capsys, "redundancy", "ambiguity4.state")
    assert code == 2
    code, out, _ = run(capsys, "sbs", "ambiguity4.state", "S:1|2,3|4,5", "--trace", "3")
    assert code == 0 and "sbs=true" in out
    code, _, err = run(capsys, "sbs", "ambiguity4.state", "1|2,3|4,5", "--trace", "3")
    assert code == 2 and "marked system" in err


def test_cli_fit_and_finegrain(capsys, tmp_path):
    code, out, _ = run(capsys, "fit", "ambiguity4.state", "S:1|2,4|3,5", "--reference", "ambiguity4.B", "--restarts", "2")
    assert code == 0
    kv = dict(line.split("=", 1) for line in out.split())
    assert float(kv["delta2"]) < 1e-8 and kv["max_abs_eps"] != "none"
    code, _, err = run(capsys, "fit", "ambiguity4.state", "S:1|2,4|3,5")
    assert code == 2 and "--branches" in err
    ghz = np.zeros(8)
    ghz[[0, 7]] = 2**-0.5
    path = tmp_path / "ghz.state"
    io.write_state(path, PureState(SystemLayout.qubits(3), ghz))
    dec = tmp_path / "coarse.dec"
    assert main(["detect", str(path), "S:1|2,3", "--out", str(dec)]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "finegrain", str(path), str(dec))
    assert code == 0 and "partition=S:1|2|3" in out and "refined=true" in out


def test_cli_etut_scan(capsys):
    code, out, _ = run(capsys, "etut-scan", "ambiguity4.state", "S:1|2,3|4,5")
    assert code == 0
    assert "enumerated=15 comparable=12 detected=1" in out and "violations=0" in out


def test_cli_fixture(capsys, tmp_path):
    code, out, _ = run(capsys, "fixture", "ambiguity4", "--out-dir", str(tmp_path), "--check")
    assert code == 0 and "FAIL" not in out
    assert (tmp_path / "ambiguity4.state").exists() and (tmp_path / "ambiguity4.A.dec").exists()
    assert io.read_state(tmp_path / "ambiguity4.state").state.layout.dims == (4, 2, 2, 2, 2)
    code, out, _ = run(capsys, "fixture", "comdec", "--alpha", "0.8", "--beta", "0.3j", "--check")
    assert code == 0 and "FAIL" not in out
    code, _, err = run(capsys, "fixture", "fig1a", "--alpha", "0.3")
    assert code == 2


def test_cli_errors_and_seed(capsys, tmp_path, monkeypatch):
    bad = tmp_path / "bad.state"
    bad.write_text("dims: 2\n1 0\nzz 0\n")
    code, _, err = run(capsys, "detect", str(bad), "1|2")
    assert code == 2 and f"{bad}:3:" in err
    code, _, _ = run(capsys, "no-such-command")
    assert code == 2
    code, _, _ = run(capsys, "detect")
    assert code == 2
    monkeypatch.setenv("DARWINSCOPE_SEED", "abc")
    code, _, err = run(capsys, "detect", "ambiguity4.state", "S:1|2,3|4,5")
    assert code == 2 and "DARWINSCOPE_SEED" in err
    monkeypatch.setenv("DARWINSCOPE_SEED", "7")
    code, out7, _ = run(capsys, "detect", "ambiguity4.state", "S:1|2,4|3,5")
    code2, out7b, _ = run(capsys, "detect", "ambiguity4.state", "S:1|2,4|3,5", "--seed", "7")
    assert code == code2 == 0 and out7 == out7b
