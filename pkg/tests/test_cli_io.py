import json
import warnings
from pathlib import Path

import pytest

from padic_langlands import cli_io
from padic_langlands.cli_io import (
    ParseError, PrecisionWarning, SuiteConfig, cli_dispatch, emit_report, load_config, parse_series, run_suite,
)
from padic_langlands.padic_core import ConfigurationError

GOLDEN = Path(__file__).parent / "golden"
KINDS = ["scalar", "series", "cyclotomic", "sequence", "datum", "locconst", "locpoly", "matrix", "mahler", "config"]


@pytest.mark.parametrize("kind", KINDS)
def test_golden_roundtrip(kind):
    text = (GOLDEN / f"{kind}.json").read_text(encoding="utf-8")
    obj = getattr(cli_io, f"parse_{kind}")(text)
    assert getattr(cli_io, f"emit_{kind}")(obj) == text


def test_missing_prime_is_located():
    text = (GOLDEN / "series.json").read_text().replace('  "p": 3,\n', "")
    with pytest.raises(ParseError, match="missing field 'p'"):
        parse_series(text)


def test_bad_digits_report_position():
    text = (GOLDEN / "series.json").read_text().replace('"u": "8"', '"u": "8x"')
    with pytest.raises(ParseError) as err:
        parse_series(text)
    assert err.value.line > 1


def test_malformed_json():
    with pytest.raises(ParseError) as err:
        parse_series('{\n  "format": "padic-langlands/series",\n  "p": 3,,\n}')
    assert err.value.line == 3


def test_wrong_document_kind():
    with pytest.raises(ParseError, match="expected a series document"):
        parse_series((GOLDEN / "scalar.json").read_text())


def test_very_negative_valuation_warns():
    doc = json.loads((GOLDEN / "series.json").read_text())
    doc["coefficients"][0] = {"v": -9, "u": "1", "prec": 1}
    doc["shift"] = -9
    with pytest.warns(PrecisionWarning):
        f = parse_series(json.dumps(doc))
    assert f.coeff(0).v == -9


def test_no_warning_at_the_boundary():
    doc = json.loads((GOLDEN / "series.json").read_text())
    doc["coefficients"][0] = {"v": -8, "u": "1", "prec": 1}
    doc["shift"] = -8
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_series(json.dumps(doc))


def test_qpoly_verb(capsys):
    assert cli_dispatch(["qpoly", "--p", "2", "--n", "1"]) == 0
    assert capsys.readouterr().out.strip() == "X + 2"


def test_gauss_square_verb(capsys):
    assert cli_dispatch(["gauss", "--p", "3", "--tame", "1", "--square"]) == 0
    assert capsys.readouterr().out.strip() == "-3 mod 3^4"


def test_unknown_verb(capsys):
    assert cli_dispatch(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_series_verbs_roundtrip_files(tmp_path, capsys):
    out = tmp_path / "phi.json"
    assert cli_dispatch(["phi", "--p", "2", "--coeffs", "0,1", "--N", "8", "--M", "4", "--out", str(out)]) == 0
    f = parse_series(out.read_text())
    assert [f.fraction(i) for i in range(3)] == [0, 2, 1]
    assert cli_dispatch(["psi", "--in", str(out)]) == 0


def test_parse_error_exit_status(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert cli_dispatch(["psi", "--in", str(bad)]) == 3


def test_config_floor_error():
    cfg = SuiteConfig(M=5, m_max=2)
    with pytest.raises(ConfigurationError, match=r"min\(N, floor\(M / e_m\)\)"):
        cfg.validate()


def test_config_from_environment(tmp_path, monkeypatch):
    path = tmp_path / "cfg.json"
    path.write_text(cli_io.emit_config(SuiteConfig(seed=3, group_pairs=4)))
    monkeypatch.setenv("PADIC_LANGLANDS_CONFIG", str(path))
    cfg = load_config(None)
    assert cfg.seed == 3 and cfg.group_pairs == 4


def test_config_hash_ignores_output_dir():
    assert SuiteConfig(output_dir="a").hash() == SuiteConfig(output_dir="b").hash()
    assert SuiteConfig(seed=1).hash() != SuiteConfig(seed=2).hash()


def test_partial_suite_is_deterministic():
    cfg = SuiteConfig(operator_samples=2, mahler_samples=3, group_pairs=5, central_samples=2)
    only = ["operators", "mahler", "gl2"]
    a, b = emit_report(run_suite(cfg, only)), emit_report(run_suite(cfg, only))
    assert a == b
    rep = json.loads(a)
    assert rep["ok"] and [c["id"] for c in rep["checks"]] == ["01-operators", "03-mahler", "09-gl2"]
