import json

import pytest

from fracl1.cli import main
from fracl1.harness import parse_csv


def test_scalar_default(capsys):
    assert main(["scalar"]) == 0
    rep = parse_csv(capsys.readouterr().out)
    assert [r.param for r in rep.rows] == [64, 128, 256, 512, 1024, 2048]


def test_converge_config(tmp_path, capsys):
    cfg = tmp_path / "fd.json"
    cfg.write_text(json.dumps({
        "alpha": 0.5, "r": "optimal", "M": [8, 16], "solution": "t_alpha_sinsin",
        "space": {"kind": "fd", "d": 1, "N": [16]},
    }))
    out = tmp_path / "o.md"
    assert main(["converge", "--config", str(cfg), "--format", "markdown", "--out", str(out)]) == 0
    assert out.read_text().startswith("| t_alpha_sinsin")
    assert main(["fd", "--config", str(cfg), "--format", "plotdata"]) == 0
    assert "log10" in capsys.readouterr().out


def test_kind_mismatch(tmp_path, capsys):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "M": [8, 16]}))
    assert main(["fem", "--config", str(cfg)]) == 2
    assert "scalar study" in capsys.readouterr().err


def test_bad_config(tmp_path, capsys):
    cfg = tmp_path / "b.json"
    cfg.write_text(json.dumps({"alpha": 0.5, "M": [16, 8]}))
    assert main(["converge", "--config", str(cfg)]) == 2
    assert "M: " in capsys.readouterr().err
    assert main(["converge"]) == 2


def test_checks(capsys):
    assert main(["checks", "--samples", "10", "--seed", "3", "--format", "markdown"]) == 0
    out = capsys.readouterr().out
    assert "| stability |" in out and "FAIL" not in out


def test_checks_seeded_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["checks", "--samples", "10", "--seed", "5", "--out", str(a)])
    main(["checks", "--samples", "10", "--seed", "5", "--out", str(b)])
    assert a.read_text() == b.read_text()


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["wave"])
