# tests/test_cli.py
import json

from app.scripts.endring_cli import main


def test_census_to_json_file(tmp_path, capsys):
    out = tmp_path / "census.json"
    code = main(["--json-out", str(out), "census", "--p-min", "29", "--p-max", "31"])
    assert code == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert [r["p"] for r in data] == [29, 31]


def test_hash_prints_json(capsys, monkeypatch):
    monkeypatch.setenv("ENDRING_QUIET", "1")
    code = main(["hash", "--p", "31", "--input", "a"])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["input"] == "1010"
    assert len(data["path"]) == 5


def test_config_error_exit_code():
    assert main(["--ell", "1", "census", "--p-min", "29", "--p-max", "31"]) == 2


def test_ordinary_j_exit_code():
    assert main(["endring", "--p", "31", "--j", "0"]) == 2


def test_desk_scale_exit_code(monkeypatch):
    monkeypatch.setenv("ENDRING_DESK_CAP", "50")
    assert main(["endring", "--p", "103", "--j", "1728"]) == 3


def test_bad_hex_exit_code():
    assert main(["hash", "--p", "31", "--input", "zz"]) == 2
