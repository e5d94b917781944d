import json

import pytest

from chabauty_kim import cli
from chabauty_kim.cache import CACHE_ENV
from chabauty_kim.report import VerificationReport

FAST = ["--prec", "20", "--match-digits", "12", "--samples", "4"]


def test_passing_run_exits_zero(tmp_path, capsys):
    code = cli.run(["verify-s2", "--p", "5", "--cache", str(tmp_path), *FAST])
    assert code == 0
    data = json.loads(capsys.readouterr().out)
    assert data["status"] == "PASS" and data["schema_version"] == 1


def test_failing_run_exits_one(monkeypatch):
    def failing(cfg):
        r = VerificationReport("verify-s2", cfg.echo())
        r.add("forced", False)
        return r

    monkeypatch.setattr(cli, "cmd_verify_s2", failing)
    assert cli.run(["verify-s2", "--p", "5", *FAST]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["verify-s2", "--p", "4"],
        ["verify-s2", "--kmax", "3"],
        ["verify-s2", "--p", "5,7"],
        ["verify-s2", "--prec", "20", "--match-digits", "15"],
        ["sweep", "--p", "3,9"],
    ],
)
def test_configuration_errors_exit_two(argv, capsys):
    assert cli.run(argv) == 2
    assert "configuration error" in capsys.readouterr().err


def test_argument_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        cli.run(["verify-s2", "--format", "yaml"])
    assert exc.value.code == 2


def test_unwritable_output_exits_two(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert cli.run(["constants", "--p", "5", "--cache", "none", "--out", str(blocker / "r.json"), *FAST]) == 2


def test_text_output_to_file(tmp_path):
    out = tmp_path / "r.txt"
    assert cli.run(["verify-s2", "--p", "7", "--cache", "none", "--format", "text", "--out", str(out), *FAST]) == 0
    text = out.read_text()
    block = text.split("common zeros:")[1].split("checks:")[0]
    assert [line.split()[0] for line in block.strip().splitlines()] == ["2", "1/2", "-1"]


def test_environment_variable_supplies_the_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path))
    assert cli.run(["build", "--p", "5", *FAST]) == 0
    assert any(tmp_path.iterdir())


def test_sweep_and_verify_z(tmp_path, capsys):
    assert cli.run(["sweep", "--p", "5,7", "--with-z", "--cache", str(tmp_path), *FAST]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [row["p"] for row in data["extra"]["summary"]] == [5, 7]
    assert cli.run(["verify-z", "--p", "13", "--kmax", "3", "--cache", "none", *FAST]) == 0
