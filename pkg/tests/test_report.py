import json

import pytest

from chabauty_kim.report import (
    FAIL,
    FAIL_EXTRA,
    PASS,
    SCHEMA_VERSION,
    ReportIOError,
    SchemaVersionError,
    VerificationReport,
    read_report,
    render_text,
    write_report,
)


def sample():
    r = VerificationReport("verify-s2", {"p": 5, "N": 20}, timing={"family": 1.5})
    for q in ("-1", "1/2", "2"):
        r.common_zeros.append({"value": {"p": 5, "v": 0, "u": "1", "prec": 20}, "rational": q, "residue": 0})
    r.add("ok", True, {"x": 1}, criterion=1)
    return r


def test_status_aggregates_checks():
    r = sample()
    assert r.status == PASS
    r.add("bad", False, fail_status=FAIL_EXTRA)
    assert r.status == FAIL
    assert r.check("bad").status == FAIL_EXTRA


def test_json_round_trip(tmp_path):
    r = sample()
    path = write_report(r, tmp_path / "r.json")
    back = read_report(path)
    assert back.payload() == r.payload()
    assert back.timing == r.timing


def test_schema_mismatch_raises(tmp_path):
    d = sample().to_dict()
    d["schema_version"] = SCHEMA_VERSION + 1
    path = tmp_path / "r.json"
    path.write_text(json.dumps(d))
    with pytest.raises(SchemaVersionError):
        read_report(path)


def test_payload_excludes_timing_everywhere():
    a, b = sample(), sample()
    b.timing = {"family": 99.0}
    b.extra = {"runs": [{"timing": {"x": 1}, "k": 1}]}
    a.extra = {"runs": [{"timing": {"x": 2}, "k": 1}]}
    assert a.payload() == b.payload()
    assert "timing" not in a.payload()


def test_text_lists_reconstructions_in_fixed_order():
    text = render_text(sample())
    block = text.split("common zeros:")[1].split("checks:")[0]
    order = [line.split()[0] for line in block.strip().splitlines()]
    assert order == ["2", "1/2", "-1"]
    assert "[PASS]" in text.splitlines()[0]


def test_unwritable_destination(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportIOError):
        write_report(sample(), blocker / "r.json")
