"""Versioned verification reports: JSON and a plain-text rendering."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

from .padic import PadicNumber

SCHEMA_VERSION = 1
PASS, FAIL, FAIL_EXTRA, FINDING = "PASS", "FAIL", "FAIL-extra", "FAIL-finding"
EXPECTED_ORDER = (Fraction(2), Fraction(1, 2), Fraction(-1))


class SchemaVersionError(ValueError):
    pass


class ReportIOError(OSError):
    pass


def encode_padic(x: PadicNumber) -> dict:
    """Base-p digit string of the unit, with valuation and absolute precision."""
    return {"p": x.p, **x.to_json()}


def encode_rational(q: Fraction | None) -> str | None:
    return None if q is None else str(q)


def valuation_json(v):
    return "inf" if v == float("inf") else int(v)


@dataclass
class Check:
    name: str
    status: str
    detail: dict = field(default_factory=dict)
    criterion: int | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class VerificationReport:
    kind: str
    config: dict
    constants: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    common_zeros: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    audit: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def status(self) -> str:
        return PASS if all(c.passed for c in self.checks) else FAIL

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def add(self, name: str, ok: bool, detail: dict | None = None, criterion: int | None = None, fail_status: str = FAIL):
        self.checks.append(Check(name, PASS if ok else fail_status, detail or {}, criterion))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["status"] = self.status
        return d

    def payload(self) -> str:
        """Canonical JSON without timing; equal configs give equal payloads."""
        d = self.to_dict()
        d.pop("timing", None)
        _strip_timing(d)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(f"report schema version {version!r} is not supported (expected {SCHEMA_VERSION})")
        data = dict(data)
        data.pop("status", None)
        checks = [Check(**c) for c in data.pop("checks", [])]
        return cls(checks=checks, **data)


def _strip_timing(obj):
    if isinstance(obj, dict):
        obj.pop("timing", None)
        for v in obj.values():
            _strip_timing(v)
    elif isinstance(obj, list):
        for v in obj:
            _strip_timing(v)


def write_report(report: VerificationReport, path, fmt: str = "json") -> Path:
    path = Path(path)
    text = render(report, fmt)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_report(path) -> VerificationReport:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ReportIOError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ReportIOError(f"{path} is not a JSON report: {exc}") from exc
    return VerificationReport.from_dict(data)


def render(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        return render_text(report)
    raise ValueError(f"unknown report format {fmt!r}")


# ---------------------------------------------------------------------------
# text


def _fmt_padic(d) -> str:
    if not isinstance(d, dict) or "u" not in d:
        return str(d)
    p, v, u, prec = d["p"], d["v"], d["u"], d["prec"]
    if prec == "inf":
        return "0 (exact)"
    if u == "0":
        return f"O({p}^{prec})"
    lead = "" if v == 0 else f"{p}^{v} * "
    return f"{lead}[{u}]_{p} + O({p}^{prec})"


def _ordered_reconstructions(zeros: list) -> list:
    def key(z):
        q = z.get("rational")
        if q is None:
            return (1, len(EXPECTED_ORDER), "")
        q = Fraction(q)
        if q in EXPECTED_ORDER:
            return (0, EXPECTED_ORDER.index(q), "")
        return (0, len(EXPECTED_ORDER), str(q))

    return sorted(zeros, key=key)


def _summarize_row(row) -> str:
    """One line per row; nested p-adic values are shown by valuation only."""
    if not isinstance(row, dict):
        return str(row)
    if "kind" in row and "checks" in row:
        return f"{row['kind']} p={row['config'].get('p')}: {row.get('status')}"
    parts = []
    for k in sorted(row):
        v = row[k]
        if isinstance(v, dict) and "u" in v:
            v = _fmt_padic(v)
        elif isinstance(v, dict) and all(isinstance(x, dict) and "u" in x for x in v.values()):
            continue
        parts.append(f"{k}={v}")
    return "  ".join(parts)


def render_text(report: VerificationReport) -> str:
    lines = [f"kim-verify {report.kind}  [{report.status}]", ""]
    cfg = report.config
    lines.append("config: " + ", ".join(f"{k}={cfg[k]}" for k in sorted(cfg)))
    if report.constants:
        lines += ["", "constants:"]
        for name in sorted(report.constants):
            c = report.constants[name]
            val = _fmt_padic(c.get("value")) if isinstance(c, dict) else str(c)
            extra = ""
            if isinstance(c, dict):
                if c.get("rational") is not None:
                    extra += f"  ~ {c['rational']}"
                if c.get("note"):
                    extra += f"  ({c['note']})"
            lines.append(f"  {name:14s} {val}{extra}")
    if report.functions:
        lines += ["", "zero sets:"]
        for name in sorted(report.functions):
            f = report.functions[name]
            lines.append(f"  {name}: {f.get('count')} zeros on X(Z_p) ({f.get('in_Zp', f.get('count'))} located)")
    if report.common_zeros or report.kind == "verify-s2":
        lines += ["", "common zeros:"]
        for z in _ordered_reconstructions(report.common_zeros):
            q = z.get("rational")
            lines.append(f"  {q if q is not None else '(no small rational)':>8s}   {_fmt_padic(z['value'])}")
    if report.extra:
        for key in sorted(report.extra):
            val = report.extra[key]
            lines += ["", f"{key}:"]
            if isinstance(val, list):
                for row in val:
                    lines.append("  " + _summarize_row(row))
            else:
                lines.append("  " + json.dumps(val, sort_keys=True))
    lines += ["", "checks:"]
    for c in report.checks:
        crit = f"[{c.criterion}] " if c.criterion else ""
        detail = ", ".join(f"{k}={v}" for k, v in sorted(c.detail.items()))
        lines.append(f"  {c.status:12s} {crit}{c.name}" + (f"  ({detail})" if detail else ""))
    if report.timing:
        lines += ["", "timing (s): " + ", ".join(f"{k}={v:.2f}" for k, v in sorted(report.timing.items()) if isinstance(v, (int, float)) and not isinstance(v, bool))]
    return "\n".join(lines) + "\n"
