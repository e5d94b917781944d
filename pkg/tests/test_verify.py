from fractions import Fraction

import pytest

from chabauty_kim.polylog import build_family
from chabauty_kim.padic import PadicContext
from chabauty_kim.report import PASS
from chabauty_kim.verify import (
    ConfigError,
    RunConfig,
    cmd_build,
    cmd_constants,
    cmd_sweep,
    cmd_verify_s2,
    cmd_verify_z,
    duplication_applicable,
    sample_points,
    spec_z_candidates,
)

FAST = dict(N=20, match_digits=12, samples=6)


@pytest.mark.parametrize(
    "kw",
    [dict(p=4), dict(p=2), dict(N=8), dict(kmax=3), dict(match_digits=0), dict(match_digits=13, N=20), dict(format="xml"), dict(site="q")],
)
def test_bad_configurations_are_rejected(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw).validate()


def test_spec_z_site_accepts_kmax_three():
    RunConfig(site="z", kmax=3).validate()


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37])
def test_spec_z_candidates_are_primitive_sixth_roots(p):
    fam = build_family(PadicContext(p, 12), 3)
    got = sorted(a for a, _, _ in spec_z_candidates(fam))
    # Z_p holds primitive sixth roots of unity iff p = 1 mod 3; they reduce to roots of a^2 - a + 1.
    # (At p = 3 that polynomial has the ramified double root -1, which lifts to no such root.)
    oracle = sorted(a for a in range(2, p) if (a * a - a + 1) % p == 0) if p % 3 == 1 else []
    assert got == oracle


def test_duplication_applicability():
    assert not duplication_applicable(3)
    assert all(duplication_applicable(p) for p in (5, 7, 11, 29))


def test_sample_points_are_deterministic_and_in_x_zp():
    cfg = RunConfig(p=7, **FAST)
    pts = sample_points(cfg, 25)
    assert pts == sample_points(cfg, 25)
    assert all(z % 7 not in (0, 1) for z in pts)


@pytest.fixture(scope="module")
def s2_report(tmp_path_factory):
    return cmd_verify_s2(RunConfig(p=5, cache=str(tmp_path_factory.mktemp("c")), **FAST))


def test_verify_s2_small_run_passes(s2_report):
    assert s2_report.status == PASS, [c for c in s2_report.checks if c.status != PASS]
    got = sorted(Fraction(z["rational"]) for z in s2_report.common_zeros)
    assert got == sorted([Fraction(2), Fraction(1, 2), Fraction(-1)])
    assert s2_report.constants["c1"]["rational"] == "7/8"


def test_cold_and_warm_runs_have_identical_payloads(tmp_path):
    cfg = RunConfig(p=5, cache=str(tmp_path), **FAST)
    cold = cmd_verify_s2(cfg)
    warm = cmd_verify_s2(cfg)
    assert cold.timing["cache_hit"] is False and warm.timing["cache_hit"] is True
    assert cold.payload() == warm.payload()
    assert cold.payload() == cmd_verify_s2(cfg.with_(cache="none")).payload()


def test_sweep_of_one_prime_equals_the_single_run(s2_report):
    cfg = RunConfig(p=5, cache="none", **FAST)
    sweep = cmd_sweep([5], cfg)
    assert sweep.status == PASS
    run = dict(sweep.extra["runs"][0])
    run.pop("timing")
    single = s2_report.to_dict()
    single.pop("timing")
    assert run == single


def test_verify_z_reports_candidates_and_empty_locus():
    rep = cmd_verify_z(RunConfig(p=7, site="z", **FAST))
    assert rep.status == PASS
    assert [r["residue"] for r in rep.extra["candidates"]] == [3, 5]
    assert rep.extra["locus"]["points"] == []


def test_constants_and_build_commands():
    cfg = RunConfig(p=7, cache="none", **FAST)
    c = cmd_constants(cfg)
    assert c.status == PASS and c.constants["c1"]["rational"] == "7/8"
    b = cmd_build(cfg)
    assert b.status == PASS and b.audit["disks"] == [2, 3, 4, 5, 6]
