"""The nine acceptance criteria at their stated tolerances.

Runs verify-s2 and verify-z for every prime in the sweep at N = 30 (about a
minute in total; set KIM_VERIFY_CACHE_DIR to reuse expansions).
Each test records one PASS/FAIL line, printed in the terminal summary.
"""

import random
from fractions import Fraction

import pytest
import sympy as sp

from chabauty_kim.cache import default_cache_dir
from chabauty_kim.motivic import dB_matrix, fphi_matrices, lambda_image
from chabauty_kim.report import FINDING, PASS
from chabauty_kim.verify import DEFAULT_PRIMES, IDENTITIES, RunConfig, cmd_verify_s2, cmd_verify_z, obtain_family
from conftest import ACCEPTANCE, zeta_oracle

pytestmark = pytest.mark.slow

N = 30
MATCH = 20
SAMPLES = 25


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    env = default_cache_dir()
    return str(env) if env else str(tmp_path_factory.mktemp("kim-cache"))


@pytest.fixture(scope="session")
def configs(cache_dir):
    return {p: RunConfig(p=p, N=N, match_digits=MATCH, samples=SAMPLES, cache=cache_dir) for p in DEFAULT_PRIMES}


@pytest.fixture(scope="session")
def s2(configs):
    return {p: cmd_verify_s2(cfg) for p, cfg in configs.items()}


@pytest.fixture(scope="session")
def spec_z(configs):
    return {p: cmd_verify_z(cfg) for p, cfg in configs.items()}


def _status(report, name):
    try:
        return report.check(name)
    except KeyError:
        return None


def test_criterion_1_common_zeros(s2):
    bad = {}
    for p, rep in s2.items():
        found = sorted(Fraction(z["rational"]) for z in rep.common_zeros if z["rational"] is not None)
        ok = (
            found == sorted([Fraction(-1), Fraction(1, 2), Fraction(2)])
            and len(rep.common_zeros) == 3
            and rep.check("common zeros are {2, 1/2, -1}").status == PASS
            and rep.check("roots certified").status == PASS
        )
        if not ok:
            bad[p] = [z["rational"] for z in rep.common_zeros]
    record(1, not bad, f"common zeros = {{2, 1/2, -1}} to {MATCH} digits for p in {list(s2)}" + (f"; failures {bad}" if bad else ""))
    assert not bad


def test_criterion_2_c1(s2):
    vals = {p: rep.check("c1 = 7/8").detail["v(c1-7/8)"] for p, rep in s2.items()}
    vals = {p: float("inf") if v == "inf" else v for p, v in vals.items()}
    ok = vals[11] >= 24 and all(v >= N - 6 for v in vals.values())
    record(2, ok, f"v(c1 - 7/8) per prime {vals} (need >= {N - 6})")
    assert ok


def test_criterion_3_even_zeta(s2):
    vals = {p: (rep.check("even zeta values vanish").detail["zeta2"], rep.check("even zeta values vanish").detail["zeta4"]) for p, rep in s2.items()}
    ok = all(rep.check("even zeta values vanish").status == PASS for rep in s2.values())
    record(3, ok, f"(v zeta2, v zeta4) per prime {vals} (need >= {N - 6})")
    assert ok


def test_criterion_4_functional_equations(s2, configs):
    worst = {}
    ok = True
    for p, rep in s2.items():
        c = rep.check("functional equations")
        ok &= c.status == PASS and c.detail["samples"] == SAMPLES
        worst[p] = min(v for k, v in c.detail.items() if k in IDENTITIES)
    # the constant in the three-term Li_3 identity is the family's ζ_p(3); compare it with the Bernoulli-number formula
    zeta_agree = {}
    for p, cfg in configs.items():
        fam, _, _ = obtain_family(cfg)
        zeta_agree[p] = (fam.zeta[3] - fam.ctx(zeta_oracle(p, 3, cfg.N_work))).val
    ok &= all(v >= N - 8 for v in zeta_agree.values())
    record(4, ok, f"min eq residual per prime {worst} (need >= {N - 8}); v(zeta3 - oracle) {zeta_agree}")
    assert ok


def test_criterion_5_values_at_one_half(s2):
    vals = {p: (rep.check("closed-form values at 1/2").detail["Li2(1/2)"], rep.check("closed-form values at 1/2").detail["Li3(1/2)"]) for p, rep in s2.items()}
    ok = all(rep.check("closed-form values at 1/2").status == PASS for rep in s2.values())
    record(5, ok, f"(Li2, Li3) residual valuations {vals} (need >= {N - 8})")
    assert ok


def test_criterion_6_direct_evaluation(s2):
    vals = {p: {k: v for k, v in rep.check("F4 vanishes at 2, 1/2, -1").detail.items() if k != "required"} for p, rep in s2.items()}
    ok = all(rep.check("F4 vanishes at 2, 1/2, -1").status == PASS for rep in s2.values())
    ok &= all(v == "inf" or v >= N - 8 for d in vals.values() for v in d.values())
    record(6, ok, f"v(F4(b)) per prime {vals} (need >= {N - 8})")
    assert ok


def test_criterion_7_symbolic_golden_values():
    c = sp.Rational(7, 8)
    golden_M = sp.Matrix([[0, 1, -c], [4, 0, -sp.Rational(1, 6)], [6, 0, -sp.Rational(1, 4)], [4, 0, -sp.Rational(1, 6)], [0, 1, 0]])
    db_ok = dB_matrix(c) == golden_M

    rng = random.Random("lambda-image")
    lam_ok = True
    for _ in range(100):
        a, b, d = (Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**6)) for _ in range(3))
        _, residuals = lambda_image(a, b, d)
        lam_ok &= all(r == 0 for r in residuals)

    lg, zt = sp.symbols("log2 zeta3")
    expected = {
        1: [[lg]],
        2: [[2 * lg**2], [0]],
        3: [[lg**3, 0], [0, 0], [0, 0], [0, zt]],
    }
    mismatches = {}
    for level, want in expected.items():
        got = fphi_matrices(level, lg, zt if level == 3 else None)
        for i, (grow, wrow) in enumerate(zip(got, want)):
            for j, (g, w) in enumerate(zip(grow, wrow)):
                if sp.expand(g - w) != 0:
                    mismatches[(level, i, j)] = (str(g), str(w))
    fphi_ok = not mismatches and all(len(fphi_matrices(l, lg, zt)) == len(expected[l]) for l in expected)
    ok = db_ok and lam_ok and fphi_ok
    record(7, ok, f"dB matrix {'ok' if db_ok else 'differs'}; lambda residuals {'zero' if lam_ok else 'nonzero'} on 100 draws; fphi mismatches (got, expected) {mismatches}")
    assert db_ok
    assert lam_ok
    assert fphi_ok, mismatches


def test_criterion_8_construction_residuals(s2):
    vals = {}
    ok = True
    for p, rep in s2.items():
        c = rep.check("construction residuals")
        ok &= c.status == PASS and c.detail["ode_min"] >= N and c.detail["frobenius_min"] >= N and c.detail["heldout_min"] >= N - 4
        vals[p] = (c.detail["ode_min"], c.detail["frobenius_min"], c.detail["heldout_min"])
    record(8, ok, f"(ode, frobenius, held-out) minima per prime {vals} (need >= {N}, {N}, {N - 4})")
    assert ok


def test_criterion_9_spec_z(spec_z):
    summary = {}
    ok = True
    for p, rep in spec_z.items():
        certified = rep.check("Spec Z evaluations certified").status == PASS
        locus = rep.check("Spec Z locus empty").status
        ok &= certified and locus in (PASS, FINDING)
        summary[p] = (len(rep.extra["candidates"]), locus)
    findings = [p for p, (_, s) in summary.items() if s == FINDING]
    record(
        9,
        ok and not findings,
        f"(candidates, locus verdict) per prime {summary}" + (f"; non-empty locus reported as a finding at {findings}" if findings else "; locus empty everywhere"),
    )
    # a non-empty locus is a finding about the conjecture, not a test error
    assert ok
