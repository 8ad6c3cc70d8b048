"""The twelve acceptance criteria, each run through the experiment driver.

Every criterion prints one ``PASS``/``FAIL`` line with its runtime; the
lines are repeated in the terminal summary.
"""

import time

import pytest

from gaudinlab.cli import ExperimentConfig, run

RESULTS = {}


def _report(kind, **params):
    start = time.perf_counter()
    rep = run(kind, ExperimentConfig.from_mapping(kind, params))
    return rep, time.perf_counter() - start


def _records(rep, prefix):
    return [c for c in rep.checks if c.check_id.startswith(prefix)]


def c1():
    rep, dt = _report("diagram-selftest", max_m=4, functor_n=[])
    counts = {c.check_id: c.value for c in _records(rep, "basis_count")}
    ok = rep.passed and counts == {f"basis_count[m={m}]": str(f) for m, f in ((1, 1), (2, 2), (3, 6), (4, 24))}
    return ok, dt, 5, f"{len(rep.checks)} checks"


def c2():
    rep, dt = _report("diagram-selftest", max_m=0, functor_pairs=200, functor_n=[2, 3])
    vals = [c.value for c in rep.checks]
    return rep.passed and vals == ["200/200", "200/200"], dt, 30, ", ".join(vals)


def c3():
    rep, dt = _report("commute", k_max=3)
    ns = {c.check_id.split("n=")[1][0] for c in rep.checks}
    return rep.passed and ns == {"2", "3"}, dt, 300, f"{len(rep.checks) // 2} modules"


def c4():
    rep, dt = _report("newton-vs-cdet", deligne=[])
    checks = _records(rep, "newton_")
    return bool(checks) and all(c.passed for c in checks), dt, 120, f"{len(checks)} identities"


def c5():
    rep, dt = _report("newton-vs-cdet")
    matrix, deligne = _records(rep, "binomial["), _records(rep, "binomial_w[")
    ok = matrix and deligne and all(c.passed for c in matrix + deligne)
    return bool(ok), dt, 120, f"{len(matrix)} matrix, {len(deligne)} symbolic"


def c6():
    rep, dt = _report("deligne-vs-matrix", k_max=3, extra_n=1)
    return rep.passed and len(rep.checks) == 4, dt, 180, ", ".join(c.value for c in rep.checks)


def c7():
    rep, dt = _report("monodromy-equivalence", trials=120)
    vals = {c.check_id: c.value for c in rep.checks}
    return rep.passed, dt, 60, f"{vals['equivalence']} agree, obstruction values {vals['obstruction_value']}"


def c8():
    rep, dt = _report("stabilized-ideal")
    return rep.passed and len(rep.checks) >= 8, dt, 120, f"{len(rep.checks)} configurations"


def c9():
    rep, dt = _report("psdo-algebra", trials=100, depth=8)
    vals = {c.check_id: c.value for c in rep.checks}
    ok = rep.passed and vals["associativity"] == "100/100" and vals["two_sided_inverse"] == "100/100"
    return ok, dt, 60, ", ".join(f"{k} {v}" for k, v in sorted(vals.items()))


def c10():
    rep, dt = _report("attachment", trials=50)
    vals = {c.check_id: c.value for c in rep.checks}
    ok = rep.passed and vals == {"lemma_row": "50/50", "lemma_col": "50/50"}
    return ok, dt, 120, ", ".join(f"{k} {v}" for k, v in sorted(vals.items()))


def c11():
    rep, dt = _report("ratio-check")
    stab = [c for c in _records(rep, "all:") if c.value != "not evaluated"]
    ok = rep.passed and len(stab) > 0 and all(c.value == "0" for c in stab)
    return ok, dt, 180, f"{len(stab)} stabilized values, all zero: {ok}"


def c12():
    rep, dt = _report("bethe-spectrum", precision=50, tolerance="1e-9", expected_multiplicities=[3, 1])
    residuals = [c.value for c in _records(rep, "block[") if c.check_id.endswith(":residual")]
    return rep.passed and len(residuals) == 2, dt, 60, "residuals " + ", ".join(residuals)


CRITERIA = [
    (1, "diagram algebra End(V^m) = Q[S_m]", c1),
    (2, "functoriality of G_n", c2),
    (3, "commutativity of S and B", c3),
    (4, "Newton expansion vs column determinant", c4),
    (5, "binomial relation, matrix and w-symbolic", c5),
    (6, "Deligne to matrix transport", c6),
    (7, "monodromy equivalence", c7),
    (8, "stabilized generators", c8),
    (9, "pseudo-differential algebra", c9),
    (10, "row and column attachment", c10),
    (11, "ratio desk check", c11),
    (12, "Bethe spectrum", c12),
]


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    lines = [RESULTS[k] for k in sorted(RESULTS)]
    if reporter is not None:
        reporter.write_line("")
        for line in lines:
            reporter.write_line(line)


@pytest.mark.parametrize("num,name,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, name, fn):
    ok, dt, limit, detail = fn()
    passed = ok and dt < limit
    line = f"{'PASS' if passed else 'FAIL'} criterion {num:2d}: {name} ({dt:.2f} s, limit {limit} s; {detail})"
    RESULTS[num] = line
    print(line)
    assert ok, line
    assert dt < limit, line
