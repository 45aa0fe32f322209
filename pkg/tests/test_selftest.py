import pytest

from infosdl.selftest import CheckResult, run_selftest


def test_all_checks_pass_quickly():
    lines = []
    results = run_selftest(seed=0, out=lines.append)
    assert len(results) == 7 and all(r.passed for r in results)
    assert sum(r.seconds for r in results) <= 120
    assert all(line.startswith("PASS") and "tolerance" in line for line in lines)


@pytest.mark.parametrize("seed", [1, 2])
def test_checks_pass_for_other_seeds(seed):
    assert all(r.passed for r in run_selftest(seed=seed, out=None))


def test_injected_bug_fails_gradient_checks_only():
    results = {r.name: r.passed for r in run_selftest(seed=0, inject_bug="gradient", out=None)}
    assert not results["density gradients vs finite differences"]
    assert not results["SPD gradients vs finite differences"]
    assert sum(results.values()) == 5
    with pytest.raises(ValueError):
        run_selftest(inject_bug="typo")


def test_non_finite_measurement_fails():
    assert not CheckResult("x", float("nan"), 1.0, 0.0).passed
