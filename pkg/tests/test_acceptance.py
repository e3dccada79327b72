"""Acceptance suite: every bundled scenario at its stated tolerance and time budget.

Run alone with ``pytest tests/test_acceptance.py -v`` (one PASS/FAIL line per
criterion is printed in the terminal summary) or as a script with
``python3 tests/test_acceptance.py``.
"""
import sys

import pytest

from genurn.analysis import default_workers
from genurn.verify import SCENARIOS, load_preset

# wall-clock budgets in seconds; None where no budget is stated
BUDGETS = {1: 10, 2: 5, 3: 300, 4: 300, 5: 600, 6: 120, 7: 300, 8: 300, 9: 300, 10: 300,
           11: None, 12: None}

ORDER = sorted(SCENARIOS, key=lambda name: SCENARIOS[name].criterion)

RESULTS: dict[int, str] = {}


def run_criterion(name: str):
    report = load_and_run(name)
    budget = BUDGETS[report.criterion]
    in_time = budget is None or report.seconds <= budget
    ok = report.passed and in_time
    limit = "" if budget is None else f" (budget {budget} s)"
    line = (f"{'PASS' if ok else 'FAIL'} criterion {report.criterion:>2} {name}: "
            f"{len(report.checks) - len(report.failed)}/{len(report.checks)} checks, "
            f"{report.seconds:.1f} s{limit}")
    RESULTS[report.criterion] = line
    return report, ok, in_time, line


def load_and_run(name: str):
    from genurn.verify import run_verify
    return run_verify(load_preset(name), default_workers())


@pytest.mark.slow
@pytest.mark.parametrize("name", ORDER)
def test_criterion(name):
    report, ok, in_time, line = run_criterion(name)
    print(line)
    failed = "; ".join(c.line() for c in report.failed)
    assert report.passed, failed
    assert in_time, line


def test_every_criterion_has_a_scenario():
    assert sorted(SCENARIOS[n].criterion for n in SCENARIOS) == list(range(1, 13))


if __name__ == "__main__":
    all_ok = True
    for name in ORDER:
        report, ok, _, line = run_criterion(name)
        if not ok:
            print(report.summary())
        print(line, flush=True)
        all_ok &= ok
    sys.exit(0 if all_ok else 1)
