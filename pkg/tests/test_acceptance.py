"""Every acceptance criterion at its pinned tolerance, one pass/fail line each."""

import pytest

from yulebst.acceptance import CRITERIA, DEFAULT_SEED, report_lines, run_criterion
from yulebst.stat_harness import load_thresholds

THRESHOLDS = load_thresholds()


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    report = run_criterion(number, DEFAULT_SEED, THRESHOLDS)
    with capsys.disabled():
        print()
        for line in report_lines(report):
            print(line)
    assert report.passed, report.threshold
