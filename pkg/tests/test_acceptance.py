"""End-to-end acceptance checks, one per experiment driver.

Each driver runs at its frozen configuration and tolerance.  The verdict
line is printed to the terminal even under captured output, so
``pytest tests/test_acceptance.py`` shows a PASS/FAIL line per check.
"""

import pytest

from cuspflow.experiments import ACCEPTANCE


@pytest.mark.acceptance
@pytest.mark.parametrize("driver", ACCEPTANCE, ids=[f.__name__ for f in ACCEPTANCE])
def test_acceptance(driver, capsys):
    outcome = driver()
    with capsys.disabled():
        print(f"\n{outcome.line()} [{outcome.seconds:.1f}s]")
    assert outcome.passed, outcome.line()
