import pytest

# criterion number -> one-line verdict, filled by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])


@pytest.fixture
def verdict():
    """Record and print the PASS/FAIL line for one criterion, then assert."""

    def record(n: int, title: str, checks: dict[str, tuple[float, float, str]]):
        # checks: name -> (value, bound, "<=" or ">=")
        bad = []
        parts = []
        for name, (value, bound, op) in checks.items():
            ok = value <= bound if op == "<=" else value >= bound
            if not ok:
                bad.append(name)
            parts.append(f"{name}={value:.3g}{op}{bound:g}")
        status = "PASS" if not bad else "FAIL"
        line = f"criterion {n:2d} {status}: {title} [" + ", ".join(parts) + "]"
        ACCEPTANCE[n] = line
        print(line)
        assert not bad, line

    return record
