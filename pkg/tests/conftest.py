import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print the acceptance-criterion summary lines after the test run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT_LINES", None) if module else None
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
