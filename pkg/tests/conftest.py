import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the run, outside capture."""
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None) if module else None
    if verdicts:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance checks", sep="-")
        for line in verdicts:
            terminalreporter.write_line(line)
