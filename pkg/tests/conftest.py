"""Shared test plumbing: records acceptance-criterion lines and reprints
them in the terminal summary so the pass/fail ledger survives output capture."""

criterion_lines = []


def record_criterion(line: str) -> None:
    criterion_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in criterion_lines:
            terminalreporter.write_line(line)
