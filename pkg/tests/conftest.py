import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# (number, title, passed, detail) recorded by the acceptance suite
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
