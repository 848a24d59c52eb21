import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> list of (passed, detail) collected by the acceptance tests
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
