ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    entry = ACCEPTANCE.setdefault(name, {})
    entry["outcome"] = "PASS" if report.passed else "FAIL"
    for key, value in report.user_properties:
        entry[key] = value


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda n: int(n.split("_")[1][9:])):
        e = ACCEPTANCE[name]
        terminalreporter.write_line(f"{e['outcome']}  {e.get('title', name)}: {e.get('detail', '')}")
