from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            node = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in node:
                continue
            if rep.when == "call" or key != "passed":
                prev = outcomes.get(node)
                outcomes[node] = "FAIL" if key != "passed" or prev == "FAIL" else "PASS"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for node in sorted(outcomes):
        name = node.split("::")[-1].removeprefix("test_criterion_")
        num, _, title = name.partition("_")
        terminalreporter.write_line(f"criterion {int(num):>2} {title:<28} {outcomes[node]}")
