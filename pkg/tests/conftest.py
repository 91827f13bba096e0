import pytest

_RESULTS = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line per criterion; failures are recorded on raise."""
    results = request.config.stash.setdefault(_RESULTS, {})

    class Recorder:
        def __init__(self):
            self.key, self.detail = None, ""

        def __call__(self, key, detail=""):
            self.key, self.detail = key, detail

    rec = Recorder()
    yield rec
    if rec.key is not None:
        failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
        xfail = hasattr(request.node, "rep_call") and hasattr(request.node.rep_call, "wasxfail")
        status = "XFAIL" if xfail else ("FAIL" if failed else "PASS")
        line = f"criterion {rec.key:<4} {status:<5} {rec.detail}"
        print("\n" + line)
        results.setdefault(rec.key, []).append(line)


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    if report.when == "call":
        item.rep_call = report
    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: (int("".join(c for c in k if c.isdigit())), k)):
        for line in results[key]:
            terminalreporter.write_line(line)
