import pytest

from pemsignal.synth import SynthConfig, generate_cohort

_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number = marker.args[0]
    title = marker.kwargs.get("title", item.name)
    if report.when == "call" or report.failed:
        prev = _acceptance.get(number, (title, True))
        _acceptance[number] = (title, prev[1] and report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok = _acceptance[number]
        terminalreporter.write_line(f"AC{number} {title}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture(scope="session")
def small_cohort(tmp_path_factory):
    """A 1000-patient synthetic cohort with the default planted events."""
    cfg = SynthConfig(n_patients=1000, n_null_events=40, seed=11)
    out = tmp_path_factory.mktemp("cohort")
    therapy, medical = generate_cohort(cfg, out)
    return cfg, out, therapy, medical
