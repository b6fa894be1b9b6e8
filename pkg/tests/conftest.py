import os
from pathlib import Path

import pytest

from wavepanel.demo import demo_panel
from wavepanel.ingest import weekly_mask_average, write_panel

REPO = Path(__file__).resolve().parents[1]


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion, reported in the summary")
    config._criteria = {}
    config._criteria_notes = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is None:
        return
    key = (str(m.args[0]), m.args[1])
    results = item.config._criteria
    failed = rep.failed or (rep.when == "setup" and rep.skipped)
    if rep.when == "call" or failed:
        prev = results.get(key, "PASS")
        results[key] = "FAIL" if failed or prev == "FAIL" else "PASS"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criteria", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    order = lambda k: (int("".join(ch for ch in k[0] if ch.isdigit()) or 0), k[0])
    notes = config._criteria_notes
    for key in sorted(results, key=order):
        terminalreporter.write_line(f"criterion {key[0]:<3} {results[key]}  {key[1]}")
        for line in notes.get(key[0], []):
            terminalreporter.write_line(f"    {line}")


@pytest.fixture
def note(request):
    """Attach a measured value to the current criterion's summary line."""
    m = request.node.get_closest_marker("criterion")
    bucket = request.config._criteria_notes.setdefault(str(m.args[0]) if m else "-", [])
    return bucket.append


@pytest.fixture(scope="session")
def demo():
    """24-country synthetic panel with weekly mask averages filled."""
    return weekly_mask_average(demo_panel(seed=7))


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("demo_data")
    write_panel(demo_panel(seed=7), d)
    return d


def real_data_dir() -> Path | None:
    """Directory holding the real daily/weekly/covariates CSVs, if any."""
    candidates = [os.environ.get("WAVEPANEL_DATA"), REPO / "data"]
    for c in candidates:
        if c and all((Path(c) / f"{n}.csv").exists() for n in ("daily", "weekly", "covariates")):
            return Path(c)
    return None
