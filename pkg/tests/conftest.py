import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")

# one week from hour 1440, matching the bundled system configs
WEEK_STEPS = 168 * 4
WEEK_START_WEEKDAY = (1440 // 24) % 7


@pytest.fixture(scope="session")
def week_config():
    from bevpsm.profiles import load_generator_config

    return load_generator_config(overrides={"horizon_steps": WEEK_STEPS, "start_weekday": WEEK_START_WEEKDAY})


@pytest.fixture(scope="session")
def small_pool(week_config):
    from bevpsm.profiles import build_pool

    return build_pool(12, 100, week_config)


@pytest.fixture(scope="session")
def small_pool_dir(small_pool, tmp_path_factory):
    return small_pool.save(tmp_path_factory.mktemp("pool12"))


@pytest.fixture(scope="session")
def year_pool():
    """The default 200-profile pool over a full year."""
    from bevpsm.profiles import build_pool, default_config

    return build_pool(200, 1, default_config())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
