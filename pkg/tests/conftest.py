import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.session_start = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # the timing criterion measures the whole session, so it runs last
    last = [it for it in items if it.name.startswith("test_criterion_13")]
    items[:] = [it for it in items if it not in last] + last
