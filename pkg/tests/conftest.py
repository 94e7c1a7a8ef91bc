import functools
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from safeplan.parser import find_bundles, parse_bundle  # noqa: E402

FIXTURE_NAMES = [p.name for p in find_bundles(FIXTURES)]


@functools.lru_cache(maxsize=None)
def load(name: str):
    return parse_bundle(FIXTURES / name)


@pytest.fixture
def knife():
    return load("knife_child")


@pytest.fixture(params=FIXTURE_NAMES)
def fixture_bundle(request):
    return load(request.param)


UNSAFE_KNIFE = "MOVE_TO(table)\nPLACE_ON(knife, table)\n"
SAFE_KNIFE = "MOVE_TO(table)\nOPEN(drawer)\nPLACE_IN(knife, drawer)\nCLOSE(drawer)\n"
