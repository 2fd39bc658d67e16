import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from onlinefdr import EngineConfig


@pytest.fixture
def cfg():
    return EngineConfig(alpha=0.05, w0=0.025)
