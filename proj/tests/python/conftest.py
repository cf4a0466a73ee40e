import os
import shutil
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cli():
    """Path of the vsl executable: VSL_CLI, then the default build tree, then PATH."""
    candidates = [os.environ.get("VSL_CLI"), Path(__file__).resolve().parents[2] / "build" / "vsl", shutil.which("vsl")]
    for c in candidates:
        if c and Path(c).is_file():
            return str(c)
    pytest.skip("vsl executable not found")
