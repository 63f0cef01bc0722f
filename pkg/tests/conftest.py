from __future__ import annotations

import pytest
from hypothesis import settings

from builders import adversarial_suite, make_point, make_snapshot

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def suite():
    return adversarial_suite(20)


@pytest.fixture
def small_case():
    files = {
        "app/main.py": "def main():\n    pass\n",
        "app/util.py": "def helper(x):\n    return x * 2\n",
        "docs/notes.md": "helper notes\n",
    }
    snap = make_snapshot(files)
    point = make_point(
        prefix="from app.util import helper\n\ndef main():\n    y = ",
        suffix="\n    return y\n",
        ground_truth="helper(3)",
        co_changed=["app/util.py"],
    )
    return point, snap
