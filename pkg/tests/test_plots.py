"""Plot rendering: every target produces a readable PNG next to its report."""

import pytest

from iescreen.plots import render_target
from iescreen.targets import TARGETS, run_target

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@pytest.mark.parametrize("target", sorted(TARGETS))
def test_render_each_target(target, tmp_path):
    rows = run_target(target, seed=3, reps=30)
    path = tmp_path / f"{target}.png"
    render_target(target, rows, str(path))
    assert path.read_bytes()[:8] == PNG_MAGIC
    assert path.stat().st_size > 5_000
