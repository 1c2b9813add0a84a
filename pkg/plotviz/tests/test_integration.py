"""End-to-end check against artifacts produced by the qkicks CLI, when the
primary package is importable (it consumes only the CSV + sidecar files)."""
from __future__ import annotations

import os

import pytest

qkicks_cli = pytest.importorskip("qkicks.cli")

from plotviz.render import FigureSpec, RenderError, render


def test_renders_real_ee_grid_and_refuses_truncation(tmp_path):
    out_dir = tmp_path / "run"
    rc = qkicks_cli.main(
        [
            "top-ee",
            "--phi-range", "0:6.283185307179586:6",
            "--theta-range", "0:3.141592653589793:6",
            "--n-spins", "8",
            "--kicks", "10",
            "--output-dir", str(out_dir),
            "--workers", "1",
            "--mark", "T1:2.20:2.25",
            "--mark", "T2:3.57:2.25",
        ]
    )
    assert rc == 0
    csv_path = out_dir / "top_ee.csv"
    image = tmp_path / "fig1c.png"
    render(FigureSpec(kind="heatmap", csv_paths=[str(csv_path)], output_path=str(image)))
    assert image.stat().st_size > 0

    lines = csv_path.read_text().splitlines()
    csv_path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(RenderError, match="shape mismatch"):
        render(FigureSpec(kind="heatmap", csv_paths=[str(csv_path)], output_path=str(tmp_path / "x.png")))


def test_renders_real_series_and_trajectories(tmp_path):
    out_dir = tmp_path / "run"
    assert qkicks_cli.main(
        ["ergodicity", "--n-spins", "8", "--kicks", "15", "--stride", "5",
         "--output-dir", str(out_dir), "--workers", "1"]
    ) == 0
    image = tmp_path / "fig2.png"
    render(FigureSpec(kind="series", csv_paths=[str(out_dir / "ergodicity.csv")],
                      output_path=str(image)))
    assert image.stat().st_size > 0

    assert qkicks_cli.main(
        ["top-phase", "--n-starts", "4", "--kicks", "10", "--output-dir", str(out_dir)]
    ) == 0
    image = tmp_path / "fig1a.png"
    render(FigureSpec(kind="scatter", csv_paths=[str(out_dir / "top_phase.csv")],
                      output_path=str(image)))
    assert image.stat().st_size > 0
