"""CSV artifacts and their JSON metadata sidecars.

Every output file is a plain CSV with a header row; floats carry 17
significant digits so values round-trip exactly.  Grid files hold one row
per cell in cell-index order (first axis outermost); series files hold one
row per recorded step.  The sidecar (same basename, ``.meta.json``) carries
the canonical run configuration, axes, marks and provenance.
"""
from __future__ import annotations

import datetime
import json
import os

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import InvalidParameterError
from .scan import ScanResult

__all__ = [
    "VALUE_COLUMNS",
    "fmt",
    "grid_csv_lines",
    "write_grid_csv",
    "write_series_csv",
    "write_matrix_csv",
    "write_trajectories_csv",
    "write_sidecar",
    "sidecar_path",
    "build_sidecar",
]

VALUE_COLUMNS = {
    "kse-grid": "kse_bits_per_kick",
    "ee-grid": "time_averaged_ee",
    "ee-slice": "time_averaged_ee",
    "fidelity-vs-k": "uhlmann_fidelity",
    "husimi": "husimi_density",
    "density-matrix": "magnitude",
    "ergodicity-series": "ergodicity_fidelity",
}


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def sidecar_path(csv_path: str) -> str:
    base, _ = os.path.splitext(csv_path)
    return base + ".meta.json"


def _open_new(path: str, overwrite: bool):
    if os.path.exists(path) and not overwrite:
        raise FileExistsError(f"refusing to overwrite existing output {path}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    return open(path, "w", newline="")


def grid_csv_lines(result: ScanResult):
    """Header plus one line per cell for scalar-per-cell scan kinds."""
    spec = result.spec
    value_name = VALUE_COLUMNS[spec.kind]
    shape = spec.grid_shape()
    if spec.kind == "density-matrix":
        yield f"row,col,{value_name}"
        for idx in range(result.values.shape[0]):
            r, c = divmod(idx, shape[1])
            yield f"{r},{c},{fmt(result.values[idx, 0])}"
        return
    names = [ax.name for ax in spec.axes]
    if len(names) == 1:
        yield f"{names[0]},{value_name}"
        centers = spec.axes[0].centers()
        for idx in range(result.values.shape[0]):
            yield f"{fmt(centers[idx])},{fmt(result.values[idx, 0])}"
        return
    yield f"{names[0]},{names[1]},{value_name}"
    c1 = spec.axes[0].centers()
    c2 = spec.axes[1].centers()
    for idx in range(result.values.shape[0]):
        i, k = divmod(idx, shape[1])
        yield f"{fmt(c1[i])},{fmt(c2[k])},{fmt(result.values[idx, 0])}"


def write_grid_csv(path: str, result: ScanResult, overwrite: bool = False) -> None:
    with _open_new(path, overwrite) as fh:
        for line in grid_csv_lines(result):
            fh.write(line + "\n")


def write_series_csv(
    path: str,
    steps: np.ndarray,
    columns: dict[str, np.ndarray],
    overwrite: bool = False,
    step_name: str = "kick",
) -> None:
    arrays = list(columns.values())
    if any(len(a) != len(steps) for a in arrays):
        raise InvalidParameterError("series columns must match the step count")
    with _open_new(path, overwrite) as fh:
        fh.write(step_name + "," + ",".join(columns) + "\n")
        for row, step in enumerate(steps):
            fh.write(
                str(int(step)) + "," + ",".join(fmt(a[row]) for a in arrays) + "\n"
            )


def write_matrix_csv(path: str, magnitude: np.ndarray, overwrite: bool = False) -> None:
    with _open_new(path, overwrite) as fh:
        fh.write("row,col,magnitude\n")
        for r in range(magnitude.shape[0]):
            for c in range(magnitude.shape[1]):
                fh.write(f"{r},{c},{fmt(magnitude[r, c])}\n")


def write_trajectories_csv(
    path: str,
    coord_names: tuple[str, str],
    first: np.ndarray,
    second: np.ndarray,
    overwrite: bool = False,
) -> None:
    """Scatter output: (n_traj, kicks+1) coordinate arrays."""
    if first.shape != second.shape:
        raise InvalidParameterError("trajectory coordinate arrays must match")
    with _open_new(path, overwrite) as fh:
        fh.write(f"trajectory,kick,{coord_names[0]},{coord_names[1]}\n")
        for t in range(first.shape[0]):
            for k in range(first.shape[1]):
                fh.write(f"{t},{k},{fmt(first[t, k])},{fmt(second[t, k])}\n")


def build_sidecar(
    cfg: RunConfig,
    *,
    csv_files: list[str],
    value_column: str,
    workers: int | None,
    wall_time: float,
    extra: dict | None = None,
) -> dict:
    axes = []
    for ax in cfg.spec.axes:
        axes.append(
            {
                "name": ax.name,
                "min": ax.minimum,
                "max": ax.maximum,
                "count": ax.count,
                "values": list(ax.values) if ax.values is not None else None,
            }
        )
    meta = {
        "format": "qkicks-meta/1",
        "command": cfg.command,
        "config_text": cfg.to_config_text(),
        "spec_hash": cfg.spec.spec_hash(),
        "code_version": __version__,
        "seed": cfg.spec.seed,
        "grid_registration": "cell-center",
        "basis_ordering": "dicke m ascending from -j",
        "axes": axes,
        "grid_shape": list(cfg.spec.grid_shape()),
        "value_column": value_column,
        "csv_files": [os.path.basename(p) for p in csv_files],
        "marks": [
            {"label": label, "coords": [a, b]} for label, a, b in cfg.marks
        ],
        "workers": workers,
        "wall_time_s": wall_time,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if extra:
        meta.update(extra)
    return meta


def write_sidecar(path: str, meta: dict, overwrite: bool = False) -> None:
    if os.path.exists(path) and not overwrite:
        raise FileExistsError(f"refusing to overwrite existing output {path}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=False)
        fh.write("\n")
