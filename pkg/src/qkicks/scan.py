"""Parallel grid scans over initial conditions and parameters.

A scan is a declarative ScanSpec (kind + axes + fixed physics parameters);
run_scan computes every cell through the classical/quantum modules, with
results bitwise independent of the worker count.  Determinism contract:

* cells are grouped into chunks whose boundaries depend only on the spec,
  never on the worker count; workers pick up whole chunks;
* per-cell randomness (random tangent directions) is seeded from
  (spec.seed, cell_index) through numpy SeedSequence;
* all chunk arithmetic runs under a single BLAS thread so a cell computes
  the same bits in the parent process or any pool worker.

Checkpoints are append-only binary files (layout documented in the README):

    magic  b"QKSCHK1\\n"
    sha256 of the canonical spec text (32 bytes)
    spec text length (u32 LE) + canonical spec text (UTF-8)
    series length (u32 LE)
    records: cell index (u64 LE) | status (u8: 0 ok, 1 error) |
             series_len * float64 LE

A truncated trailing record (interrupted write) is discarded on load; a
malformed complete record raises CheckpointError naming the cell.
"""
from __future__ import annotations

import hashlib
import math
import multiprocessing
import os
import struct
import time
from dataclasses import dataclass, fields

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - dependency is declared, but stay usable
    from contextlib import nullcontext

    def threadpool_limits(limits=None):
        return nullcontext()

from . import classical, quantum
from .classical import RotorParams, TopParams
from .errors import (
    CheckpointError,
    InvalidParameterError,
    QkicksError,
    SpecMismatchError,
)
from .spin import build_rep, coherent_state

__all__ = [
    "AxisSpec",
    "ScanSpec",
    "ScanResult",
    "GridComparison",
    "ScanAborted",
    "run_scan",
    "resume_scan",
    "read_checkpoint_spec",
    "compare_grids",
]

CHECKPOINT_MAGIC = b"QKSCHK1\n"

SCAN_KINDS = (
    "kse-grid",
    "ee-grid",
    "ee-slice",
    "ergodicity-series",
    "fidelity-vs-k",
    "husimi",
    "density-matrix",
)
SYSTEMS = ("top", "rotor", "rotor-limit")
AXIS_NAMES = ("phi", "theta", "p", "kappa", "n_spins")

# Cells per chunk, by kind.  Fixed constants: chunk boundaries must never
# depend on worker count or grid size (bitwise reproducibility).
_CHUNK_CELLS = {
    "kse-grid": 4096,
    "ee-grid": 32,
    "ee-slice": 8,
    "ergodicity-series": 1,
    "fidelity-vs-k": 1,
    "husimi": 0,  # one constant-phi column per chunk
    "density-matrix": 65536,
}


class ScanAborted(QkicksError):
    """Raised when a progress callback stops the scan; checkpoint is flushed."""


@dataclass(frozen=True)
class AxisSpec:
    """One scan axis: either cell centers of [minimum, maximum) split into
    ``count`` cells, or an explicit ``values`` tuple (discrete axes like
    n_spins)."""

    name: str
    count: int = 0
    minimum: float = 0.0
    maximum: float = 0.0
    values: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.name not in AXIS_NAMES:
            raise InvalidParameterError(
                f"axis name {self.name!r} not in {AXIS_NAMES}"
            )
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "minimum", float(self.minimum))
        object.__setattr__(self, "maximum", float(self.maximum))
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise InvalidParameterError(f"axis {self.name}: empty values")
            if not all(math.isfinite(v) for v in vals):
                raise InvalidParameterError(f"axis {self.name}: non-finite value")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "count", len(vals))
            object.__setattr__(self, "minimum", min(vals))
            object.__setattr__(self, "maximum", max(vals))
        else:
            if self.count < 1:
                raise InvalidParameterError(f"axis {self.name}: count must be >= 1")
            if not (math.isfinite(self.minimum) and math.isfinite(self.maximum)):
                raise InvalidParameterError(f"axis {self.name}: range must be finite")
            if self.maximum < self.minimum:
                raise InvalidParameterError(f"axis {self.name}: max < min")

    def centers(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=np.float64)
        h = (self.maximum - self.minimum) / self.count
        return self.minimum + h * (np.arange(self.count) + 0.5)


@dataclass(frozen=True)
class ScanSpec:
    """Declarative description of one scan; hashable and serializable."""

    kind: str
    system: str = "top"
    axes: tuple[AxisSpec, ...] = ()
    alpha: float | None = None
    beta: float | None = None
    kick: float | None = None
    inertia: float = 1.0
    j_r: float | None = None
    n_spins: int | None = None
    kicks: int = 0
    steps: int = 0
    branch: int = 1
    seed: int = 0
    phi0: float | None = None
    theta0: float | None = None
    p0: float | None = None
    phi1: float | None = None
    p1: float | None = None
    stride: int = 1
    tangent_direction: str = "fixed"
    include_initial: bool = False
    husimi_source: str = "state"

    _FLOAT_FIELDS = ("alpha", "beta", "kick", "inertia", "j_r", "phi0", "theta0", "p0", "phi1", "p1")
    _INT_FIELDS = ("n_spins", "kicks", "steps", "branch", "seed", "stride")

    def __post_init__(self) -> None:
        for name in self._FLOAT_FIELDS:
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, float(v))
        for name in self._INT_FIELDS:
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, int(v))
        object.__setattr__(self, "axes", tuple(self.axes))
        if self.kind not in SCAN_KINDS:
            raise InvalidParameterError(f"unknown scan kind {self.kind!r}")
        if self.system not in SYSTEMS:
            raise InvalidParameterError(f"unknown system {self.system!r}")
        if self.branch not in (1, -1):
            raise InvalidParameterError("branch must be +1 or -1")
        if self.tangent_direction not in ("fixed", "random"):
            raise InvalidParameterError("tangent_direction must be fixed|random")
        if self.husimi_source not in ("state", "time-average"):
            raise InvalidParameterError("husimi_source must be state|time-average")
        axis_names = tuple(a.name for a in self.axes)
        if self.system == "top":
            if self.alpha is None or self.beta is None:
                raise InvalidParameterError("top scans need alpha and beta")
        else:
            if self.kick is None:
                raise InvalidParameterError("rotor scans need kick")
            if self.system == "rotor-limit" and self.j_r is None:
                raise InvalidParameterError("rotor-limit scans need j_r")
        if self.kind == "kse-grid":
            if self.steps < 1:
                raise InvalidParameterError("kse-grid needs steps >= 1")
            want = ("phi", "theta") if self.system == "top" else ("phi", "p")
            if axis_names != want:
                raise InvalidParameterError(f"kse-grid axes must be {want}, got {axis_names}")
        elif self.kind in ("ee-grid", "husimi"):
            self._need_quantum()
            want = ("phi", "theta") if self.system == "top" else ("phi", "p")
            if axis_names != want:
                raise InvalidParameterError(f"{self.kind} axes must be {want}, got {axis_names}")
            if self.kind == "husimi":
                self._need_initial_point()
        elif self.kind == "ee-slice":
            if self.system == "rotor":
                raise InvalidParameterError(
                    "ee-slice needs system top or rotor-limit; quantum rotor "
                    "dynamics is reached through the rotor-limit of the top"
                )
            if self.kicks < 1:
                raise InvalidParameterError("ee-slice needs kicks >= 1")
            coords = ("phi", "theta") if self.system == "top" else ("phi", "p")
            if len(axis_names) != 2 or axis_names[1] != "n_spins" or axis_names[0] not in coords:
                raise InvalidParameterError(
                    f"ee-slice axes must be (one of {coords}, n_spins), got {axis_names}"
                )
            fixed = "theta0" if axis_names[0] == "phi" and self.system == "top" else (
                "p0" if axis_names[0] == "phi" else "phi0"
            )
            if getattr(self, fixed) is None:
                raise InvalidParameterError(f"ee-slice over {axis_names[0]} needs {fixed}")
            if any(round(v) != v or v < 1 for v in self.axes[1].centers()):
                raise InvalidParameterError("n_spins axis values must be positive integers")
        elif self.kind == "ergodicity-series":
            self._need_quantum()
            coords = ("phi", "theta") if self.system == "top" else ("phi", "p")
            if len(axis_names) != 1 or axis_names[0] not in coords:
                raise InvalidParameterError(
                    f"ergodicity-series needs one axis of {coords}, got {axis_names}"
                )
            fixed = {"phi": "theta0" if self.system == "top" else "p0",
                     "theta": "phi0", "p": "phi0"}[axis_names[0]]
            if getattr(self, fixed) is None:
                raise InvalidParameterError(f"ergodicity-series over {axis_names[0]} needs {fixed}")
            if self.stride < 1:
                raise InvalidParameterError("stride must be >= 1")
        elif self.kind == "fidelity-vs-k":
            self._need_quantum()
            if self.system != "rotor-limit":
                raise InvalidParameterError("fidelity-vs-k runs on the rotor-limit system")
            if axis_names != ("kappa",):
                raise InvalidParameterError(f"fidelity-vs-k axis must be kappa, got {axis_names}")
            for name in ("phi0", "p0", "phi1", "p1"):
                if getattr(self, name) is None:
                    raise InvalidParameterError(f"fidelity-vs-k needs point pair field {name}")
        elif self.kind == "density-matrix":
            self._need_quantum()
            if axis_names != ():
                raise InvalidParameterError("density-matrix takes no axes")
            self._need_initial_point()
        if self.theta0 is not None and abs(self.theta0) > classical.TWO_PI:
            raise InvalidParameterError(
                f"theta0 = {self.theta0} looks like degrees; angles are radians"
            )
        for ax in self.axes:
            if ax.name == "theta" and max(abs(ax.minimum), abs(ax.maximum)) > classical.TWO_PI:
                raise InvalidParameterError(
                    f"theta axis bound {ax.minimum}..{ax.maximum} looks like degrees; "
                    "angles are radians"
                )
        if self.kind == "husimi" and self.system != "top":
            if np.max(np.abs(self.axes[1].centers())) > self.j_r:
                raise InvalidParameterError(
                    f"husimi p axis exceeds j_r = {self.j_r}; band leaves the sphere"
                )

    def _need_quantum(self) -> None:
        if self.system == "rotor":
            raise InvalidParameterError(
                f"{self.kind} needs system top or rotor-limit; quantum rotor "
                "dynamics is reached through the rotor-limit of the top"
            )
        if self.n_spins is None or self.n_spins < 1:
            raise InvalidParameterError(f"{self.kind} needs n_spins >= 1")
        if self.kicks < 1:
            raise InvalidParameterError(f"{self.kind} needs kicks >= 1")

    def _need_initial_point(self) -> None:
        if self.phi0 is None:
            raise InvalidParameterError(f"{self.kind} needs phi0")
        if self.system == "top" and self.theta0 is None:
            raise InvalidParameterError(f"{self.kind} on the top needs theta0")
        if self.system != "top" and self.p0 is None:
            raise InvalidParameterError(f"{self.kind} on the rotor-limit needs p0")

    # -- canonical serialization (hashing + sidecar round-trips) ----------

    def canonical_text(self) -> str:
        lines = [f"kind = {self.kind}", f"system = {self.system}"]
        for i, ax in enumerate(self.axes, start=1):
            if ax.values is not None:
                vals = " ".join(repr(v) for v in ax.values)
                lines.append(f"axis{i} = {ax.name} values {vals}")
            else:
                lines.append(
                    f"axis{i} = {ax.name} {ax.minimum!r} {ax.maximum!r} {ax.count}"
                )
        skip = {"kind", "system", "axes"}
        for f in fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def spec_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    @classmethod
    def from_canonical_text(cls, text: str) -> "ScanSpec":
        kw: dict = {}
        axes: dict[int, AxisSpec] = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key.startswith("axis"):
                axes[int(key[4:])] = _parse_axis(value)
                continue
            kw[key] = value
        spec_fields = {f.name: f for f in fields(cls)}
        parsed: dict = {}
        for key, value in kw.items():
            if key not in spec_fields:
                raise InvalidParameterError(f"unknown spec key {key!r}")
            parsed[key] = _parse_field(spec_fields[key].type, value)
        parsed["axes"] = tuple(axes[i] for i in sorted(axes))
        return cls(**parsed)

    # -- cell geometry -----------------------------------------------------

    def n_cells(self) -> int:
        if self.kind == "density-matrix":
            dim = int(self.n_spins) + 1
            return dim * dim
        n = 1
        for ax in self.axes:
            n *= ax.count
        return n

    def grid_shape(self) -> tuple[int, ...]:
        if self.kind == "density-matrix":
            dim = int(self.n_spins) + 1
            return (dim, dim)
        return tuple(ax.count for ax in self.axes)

    def cell_coords(self, index: int) -> tuple[float, ...]:
        shape = self.grid_shape()
        if self.kind == "density-matrix":
            return (float(index // shape[1]), float(index % shape[1]))
        centers = [ax.centers() for ax in self.axes]
        if len(shape) == 1:
            return (float(centers[0][index]),)
        i, k = divmod(index, shape[1])
        return (float(centers[0][i]), float(centers[1][k]))


def _parse_axis(value: str) -> AxisSpec:
    parts = value.split()
    if len(parts) >= 3 and parts[1] == "values":
        return AxisSpec(name=parts[0], values=tuple(float(v) for v in parts[2:]))
    if len(parts) != 4:
        raise InvalidParameterError(
            f"axis must be '<name> <min> <max> <count>' or '<name> values ...', got {value!r}"
        )
    return AxisSpec(
        name=parts[0], minimum=float(parts[1]), maximum=float(parts[2]), count=int(parts[3])
    )


def _parse_field(ftype: str, value: str):
    if "bool" in ftype:
        if value not in ("true", "false"):
            raise InvalidParameterError(f"expected true/false, got {value!r}")
        return value == "true"
    if "int" in ftype and "float" not in ftype:
        return int(value)
    if "float" in ftype:
        return float(value)
    return value


@dataclass
class ScanResult:
    """Per-cell values (scalar or series), error map, and run bookkeeping."""

    spec: ScanSpec
    values: np.ndarray  # (n_cells, series_len)
    series_steps: np.ndarray | None
    errors: dict[int, str]
    wall_time: float = 0.0
    cells_from_checkpoint: int = 0

    def grid(self) -> np.ndarray:
        """Scalar results reshaped to the grid (2-axis kinds and matrices)."""
        if self.values.shape[1] != 1:
            raise InvalidParameterError("grid() is for scalar-per-cell kinds")
        return self.values[:, 0].reshape(self.spec.grid_shape())

    def curve(self) -> np.ndarray:
        if len(self.spec.grid_shape()) != 1:
            raise InvalidParameterError("curve() is for one-axis kinds")
        return self.values[:, 0]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()


# --------------------------------------------------------------------------
# Execution plans: per-kind context + cell functions


class _Plan:
    series_len = 1

    def __init__(self, spec: ScanSpec):
        self.spec = spec

    def build_context(self) -> None:  # heavy shared setup, parent only
        pass

    def series_steps(self) -> np.ndarray | None:
        return None

    def chunks(self) -> list[range]:
        n = self.spec.n_cells()
        size = _CHUNK_CELLS[self.spec.kind]
        if size <= 0:
            size = max(1, n)
        return [range(s, min(s + size, n)) for s in range(0, n, size)]

    def compute_chunk(self, cells: range) -> tuple[np.ndarray, dict[int, str]]:
        out = np.zeros((len(cells), self.series_len))
        errors: dict[int, str] = {}
        for offset, idx in enumerate(cells):
            try:
                out[offset] = self.cell(idx)
            except QkicksError as exc:
                errors[idx] = f"{type(exc).__name__}: {exc}"
        return out, errors

    def cell(self, index: int) -> np.ndarray:
        raise NotImplementedError


def _top_params(spec: ScanSpec) -> TopParams:
    if spec.system == "top":
        return TopParams(alpha=spec.alpha, beta=spec.beta)
    return classical.rotor_limit_params(spec.kick, spec.inertia, spec.j_r)


def _initial_state(spec: ScanSpec, rep, phi: float, second: float):
    """Coherent state for a cell: second = theta (top) or p (rotor-limit)."""
    if spec.system == "top":
        return coherent_state(rep, second, phi)
    return quantum.rotor_limit_initial_state(rep, phi, second, spec.j_r, spec.branch)


class _KsePlan(_Plan):
    def build_context(self) -> None:
        spec = self.spec
        if spec.system == "rotor":
            self.params: RotorParams | TopParams = RotorParams(
                kick=spec.kick, inertia=spec.inertia
            )
        else:
            self.params = _top_params(spec)

    def _directions(self, cells: range, ndim: int) -> np.ndarray | None:
        if self.spec.tangent_direction == "fixed":
            return None
        out = np.empty((len(cells), ndim))
        for offset, idx in enumerate(cells):
            rng = np.random.default_rng(np.random.SeedSequence((self.spec.seed, idx)))
            v = rng.standard_normal(ndim)
            out[offset] = v / np.linalg.norm(v)
        return out

    def compute_chunk(self, cells: range) -> tuple[np.ndarray, dict[int, str]]:
        spec = self.spec
        coords = np.array([spec.cell_coords(i) for i in cells])
        phi, second = coords[:, 0], coords[:, 1]
        if spec.system == "rotor":
            vals = classical.batch_rotor_kse(
                phi, second, self.params, spec.steps, self._directions(cells, 2)
            )
        elif spec.system == "top":
            vals = classical.batch_top_kse(
                phi, second, self.params, spec.steps, self._directions(cells, 3)
            )
        else:
            z = second / spec.j_r
            bad = np.abs(z) > 1.0
            z = np.clip(z, -1.0, 1.0)
            theta = spec.branch * np.arccos(z)
            vals = classical.batch_top_kse(
                phi, theta, self.params, spec.steps, self._directions(cells, 3)
            )
            vals[bad] = np.nan
        errors = {
            int(cells[k]): "NumericalError: non-finite KSE (out-of-band or overflow)"
            for k in np.nonzero(~np.isfinite(vals))[0]
        }
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return vals[:, None], errors


class _QuantumPlan(_Plan):
    """Shared context for kinds with a fixed (N, alpha, beta)."""

    def build_context(self) -> None:
        spec = self.spec
        self.rep = build_rep(spec.n_spins / 2.0)
        self.params = _top_params(spec)
        self.flo = quantum.build_floquet(self.rep, self.params)


class _EeGridPlan(_QuantumPlan):
    def cell(self, index: int) -> np.ndarray:
        spec = self.spec
        phi, second = spec.cell_coords(index)
        st = _initial_state(spec, self.rep, phi, second)
        rec = quantum.evolve(st, self.flo, spec.kicks)
        return np.array(
            [quantum.time_averaged_ee(rec, spec.kicks, include_initial=spec.include_initial)]
        )


class _EeSlicePlan(_Plan):
    def build_context(self) -> None:
        spec = self.spec
        self.by_n: dict[int, tuple] = {}
        for v in spec.axes[1].centers():
            n = int(round(v))
            rep = build_rep(n / 2.0)
            self.by_n[n] = (rep, quantum.build_floquet(rep, _top_params(spec)))

    def cell(self, index: int) -> np.ndarray:
        spec = self.spec
        coord, n_val = spec.cell_coords(index)
        rep, flo = self.by_n[int(round(n_val))]
        if spec.axes[0].name == "phi":
            phi, second = coord, (spec.theta0 if spec.system == "top" else spec.p0)
        else:
            phi, second = spec.phi0, coord
        st = _initial_state(spec, rep, phi, second)
        rec = quantum.evolve(st, flo, spec.kicks)
        return np.array(
            [quantum.time_averaged_ee(rec, spec.kicks, include_initial=spec.include_initial)]
        )


class _ErgodicityPlan(_QuantumPlan):
    def __init__(self, spec: ScanSpec):
        super().__init__(spec)
        self._steps = np.arange(spec.stride, spec.kicks + 1, spec.stride)
        if len(self._steps) == 0 or self._steps[-1] != spec.kicks:
            self._steps = np.append(self._steps, spec.kicks)
        self.series_len = len(self._steps)

    def series_steps(self) -> np.ndarray:
        return self._steps

    def cell(self, index: int) -> np.ndarray:
        spec = self.spec
        (coord,) = spec.cell_coords(index)
        if spec.axes[0].name == "phi":
            phi, second = coord, (spec.theta0 if spec.system == "top" else spec.p0)
        else:
            phi, second = spec.phi0, coord
        st = _initial_state(spec, self.rep, phi, second)
        _, values = quantum.ergodicity_series(st, self.flo, spec.kicks, stride=spec.stride)
        return values


class _FidelityPlan(_Plan):
    def build_context(self) -> None:
        spec = self.spec
        self.rep = build_rep(spec.n_spins / 2.0)
        self.jx_eig = np.linalg.eigh(self.rep.jx)
        # Floquet operators per kappa, keyed by parameters rounded to 1e-12
        self._cache: dict[tuple, object] = {}

    def _floquet(self, params: TopParams):
        key = (round(params.alpha, 12), round(params.beta, 12))
        if key not in self._cache:
            self._cache[key] = quantum.build_floquet(self.rep, params, jx_eig=self.jx_eig)
        return self._cache[key]

    def cell(self, index: int) -> np.ndarray:
        spec = self.spec
        (kappa,) = spec.cell_coords(index)
        params = classical.rotor_limit_params(kappa, spec.inertia, spec.j_r)
        flo = self._floquet(params)
        rhos = []
        for phi, p in ((spec.phi0, spec.p0), (spec.phi1, spec.p1)):
            st = quantum.rotor_limit_initial_state(self.rep, phi, p, spec.j_r, spec.branch)
            rec = quantum.evolve(st, flo, spec.kicks, accumulate_rho=True)
            rhos.append(rec.rho_bar)
        return np.array([quantum.state_fidelity(rhos[0], rhos[1])])


class _HusimiPlan(_QuantumPlan):
    def build_context(self) -> None:
        super().build_context()
        spec = self.spec
        st = _initial_state(spec, self.rep, spec.phi0, spec.theta0 if spec.system == "top" else spec.p0)
        rec = quantum.evolve(st, self.flo, spec.kicks, accumulate_rho=spec.husimi_source == "time-average")
        rho = rec.rho_bar if spec.husimi_source == "time-average" else rec.final_state.density_matrix()
        self.frame = quantum.CoherentFrame(self.rep)
        self.b_dag = quantum._weight_factors(rho).conj().T
        self.prefactor = (2.0 * self.rep.j + 1.0) / (4.0 * math.pi)
        if spec.system == "top":
            self.thetas = spec.axes[1].centers()
        else:
            self.thetas = spec.branch * np.arccos(np.clip(spec.axes[1].centers() / spec.j_r, -1, 1))

    def chunks(self) -> list[range]:
        n1, n2 = self.spec.grid_shape()
        return [range(i * n2, (i + 1) * n2) for i in range(n1)]

    def compute_chunk(self, cells: range) -> tuple[np.ndarray, dict[int, str]]:
        spec = self.spec
        n2 = spec.grid_shape()[1]
        if cells.start % n2 != 0 or len(cells) != n2:
            raise InvalidParameterError("husimi chunks must cover whole phi columns")
        phi = float(spec.axes[0].centers()[cells.start // n2])
        second = spec.axes[1].centers()
        if spec.system != "top" and np.any(np.abs(second) > spec.j_r):
            raise InvalidParameterError(f"husimi p axis exceeds j_r = {spec.j_r}")
        c = self.frame.column(phi, self.thetas)
        vals = self.prefactor * np.sum(np.abs(self.b_dag @ c) ** 2, axis=0)
        return vals[:, None], {}


class _DensityPlan(_QuantumPlan):
    def build_context(self) -> None:
        super().build_context()
        spec = self.spec
        st = _initial_state(spec, self.rep, spec.phi0, spec.theta0 if spec.system == "top" else spec.p0)
        rec = quantum.evolve(st, self.flo, spec.kicks, accumulate_rho=True)
        self.magnitude = np.abs(rec.rho_bar.elements).ravel()

    def compute_chunk(self, cells: range) -> tuple[np.ndarray, dict[int, str]]:
        return self.magnitude[cells.start : cells.stop, None].copy(), {}


_PLANS = {
    "kse-grid": _KsePlan,
    "ee-grid": _EeGridPlan,
    "ee-slice": _EeSlicePlan,
    "ergodicity-series": _ErgodicityPlan,
    "fidelity-vs-k": _FidelityPlan,
    "husimi": _HusimiPlan,
    "density-matrix": _DensityPlan,
}


# --------------------------------------------------------------------------
# Checkpoint file handling

_RECORD_HEAD = struct.Struct("<QB")


def _write_checkpoint_header(fh, spec: ScanSpec, series_len: int) -> None:
    text = spec.canonical_text().encode()
    fh.write(CHECKPOINT_MAGIC)
    fh.write(hashlib.sha256(text).digest())
    fh.write(struct.pack("<I", len(text)))
    fh.write(text)
    fh.write(struct.pack("<I", series_len))


def _read_checkpoint(path: str, spec: ScanSpec | None, series_len: int | None):
    """Returns (spec, series_len, {cell: (status, payload)})."""
    with open(path, "rb") as fh:
        blob = fh.read()
    pos = len(CHECKPOINT_MAGIC)
    if blob[:pos] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic; not a qkicks checkpoint")
    digest, pos = blob[pos : pos + 32], pos + 32
    if len(digest) < 32:
        raise CheckpointError(f"{path}: truncated header")
    try:
        (text_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
        text = blob[pos : pos + text_len].decode()
        pos += text_len
        (file_series_len,) = struct.unpack_from("<I", blob, pos)
        pos += 4
    except (struct.error, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: truncated or corrupt header: {exc}") from exc
    if hashlib.sha256(text.encode()).digest() != digest:
        raise CheckpointError(f"{path}: header hash does not match embedded spec")
    file_spec = ScanSpec.from_canonical_text(text)
    if spec is not None and spec.canonical_text() != text:
        raise SpecMismatchError(
            f"{path}: checkpoint spec hash {file_spec.spec_hash()[:12]} does not match "
            f"requested spec {spec.spec_hash()[:12]}"
        )
    if series_len is not None and file_series_len != series_len:
        raise CheckpointError(f"{path}: series length {file_series_len} != {series_len}")
    n_cells = file_spec.n_cells()
    rec_size = _RECORD_HEAD.size + 8 * file_series_len
    records: dict[int, tuple[int, np.ndarray]] = {}
    count = 0
    while pos + rec_size <= len(blob):
        idx, status = _RECORD_HEAD.unpack_from(blob, pos)
        payload = np.frombuffer(blob, dtype="<f8", count=file_series_len, offset=pos + _RECORD_HEAD.size)
        if idx >= n_cells:
            raise CheckpointError(f"{path}: record {count}: cell index {idx} out of range")
        if status not in (0, 1):
            raise CheckpointError(f"{path}: record {count}: cell {idx} has bad status {status}")
        if idx in records:
            raise CheckpointError(f"{path}: record {count}: duplicate cell index {idx}")
        records[int(idx)] = (int(status), payload.astype(np.float64))
        pos += rec_size
        count += 1
    # a truncated trailing record is the normal residue of an interrupted
    # write; report where the valid prefix ends so appends can truncate first
    return file_spec, file_series_len, records, pos


def read_checkpoint_spec(path: str) -> ScanSpec:
    spec, _, _, _ = _read_checkpoint(path, None, None)
    return spec


# --------------------------------------------------------------------------
# Pool plumbing: the plan is made global before fork so workers inherit it.

_ACTIVE_PLAN: _Plan | None = None


def _chunk_worker(args: tuple[int, int, int]) -> tuple[int, np.ndarray, dict[int, str]]:
    chunk_id, start, stop = args
    with threadpool_limits(limits=1):
        values, errors = _ACTIVE_PLAN.compute_chunk(range(start, stop))
    return chunk_id, values, errors


def run_scan(
    spec: ScanSpec,
    parallelism: int | None = None,
    *,
    checkpoint_path: str | None = None,
    checkpoint_every: int = 0,
    progress=None,
) -> ScanResult:
    """Compute every cell of the scan; bitwise identical for any worker count.

    ``checkpoint_path``: append-only record file; if it exists it must match
    the spec and only missing cells are computed.  ``progress(done, total)``
    returning False aborts the scan (checkpoint flushed) with ScanAborted.
    """
    global _ACTIVE_PLAN
    t0 = time.monotonic()
    if parallelism is None:
        parallelism = int(os.environ.get("QKICKS_WORKERS", "0")) or (os.cpu_count() or 1)
    if parallelism < 1:
        raise InvalidParameterError(f"parallelism must be >= 1, got {parallelism}")

    plan = _PLANS[spec.kind](spec)
    n_cells = spec.n_cells()
    chunk_list = plan.chunks()
    done: dict[int, tuple[int, np.ndarray]] = {}
    if checkpoint_path and os.path.exists(checkpoint_path):
        _, _, done, valid_end = _read_checkpoint(checkpoint_path, spec, None)
        if os.path.getsize(checkpoint_path) > valid_end:
            # drop the partial record an interrupted write left behind
            with open(checkpoint_path, "r+b") as fh:
                fh.truncate(valid_end)

    todo = [
        (i, c.start, c.stop)
        for i, c in enumerate(chunk_list)
        if any(idx not in done for idx in c)
    ]
    ckpt_fh = None
    if checkpoint_path:
        new_file = not os.path.exists(checkpoint_path)
        ckpt_fh = open(checkpoint_path, "ab")
        if new_file:
            _write_checkpoint_header(ckpt_fh, spec, plan.series_len)
            ckpt_fh.flush()

    values = np.zeros((n_cells, plan.series_len))
    errors: dict[int, str] = {}
    for idx, (status, payload) in done.items():
        values[idx] = payload[: plan.series_len]
        if status != 0:
            errors[idx] = "recorded failure (from checkpoint)"
    completed_cells = len(done)
    from_checkpoint = len(done)

    pending_flush = 0
    try:
        if todo:
            plan.build_context()
            _ACTIVE_PLAN = plan

            def handle(chunk_id: int, chunk_values: np.ndarray, chunk_errors: dict[int, str]):
                nonlocal completed_cells, pending_flush
                chunk = chunk_list[chunk_id]
                for offset, idx in enumerate(chunk):
                    if idx in done:
                        continue
                    values[idx] = chunk_values[offset]
                    if idx in chunk_errors:
                        errors[idx] = chunk_errors[idx]
                    if ckpt_fh is not None:
                        ckpt_fh.write(_RECORD_HEAD.pack(idx, 1 if idx in chunk_errors else 0))
                        ckpt_fh.write(values[idx].astype("<f8").tobytes())
                        pending_flush += 1
                    completed_cells += 1
                if ckpt_fh is not None and (
                    checkpoint_every <= 0 or pending_flush >= checkpoint_every
                ):
                    ckpt_fh.flush()
                    pending_flush = 0
                if progress is not None and progress(completed_cells, n_cells) is False:
                    raise ScanAborted(f"aborted at {completed_cells}/{n_cells} cells")

            if parallelism == 1 or len(todo) == 1:
                for task in todo:
                    handle(*_chunk_worker(task))
            else:
                ctx = multiprocessing.get_context("fork")
                with ctx.Pool(processes=parallelism) as pool:
                    for chunk_id, chunk_values, chunk_errors in pool.imap_unordered(
                        _chunk_worker, todo
                    ):
                        handle(chunk_id, chunk_values, chunk_errors)
    finally:
        _ACTIVE_PLAN = None
        if ckpt_fh is not None:
            ckpt_fh.flush()
            ckpt_fh.close()

    return ScanResult(
        spec=spec,
        values=values,
        series_steps=plan.series_steps(),
        errors=errors,
        wall_time=time.monotonic() - t0,
        cells_from_checkpoint=from_checkpoint,
    )


def resume_scan(checkpoint_path: str, parallelism: int | None = None) -> ScanResult:
    """Finish a checkpointed scan; the spec is embedded in the header.

    A complete checkpoint is a no-op returning the stored result; the final
    result is bitwise identical to an uninterrupted run.
    """
    if not os.path.exists(checkpoint_path):
        raise CheckpointError(f"no checkpoint at {checkpoint_path}")
    spec = read_checkpoint_spec(checkpoint_path)
    return run_scan(spec, parallelism, checkpoint_path=checkpoint_path)


# --------------------------------------------------------------------------


@dataclass
class GridComparison:
    """Point-biserial association between a binarized grid and a continuous one."""

    correlation: float
    degenerate: bool
    threshold: float
    n_high: int
    n_low: int
    mean_high: float
    mean_low: float


def compare_grids(a: ScanResult, b: ScanResult, threshold: float = 0.05) -> GridComparison:
    """Binarize grid ``a`` at ``threshold`` and correlate with grid ``b``.

    Degenerate cases (single class, or constant b) set ``degenerate`` and a
    NaN correlation instead of raising.
    """
    if tuple(ax.name for ax in a.spec.axes) != tuple(ax.name for ax in b.spec.axes):
        raise InvalidParameterError("grids have different axis names")
    for ax_a, ax_b in zip(a.spec.axes, b.spec.axes):
        if not np.array_equal(ax_a.centers(), ax_b.centers()):
            raise InvalidParameterError(f"axis {ax_a.name}: cell centers differ")
    mask = a.values[:, 0] > threshold
    vals = b.values[:, 0]
    n = len(vals)
    n_high, n_low = int(mask.sum()), int((~mask).sum())
    mean_high = float(vals[mask].mean()) if n_high else math.nan
    mean_low = float(vals[~mask].mean()) if n_low else math.nan
    std = float(vals.std())
    if n_high == 0 or n_low == 0 or std == 0.0:
        return GridComparison(math.nan, True, threshold, n_high, n_low, mean_high, mean_low)
    r = (mean_high - mean_low) / std * math.sqrt(n_high * n_low / n**2)
    return GridComparison(float(r), False, threshold, n_high, n_low, mean_high, mean_low)
