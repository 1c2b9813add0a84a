"""Command-line entry point: one subcommand per figure family.

Values resolve as command defaults < config-file section < flags, with
mode switches (--point, --slice, --rotor-limit, --system) adjusting which
defaults apply.  Every run writes CSV artifacts plus a `.meta.json` sidecar
whose embedded config text reconstructs the run exactly.  Defaults are
desk-scale; the paper-scale parameter sets live in scripts/.
"""
from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import classical, csvio, quantum
from .classical import TWO_PI
from .config import RunConfig, WORKERS_ENV, default_output_root
from .errors import InvalidParameterError, QkicksError
from .scan import run_scan
from .spin import build_rep, coherent_state

PI = math.pi

# Desk-scale defaults per command, as config-section items (strings).
_DEFAULTS: dict[str, dict[str, str]] = {
    "top-kse": {
        "kind": "kse-grid",
        "system": "top",
        "axis1": "phi 0.0 6.283185307179586 64",
        "axis2": "theta 0.0 3.141592653589793 64",
        "alpha": repr(PI / 2),
        "beta": "3.0",
        "steps": "2000",
    },
    "top-ee": {
        "kind": "ee-grid",
        "system": "top",
        "axis1": "phi 0.0 6.283185307179586 64",
        "axis2": "theta 0.0 3.141592653589793 64",
        "alpha": repr(PI / 2),
        "beta": "3.0",
        "n_spins": "100",
        "kicks": "200",
    },
    "rotor-kse": {
        "kind": "kse-grid",
        "system": "rotor",
        "axis1": "phi 0.0 6.283185307179586 64",
        "axis2": "p 0.0 6.283185307179586 64",
        "kick": "0.9",
        "inertia": "1.0",
        "steps": "2000",
    },
    "rotor-ee": {
        "kind": "ee-grid",
        "system": "rotor-limit",
        "axis1": "phi 0.0 6.283185307179586 64",
        "axis2": "p 0.0 6.283185307179586 64",
        "kick": "0.9",
        "inertia": "1.0",
        "j_r": "9.0",
        "n_spins": "100",
        "kicks": "200",
    },
    "ergodicity": {
        "kind": "ergodicity-series",
        "system": "top",
        "axis1": "phi values 2.2 3.57",
        "theta0": "2.25",
        "alpha": repr(PI / 2),
        "beta": "3.0",
        "n_spins": "100",
        "kicks": "200",
        "stride": "1",
    },
    "husimi": {
        "kind": "husimi",
        "system": "top",
        "axis1": "phi 0.0 6.283185307179586 200",
        "axis2": "theta 0.0 3.141592653589793 200",
        "alpha": repr(PI / 2),
        "beta": "3.0",
        "phi0": "3.57",
        "theta0": "2.25",
        "n_spins": "100",
        "kicks": "500",
    },
    "fidelity-scan": {
        "kind": "fidelity-vs-k",
        "system": "rotor-limit",
        "axis1": "kappa values " + " ".join(repr(float(v)) for v in np.linspace(0.5, 2.0, 31)),
        "kick": "0.9",
        "inertia": "1.0",
        "j_r": "15.0",
        "n_spins": "100",
        "kicks": "200",
        "phi0": "0.0",
        "p0": "0.0",
        "phi1": "0.0",
        "p1": repr(2 * PI),
    },
    "density-matrix": {
        "kind": "density-matrix",
        "system": "rotor-limit",
        "kick": "0.9",
        "inertia": "1.0",
        "j_r": "15.0",
        "n_spins": "100",
        "kicks": "200",
        "phi0": "0.0",
        "p0": "0.0",
    },
}

_RANGE_FLAGS = {
    "phi_range": ("axis1", "phi"),
    "theta_range": ("axis2", "theta"),
    "p_range": ("axis2", "p"),
    "k_range": ("axis1", "kappa"),
}

_SPEC_FLAGS = (
    "alpha",
    "beta",
    "kick",
    "inertia",
    "j_r",
    "n_spins",
    "kicks",
    "steps",
    "branch",
    "seed",
    "phi0",
    "theta0",
    "p0",
    "stride",
    "tangent_direction",
    "husimi_source",
)


def _parse_range(text: str, inclusive: bool = False) -> str:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameterError(f"range must be MIN:MAX:COUNT, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if inclusive:
        vals = np.linspace(lo, hi, count)
        return "values " + " ".join(repr(float(v)) for v in vals)
    return f"{lo!r} {hi!r} {count}"


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise InvalidParameterError(f"point must be COORD1:COORD2, got {text!r}")
    return float(parts[0]), float(parts[1])


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file; the [command] section supplies defaults")
    p.add_argument("--output-dir", help="output directory (default $QKICKS_OUTPUT_ROOT or runs/)")
    p.add_argument("--basename", help="output basename (default: command name)")
    p.add_argument("--overwrite", action="store_true", default=None,
                   help="replace existing outputs instead of refusing")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or all cores)")
    p.add_argument("--seed", type=int, help="base RNG seed recorded in metadata")
    p.add_argument("--no-checkpoint", dest="no_checkpoint", action="store_true", default=None,
                   help="skip writing the .ckpt resume file")
    p.add_argument("--checkpoint-every", dest="checkpoint_every", type=int,
                   help="flush checkpoint every N cells")
    p.add_argument("--binary", action="store_true", default=None,
                   help="also write values as a .npy mirror")
    p.add_argument("--mark", action="append", metavar="LABEL:C1:C2",
                   help="annotate a point in metadata (repeatable)")


def _config_items(args, command: str) -> dict[str, str]:
    if args.config:
        return RunConfig.from_file(args.config, command).section_items()
    return {}


def _build_config(
    command: str,
    args: argparse.Namespace,
    *,
    mode_defaults: dict[str, str] | None = None,
    mode_overrides: dict[str, str] | None = None,
    drop: tuple[str, ...] = (),
) -> RunConfig:
    items = dict(_DEFAULTS[command])
    for key in drop:
        items.pop(key, None)
    if mode_defaults:
        items.update(mode_defaults)
    items.update(_config_items(args, command))
    for name in _SPEC_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            items[name] = repr(float(value)) if isinstance(value, float) else str(value)
    for flag, (axis_key, axis_name) in _RANGE_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            items[axis_key] = f"{axis_name} " + _parse_range(
                value, inclusive=axis_name == "kappa"
            )
    if args.output_dir is not None:
        items["output_dir"] = args.output_dir
    if args.basename is not None:
        items["basename"] = args.basename
    if args.overwrite:
        items["overwrite"] = "true"
    if args.workers is not None:
        items["workers"] = str(args.workers)
    if args.no_checkpoint:
        items["checkpoint"] = "false"
    if args.checkpoint_every is not None:
        items["checkpoint_every"] = str(args.checkpoint_every)
    if args.binary:
        items["binary"] = "true"
    for i, mark in enumerate(args.mark or (), start=1):
        try:
            label, c1, c2 = mark.split(":")
            items[f"mark{i}"] = f"{label} {float(c1)!r} {float(c2)!r}"
        except ValueError as exc:
            raise InvalidParameterError(f"--mark must be LABEL:C1:C2, got {mark!r}") from exc
    if mode_overrides:
        items.update(mode_overrides)
    return RunConfig.from_section(command, items)


def _effective_system(args, command: str) -> str:
    if getattr(args, "system", None):
        return args.system
    return _config_items(args, command).get("system", _DEFAULTS[command]["system"])


def _out_path(cfg: RunConfig, suffix: str = "", ext: str = ".csv") -> str:
    return os.path.join(cfg.output_dir, cfg.basename + suffix + ext)


def _run_and_write(cfg: RunConfig, suffix: str = "") -> list[str]:
    """Run the configured scan and write CSV + sidecar (+ optional .npy)."""
    csv_path = _out_path(cfg, suffix)
    meta_path = csvio.sidecar_path(csv_path)
    for path in (csv_path, meta_path):
        if os.path.exists(path) and not cfg.overwrite:
            raise FileExistsError(f"refusing to overwrite existing output {path}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    ckpt = _out_path(cfg, suffix, ".ckpt") if cfg.checkpoint else None
    result = run_scan(
        cfg.spec,
        cfg.workers,
        checkpoint_path=ckpt,
        checkpoint_every=cfg.checkpoint_every,
    )
    written = [csv_path]
    extra: dict = {}
    if cfg.spec.kind == "ergodicity-series":
        columns = {
            f"{csvio.VALUE_COLUMNS[cfg.spec.kind]}_{i}": result.values[i]
            for i in range(result.values.shape[0])
        }
        csvio.write_series_csv(csv_path, result.series_steps, columns, cfg.overwrite)
        extra["series_points"] = [
            list(cfg.spec.cell_coords(i)) for i in range(result.values.shape[0])
        ]
    else:
        csvio.write_grid_csv(csv_path, result, cfg.overwrite)
    if cfg.binary:
        npy = _out_path(cfg, suffix, ".npy")
        np.save(npy, result.values)
        written.append(npy)
    if result.errors:
        extra["cell_errors"] = {str(k): v for k, v in sorted(result.errors.items())}
    meta = csvio.build_sidecar(
        cfg,
        csv_files=written,
        value_column=csvio.VALUE_COLUMNS[cfg.spec.kind],
        workers=cfg.workers,
        wall_time=result.wall_time,
        extra=extra,
    )
    csvio.write_sidecar(meta_path, meta, cfg.overwrite)
    written.append(meta_path)
    for p in written:
        print(p)
    return written


# ---------------------------------------------------------------------------
# command handlers


def _cmd_grid(command: str, args) -> int:
    mode_defaults: dict[str, str] = {}
    mode_overrides: dict[str, str] = {}
    drop: tuple[str, ...] = ()
    if getattr(args, "rotor_limit", False):
        mode_defaults["system"] = "rotor-limit"
        mode_defaults["j_r"] = "9.0"
    if getattr(args, "slice", False):
        if args.n_spins_list is None:
            raise InvalidParameterError("--slice needs --n-spins-list")
        ns = " ".join(str(int(v)) for v in args.n_spins_list.split(","))
        mode_overrides["kind"] = "ee-slice"
        mode_overrides["axis2"] = f"n_spins values {ns}"
        if command == "rotor-ee":
            # constant-phi cut: EE vs p for several N; --p-range names axis1 here
            mode_defaults["phi0"] = repr(PI)
            mode_defaults["axis1"] = "p 0.0 6.283185307179586 64"
            if args.p_range is not None:
                mode_overrides["axis1"] = "p " + _parse_range(args.p_range)
        else:
            # constant-theta cut: EE vs phi for several N
            mode_defaults["theta0"] = repr(PI / 2)
    point = getattr(args, "point", None)
    if point is not None:
        c1, c2 = _parse_point(point)
        second = "theta" if command.startswith("top") else "p"
        mode_overrides["axis1"] = f"phi values {c1!r}"
        mode_overrides["axis2"] = f"{second} values {c2!r}"
    cfg = _build_config(
        command, args, mode_defaults=mode_defaults, mode_overrides=mode_overrides, drop=drop
    )
    _run_and_write(cfg)
    if cfg.spec.kind == "ee-grid" and cfg.spec.n_cells() == 1:
        _write_single_point_series(cfg)
    return 0


def _write_single_point_series(cfg: RunConfig) -> None:
    rep = build_rep(cfg.spec.n_spins / 2.0)
    if cfg.spec.system == "top":
        params = classical.TopParams(cfg.spec.alpha, cfg.spec.beta)
    else:
        params = classical.rotor_limit_params(cfg.spec.kick, cfg.spec.inertia, cfg.spec.j_r)
    flo = quantum.build_floquet(rep, params)
    phi, second = cfg.spec.cell_coords(0)
    if cfg.spec.system == "top":
        st = coherent_state(rep, second, phi)
    else:
        st = quantum.rotor_limit_initial_state(rep, phi, second, cfg.spec.j_r, cfg.spec.branch)
    rec = quantum.evolve(st, flo, cfg.spec.kicks)
    series_path = _out_path(cfg, "_series")
    csvio.write_series_csv(
        series_path,
        np.arange(cfg.spec.kicks + 1),
        {"entanglement_entropy": rec.entropy},
        cfg.overwrite,
    )
    print(series_path)
    s_bar = quantum.time_averaged_ee(rec, cfg.spec.kicks, include_initial=cfg.spec.include_initial)
    print(f"time_averaged_ee = {csvio.fmt(s_bar)}")


def _cmd_ergodicity(args) -> int:
    system = _effective_system(args, "ergodicity")
    mode_defaults: dict[str, str] = {}
    mode_overrides: dict[str, str] = {}
    drop: tuple[str, ...] = ()
    if system == "rotor-limit":
        drop = ("alpha", "beta", "theta0", "axis1")
        mode_defaults.update(
            {
                "system": "rotor-limit",
                "kick": "0.9",
                "inertia": "1.0",
                "j_r": "9.0",
                # default probes: island center R1=(pi,0), layer point R2=(pi,pi/2)
                "axis1": f"p values 0.0 {repr(PI / 2)}",
                "phi0": repr(PI),
            }
        )
    if args.points is not None:
        pts = [_parse_point(p) for p in args.points.split(",")]
        firsts = {p[0] for p in pts}
        seconds = {p[1] for p in pts}
        if len(seconds) == 1:
            mode_overrides["axis1"] = "phi values " + " ".join(repr(p[0]) for p in pts)
            key = "theta0" if system == "top" else "p0"
            mode_overrides[key] = repr(pts[0][1])
        elif len(firsts) == 1:
            name = "theta" if system == "top" else "p"
            mode_overrides["axis1"] = f"{name} values " + " ".join(repr(p[1]) for p in pts)
            mode_overrides["phi0"] = repr(pts[0][0])
        else:
            raise InvalidParameterError(
                "ergodicity points must share phi or share the second coordinate"
            )
    cfg = _build_config(
        "ergodicity", args, mode_defaults=mode_defaults, mode_overrides=mode_overrides, drop=drop
    )
    _run_and_write(cfg)
    return 0


def _cmd_husimi(args) -> int:
    system = _effective_system(args, "husimi")
    mode_defaults: dict[str, str] = {}
    drop: tuple[str, ...] = ()
    if system == "rotor-limit":
        drop = ("alpha", "beta", "theta0", "phi0", "axis2")
        mode_defaults.update(
            {
                "system": "rotor-limit",
                "kick": "0.9",
                "inertia": "1.0",
                "j_r": "15.0",
                "axis2": "p 0.0 6.283185307179586 200",
                "phi0": "0.0",
                "p0": "0.0",
            }
        )
    cfg = _build_config("husimi", args, mode_defaults=mode_defaults, drop=drop)
    _run_and_write(cfg)
    return 0


def _cmd_fidelity(args) -> int:
    pairs: list[tuple[tuple[float, float], tuple[float, float]]] = []
    if args.pairs:
        for pair_text in args.pairs.split(","):
            a, sep, b = pair_text.partition("/")
            if not sep:
                raise InvalidParameterError(
                    f"pair must be PHI:P/PHI:P, got {pair_text!r}"
                )
            pairs.append((_parse_point(a), _parse_point(b)))
    else:
        pairs = [
            ((PI, 3 * PI / 4), (0.0, 0.0)),  # text pair (R3, R5)
            ((0.0, 0.0), (0.0, 2 * PI)),     # caption pair (R5, R6)
        ]
    if args.n_spins_list:
        n_list = [int(v) for v in args.n_spins_list.split(",")]
    elif args.n_spins is not None:
        n_list = [args.n_spins]
    else:
        n_list = [int(_DEFAULTS["fidelity-scan"]["n_spins"])]
    multi = len(pairs) > 1 or len(n_list) > 1
    for pair_index, pair in enumerate(pairs):
        for n in n_list:
            mode_overrides = {
                "phi0": repr(pair[0][0]),
                "p0": repr(pair[0][1]),
                "phi1": repr(pair[1][0]),
                "p1": repr(pair[1][1]),
                "n_spins": str(n),
            }
            cfg = _build_config("fidelity-scan", args, mode_overrides=mode_overrides)
            suffix = f"_pair{pair_index}_N{n}" if multi else ""
            _run_and_write(cfg, suffix=suffix)
    return 0


def _cmd_density(args) -> int:
    system = _effective_system(args, "density-matrix")
    mode_defaults: dict[str, str] = {}
    drop: tuple[str, ...] = ()
    if system == "top":
        drop = ("kick", "inertia", "j_r", "p0", "phi0")
        mode_defaults.update(
            {
                "system": "top",
                "alpha": repr(PI / 2),
                "beta": "3.0",
                "phi0": "3.57",
                "theta0": "2.25",
            }
        )
    cfg = _build_config("density-matrix", args, mode_defaults=mode_defaults, drop=drop)
    _run_and_write(cfg)
    return 0


def _cmd_phase(args) -> int:
    system = args.system
    kicks = args.kicks if args.kicks is not None else 500
    seed = args.seed if args.seed is not None else 0
    n_starts = args.n_starts if args.n_starts is not None else 500
    out_dir = args.output_dir or default_output_root()
    basename = args.basename or "top_phase"
    overwrite = bool(args.overwrite)
    inertia = args.inertia if args.inertia is not None else 1.0
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if args.points:
        pts = np.array([_parse_point(p) for p in args.points.split(",")])
        first, second = pts[:, 0].copy(), pts[:, 1].copy()
    elif system == "top":
        first = rng.uniform(0.0, TWO_PI, n_starts)
        second = np.arccos(rng.uniform(-1.0, 1.0, n_starts))  # area-uniform starts
    else:
        first = rng.uniform(0.0, TWO_PI, n_starts)
        second = rng.uniform(0.0, TWO_PI, n_starts)
    param_items: dict[str, str]
    if system == "top":
        params = classical.TopParams(
            alpha=args.alpha if args.alpha is not None else PI / 2,
            beta=args.beta if args.beta is not None else 3.0,
        )
        out1, out2 = classical.batch_top_trajectories(first, second, params, kicks)
        coords = ("phi", "theta")
        param_items = {"alpha": repr(params.alpha), "beta": repr(params.beta)}
    else:
        kick = args.kick if args.kick is not None else 0.9
        if system == "rotor":
            params = classical.RotorParams(kick=kick, inertia=inertia)
            out1, out2 = classical.batch_rotor_trajectories(first, second, params, kicks)
            param_items = {"kick": repr(kick), "inertia": repr(inertia)}
        else:
            j_r = args.j_r if args.j_r is not None else 9.0
            branch = args.branch if args.branch is not None else 1
            top_params = classical.rotor_limit_params(kick, inertia, j_r)
            if np.any(np.abs(second) > j_r):
                raise InvalidParameterError(f"|p| exceeds j_r = {j_r}; band leaves the sphere")
            thetas0 = branch * np.arccos(np.clip(second / j_r, -1.0, 1.0))
            tphi, ttheta = classical.batch_top_trajectories(first, thetas0, top_params, kicks)
            out1 = tphi % TWO_PI if branch == 1 else (tphi + PI) % TWO_PI
            out2 = np.cos(ttheta) * j_r
            param_items = {
                "kick": repr(kick),
                "inertia": repr(inertia),
                "j_r": repr(j_r),
                "branch": str(branch),
            }
        coords = ("phi", "p")
        if args.wrap_p:
            out2 = out2 % (TWO_PI * inertia)
    csv_path = os.path.join(out_dir, basename + ".csv")
    meta_path = csvio.sidecar_path(csv_path)
    for path in (csv_path, meta_path):
        if os.path.exists(path) and not overwrite:
            raise FileExistsError(f"refusing to overwrite existing output {path}")
    os.makedirs(out_dir, exist_ok=True)
    csvio.write_trajectories_csv(csv_path, coords, out1, out2, overwrite)
    config_lines = [
        "[top-phase]",
        f"system = {system}",
        f"kicks = {kicks}",
        f"seed = {seed}",
        f"n_starts = {len(first)}",
        f"wrap_p = {'true' if args.wrap_p else 'false'}",
    ]
    config_lines += [f"{k} = {v}" for k, v in sorted(param_items.items())]
    from . import __version__

    meta = {
        "format": "qkicks-meta/1",
        "command": "top-phase",
        "config_text": "\n".join(config_lines) + "\n",
        "code_version": __version__,
        "seed": seed,
        "coords": list(coords),
        "n_trajectories": int(len(first)),
        "kicks": int(kicks),
        "csv_files": [os.path.basename(csv_path)],
        "marks": [],
    }
    csvio.write_sidecar(meta_path, meta, overwrite)
    print(csv_path)
    print(meta_path)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkicks",
        description="Kicked top / kicked rotor simulations: KSE grids, entanglement "
        "entropy, ergodicity, Husimi distributions, fidelity scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_)
        _common_flags(p)
        return p

    p = add("top-kse", "classical top KSE grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--phi-range", dest="phi_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--theta-range", dest="theta_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--point", metavar="PHI:THETA", help="single-point grid")
    p.add_argument("--tangent-direction", dest="tangent_direction", choices=("fixed", "random"))
    p.set_defaults(func=lambda a: _cmd_grid("top-kse", a))

    p = add("top-ee", "quantum top time-averaged EE grid / slice")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--theta0", type=float, help="fixed theta for --slice")
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--phi-range", dest="phi_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--theta-range", dest="theta_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--point", metavar="PHI:THETA", help="single point: prints the EE average")
    p.add_argument("--slice", action="store_true",
                   help="EE vs phi for several N (needs --n-spins-list)")
    p.add_argument("--n-spins-list", dest="n_spins_list", metavar="N1,N2,...")
    p.set_defaults(func=lambda a: _cmd_grid("top-ee", a))

    p = add("rotor-kse", "classical rotor (or rotor-limit) KSE grid")
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--rotor-limit", dest="rotor_limit", action="store_true",
                   help="run the rescaled top instead of the bare rotor")
    p.add_argument("--phi-range", dest="phi_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--p-range", dest="p_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--point", metavar="PHI:P")
    p.add_argument("--tangent-direction", dest="tangent_direction", choices=("fixed", "random"))
    p.set_defaults(func=lambda a: _cmd_grid("rotor-kse", a))

    p = add("rotor-ee", "quantum rotor-limit EE grid / slice")
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--phi0", type=float, help="fixed phi for --slice")
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--phi-range", dest="phi_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--p-range", dest="p_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--point", metavar="PHI:P")
    p.add_argument("--slice", action="store_true",
                   help="EE vs p for several N (needs --n-spins-list)")
    p.add_argument("--n-spins-list", dest="n_spins_list", metavar="N1,N2,...")
    p.set_defaults(func=lambda a: _cmd_grid("rotor-ee", a))

    p = add("ergodicity", "fidelity with the microcanonical state vs kicks")
    p.add_argument("--system", choices=("top", "rotor-limit"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--theta0", type=float)
    p.add_argument("--phi0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--points", metavar="C1:C2,C1:C2,...",
                   help="initial points; must share one coordinate")
    p.set_defaults(func=_cmd_ergodicity)

    p = add("husimi", "Husimi distribution after evolving one initial state")
    p.add_argument("--system", choices=("top", "rotor-limit"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--phi0", type=float)
    p.add_argument("--theta0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--phi-range", dest="phi_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--theta-range", dest="theta_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--p-range", dest="p_range", metavar="MIN:MAX:CELLS")
    p.add_argument("--source", dest="husimi_source", choices=("state", "time-average"))
    p.set_defaults(func=_cmd_husimi)

    p = add("fidelity-scan", "Uhlmann fidelity of a point pair vs kick strength")
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--k-range", dest="k_range", metavar="MIN:MAX:STEPS",
                   help="inclusive kappa values")
    p.add_argument("--pairs", metavar="PHI:P/PHI:P,...",
                   help="point pairs (default: both Fig.-8 candidate pairs)")
    p.add_argument("--n-spins-list", dest="n_spins_list", metavar="N1,N2,...")
    p.set_defaults(func=_cmd_fidelity)

    p = add("density-matrix", "time-averaged density matrix magnitudes")
    p.add_argument("--system", choices=("top", "rotor-limit"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--phi0", type=float)
    p.add_argument("--theta0", type=float)
    p.add_argument("--p0", type=float)
    p.add_argument("--n-spins", dest="n_spins", type=int)
    p.add_argument("--kicks", type=int)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.set_defaults(func=_cmd_density)

    p = add("top-phase", "classical trajectories (Poincare scatter)")
    p.add_argument("--system", choices=("top", "rotor", "rotor-limit"), default="top")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--kick", type=float)
    p.add_argument("--inertia", type=float)
    p.add_argument("--j-r", dest="j_r", type=float)
    p.add_argument("--branch", type=int, choices=(1, -1))
    p.add_argument("--kicks", type=int)
    p.add_argument("--n-starts", dest="n_starts", type=int)
    p.add_argument("--points", metavar="C1:C2,...", help="explicit starts instead of random")
    p.add_argument("--wrap-p", dest="wrap_p", action="store_true",
                   help="wrap momentum to [0, 2 pi I) in the output")
    p.set_defaults(func=_cmd_phase)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"qkicks {args.command}: {exc}", file=sys.stderr)
        return 2
    except FileExistsError as exc:
        print(f"qkicks {args.command}: {exc} (pass --overwrite to replace)", file=sys.stderr)
        return 1
    except QkicksError as exc:
        print(f"qkicks {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
