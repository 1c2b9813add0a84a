#!/usr/bin/env python3
"""Rotor-limit Husimi distributions from the layer point (0, 0) for kick
strengths below, just above, and well above the last-torus threshold
K_C = 0.971635, alongside the matching classical rotor trajectories."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig6")

n_spins, cells = ("500", "200") if args.paper_scale else ("100", "100")
# the exact fixed point (0,0) never moves classically (sin 0 = 0 exactly);
# a tiny offset lets the trajectory explore the separatrix layer instead
classical_start = "1e-9:1e-9"

for label, kick in (("a", "0.9"), ("c", "1.2"), ("e", "2.0")):
    run(args, "husimi", "--system", "rotor-limit", "--j-r", "15",
        "--kick", kick, "--phi0", "0.0", "--p0", "0.0",
        "--n-spins", n_spins, "--kicks", "500",
        "--phi-range", f"0:6.283185307179586:{cells}",
        "--p-range", f"0:6.283185307179586:{cells}",
        "--output-dir", d, "--basename", f"fig6{label}_husimi_K{kick}")
    render(args, "heatmap", [f"{d}/fig6{label}_husimi_K{kick}.csv"],
           f"{d}/fig6{label}_husimi_K{kick}.png")

for label, kick in (("b", "0.9"), ("d", "1.2"), ("f", "2.0")):
    run(args, "top-phase", "--system", "rotor", "--kick", kick,
        "--points", classical_start, "--kicks", "500", "--wrap-p",
        "--output-dir", d, "--basename", f"fig6{label}_traj_K{kick}")
    render(args, "scatter", [f"{d}/fig6{label}_traj_K{kick}.csv"],
           f"{d}/fig6{label}_traj_K{kick}.png")
