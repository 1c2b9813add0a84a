#!/usr/bin/env python3
"""Kicked-top panel: phase portrait, KSE grid, time-averaged EE grid, and the
equatorial EE slices for several spin counts (alpha = pi/2, beta = 3)."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig1")

if args.paper_scale:
    grid, steps, n_spins, kicks = "200", "10000", "300", "300"
    starts, traj_kicks = "500", "500"
    slice_ns = "50,100,200,300"
else:
    grid, steps, n_spins, kicks = "64", "2000", "100", "200"
    starts, traj_kicks = "200", "300"
    slice_ns = "25,50,100"

marks = ["--mark", "T1:2.20:2.25", "--mark", "T2:3.57:2.25"]

run(args, "top-phase", "--n-starts", starts, "--kicks", traj_kicks,
    "--output-dir", d, "--basename", "fig1a_phase")
run(args, "top-kse",
    "--phi-range", f"0:6.283185307179586:{grid}",
    "--theta-range", f"0:3.141592653589793:{grid}",
    "--steps", steps, "--output-dir", d, "--basename", "fig1b_kse", *marks)
run(args, "top-ee",
    "--phi-range", f"0:6.283185307179586:{grid}",
    "--theta-range", f"0:3.141592653589793:{grid}",
    "--n-spins", n_spins, "--kicks", kicks,
    "--output-dir", d, "--basename", "fig1c_ee", *marks)
run(args, "top-ee", "--slice", "--n-spins-list", slice_ns,
    "--theta0", "1.5707963267948966", "--kicks", kicks,
    "--output-dir", d, "--basename", "fig1d_slice")

render(args, "scatter", [f"{d}/fig1a_phase.csv"], f"{d}/fig1a_phase.png")
render(args, "heatmap", [f"{d}/fig1b_kse.csv"], f"{d}/fig1b_kse.png")
render(args, "heatmap", [f"{d}/fig1c_ee.csv"], f"{d}/fig1c_ee.png")
