#!/usr/bin/env python3
"""Kicked-rotor panel (K = 0.9, I = 1): bare-rotor and rotor-limit (j_r = 9)
phase portraits and KSE grids, the rotor-limit EE grid, and EE-vs-p slices."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig3")

if args.paper_scale:
    grid, steps, n_spins, kicks = "200", "10000", "300", "300"
    starts, traj_kicks, slice_ns = "500", "500", "50,100,200,300"
else:
    grid, steps, n_spins, kicks = "64", "2000", "100", "200"
    starts, traj_kicks, slice_ns = "200", "300", "25,50,100"

p_range = f"0:6.283185307179586:{grid}"
phi_range = f"0:6.283185307179586:{grid}"
marks = [
    "--mark", "R1:3.14159:0.0", "--mark", "R2:3.14159:1.5708",
    "--mark", "R3:3.14159:2.3562", "--mark", "R4:3.14159:6.2832",
    "--mark", "R5:0.0:0.0", "--mark", "R6:0.0:6.2832",
]

run(args, "top-phase", "--system", "rotor", "--n-starts", starts,
    "--kicks", traj_kicks, "--wrap-p", "--output-dir", d, "--basename", "fig3a_phase")
run(args, "rotor-kse", "--phi-range", phi_range, "--p-range", p_range,
    "--steps", steps, "--output-dir", d, "--basename", "fig3b_kse", *marks)
run(args, "top-phase", "--system", "rotor-limit", "--j-r", "9", "--n-starts", starts,
    "--kicks", traj_kicks, "--wrap-p", "--output-dir", d, "--basename", "fig3c_phase")
run(args, "rotor-kse", "--rotor-limit", "--j-r", "9",
    "--phi-range", phi_range, "--p-range", p_range,
    "--steps", steps, "--output-dir", d, "--basename", "fig3d_kse", *marks)
run(args, "rotor-ee", "--j-r", "9", "--phi-range", phi_range, "--p-range", p_range,
    "--n-spins", n_spins, "--kicks", kicks,
    "--output-dir", d, "--basename", "fig3e_ee", *marks)
run(args, "rotor-ee", "--slice", "--n-spins-list", slice_ns, "--j-r", "9",
    "--p-range", p_range, "--kicks", kicks,
    "--output-dir", d, "--basename", "fig3f_slice")

render(args, "scatter", [f"{d}/fig3a_phase.csv"], f"{d}/fig3a_phase.png")
render(args, "heatmap", [f"{d}/fig3b_kse.csv"], f"{d}/fig3b_kse.png")
render(args, "scatter", [f"{d}/fig3c_phase.csv"], f"{d}/fig3c_phase.png")
render(args, "heatmap", [f"{d}/fig3d_kse.csv"], f"{d}/fig3d_kse.png")
render(args, "heatmap", [f"{d}/fig3e_ee.csv"], f"{d}/fig3e_ee.png")
