#!/usr/bin/env python3
"""Time-averaged density-matrix magnitudes: the ergodic top point T2 floods
the Hilbert space; rotor-limit layer points (j_r = 15) explore subspaces,
with same-island pairs overlapping and torus-separated islands disjoint."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig7")

n_spins, kicks = ("500", "500") if args.paper_scale else ("100", "200")

run(args, "density-matrix", "--system", "top", "--phi0", "3.57", "--theta0", "2.25",
    "--n-spins", n_spins, "--kicks", kicks,
    "--output-dir", d, "--basename", "fig7a_T2")
for label, (phi0, p0) in (
    ("b_R5", ("0.0", "0.0")),
    ("c_R2", ("3.141592653589793", "1.5707963267948966")),
    ("d_R3", ("3.141592653589793", "2.356194490192345")),
):
    run(args, "density-matrix", "--system", "rotor-limit", "--j-r", "15",
        "--phi0", phi0, "--p0", p0,
        "--n-spins", n_spins, "--kicks", kicks,
        "--output-dir", d, "--basename", f"fig7{label}")

for name in ("a_T2", "b_R5", "c_R2", "d_R3"):
    render(args, "matrix-image", [f"{d}/fig7{name}.csv"], f"{d}/fig7{name}.png")
