#!/usr/bin/env python3
"""Ergodicity (fidelity with the microcanonical state) vs kicks for the
kicked top's regular/chaotic points and the rotor-limit pair (j_r = 9)."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig2")

n_spins, kicks = ("500", "500") if args.paper_scale else ("100", "200")

run(args, "ergodicity", "--system", "top",
    "--points", "2.20:2.25,3.57:2.25",
    "--n-spins", n_spins, "--kicks", kicks, "--stride", "5",
    "--output-dir", d, "--basename", "fig2_top")
run(args, "ergodicity", "--system", "rotor-limit", "--j-r", "9",
    "--points", "3.141592653589793:0.0,3.141592653589793:1.5707963267948966",
    "--n-spins", n_spins, "--kicks", kicks, "--stride", "5",
    "--output-dir", d, "--basename", "fig2_rotor_limit")

render(args, "series",
       [f"{d}/fig2_top.csv", f"{d}/fig2_rotor_limit.csv"], f"{d}/fig2.png")
