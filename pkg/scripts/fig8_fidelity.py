#!/usr/bin/env python3
"""Fidelity between time-averaged states of a rotor-limit point pair as a
function of kick strength: flat until the last torus breaks at
K_C = 0.971635, rising only after.  Emits both candidate pairs per spin
count.  Paper scale sweeps N up to 3000 (dim 3001) and takes hours."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig8")

if args.paper_scale:
    n_list, kicks, k_steps = "500,1500,2000,2500,3000", "500", "31"
else:
    n_list, kicks, k_steps = "100,200", "200", "11"

run(args, "fidelity-scan", "--j-r", "15", "--kicks", kicks,
    "--k-range", f"0.5:2.0:{k_steps}", "--n-spins-list", n_list,
    "--output-dir", d, "--basename", "fig8")

first_n = n_list.split(",")[0]
render(args, "series",
       [f"{d}/fig8_pair0_N{first_n}.csv", f"{d}/fig8_pair1_N{first_n}.csv"],
       f"{d}/fig8_N{first_n}.png")
