#!/usr/bin/env python3
"""Rotor-limit EE asymmetry: constant-phi EE slices for several rescaling
spins j_r at fixed N; the profile symmetrizes as j_r grows."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig4")

if args.paper_scale:
    n_spins, kicks, cells = "600", "300", "128"
    j_values = ("9", "12", "18", "36")
else:
    n_spins, kicks, cells = "100", "200", "48"
    j_values = ("9", "18")

for j_r in j_values:
    run(args, "rotor-ee", "--slice", "--n-spins-list", n_spins,
        "--j-r", j_r, "--kicks", kicks,
        "--p-range", f"0:6.283185307179586:{cells}",
        "--output-dir", d, "--basename", f"fig4_jr{j_r}")
