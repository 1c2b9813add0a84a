#!/usr/bin/env python3
"""Husimi distributions of the kicked top after 500 kicks, started in the
chaotic point T2 = (3.57, 2.25) and the regular point T1 = (2.20, 2.25)."""
from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))
from _common import out_dir, render, run, script_parser

args = script_parser(__doc__).parse_args()
d = out_dir(args, "fig5")

n_spins, cells = ("300", "200") if args.paper_scale else ("100", "100")

for label, (phi0, theta0) in (("a_chaotic", ("3.57", "2.25")), ("b_regular", ("2.20", "2.25"))):
    run(args, "husimi", "--system", "top", "--phi0", phi0, "--theta0", theta0,
        "--n-spins", n_spins, "--kicks", "500",
        "--phi-range", f"0:6.283185307179586:{cells}",
        "--theta-range", f"0:3.141592653589793:{cells}",
        "--output-dir", d, "--basename", f"fig5{label}")
    render(args, "heatmap", [f"{d}/fig5{label}.csv"], f"{d}/fig5{label}.png")
