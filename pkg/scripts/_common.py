"""Shared plumbing for the figure-reproduction scripts."""
from __future__ import annotations

import argparse
import os
import shutil
import sys

from qkicks.cli import main as qkicks_main


def script_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--paper-scale", action="store_true",
                   help="full-resolution parameters (can take hours); default is desk scale")
    p.add_argument("--output-dir", default=None, help="default: runs/<script>")
    p.add_argument("--render", action="store_true",
                   help="also render images with plotviz, if installed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--overwrite", action="store_true")
    return p


def out_dir(args, default_name: str) -> str:
    d = args.output_dir or os.path.join("runs", default_name)
    os.makedirs(d, exist_ok=True)
    return d


def run(args, *argv: str) -> None:
    cmd = list(argv)
    if args.workers is not None:
        cmd += ["--workers", str(args.workers)]
    if args.overwrite:
        cmd += ["--overwrite"]
    print("qkicks " + " ".join(cmd), flush=True)
    rc = qkicks_main(cmd)
    if rc != 0:
        sys.exit(rc)


def render(args, kind: str, csvs: list[str], image: str) -> None:
    if not args.render:
        return
    try:
        from plotviz.cli import main as plotviz_main
    except ImportError:
        print("plotviz not installed; skipping render", file=sys.stderr)
        return
    rc = plotviz_main(["render", kind, *csvs, "-o", image])
    if rc != 0:
        sys.exit(rc)
