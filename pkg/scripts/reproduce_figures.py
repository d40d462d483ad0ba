"""Regenerate the figure experiments (CSV + SVG) and print terminal values.

    python3 scripts/reproduce_figures.py --out-dir figures
"""
import argparse
import json
import time
from pathlib import Path

from amrcontrol.scenarios import run_figure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", type=Path, default=Path("figures"))
    ap.add_argument("--tags", nargs="+", default=["fig4", "fig5", "fig6", "fig8"])
    ap.add_argument("--T", type=float, default=10.0)
    args = ap.parse_args()
    for tag in args.tags:
        t0 = time.perf_counter()
        res = run_figure(tag, args.out_dir, T=args.T)
        print(f"{tag}: {len(res.files)} files in {time.perf_counter() - t0:.1f}s")
        print(json.dumps(res.terminal, indent=2, default=str))


if __name__ == "__main__":
    main()
