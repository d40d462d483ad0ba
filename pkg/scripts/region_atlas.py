"""Region map of the (R_s, R_r) plane for several h_s values, as CSV and SVG.

    python3 scripts/region_atlas.py --hs 0.12 1.31 15.15 --out-dir atlas
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from amrcontrol.output import ATLAS_COLUMNS, write_csv
from amrcontrol.scenarios import PHASE_PORTRAITS
from amrcontrol.stability import region_atlas

CODES = {"R1": 1, "R2": 2, "R3": 3, "R4": 4, "R5": 5, "boundary": 0}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hs", type=float, nargs="+", default=[0.12, 1.31, 15.15])
    ap.add_argument("--grid", type=int, default=200)
    ap.add_argument("--rs-max", type=float, default=2.0)
    ap.add_argument("--rr-max", type=float, default=2.0)
    ap.add_argument("--out-dir", type=Path, default=Path("atlas"))
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for h_s in args.hs:
        rows = region_atlas(h_s, args.grid, args.rs_max, args.rr_max)
        meta = {"hs": h_s, "grid": args.grid, "rs_max": args.rs_max, "rr_max": args.rr_max}
        write_csv(args.out_dir / f"atlas_hs{h_s:g}.csv", ATLAS_COLUMNS, rows, meta)
        img = np.array([CODES[r[3]] for r in rows]).reshape(args.grid, args.grid).T
        with matplotlib.rc_context({"svg.hashsalt": "amrcontrol"}):
            fig, ax = plt.subplots(figsize=(5, 4.5))
            ax.imshow(img, origin="lower", extent=(0, args.rs_max, 0, args.rr_max), cmap="tab10", vmin=0, vmax=9,
                      aspect="auto", interpolation="nearest")
            for tag, d in PHASE_PORTRAITS.items():
                if abs(d["h_s"] - h_s) < 1e-9:
                    ax.plot(d["R_s"], d["R_r"], "k*")
            for code, name in ((1, "R1"), (2, "R2"), (3, "R3"), (4, "R4"), (5, "R5")):
                ys, xs = np.nonzero(img == code)
                if len(xs):
                    ax.text((xs.mean() + 0.5) * args.rs_max / args.grid, (ys.mean() + 0.5) * args.rr_max / args.grid,
                            name, ha="center", va="center")
            ax.set_xlabel("R_s")
            ax.set_ylabel("R_r")
            ax.set_title(f"h_s = {h_s:g}")
            fig.savefig(args.out_dir / f"atlas_hs{h_s:g}.svg", metadata={"Date": None})
            plt.close(fig)
        counts = {k: sum(r[3] == k for r in rows) for k in CODES}
        print(f"h_s={h_s:g}: {counts}")


if __name__ == "__main__":
    main()
