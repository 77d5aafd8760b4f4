"""Runtime and value scaling of the main pipeline stages under refinement.

Times the decomposition, the grid extension, one packing estimator, and
one pair-energy estimator across an h-ladder on a chosen canonical set;
writes a CSV so regressions show up as more than a feeling.
"""

from __future__ import annotations

import argparse
import csv
import time
from pathlib import Path

from sobtrace.canonical import CanonicalSpec, generate_canonical, test_function_family
from sobtrace.measures import quasidistance_pair_energy
from sobtrace.norms import TraceEstimateConfig, trace_estimate
from sobtrace.verify import extension_field
from sobtrace.whitney import whitney_decomposition


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main(set_name: str, levels: list[float], out: Path) -> None:
    rows = []
    for h in levels:
        S, mu = generate_canonical(CanonicalSpec(set_name, h))
        f = test_function_family("restrictions-of-smooth", S)[0]
        W, t_whitney = timed(lambda: whitney_decomposition(S))
        cfg = TraceEstimateConfig(theorem="T11", p=3.0)
        F, t_extend = timed(lambda: extension_field(W, f.values, cfg))
        rep, t_t11 = timed(lambda: trace_estimate(S, f.values, cfg))
        energy, t_pairs = timed(
            lambda: quasidistance_pair_energy(S, mu, f.values, 0.25, 3.0)
        )
        row = {
            "h": h,
            "points": len(S.points),
            "cubes": len(W),
            "t_whitney": round(t_whitney, 4),
            "t_extend": round(t_extend, 4),
            "t_t11": round(t_t11, 4),
            "t_pair_energy": round(t_pairs, 4),
            "t11_value": rep.value,
            "pair_energy": energy,
        }
        rows.append(row)
        print(
            f"h=1/{round(1 / h):<5} pts={row['points']:<6} cubes={row['cubes']:<6} "
            f"whitney {t_whitney:.2f}s  extend {t_extend:.2f}s  "
            f"T11 {t_t11:.2f}s  pairs {t_pairs:.2f}s"
        )
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {out}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--set", default="segment-1d-in-2d")
    ap.add_argument(
        "--levels", default="1/64,1/128,1/256",
        help="comma list of h values as fractions",
    )
    ap.add_argument("--out", type=Path, default=Path("scaling.csv"))
    args = ap.parse_args()
    levels = []
    for tok in args.levels.split(","):
        num, den = tok.split("/")
        levels.append(float(num) / float(den))
    main(args.set, levels, args.out)
