"""Regenerate scenarios/three_user_four_channel.json (seeded, committed)."""

import argparse
from pathlib import Path

import numpy as np

from iwfsim.generators import random_scenario
from iwfsim.scenario_io import save_scenario

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--out", default=str(ROOT / "scenarios" / "three_user_four_channel.json"))
    args = ap.parse_args()
    s = random_scenario(np.random.default_rng(args.seed), 3, 4, rho_max=0.8, masked=True)
    save_scenario(s, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
