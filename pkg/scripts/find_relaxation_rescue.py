"""Sweep the symmetric cross gain h upward until plain simultaneous updates
cycle while alpha = 0.5 converges, then commit that instance.

Base game: three users, two channels with noise (1, 2) on every receiver,
unit direct gains, budget 10. The verdicts must also hold at h * (1 +/- 2%)
so the committed instance is not sitting on the bifurcation point.
"""

import argparse
from pathlib import Path

import numpy as np

from iwfsim.engine import ScheduleSpec, StopSpec, Verdict, run
from iwfsim.model import Scenario
from iwfsim.scenario_io import save_scenario

ROOT = Path(__file__).resolve().parents[1]


def family(h, num_users=3):
    g = np.full((num_users, num_users, 2), h)
    for i in range(num_users):
        g[i, i] = 1.0
    return Scenario(g, [1.0, 2.0], 10.0)


def rescued(h) -> bool:
    for hh in (h * 0.98, h, h * 1.02):
        s = family(hh)
        p0 = np.zeros((s.num_users, s.num_channels))
        plain = run(s, p0, ScheduleSpec("simultaneous"), StopSpec())
        damped = run(s, p0, ScheduleSpec("simultaneous", alpha=0.5), StopSpec())
        if plain.verdict is not Verdict.CYCLE_DETECTED or damped.verdict is not Verdict.CONVERGED:
            return False
    return True


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--out", default=str(ROOT / "scenarios" / "relaxation_rescue.json"))
    args = ap.parse_args()
    for h in np.arange(args.step, 3.0, args.step):
        h = round(float(h), 10)
        ok = rescued(h)
        print(f"h={h:.2f} rescued={ok}")
        if ok:
            save_scenario(family(h), args.out)
            print(f"wrote {args.out}")
            return
    raise SystemExit("no instance found")


if __name__ == "__main__":
    main()
