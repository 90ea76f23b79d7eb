"""Write traces/drone.csv: a drone reporting GPS at 5 Hz and an intruder reporting at 2 Hz.

The intruder closes in for 20 s (within 0.1 from about 16.7 s on) and then
retreats. Output is fully deterministic.
"""

import csv
import sys
from fractions import Fraction
from pathlib import Path

DURATION = 30


def drone(t: Fraction):
    return 49.0 + 0.0004 * float(t), 8.0


def intruder(t: Fraction):
    lat, _ = drone(t)
    gap = 0.4 - 0.018 * float(t) if t <= 20 else 0.04 + 0.05 * float(t - 20)
    return lat + gap, 8.0


def rows():
    times = sorted({Fraction(k, 5) for k in range(DURATION * 5 + 1)} | {Fraction(k, 2) for k in range(DURATION * 2 + 1)})
    for t in times:
        row = ["#"] * 4
        if t.denominator in (1, 5):
            lat, lon = drone(t)
            row[0], row[1] = f"{lat:.6f}", f"{lon:.6f}"
        if t.denominator in (1, 2):
            ilat, ilon = intruder(t)
            row[2], row[3] = f"{ilat:.6f}", f"{ilon:.6f}"
        yield row + [f"{float(t):g}"]


def main(path: str = "traces/drone.csv"):
    with open(Path(path), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["lat", "lon", "intruder_lat", "intruder_lon", "time"])
        w.writerows(rows())


if __name__ == "__main__":
    main(*sys.argv[1:])
