"""Write traces/intruders.csv: drone GPS at 2 Hz plus fixes from four intruders.

Intruders report irregularly. Some fall silent for more than 10 s and come
back, so their streams go stale, close and re-spawn. Seeded, so the output
never changes.
"""

import csv
import random
import sys

DURATION = 60


def rows(seed: int = 7):
    rng = random.Random(seed)
    events = {}
    for k in range(DURATION * 2 + 1):
        t = k / 2
        events.setdefault(t, {})["drone"] = (49.0 + 0.0005 * t, 8.0)
    silent = {1: (20, 35), 2: (5, 18), 3: (40, 60), 4: (0, 12)}
    for ident in range(1, 5):
        t = rng.uniform(0, 2)
        while t < DURATION:
            lo, hi = silent[ident]
            if not lo <= t < hi:
                gap = 0.02 + 0.3 * ident + 0.004 * abs(t - 30)
                # Intruder 2 closes in on the drone for the second half.
                if ident == 2 and t > 30:
                    gap = max(0.01, 0.3 - 0.02 * (t - 30))
                stamp = round(t, 1)
                slot = events.setdefault(stamp, {})
                if "intruder" not in slot:
                    slot["intruder"] = (ident, 49.0 + 0.0005 * stamp + gap, 8.0)
            t += rng.uniform(0.5, 3.0)
    for t in sorted(events):
        e = events[t]
        row = ["#"] * 5
        if "drone" in e:
            row[0], row[1] = f"{e['drone'][0]:.6f}", f"{e['drone'][1]:.6f}"
        if "intruder" in e:
            ident, lat, lon = e["intruder"]
            row[2], row[3], row[4] = str(ident), f"{lat:.6f}", f"{lon:.6f}"
        yield row + [f"{t:g}"]


def main(path: str = "traces/intruders.csv"):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["lat", "lon", "intruder_id", "intruder_lat", "intruder_lon", "time"])
        w.writerows(rows())


if __name__ == "__main__":
    main(*sys.argv[1:])
