"""
Temperature schedules
=====================

Every schedule is a pure function of the epoch. This script prints a few
landmark epochs for the common shapes and writes the full curves to a CSV
that any plotting tool can read.
"""
import csv
import sys

from osrtemp.schedule import ScheduleSpec, temperature_at, temperature_curve

schedules = [
    ScheduleSpec.const(1.0),
    ScheduleSpec.cos(2.0, 0.5),
    ScheduleSpec.negcos(2.0, 0.5),
    ScheduleSpec.gcos(2.0, 0.5, shift=0.5),
]

# %%
# NegCos starts at the low temperature, peaks mid-period and is held at the
# high value for its final half period (epochs 500-600 at P=200, E=600).
landmarks = [1, 50, 100, 150, 200, 450, 500, 550, 600]
print("epoch  " + "  ".join(f"{s.label:>26}" for s in schedules))
for e in landmarks:
    print(f"{e:5d}  " + "  ".join(f"{temperature_at(s, e):26.4f}" for s in schedules))

# %%
# Full curves, one column per schedule.
out = sys.argv[1] if len(sys.argv) > 1 else "temperature_curves.csv"
curves = [temperature_curve(s) for s in schedules]
with open(out, "w", newline="") as f:
    writer = csv.writer(f)
    writer.writerow(["epoch", *(s.label for s in schedules)])
    for e in range(600):
        writer.writerow([e + 1, *(c[e] for c in curves)])
print(f"wrote {out}")
