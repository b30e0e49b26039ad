"""
A schedules x seeds sweep
=========================

Runs NegCos, Cos and three constant baselines over a few seeds, then writes
the report tables. The improvement statistic is the NegCos mean minus the best
constant-temperature mean. Use more seeds (10 or so) for a stable comparison;
three keeps this demo to about a minute.
"""
import sys

from osrtemp.harness import ExperimentConfig, expand_sweep, report, sweep
from osrtemp.schedule import ScheduleSpec

out = sys.argv[1] if len(sys.argv) > 1 else "sweep_out"
schedules = [ScheduleSpec.negcos(2.0, 0.5), ScheduleSpec.cos(2.0, 0.5),
             *(ScheduleSpec.const(t) for t in (0.5, 1.0, 2.0))]
configs = expand_sweep(ExperimentConfig(loss="ce"), schedules, seeds=range(3))
result = sweep(configs, output_dir=out)

for agg in result.aggregates:
    print(f"{agg['label']:<26} AUROC {agg['auroc_mean']:.4f} +/- {agg['auroc_std']:.4f}")
for imp in result.improvements:
    print(f"improvement of {imp['label']}: AUROC {imp['auroc']:+.4f}, "
          f"accuracy {imp['accuracy']:+.4f}, OSCR {imp['oscr']:+.4f}")

# %%
# The report turns results.csv into tables and plot-ready CSVs.
tables = report(f"{out}/results.csv", f"{out}/report")
for row in tables["k_sweep"]:
    print(f"k={row['k']:g}  {row['label']}  AUROC {row['auroc_mean']:.4f}")
