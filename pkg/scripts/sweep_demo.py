"""Cost-ratio sensitivity of sensor value.

Loads the three-sensor example channel file and sweeps the plant-damage /
remediation cost ratio over powers of two. Two regimes show up clearly:
at low ratios a sharp sensor is worth a large fraction of the baseline
cost, and past each sensor's threshold the recommended action becomes Fix
on both branches, at which point the signal stops mattering and its value
drops to exactly zero. Run from the repository root:

    python3 scripts/sweep_demo.py [--ratios 2,4,8,16] [--cost-r 1.0]
"""

import argparse
from pathlib import Path

from evsikit.data import ingest_channel_stats
from evsikit.decision import baseline_cost_no_signal, CostModel, sensitivity_sweep

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_STATS = ROOT / "fixtures" / "channel_stats_example.json"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--stats", default=str(DEFAULT_STATS))
    parser.add_argument("--cost-r", type=float, default=1.0)
    parser.add_argument("--ratios", default="2,4,8,16")
    args = parser.parse_args()

    stats = ingest_channel_stats(args.stats)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    table = sensitivity_sweep(stats.sensors, None, stats.priors, args.cost_r, ratios)

    print(f"priors: p(fault) = {stats.priors.p_fault}")
    for ratio, section in zip(table.ratios, table.sections):
        baseline = baseline_cost_no_signal(
            stats.priors, CostModel(args.cost_r, args.cost_r * ratio)
        )
        print(f"\nP/R = {ratio:g}   prior-only cost = {baseline.expected_cost:.4f}")
        print(f"  {'sensor':8s} {'EVSI':>10s}  signal -> action   quiet -> action")
        for entry in section:
            print(
                f"  {entry.sensor_label:8s} {entry.evsi:10.4f}"
                f"  {entry.action_on_signal.value:>16s} {entry.action_on_no_signal.value:>17s}"
            )
        if all(
            e.action_on_signal.value == "fix" and e.action_on_no_signal.value == "fix"
            for e in section
        ):
            print("  (every sensor saturated: always Fix, information worth nothing)")


if __name__ == "__main__":
    main()
