"""Interactive deployment walkthrough on the demo sensor board.

Builds a statistics-backed session from the bundled three-sensor file and
replays the core operator loop: inspect the ranking, deploy the leader,
watch the remaining sensors rerank against the improved system, then feed
a signal through the deployed sensor and read off the recommended action.
The rerank step is the interesting part: the eager X9 channel outranks the
conservative M30 on an empty board, but once M10 is deployed X9's false
alarms make it a net negative while M30 still adds detection.

With --serve the script instead starts the HTTP service on the demo
session so the dashboard (frontend/) or curl can drive the same loop:

    python3 scripts/session_demo.py [--serve] [--port 8000]
"""

import argparse
from pathlib import Path

from evsikit.data import ingest_channel_stats
from evsikit.decision import CostModel
from evsikit.service import EvsiService
from evsikit.session import create_stats_session

ROOT = Path(__file__).resolve().parents[1]
DEFAULT_STATS = ROOT / "fixtures" / "channel_stats_demo.json"


def show(label, session):
    print(f"\n{label} (status: {session.status.value})")
    for report in session.latest_rankings:
        print(
            f"  {report.sensor_label:5s} EVSI {report.evsi:+.4f}"
            f"  on signal: {report.action_on_signal.value}"
            f"  quiet: {report.action_on_no_signal.value}"
        )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--stats", default=str(DEFAULT_STATS))
    parser.add_argument("--cost-r", type=float, default=1.0)
    parser.add_argument("--cost-p", type=float, default=4.0)
    parser.add_argument("--serve", action="store_true")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args()

    stats = ingest_channel_stats(args.stats)
    manager = create_stats_session(stats, CostModel(args.cost_r, args.cost_p))

    if args.serve:
        service = EvsiService(manager, port=args.port)
        print(f"demo session up; try GET {service.url}/api/rankings")
        service.serve_forever()
        return

    show("round 0 ranking", manager.snapshot())
    leader = manager.snapshot().latest_rankings[0].sensor_label
    session = manager.deploy(leader)
    show(f"after deploying {leader}", session)

    _, action = manager.record_signal(leader, True)
    print(f"\n{leader} fired: recommended action -> {action.value}")
    _, action = manager.record_signal(leader, False)
    print(f"{leader} quiet: recommended action -> {action.value}")


if __name__ == "__main__":
    main()
