"""Regenerate fixtures/bfh_replay.json: the progress-event stream a
middleware would emit for the canonical 6-point mission, used by the
console tests to replay a mission without a robot."""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT / "src"))

from sitewalk.client import PlanContext
from sitewalk.frames import Pose2D
from sitewalk.model import load_building_model
from sitewalk.planner import load_drp_list
from sitewalk.sim import Phase, Simulator


def main() -> None:
    model = load_building_model((ROOT / "fixtures/bfh_approx.json").read_bytes())
    ctx = PlanContext(model)
    drps = load_drp_list((ROOT / "fixtures/bfh_drps.json").read_text())
    mission = ctx.plan(drps, Pose2D(11.0, 1.0, 1.5708), speed=0.4,
                       dwell=20.667, created_at="2026-08-07T00:00:00Z")

    sim = Simulator(mission, model, seed=0)
    events = []
    next_progress = 0.0
    interval = 0.2
    for state in sim.run():
        if state.elapsed >= next_progress or state.phase == Phase.DONE:
            next_progress = state.elapsed + interval
            events.append({
                "mission_id": mission.mission_id,
                "t": round(state.elapsed, 3),
                "x": round(state.estimated_pose.x, 4),
                "y": round(state.estimated_pose.y, 4),
                "theta": round(state.estimated_pose.theta, 4),
                "degraded": state.localization_degraded,
                "waypoint_index": state.waypoint_index,
                "n_waypoints": len(mission.waypoints),
                "drps_done": len(sim.log.captures),
                "n_drps": len(mission.drp_ids),
                "phase": state.phase.value,
            })

    out = ROOT / "fixtures/bfh_replay.json"
    out.write_text(json.dumps({
        "mission_id": mission.mission_id,
        "drp_ids": mission.drp_ids,
        "waypoints": [[w.x, w.y] for w in mission.waypoints],
        "events": events,
    }, indent=None, separators=(",", ":")))
    print(f"wrote {out} with {len(events)} events")


if __name__ == "__main__":
    main()
