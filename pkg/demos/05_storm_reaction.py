"""Residents self-adjusting as a storm front moves through their cell.

Four flights dwell in cell (0, 0), which handles six flights in calm
weather but only three under a severe storm.  A storm is *reported* by
two radar observations; individually neither is convincing, but fused
they clear the confirmation threshold.  The storm then sweeps west to
east, covering the cell during roughly [1200 s, 1600 s), and the
residents must get occupancy down to three: one of them swings through
the neighboring cell for the storm window (or, stripped of alternates,
gets bumped with an explaining rejection).
"""

import json

from adatm import load_scenario, simulate


def scenario(with_alternates=True, confidences=(0.6, 0.5)):
    flights = []
    for i in range(4):
        flight = {"id": f"{i + 1:04d}",
                  "waypoints": [[1.0, 5.0, 0.0], [9.0, 5.0, 3600.0]]}
        if with_alternates:
            flight["alternates"] = [[[1.0, 5.0, 0.0], [5.0, 15.0, 1800.0],
                                     [9.0, 5.0, 3600.0]]]
        flights.append(flight)
    observations = [
        {"payload": {"storm_id": "st-1", "kind": "radar-echo"},
         "source": f"radar-{i + 1}", "confidence": c,
         "key": {"time": [600, 3000], "box": [-40, 0, -30, 10],
                 "concept": "airspace/weather/storm"}}
        for i, c in enumerate(confidences)
    ]
    return load_scenario(json.dumps({
        "grid": {"cols": 2, "rows": 2, "cell": 10.0},
        "bucket_seconds": 60,
        "horizon_seconds": 14400,
        "capacity": {"calm": 6, "severe": 3},
        "flights": flights,
        "storms": [{"id": "st-1", "box": [-40.0, 0.0, -30.0, 10.0],
                    "velocity": [0.05, 0.0], "active": [600.0, 3000.0],
                    "reported": True}],
        "observations": observations,
        "seed": 2,
    }))


def show(title, run):
    print(title)
    print("  outcomes:", {f: o.status.value for f, o in run.report.outcomes})
    for bucket in (1140.0, 1200.0, 1380.0, 1620.0):
        occ = run.state.occupancy((0, 0), bucket)
        cap = run.state.capacity((0, 0), bucket)
        print(f"  cell (0,0) bucket {bucket:>6g}: occupancy {occ} / capacity {cap}")
    interesting = [l for l in run.event_log.splitlines()
                   if "storm" in l or "weather" in l.split("|")[1]]
    print("  weather events:")
    for line in interesting[:4]:
        print("   ", line)
    print(f"    ... {max(0, len(interesting) - 4)} more")


show("confirmed storm, alternates available -> one resident swings away:",
     simulate(scenario(with_alternates=True)))

print()
show("confirmed storm, no alternates -> least-priority resident is bumped:",
     simulate(scenario(with_alternates=False)))

print()
run = simulate(scenario(confidences=(0.5,)))
print("single weak report (0.5 < 0.75 threshold) -> storm stays unconfirmed:")
print("  outcomes:", {f: o.status.value for f, o in run.report.outcomes})
print(" ", [l for l in run.event_log.splitlines() if "storm" in l][0])
