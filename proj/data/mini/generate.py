#!/usr/bin/env python3
"""Regenerates the bundled miniature dataset.

Five nodes, seven links, four demand pairs, sixty days of 6-hourly demand
snapshots starting 2025-01-01. Traffic has a weekly peak pattern (period 7 in
the daily maxima) plus deterministic noise, so forecasting tests have real
structure to find. Everything is seeded; rerunning reproduces identical files.
"""

import math
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))

NODES = [
    ("A", 0.0, 0.0),
    ("B", 1.0, 0.0),
    ("C", 2.0, 0.0),
    ("D", 1.0, 1.0),
    ("E", 2.0, 1.0),
]

# id, endpoint a, endpoint b, module capacity, routing cost
LINKS = [
    ("L1", "A", "B", 100.0, 1.0),
    ("L2", "B", "C", 80.0, 1.0),
    ("L3", "A", "D", 60.0, 2.0),
    ("L4", "D", "E", 60.0, 1.0),
    ("L5", "B", "D", 50.0, 1.0),
    ("L6", "C", "E", 70.0, 1.0),
    ("L7", "A", "C", 40.0, 3.0),
]

# source, target, base level, weekly peak amplitude
DEMANDS = [
    ("A", "C", 20.0, 18.0),
    ("C", "A", 16.0, 14.0),
    ("A", "E", 12.0, 10.0),
    ("D", "B", 8.0, 6.0),
]

DAYS = 60
SNAPSHOT_HOURS = [0, 6, 12, 18]
DAY_SHAPE = {0: 0.6, 6: 0.8, 12: 1.0, 18: 0.7}
START = (2025, 1, 1)


def weekly_factor(day):
    w = day % 7
    if w == 5:
        return 3.0
    if w == 6:
        return 1.8
    return 1.0 + 0.1 * math.sin(2.0 * math.pi * day / 30.0)


def civil_advance(y, m, d, days):
    import datetime

    base = datetime.date(y, m, d) + datetime.timedelta(days=days)
    return base.year, base.month, base.day


def write_topology():
    lines = [
        "?SNDlib native format; type: network; version: 1.0",
        "# Miniature five-node topology for offline runs and tests.",
        "",
        "NODES (",
    ]
    for node, lon, lat in NODES:
        lines.append(f"  {node} ( {lon} {lat} )")
    lines.append(")")
    lines.append("")
    lines.append("LINKS (")
    for link, a, b, cap, cost in LINKS:
        # pre-installed capacity 0 -> capacity comes from the first module
        lines.append(f"  {link} ( {a} {b} ) 0.0 0.0 {cost} 0.0 ( {cap} 1.0 )")
    lines.append(")")
    lines.append("")
    with open(os.path.join(HERE, "topology.txt"), "w") as f:
        f.write("\n".join(lines))


def write_demands():
    rng = random.Random(20250101)
    outdir = os.path.join(HERE, "demands")
    os.makedirs(outdir, exist_ok=True)
    for day in range(DAYS):
        y, m, d = civil_advance(*START, day)
        for hour in SNAPSHOT_HOURS:
            lines = [
                "?SNDlib native format; type: demand; version: 1.0",
                "",
                "DEMANDS (",
            ]
            for i, (src, dst, base, amp) in enumerate(DEMANDS, start=1):
                level = base + amp * weekly_factor(day) * DAY_SHAPE[hour]
                level += rng.uniform(-0.05, 0.05) * amp
                lines.append(f"  D{i} ( {src} {dst} ) 1 {level:.4f} UNLIMITED")
            lines.append(")")
            lines.append("")
            name = f"demand-{y:04d}{m:02d}{d:02d}-{hour:02d}00.txt"
            with open(os.path.join(outdir, name), "w") as f:
                f.write("\n".join(lines))


if __name__ == "__main__":
    write_topology()
    write_demands()
    print(f"wrote topology.txt and {DAYS * len(SNAPSHOT_HOURS)} snapshots")
