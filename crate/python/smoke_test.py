"""Smoke test for the mcox extension module.

Build first:  cargo build -p mcox-py --release
then run:     python python/smoke_test.py
"""

import json
import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


def load():
    for profile in ("release", "debug"):
        lib = os.path.join(ROOT, "target", profile, "libmcox.so")
        if os.path.exists(lib):
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, os.path.join(tmp, "mcox.so"))
            sys.path.insert(0, tmp)
            import mcox

            return mcox
    sys.exit("libmcox.so not found; run `cargo build -p mcox-py` first")


def main():
    mcox = load()

    g = mcox.GridMap.from_ascii("4 5 1\n#####\n#...#\n#...#\n#####\n")
    assert (g.height, g.width) == (4, 5)
    assert g.get(1, 1) == "free" and g.get(0, 0) == "occupied"
    assert mcox.GridMap.from_ascii(g.to_ascii()).to_ascii() == g.to_ascii()
    assert g.to_pgm().startswith(b"P5")

    path = mcox.plan_path(g, (1, 1), (2, 3))
    assert path[0] == (1, 1) and path[-1] == (2, 3) and len(path) == 4

    seen = dict(mcox.lidar_scan(g, (1, 1), 5))
    assert seen[(1, 3)] == "free"

    truth, zone = mcox.generate_map("small", 3)
    belief = mcox.GridMap(truth.height, truth.width)
    for cell, state in mcox.lidar_scan(truth, zone[0], 5):
        belief.set(cell[0], cell[1], state)
    fr = mcox.frontiers(belief, [zone[0]], seed=1)
    assert fr and all(len(f) == 5 for f in fr)
    mcox.doorways(belief, seed=1)

    text = "ROBOT 0: (%d,%d)\nSUMMARY: go" % fr[0][:2]
    queues, summary, warnings = mcox.parse_response(text, belief, 1)
    assert queues == [[fr[0][:2]]] and summary == "go" and not warnings
    assert mcox.format_response(queues, summary) == text + "\n"

    rec = json.loads(mcox.run_episode(truth, zone, team_size=2, planner="sample-greedy", seed=5))
    assert rec["outcome"]["status"] in ("completed", "timeout")
    assert rec["safety_violations"] == 0
    again = json.loads(mcox.run_episode(truth, zone, team_size=2, planner="sample-greedy", seed=5))
    assert rec == again

    print("mcox smoke test ok: %s after %d steps" % (rec["outcome"]["status"], rec["outcome"]["t"]))


if __name__ == "__main__":
    main()
