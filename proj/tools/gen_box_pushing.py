#!/usr/bin/env python3
"""Generate the Cooperative Box Pushing model file.

Two agents stand in the bottom row of a 3x4 grid. The middle row holds a
small box above column 0, a large box above columns 1-2 and a small box above
column 3. Pushing a box into the top (goal) row earns its reward and resets
the world to the start configuration within the same step.

Each agent turns left, turns right, moves forward or stays; a non-stay action
succeeds with probability 0.9 and otherwise has no effect. An agent observes
the content of the cell in front of it after the step. Rewards: -0.1 per
agent per step, -5 per bump into a wall, the other agent or a box that does
not move, +10 per small box and +100 for the large box, which moves only if
both agents push it together.
"""

import argparse
import itertools
import sys

COLS = 4
N, E, S, W = range(4)
HEADINGS = "NESW"
ACTIONS = ["turn-left", "turn-right", "forward", "stay"]
OBS = ["empty", "wall", "agent", "small-box", "large-box"]
SUCCESS = 0.9
STEP_COST = 0.1
BUMP = 5.0
SMALL = 10.0
LARGE = 100.0
START = ((0, E), (3, W))


def grid_states():
    out = []
    for p1, p2 in itertools.combinations(range(COLS), 2):
        for h1, h2 in itertools.product(range(4), repeat=2):
            out.append(((p1, h1), (p2, h2)))
    return out


def box_above(col):
    return "small" if col in (0, COLS - 1) else "large"


def front(state, agent):
    (col, heading) = state[agent]
    other = state[1 - agent][0]
    if heading == S:
        return "wall"
    if heading == N:
        return box_above(col) + "-box"
    target = col + (1 if heading == E else -1)
    if target < 0 or target >= COLS:
        return "wall"
    return "agent" if target == other else "empty"


def step(state, acts):
    """Outcome of a joint action in which every listed action succeeds.

    Returns (next state, reward excluding the step cost).
    """
    reward = 0.0
    pos = [state[0][0], state[1][0]]
    head = [state[0][1], state[1][1]]
    for i, a in enumerate(acts):
        if a == "turn-left":
            head[i] = (head[i] + 3) % 4
        elif a == "turn-right":
            head[i] = (head[i] + 1) % 4
    pushes = [acts[i] == "forward" and state[i][1] == N for i in range(2)]
    small = [i for i in range(2) if pushes[i] and box_above(pos[i]) == "small"]
    large = [i for i in range(2) if pushes[i] and box_above(pos[i]) == "large"]
    targets = list(pos)
    for i in range(2):
        if acts[i] != "forward" or state[i][1] == N:
            continue
        if state[i][1] == S:
            reward -= BUMP
            continue
        t = pos[i] + (1 if state[i][1] == E else -1)
        if t < 0 or t >= COLS:
            reward -= BUMP
            continue
        targets[i] = t
    # moving into the other agent's cell or a contested cell fails with a bump
    moved = list(targets)
    for i in range(2):
        j = 1 - i
        if moved[i] != pos[i] and (moved[i] == pos[j] or moved[i] == moved[j]):
            targets[i] = pos[i]
            reward -= BUMP
    if len(large) == 2:
        return START, reward + LARGE
    reward -= BUMP * len(large)
    if small:
        return START, reward + SMALL * len(small)
    nxt = tuple(sorted(zip(targets, head)))
    if nxt[0][0] == nxt[1][0]:
        raise AssertionError("agents collided")
    # agent 1 is always the left one
    return nxt, reward


def state_name(s):
    return "a%d%s-a%d%s" % (s[0][0], HEADINGS[s[0][1]], s[1][0], HEADINGS[s[1][1]])


def build():
    grid = grid_states()
    names = [state_name(s) for s in grid]
    index = {n: k for k, n in enumerate(names)}
    start = index[state_name(START)]
    T, O, R = {}, {}, {}
    for a1, a2 in itertools.product(ACTIONS, repeat=2):
        for s in grid:
            sn = state_name(s)
            dist = {}
            reward = -2 * STEP_COST
            for ok1, ok2 in itertools.product((True, False), repeat=2):
                p = (SUCCESS if ok1 else 1 - SUCCESS) if a1 != "stay" else (1.0 if ok1 else 0.0)
                p *= (SUCCESS if ok2 else 1 - SUCCESS) if a2 != "stay" else (1.0 if ok2 else 0.0)
                if p == 0.0:
                    continue
                nxt, r = step(s, (a1 if ok1 else "stay", a2 if ok2 else "stay"))
                k = index[state_name(nxt)]
                dist[k] = dist.get(k, 0.0) + p
                reward += p * r
            T[(a1, a2, sn)] = dist
            R[(a1, a2, sn)] = reward
    for s in grid:
        O[state_name(s)] = (front(s, 0), front(s, 1))
    return names, start, T, O, R


def write(out):
    names, start, T, O, R = build()
    w = out.write
    w("# Cooperative Box Pushing, generated by tools/gen_box_pushing.py\n")
    w("agents: 2\ndiscount: 1.0\nvalues: reward\n")
    w("states: %s\n" % " ".join(names))
    w("start include: %s\n" % names[start])
    w("actions:\n%s\n%s\n" % (" ".join(ACTIONS), " ".join(ACTIONS)))
    w("observations:\n%s\n%s\n" % (" ".join(OBS), " ".join(OBS)))
    for (a1, a2, sn), dist in T.items():
        for k, p in sorted(dist.items()):
            w("T: %s %s : %s : %s : %.17g\n" % (a1, a2, sn, names[k], p))
    for sn, (o1, o2) in O.items():
        w("O: * : %s : %s %s : 1\n" % (sn, o1, o2))
    for (a1, a2, sn), r in R.items():
        w("R: %s %s : %s : * : * : %.17g\n" % (a1, a2, sn, r))


def write_header(model_path, out):
    text = open(model_path).read()
    out.write("#pragma once\n\n// Generated from data/box_pushing.dpomdp by tools/gen_box_pushing.py\n\n")
    out.write("namespace decpomdp::data {\n\ninline constexpr const char* kBoxPushingModel =\n")
    for line in text.splitlines():
        out.write('    "%s\\n"\n' % line.replace("\\", "\\\\").replace('"', '\\"'))
    out.write(";\n\n} // namespace decpomdp::data\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="data/box_pushing.dpomdp")
    ap.add_argument("--header", default="include/decpomdp/data/box_pushing_model.hpp")
    args = ap.parse_args()
    with open(args.model, "w") as f:
        write(f)
    with open(args.header, "w") as f:
        write_header(args.model, f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
