#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Exhaustive confidence-threshold enumeration for the scripted recall scenario."""
import itertools
import json
import os
import random

IOU_T = 0.25
MIN_PTS = 5
STEPS = 40


def iou(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def greedy(gts, preds):
    cands = []
    for g in gts:
        for p in preds:
            v = iou(g["point_indices"], p["point_indices"])
            if v >= IOU_T:
                cands.append((-v, g["object_id"], p["track_id"], v))
    cands.sort()
    used_g, used_p, out = set(), set(), []
    for _, gid, pid, v in cands:
        if gid in used_g or pid in used_p:
            continue
        used_g.add(gid)
        used_p.add(pid)
        out.append((gid, pid, v))
    return out


def run(gt, pred, thr):
    frames = sorted({o["frame_index"] for o in gt} | {o["frame_index"] for o in pred})
    last = {}
    tot = dict(gt=0, tp=0, fp=0, fn=0, ids=0, iou=0.0)
    for f in frames:
        g = [o for o in gt if o["frame_index"] == f and len(o["point_indices"]) >= MIN_PTS]
        p = [o for o in pred if o["frame_index"] == f and len(o["point_indices"]) >= MIN_PTS
             and o["confidence"] >= thr]
        m = greedy(g, p)
        tot["gt"] += len(g)
        tot["tp"] += len(m)
        tot["fn"] += len(g) - len(m)
        tot["fp"] += len(p) - len(m)
        for gid, pid, v in sorted(m):
            if gid in last and last[gid] != pid:
                tot["ids"] += 1
            last[gid] = pid
            tot["iou"] += v
    return tot


def optimal_count(ious):
    """Maximum-total-IoU matching by enumeration; returns number of pairs."""
    n, m = len(ious), len(ious[0]) if ious else 0
    best = (-1.0, 0)
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            s = [ious[i][perm[i]] for i in range(n) if ious[i][perm[i]] >= IOU_T]
            best = max(best, (sum(s), len(s)))
    else:
        for perm in itertools.permutations(range(n), m):
            s = [ious[perm[j]][j] for j in range(m) if ious[perm[j]][j] >= IOU_T]
            best = max(best, (sum(s), len(s)))
    return best[1]


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    base = os.path.join(here, "..", "data", "eval_scenario")
    gt = [json.loads(l) for l in open(os.path.join(base, "gt.jsonl")) if l.strip()]
    pred = [json.loads(l) for l in open(os.path.join(base, "pred.jsonl")) if l.strip()]
    thresholds = sorted({p["confidence"] for p in pred}, reverse=True)
    runs = [(t, run(gt, pred, t)) for t in thresholds]
    for t, r in runs:
        print("threshold", t, r)
    am = sam = amp = 0.0
    rows = []
    for j in range(1, STEPS + 1):
        rt = j / STEPS
        row = (0, 0.0, 0.0, 0.0, 0.0)
        for t, r in runs:
            if r["tp"] / r["gt"] + 1e-12 >= rt:
                err = r["fp"] + r["fn"] + r["ids"]
                mota = 1 - err / r["gt"]
                smota = min(1.0, max(0.0, 1 - (err - (1 - rt) * r["gt"]) / (rt * r["gt"])))
                motp = r["iou"] / r["tp"]
                row = (1, t, mota, smota, motp)
                break
        rows.append(row)
        am += row[2]
        sam += row[3]
        amp += row[4]
    print("reached", [r[0] for r in rows])
    print("threshold", [r[1] for r in rows])
    print("mota", ["%.17g" % r[2] for r in rows])
    print("smota", ["%.17g" % r[3] for r in rows])
    print("motp", ["%.17g" % r[4] for r in rows])
    print("amota %.17g samota %.17g amotp %.17g" % (am / STEPS, sam / STEPS, amp / STEPS))

    # Greedy vs optimal matching count on random small instances.
    rng = random.Random(7)
    agree = 0
    trials = 2000
    for _ in range(trials):
        n, m = rng.randint(1, 6), rng.randint(1, 6)
        ious = [[rng.choice([0.0, rng.random()]) for _ in range(m)] for _ in range(n)]
        g = sorted(((-ious[i][j], i, j) for i in range(n) for j in range(m) if ious[i][j] >= IOU_T))
        ug, up, cnt = set(), set(), 0
        for _, i, j in g:
            if i in ug or j in up:
                continue
            ug.add(i)
            up.add(j)
            cnt += 1
        agree += cnt == optimal_count(ious)
    print("dense random IoU agreement %d/%d" % (agree, trials))
    print("disjoint point-set agreement %d/%d" % partition_agreement())


def random_partition_instance(rng):
    """GT objects and predictions as disjoint point sets over one frame."""
    universe = list(range(60))
    rng.shuffle(universe)
    n = rng.randint(1, 6)
    gts, pos = [], 0
    for _ in range(n):
        k = rng.randint(3, 9)
        gts.append(universe[pos:pos + k])
        pos += k
    free = universe[pos:]
    taken, preds = set(), []
    for _ in range(rng.randint(1, 6)):
        src = rng.choice(gts)
        keep = [p for p in src if rng.random() < 0.7 and p not in taken]
        extra = [p for p in rng.sample(free, rng.randint(0, 3)) if p not in taken]
        if rng.random() < 0.3:
            other = rng.choice(gts)
            extra += [p for p in other[: rng.randint(1, 4)] if p not in taken]
        obj = sorted(set(keep + extra))
        if obj:
            taken.update(obj)
            preds.append(obj)
    return gts, preds


def partition_agreement(trials=2000, seed=11):
    rng = random.Random(seed)
    agree = 0
    for _ in range(trials):
        gts, preds = random_partition_instance(rng)
        ious = [[iou(g, p) for p in preds] for g in gts]
        g = sorted((-ious[i][j], i, j) for i in range(len(gts)) for j in range(len(preds))
                   if ious[i][j] >= IOU_T)
        ug, up, cnt = set(), set(), 0
        for _, i, j in g:
            if i in ug or j in up:
                continue
            ug.add(i)
            up.add(j)
            cnt += 1
        agree += cnt == optimal_count(ious)
    return agree, trials


if __name__ == "__main__":
    main()
