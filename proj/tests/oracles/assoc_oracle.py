#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Reference affinity logit, Sinkhorn iterations and exhaustive assignments."""
import itertools

import numpy as np

from backbone_oracle import leaky, patterned
from motion_oracle import fmt


def sinkhorn(raw, iters):
    x = np.exp(raw - raw.max(axis=1, keepdims=True))
    for _ in range(iters):
        x = x / x.sum(axis=1, keepdims=True)
        x = x / x.sum(axis=0, keepdims=True)
    return x


def main():
    specs = [("affinity.layer0.w", (3, 10)), ("affinity.layer0.b", (3,)),
             ("affinity.layer1.w", (2, 3)), ("affinity.layer1.b", (2,)),
             ("affinity.layer2.w", (1, 2)), ("affinity.layer2.b", (1,))]
    w = patterned(specs, 0.4)
    lk = np.array([1.0, 0.5, 0.2, 0.1, 0.05, 0.0, 0.3, -0.2, 0.1, 0.7])
    lm = np.array([0.8, 0.4, 0.2, 0.12, 0.04, 0.01, 0.25, -0.1, 0.0, 0.5])
    d = lk - lm
    h = leaky(w["affinity.layer0.w"] @ d + w["affinity.layer0.b"])
    h = leaky(w["affinity.layer1.w"] @ h + w["affinity.layer1.b"])
    print("affinity logit", fmt(w["affinity.layer2.w"] @ h + w["affinity.layer2.b"]))

    s = sinkhorn(np.array([[5.0, 0.0], [0.0, 5.0]]), 50)
    print("sinkhorn 2x2", fmt(s.ravel()))
    best = min(itertools.permutations(range(2)), key=lambda p: -sum(s[i, p[i]] for i in range(2)))
    print("optimal assignment", best)

    cost = np.array([[1.0, 10.0], [10.0, 1.0]])
    for p in itertools.permutations(range(2)):
        print("assignment", p, "total", sum(cost[i, p[i]] for i in range(2)))


if __name__ == "__main__":
    main()
