"""Walkthrough: context features absorb a known cause.

A device that falls back from LTE to 3G shows much higher round-trip
times. To a context-free detector that epoch is an anomaly; to a
QRF baseline conditioned on the device mode it is expected behaviour.

Run:  python3 demos/context_baseline.py
"""

import numpy as np

from mbbminer import BaselineParams, ForestParams, detect_baseline
from mbbminer.merge import Instance

SEC = 1_000_000_000
rng = np.random.default_rng(1)


def make(indices, three_g):
    rows = []
    for i in indices:
        mode = "3G" if i in three_g else "LTE"
        rtt = (150.0 if mode == "3G" else 50.0) + rng.uniform(0, 1)
        rows.append(Instance(i * SEC, "n1", "op0",
                             {"RTT": rtt, "mode": mode, "phase": float(i % 60)}))
    return rows


# training: rare, short 3G episodes; evaluation: a solid 3G epoch
train = make(range(3000), set(range(0, 3000, 150)))
evaluate = make(range(4000, 4600), set(range(4300, 4400)))

forest = ForestParams(n_trees=50, seed=3)
for label, features in (("without mode", ("phase",)),
                        ("with mode", ("mode", "phase"))):
    params = BaselineParams(features=features, forest=forest, min_cluster=20)
    result = detect_baseline(train, evaluate, "RTT", params)
    print(f"{label}: threshold={result.threshold:.2f}, "
          f"{len(result.regions)} region(s)")
    for r in result.regions:
        print(f"  {r.start_ts / SEC:.0f}s..{r.end_ts / SEC:.0f}s "
              f"({len(r.outlier_ts)} outliers, {r.direction})")
