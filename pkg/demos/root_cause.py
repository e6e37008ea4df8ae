"""Walkthrough: which feature values travel with the anomalies?

Builds a population of merged instances where anomalous ticks are
heavily concentrated on one device mode, labels them by an anomaly
region, and ranks feature-value subsets by hypergeometric enrichment.

Run:  python3 demos/root_cause.py
"""

import numpy as np

from mbbminer import label_instances, permutation_test, significant_groups
from mbbminer.detect import AnomalyRegion
from mbbminer.merge import Instance

SEC = 1_000_000_000
rng = np.random.default_rng(2)

instances = []
for i in range(1000):
    in_region = 600 <= i < 700
    # during the anomalous window the device has mostly fallen back to 3G
    mode = "3G" if (in_region and i % 10 != 0) or (not in_region and i % 10 == 0) \
        else "LTE"
    rssi = float(rng.normal(-95 if mode == "3G" else -70, 3))
    instances.append(Instance(i * SEC, "n1", "op0",
                              {"DeviceMode": mode, "RSSI": rssi}))

region = AnomalyRegion(start_ts=600 * SEC, end_ts=699 * SEC, detector="rolling",
                       params={}, outlier_ts=(), score=5.0, direction="above")
data = label_instances(instances, [region])
print(f"population N={data.N}, anomalous K={data.K}")

rows = significant_groups(data, features=["DeviceMode", "RSSI"],
                          max_subset_size=2)
for row in rows[:5]:
    print(f"  {row.describe()}")

top = rows[0]
p_perm = permutation_test(data, top.subset, R=1000, seed=0)
print(f"permutation check on the top subset: p={p_perm:.4f}")
