import itertools
import math

import numpy as np
import pytest
from scipy import stats

from mbbminer import (LabeledDataset, benjamini_hochberg, hypergeom_tail,
                      label_instances, permutation_test, significant_groups,
                      welch_t_test)
from mbbminer.detect import AnomalyRegion
from mbbminer.errors import DegenerateGroups, InvalidCounts, InvalidR
from mbbminer.merge import Instance
from mbbminer.rootcause import (LABEL_ANOMALOUS, LABEL_REGULAR,
                                discretize_quartiles, enrichment_to_csv,
                                subset_mask)

from conftest import SEC


def dataset(values_labels):
    """values_labels: list of (values dict, label)."""
    return LabeledDataset(tuple(
        Instance(i * SEC, "n", "i", vals, label)
        for i, (vals, label) in enumerate(values_labels)))


def test_hypergeom_tail_worked_example():
    # urn of 20 with 5 marked, draw 8, P(>= 4 marked) = 7280/125970
    assert hypergeom_tail(20, 5, 8, 4) == pytest.approx(7280 / 125970, abs=1e-12)


def test_hypergeom_tail_edge_cases():
    assert hypergeom_tail(10, 3, 4, 0) == 1.0
    assert hypergeom_tail(10, 3, 4, 5) == 0.0  # cannot draw more than K marked
    assert hypergeom_tail(10, 10, 4, 4) == 1.0
    with pytest.raises(InvalidCounts):
        hypergeom_tail(10, 11, 4, 1)
    with pytest.raises(InvalidCounts):
        hypergeom_tail(10, 3, 11, 1)


def test_hypergeom_matches_enumeration_oracle():
    """Exact-enumeration check across all (N <= 60, K, n, k)."""
    for N in (2, 7, 20, 41, 60):
        for K in range(0, N + 1, max(1, N // 4)):
            for n in range(0, N + 1, max(1, N // 4)):
                pmf = [math.comb(K, k) * math.comb(N - K, n - k) / math.comb(N, n)
                       if 0 <= n - k <= N - K else 0.0
                       for k in range(0, n + 1)]
                assert sum(pmf) == pytest.approx(1.0, abs=1e-10)
                for k in range(0, n + 2):
                    want = sum(pmf[k:]) if k <= n else 0.0
                    assert hypergeom_tail(N, K, n, k) == \
                        pytest.approx(want, abs=1e-10)


def test_benjamini_hochberg():
    p = [0.01, 0.02, 0.03, 0.5]
    q = benjamini_hochberg(p)
    # classic step-up: q_i = min over j>=i of p_(j) * m / j
    assert q.tolist() == pytest.approx([0.04, 0.04, 0.04, 0.5])
    assert benjamini_hochberg([]).tolist() == []


def test_discretize_quartiles():
    values = [1.0, 2.0, 3.0, 4.0, None]
    cats = discretize_quartiles(values)
    assert cats == ["q1", "q2", "q3", "q4", "<null>"]


def test_significant_groups_ranks_planted_cause():
    rows = []
    for i in range(100):
        rows.append(({"F": "a" if i < 90 else "b", "G": "x" if i % 2 else "y"},
                     LABEL_ANOMALOUS))
    for i in range(900):
        rows.append(({"F": "a" if i < 90 else "b", "G": "x" if i % 2 else "y"},
                     LABEL_REGULAR))
    data = dataset(rows)
    out = significant_groups(data, features=["F", "G"], max_subset_size=1)
    top = out[0]
    assert top.subset == (("F", "a"),)
    assert top.n == 180 and top.k == 90
    assert top.enrichment == pytest.approx((90 / 180) / (100 / 1000))
    assert top.q_value < 1e-6


def test_significant_groups_pairs_cross_features_only():
    rows = [({"F": "a", "G": "x"}, LABEL_ANOMALOUS) for _ in range(30)]
    rows += [({"F": "b", "G": "y"}, LABEL_REGULAR) for _ in range(70)]
    out = significant_groups(dataset(rows), features=["F", "G"], max_subset_size=2)
    for row in out:
        names = [name for name, _ in row.subset]
        assert len(set(names)) == len(names)
    pair = next(r for r in out if len(r.subset) == 2)
    assert pair.subset == (("F", "a"), ("G", "x"))


def test_significant_groups_quartile_discretization():
    rng = np.random.default_rng(1)
    rows = []
    for i in range(200):
        anomalous = i < 40
        rssi = -110.0 + rng.uniform(0, 2) if anomalous else -70.0 + rng.uniform(0, 20)
        rows.append(({"RSSI": rssi}, LABEL_ANOMALOUS if anomalous else LABEL_REGULAR))
    out = significant_groups(dataset(rows), features=["RSSI"], max_subset_size=1)
    assert out[0].subset == (("RSSI", "q1"),)
    assert out[0].q_value < 1e-6


def test_permutation_test_agrees_for_strong_effect():
    rows = [({"F": "a"}, LABEL_ANOMALOUS) for _ in range(40)]
    rows += [({"F": "b"}, LABEL_REGULAR) for _ in range(160)]
    data = dataset(rows)
    p = permutation_test(data, (("F", "a"),), R=500, seed=0)
    assert p == pytest.approx(1 / 501, abs=1e-12)
    with pytest.raises(InvalidR):
        permutation_test(data, (("F", "a"),), R=0)


def test_permutation_null_uniformish():
    rng = np.random.default_rng(2)
    rows = [({"F": rng.choice(["a", "b"])},
             LABEL_ANOMALOUS if rng.random() < 0.3 else LABEL_REGULAR)
            for _ in range(120)]
    p = permutation_test(dataset(rows), (("F", "a"),), R=300, seed=3)
    assert p > 0.01


def test_welch_t_test_worked_example():
    rows = [({"X": float(v)}, LABEL_ANOMALOUS) for v in (1, 2, 3, 4, 5)]
    rows += [({"X": float(v)}, LABEL_REGULAR) for v in (2, 3, 4, 5, 6)]
    result = welch_t_test(dataset(rows), "X")
    assert result.t == pytest.approx(-1.0)
    assert result.df == pytest.approx(8.0)
    assert result.p == pytest.approx(2 * stats.t.sf(1.0, 8.0))


def test_welch_t_test_degenerate():
    rows = [({"X": 1.0}, LABEL_ANOMALOUS)] * 5 + [({"X": 1.0}, LABEL_REGULAR)] * 5
    result = welch_t_test(dataset(rows), "X")
    assert result.t == 0.0 and result.p == 1.0
    with pytest.raises(DegenerateGroups):
        welch_t_test(dataset([({"X": 1.0}, LABEL_ANOMALOUS)] * 5), "X")


def test_label_instances_inclusive_bounds():
    instances = [Instance(i * SEC, "n", "i", {"X": 1.0}) for i in range(10)]
    region = AnomalyRegion(start_ts=3 * SEC, end_ts=6 * SEC, detector="rolling",
                           params={}, outlier_ts=(), score=1.0, direction="above")
    data = label_instances(instances, [region])
    labels = [i.label for i in data.instances]
    assert labels == [LABEL_REGULAR] * 3 + [LABEL_ANOMALOUS] * 4 + \
        [LABEL_REGULAR] * 3
    assert data.N == 10 and data.K == 4


def test_subset_mask_and_csv():
    rows = [({"F": "a"}, LABEL_ANOMALOUS), ({"F": "b"}, LABEL_REGULAR),
            ({"F": None}, LABEL_REGULAR)]
    data = dataset(rows)
    mask = subset_mask(data, (("F", "a"),))
    assert mask.tolist() == [True, False, False]
    assert subset_mask(data, (("F", "<null>"),)).tolist() == [False, False, True]
    out = significant_groups(data, features=["F"], max_subset_size=1)
    text = enrichment_to_csv(out)
    header = text.splitlines()[0]
    assert header == "subset,count,count_class,enrichment,p_value,q_value"
    assert len(text.splitlines()) == len(out) + 1
