"""Quantile regression forest.

A random forest grown by CART variance reduction whose leaves retain the
training target indices, so any conditional quantile can be read off a
leaf-weighted empirical CDF at prediction time.

Determinism contract: the forest is driven by numpy's default PCG64
generator seeded from ``ForestParams.seed`` through ``SeedSequence`` (one
spawned child per tree), so the same data and seed rebuild identical
trees.  PCG64 is a published, implementation-neutral algorithm; see
docs/qrf-model-format.md for the serialized tree layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, NoUsableFeatures, UnfittedModel
from .merge import Instance

_EPS = 1e-12


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    min_leaf: int = 5
    mtry: int | None = None  # default ceil(sqrt(#features)), resolved at fit
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True  # off for oracle-equivalence configurations

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


class _Tree:
    """Flat node arrays; node 0 is the root.

    Internal nodes carry (feature, kind, threshold-or-category, left, right,
    null_left); leaves carry the list of training indices they hold
    (bootstrap multiplicity included).
    """

    __slots__ = ("feature", "kind", "threshold", "category", "left", "right",
                 "null_left", "leaf_indices")

    def __init__(self):
        self.feature: list[str | None] = []
        self.kind: list[str | None] = []
        self.threshold: list[float | None] = []
        self.category: list[str | None] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.null_left: list[bool] = []
        self.leaf_indices: list[np.ndarray | None] = []

    def new_node(self) -> int:
        for attr in self.__slots__[:-1]:
            getattr(self, attr).append(None)
        self.leaf_indices.append(None)
        return len(self.feature) - 1

    def route(self, node: int, row_values: dict) -> np.ndarray:
        """Follow splits for one query row down to a leaf's indices."""
        while self.leaf_indices[node] is None:
            v = row_values.get(self.feature[node])
            if v is None or (isinstance(v, float) and math.isnan(v)):
                go_left = self.null_left[node]
            elif self.kind[node] == "numeric":
                go_left = float(v) <= self.threshold[node]
            else:
                go_left = str(v) == self.category[node]
            node = self.left[node] if go_left else self.right[node]
        return self.leaf_indices[node]


@dataclass
class QrfModel:
    params: ForestParams
    context: tuple[str, ...]
    kinds: dict[str, str]
    targets: np.ndarray
    trees: list[_Tree] = field(default_factory=list)
    _order: np.ndarray | None = None  # argsort of targets, cached

    @property
    def fitted(self) -> bool:
        return bool(self.trees)

    def weights(self, x) -> np.ndarray:
        """Per-training-point CDF weights for one query instance."""
        if not self.fitted:
            raise UnfittedModel("model has no trees")
        row = x.values if isinstance(x, Instance) else dict(x)
        w = np.zeros(len(self.targets))
        per_tree = 1.0 / len(self.trees)
        for tree in self.trees:
            leaf = tree.route(0, row)
            np.add.at(w, leaf, per_tree / len(leaf))
        return w

    def predict_quantile(self, x, q: float) -> float:
        return predict_quantile(self, x, q)


def _column_arrays(instances, context, kinds):
    cols = {}
    for name in context:
        raw = [inst.values.get(name) for inst in instances]
        kind = kinds[name]
        if kind == "numeric":
            arr = np.array([np.nan if v is None else float(v) for v in raw])
        else:
            arr = np.array([None if v is None else str(v) for v in raw], dtype=object)
        cols[name] = arr
    return cols


def _infer_kinds(instances, context) -> dict[str, str]:
    kinds = {}
    for name in context:
        kind = "numeric"
        for inst in instances:
            v = inst.values.get(name)
            if isinstance(v, str):
                kind = "categorical"
                break
        kinds[name] = kind
    return kinds


def _sse(total: float, sq: float, n: float) -> float:
    return sq - total * total / n


def _best_numeric_split(v, y, idx, min_leaf):
    """Best threshold for one numeric column over rows idx.

    Returns (sse, threshold, null_left) or None.  Rows with NaN follow the
    majority child (ties to the left).
    """
    vals = v[idx]
    nn = ~np.isnan(vals)
    m = int(nn.sum())
    if m < 2:
        return None
    yv = y[idx]
    y0 = yv[~nn]
    n0, s0, q0 = len(y0), float(y0.sum()), float((y0 * y0).sum())
    order = np.argsort(vals[nn], kind="mergesort")
    vs = vals[nn][order]
    ys = yv[nn][order]
    c = np.cumsum(ys)
    c2 = np.cumsum(ys * ys)
    total, sq = c[-1], c2[-1]
    boundary = np.nonzero(vs[:-1] < vs[1:])[0]  # split after position i
    if boundary.size == 0:
        return None
    ln = boundary + 1
    rn = m - ln
    maj_left = ln >= rn
    lN = ln + np.where(maj_left, n0, 0)
    rN = rn + np.where(maj_left, 0, n0)
    ls = c[boundary] + np.where(maj_left, s0, 0.0)
    lq = c2[boundary] + np.where(maj_left, q0, 0.0)
    rs = (total + s0) - ls
    rq = (sq + q0) - lq
    sse = _sse(ls, lq, lN) + _sse(rs, rq, rN)
    valid = (lN >= min_leaf) & (rN >= min_leaf)
    if not valid.any():
        return None
    sse = np.where(valid, sse, np.inf)
    best = int(np.argmin(sse))
    i = boundary[best]
    threshold = (vs[i] + vs[i + 1]) / 2.0
    return float(sse[best]), threshold, bool(maj_left[best])


def _best_categorical_split(v, y, idx, min_leaf):
    """Best one-category-vs-rest split for one categorical column."""
    vals = v[idx]
    yv = y[idx]
    nn = np.array([x is not None for x in vals])
    m = int(nn.sum())
    if m < 2:
        return None
    y0 = yv[~nn]
    n0, s0, q0 = len(y0), float(y0.sum()), float((y0 * y0).sum())
    total = float(yv[nn].sum())
    sq = float((yv[nn] * yv[nn]).sum())
    stats: dict[str, list[float]] = {}
    for x, t in zip(vals, yv):
        if x is None:
            continue
        rec = stats.setdefault(x, [0, 0.0, 0.0])
        rec[0] += 1
        rec[1] += t
        rec[2] += t * t
    if len(stats) < 2:
        return None
    best = None
    for cat in sorted(stats):
        cn, cs, cq = stats[cat]
        ln, rn = cn, m - cn
        maj_left = ln >= rn
        lN = ln + (n0 if maj_left else 0)
        rN = rn + (0 if maj_left else n0)
        if lN < min_leaf or rN < min_leaf:
            continue
        ls = cs + (s0 if maj_left else 0.0)
        lq = cq + (q0 if maj_left else 0.0)
        sse = _sse(ls, lq, lN) + _sse((total + s0) - ls, (sq + q0) - lq, rN)
        if best is None or sse < best[0]:
            best = (float(sse), cat, bool(maj_left))
    return best


def _grow_tree(cols, kinds, y, params: ForestParams, mtry: int,
               rng: np.random.Generator) -> _Tree:
    n = len(y)
    if params.bootstrap:
        sample = rng.integers(0, n, size=n)
    else:
        sample = np.arange(n)
    tree = _Tree()
    feature_names = list(cols)
    root = tree.new_node()
    stack = [(root, sample, 0)]
    while stack:
        node, idx, depth = stack.pop()
        yv = y[idx]
        parent_sse = _sse(float(yv.sum()), float((yv * yv).sum()), len(idx))
        make_leaf = (len(idx) < 2 * params.min_leaf
                     or parent_sse <= _EPS * max(1.0, float((yv * yv).sum()))
                     or (params.max_depth is not None and depth >= params.max_depth))
        best = None
        if not make_leaf:
            chosen = rng.choice(len(feature_names), size=mtry, replace=False)
            for fi in sorted(chosen):
                name = feature_names[fi]
                if kinds[name] == "numeric":
                    cand = _best_numeric_split(cols[name], y, idx, params.min_leaf)
                else:
                    cand = _best_categorical_split(cols[name], y, idx, params.min_leaf)
                if cand is None:
                    continue
                if cand[0] < parent_sse - _EPS * max(1.0, parent_sse) and (
                        best is None or cand[0] < best[1][0]):
                    best = (name, cand)
        if best is None:
            tree.leaf_indices[node] = np.sort(idx)
            continue
        name, (sse, split_at, null_left) = best
        v = cols[name][idx]
        left_mask = np.full(len(v), null_left)
        if kinds[name] == "numeric":
            nn = ~np.isnan(v)
            left_mask[nn] = v[nn] <= split_at
            tree.threshold[node] = float(split_at)
        else:
            nn = np.array([x is not None for x in v])
            left_mask[nn] = np.array([x == split_at for x in v[nn]])
            tree.category[node] = split_at
        tree.feature[node] = name
        tree.kind[node] = kinds[name]
        tree.null_left[node] = null_left
        left = tree.new_node()
        right = tree.new_node()
        tree.left[node] = left
        tree.right[node] = right
        stack.append((left, idx[left_mask], depth + 1))
        stack.append((right, idx[~left_mask], depth + 1))
    return tree


def fit(instances, target: str, context: list[str], params: ForestParams,
        kinds: dict[str, str] | None = None, n_jobs: int = 1) -> QrfModel:
    """Fit a quantile regression forest mapping context features to a target.

    Instances with a null target are dropped.  Instances with null context
    values are kept: at every split they follow the majority child.
    """
    usable = [inst for inst in instances if inst.values.get(target) is not None]
    if len(usable) < 2 * params.min_leaf:
        raise InsufficientData(
            f"{len(usable)} usable instances, need >= {2 * params.min_leaf}")
    if not context:
        raise NoUsableFeatures("empty context feature list")
    kinds = dict(kinds) if kinds else _infer_kinds(usable, context)
    cols = _column_arrays(usable, context, kinds)
    any_value = False
    for name, arr in cols.items():
        if kinds[name] == "numeric":
            any_value = any_value or bool((~np.isnan(arr)).any())
        else:
            any_value = any_value or any(v is not None for v in arr)
    if not any_value:
        raise NoUsableFeatures("every context feature is entirely null")
    y = np.array([float(inst.values[target]) for inst in usable])
    mtry = params.mtry or max(1, math.ceil(math.sqrt(len(context))))
    if not 1 <= mtry <= len(context):
        raise ValueError(f"mtry {mtry} outside [1, {len(context)}]")
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    if n_jobs != 1:
        from joblib import Parallel, delayed
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_grow_tree)(cols, kinds, y, params, mtry,
                                np.random.default_rng(s)) for s in seeds)
    else:
        trees = [_grow_tree(cols, kinds, y, params, mtry, np.random.default_rng(s))
                 for s in seeds]
    model = QrfModel(params=params, context=tuple(context), kinds=kinds,
                     targets=y, trees=list(trees))
    model._order = np.argsort(y, kind="mergesort")
    return model


def predict_quantile(model: QrfModel, x, q: float) -> float:
    """Weighted empirical conditional quantile (lower interpolation).

    Returns the smallest training target y with cumulative leaf weight
    >= q.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    w = model.weights(x)
    order = model._order if model._order is not None else np.argsort(model.targets)
    cw = np.cumsum(w[order])
    pos = int(np.searchsorted(cw, q - 1e-9, side="left"))
    pos = min(pos, len(order) - 1)
    return float(model.targets[order[pos]])


def predict_quantiles(model: QrfModel, instances, q: float) -> np.ndarray:
    """Vector form of :func:`predict_quantile` over many instances."""
    return np.array([predict_quantile(model, inst, q) for inst in instances])


# ---------------------------------------------------------------------------
# serialization (versioned flat format, docs/qrf-model-format.md)

MODEL_FORMAT_VERSION = 1


def dump_model(model: QrfModel) -> str:
    trees_json = []
    for tree in model.trees:
        nodes = []
        for i in range(len(tree.feature)):
            if tree.leaf_indices[i] is not None:
                nodes.append({"leaf": [int(j) for j in tree.leaf_indices[i]]})
            else:
                node = {"f": tree.feature[i], "k": tree.kind[i],
                        "l": tree.left[i], "r": tree.right[i],
                        "nl": tree.null_left[i]}
                if tree.kind[i] == "numeric":
                    node["t"] = tree.threshold[i]
                else:
                    node["c"] = tree.category[i]
                nodes.append(node)
        trees_json.append(nodes)
    return json.dumps({
        "version": MODEL_FORMAT_VERSION,
        "params": {"n_trees": model.params.n_trees, "min_leaf": model.params.min_leaf,
                   "mtry": model.params.mtry, "max_depth": model.params.max_depth,
                   "seed": model.params.seed, "bootstrap": model.params.bootstrap},
        "context": list(model.context),
        "kinds": model.kinds,
        "targets": [float(t) for t in model.targets],
        "trees": trees_json,
    })


def load_model(text: str) -> QrfModel:
    doc = json.loads(text)
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    params = ForestParams(**doc["params"])
    trees = []
    for nodes in doc["trees"]:
        tree = _Tree()
        for node in nodes:
            i = tree.new_node()
            if "leaf" in node:
                tree.leaf_indices[i] = np.array(node["leaf"], dtype=int)
            else:
                tree.feature[i] = node["f"]
                tree.kind[i] = node["k"]
                tree.left[i] = node["l"]
                tree.right[i] = node["r"]
                tree.null_left[i] = node["nl"]
                if node["k"] == "numeric":
                    tree.threshold[i] = node["t"]
                else:
                    tree.category[i] = node["c"]
        trees.append(tree)
    targets = np.array(doc["targets"])
    model = QrfModel(params=params, context=tuple(doc["context"]),
                     kinds=dict(doc["kinds"]), targets=targets, trees=trees)
    model._order = np.argsort(targets, kind="mergesort")
    return model
