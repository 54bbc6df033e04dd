"""Independent brute-force oracles used by the property and acceptance tests.

These deliberately avoid the library's numpy code paths: plain sorting,
indexing, and tallying, so they stay an independent check.
"""


def oracle_tertiles(values):
    """Nearest-rank tertile cut points: sort, then index."""
    v = sorted(values)
    n = len(v)
    return v[(n - 1) // 3], v[(2 * (n - 1)) // 3]


def oracle_bin(x, t1, t2):
    if x <= t1:
        return 0
    if x <= t2:
        return 1
    return 2


def oracle_gini(labels):
    n = len(labels)
    if n == 0:
        return 0.0
    p = sum(labels) / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def oracle_stump_gain(column, labels, t):
    """Gini gain of bin>t computed by direct tallying."""
    n = len(labels)
    parent = oracle_gini(labels)
    left = [y for x, y in zip(column, labels) if x <= t]
    right = [y for x, y in zip(column, labels) if x > t]
    weighted = 0.0
    for side in (left, right):
        if side:
            weighted += len(side) / n * oracle_gini(side)
    return max(parent - weighted, 0.0)


def oracle_best_stump(X, labels):
    """Exhaustive best (feature, t) by gini gain, ties to lowest (f, t)."""
    best = None
    best_gain = 0.0
    for f in range(len(X[0])):
        column = [row[f] for row in X]
        for t in (0, 1):
            gain = oracle_stump_gain(column, labels, t)
            if gain > best_gain:
                best_gain, best = gain, (f, t)
    return best, best_gain


def oracle_accuracy_tally(preds, actuals):
    """(overall, per-class accuracy dict, per-class proportion dict)."""
    n = len(preds)
    correct = sum(1 for p, a in zip(preds, actuals) if p == a)
    per_acc, per_prop = {}, {}
    for cls in (True, False):
        group = [(p, a) for p, a in zip(preds, actuals) if a is cls]
        per_prop[cls] = len(group) / n
        per_acc[cls] = (
            sum(1 for p, a in group if p == a) / len(group) if group else None
        )
    return correct / n, per_acc, per_prop


def realized_paths(spec, answers):
    """Per tree: (internal-node count, distinct features) along the traversal.

    A path may test one feature twice (e.g. >0 then >1), so the distinct
    set is what bounds the question count.
    """
    out = []
    for tree in spec.trees:
        node, depth, feats = tree, 0, set()
        while not node.is_leaf:
            feature = spec.question_by_id[node.question_id].feature
            depth += 1
            feats.add(feature)
            node = node.right if answers.get(feature, 0) > node.threshold else node.left
        out.append((depth, feats))
    return out
