#!/usr/bin/env python3
"""Brute-force reference values frozen into the unit tests.

Everything here is computed from dense arrays with no shared code, so it
checks the sparse estimators rather than restating them. Run it and paste
the printed numbers when an expected value has to change.
"""
import itertools
import math


def closed_form_lambda(counts):
    n = sum(counts)
    cells = len(counts)
    theta = [c / n for c in counts]
    t = 1.0 / cells
    num = 1.0 - sum(v * v for v in theta)
    den = (n - 1) * sum((t - v) ** 2 for v in theta)
    if den == 0.0:
        return 1.0
    return min(1.0, max(0.0, num / den))


def shrunk(counts, lam):
    n = sum(counts)
    cells = len(counts)
    return [lam / cells + (1 - lam) * c / n for c in counts]


def entropy(p):
    return -sum(v * math.log(v) for v in p if v > 0)


def cv_lambda(counts, folds=10):
    n = sum(counts)
    cells = len(counts)
    fold = [[0] * cells for _ in range(folds)]
    k = 0
    for i, c in enumerate(counts):
        for _ in range(c):
            fold[k][i] += 1
            k = (k + 1) % folds
    best, best_loss = 0.0, float("inf")
    for g in range(21):
        lam = g / 20
        loss = 0.0
        for f in range(folds):
            held_n = sum(fold[f])
            train_n = n - held_n
            for i in range(cells):
                h = fold[f][i]
                if h == 0:
                    continue
                q = lam / cells + (1 - lam) * (counts[i] - h) / train_n
                if q <= 0:
                    loss = float("inf")
                    break
                loss -= h * math.log(q)
            if loss == float("inf"):
                break
        if loss < best_loss:
            best_loss, best = loss, lam
    return best


def marginal(joint, dims, keep):
    out = {}
    for idx in itertools.product(*[range(d) for d in dims]):
        key = tuple(idx[a] for a in keep)
        out[key] = out.get(key, 0.0) + joint[idx]
    return list(out.values())


def cmi(columns, dims, a, b, c, lam_mode):
    """I(A;B|C) from a dense joint over `columns`, shrunk once toward uniform."""
    n = len(columns[0])
    counts = {}
    for idx in itertools.product(*[range(d) for d in dims]):
        counts[idx] = 0
    for j in range(n):
        counts[tuple(col[j] for col in columns)] += 1
    flat = list(counts.values())
    lam = closed_form_lambda(flat) if lam_mode == "closed" else lam_mode
    cells = len(flat)
    joint = {k: lam / cells + (1 - lam) * v / n for k, v in counts.items()}
    h = lambda axes: entropy(marginal(joint, dims, axes)) if axes else 0.0
    return h(a + c) + h(b + c) - h(a + b + c) - h(c), lam


def directed_information(x, y, p, k, lam_mode):
    total = 0.0
    for m in range(len(x)):
        L = min(k, m)
        cols = [x[f] for f in range(m - L, m + 1)] + [y[m]] + [y[f] for f in range(m - L, m)]
        na = L + 1
        dims = [p] * len(cols)
        a = list(range(na))
        b = [na]
        c = list(range(na + 1, len(cols)))
        v, _ = cmi(cols, dims, a, b, c, lam_mode)
        total += v
    return total


if __name__ == "__main__":
    counts = [5, 3, 2, 0]
    lam = closed_form_lambda(counts)
    print("lambda [5,3,2,0]", repr(lam))
    print("shrunk entropy [5,3,2,0]", repr(entropy(shrunk(counts, lam))))
    print("ml entropy [5,3,2,0]", repr(entropy(shrunk(counts, 0.0))))
    print("cv lambda [5,3,2,0]", repr(cv_lambda(counts)))
    print("cv lambda [40,1,1,1,1,1,1,1,1,1,1]", repr(cv_lambda([40] + [1] * 10)))

    # 12 paired realizations over p = 2 for the di_step check.
    x = [0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0]
    yn = [0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0]
    yp = [1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1]
    v, l = cmi([x, yn, yp], [2, 2, 2], [0], [1], [2], "closed")
    print("di_step closed", repr(v), "lambda", repr(l))
    v, l = cmi([x, yn, yp], [2, 2, 2], [0], [1], [2], 0.0)
    print("di_step ml", repr(v))
    v, l = cmi([x, yn, yp], [2, 2, 2], [0], [1], [2], 0.3)
    print("di_step fixed 0.3", repr(v))

    # Three frames, eight realizations, p = 3.
    X = [[0, 1, 2, 0, 1, 2, 0, 1], [1, 1, 0, 2, 2, 0, 1, 0], [2, 0, 1, 1, 0, 2, 2, 1]]
    Y = [[0, 0, 1, 2, 1, 2, 0, 1], [0, 1, 2, 0, 1, 2, 0, 1], [1, 1, 0, 2, 2, 0, 1, 0]]
    for k in (0, 1, 2):
        print("DI k=%d closed" % k, repr(directed_information(X, Y, 3, k, "closed")))
        print("DI k=%d ml" % k, repr(directed_information(X, Y, 3, k, 0.0)))
        print("DI k=%d fixed 0.3" % k, repr(directed_information(X, Y, 3, k, 0.3)))
