"""Independent brute-force reimplementations used as test oracles.

Everything here is deliberately naive pure Python (loops over ``math``
floats, no numpy vectorization) and written directly from the strategy
definitions, so it shares no code path with the package under test.
"""

from __future__ import annotations

import math

LOG_EPS = 1e-12


def entropy(row) -> float:
    return -sum(p * math.log(max(p, LOG_EPS)) for p in row)


def top_b(scores, b):
    """Positions of the b largest scores, ties toward the lower position."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return order[:b]


def brute_entropy_select(probs, b):
    return top_b([entropy(row) for row in probs], b)


def sqdist(a, b) -> float:
    return sum((x - y) * (x - y) for x, y in zip(a, b))


def brute_coreset_select(cand, labeled, b):
    """Greedy k-center: start from the labeled centers, repeatedly take the
    candidate farthest from its nearest center."""
    centers = [list(row) for row in labeled]
    chosen = []
    for _ in range(b):
        best, best_d = None, -1.0
        for i, row in enumerate(cand):
            if i in chosen:
                continue
            d = min(sqdist(row, c) for c in centers)
            if d > best_d:
                best, best_d = i, d
        chosen.append(best)
        centers.append(list(cand[best]))
    return chosen


def kl(p, q) -> float:
    return sum(pi * (math.log(max(pi, LOG_EPS)) - math.log(max(qi, LOG_EPS))) for pi, qi in zip(p, q))


def brute_cal_select(cand_emb, lab_emb, cand_probs, lab_probs, b, k):
    kp = min(k, len(lab_emb))
    scores = []
    for i, emb in enumerate(cand_emb):
        dists = [(sqdist(emb, lab_emb[j]), j) for j in range(len(lab_emb))]
        dists.sort()  # ties resolve toward the lower labeled index
        total = 0.0
        for d, j in dists[:kp]:
            total += kl(lab_probs[j], cand_probs[i])
        scores.append(total / kp)
    return top_b(scores, b)


def pseudo_label_loss(weights, bias, x, pseudo) -> float:
    """Cross-entropy of softmax(Wx + b) at a fixed pseudo-label."""
    logits = [sum(w * xi for w, xi in zip(row, x)) + bb for row, bb in zip(weights, bias)]
    m = max(logits)
    exps = [math.exp(v - m) for v in logits]
    z = sum(exps)
    return -math.log(exps[pseudo] / z)


def finite_diff_grad(weights, bias, x, pseudo, step=1e-4):
    """Central finite differences of the pseudo-label loss, flattened
    class-major as [w_{c,0..D-1}, b_c] per class."""
    c = len(weights)
    d = len(weights[0])
    grad = []
    for ci in range(c):
        for di in range(d):
            wp = [row[:] for row in weights]
            wm = [row[:] for row in weights]
            wp[ci][di] += step
            wm[ci][di] -= step
            grad.append(
                (pseudo_label_loss(wp, bias, x, pseudo) - pseudo_label_loss(wm, bias, x, pseudo))
                / (2 * step)
            )
        bp = bias[:]
        bm = bias[:]
        bp[ci] += step
        bm[ci] -= step
        grad.append(
            (pseudo_label_loss(weights, bp, x, pseudo) - pseudo_label_loss(weights, bm, x, pseudo))
            / (2 * step)
        )
    # reorder from per-class [w..., b] blocks -- already class-major
    return grad


def kmeanspp_exact_distribution(points, b):
    """Exact probability of every ordered selection of length b.

    Mirrors the seeding semantics under test: mass proportional to the
    squared distance to the nearest chosen point, with the origin always
    counted as a center; uniform over the remainder when all masses are 0.
    """
    n = len(points)
    origin = [0.0] * len(points[0])

    def mass(i, chosen):
        d = sqdist(points[i], origin)
        for j in chosen:
            d = min(d, sqdist(points[i], points[j]))
        return d

    outcomes = {}

    def recurse(chosen, prob):
        if len(chosen) == b:
            outcomes[tuple(chosen)] = outcomes.get(tuple(chosen), 0.0) + prob
            return
        remaining = [i for i in range(n) if i not in chosen]
        masses = [mass(i, chosen) for i in remaining]
        total = sum(masses)
        if total <= 0.0:
            for i in remaining:
                recurse(chosen + [i], prob / len(remaining))
        else:
            for i, m in zip(remaining, masses):
                if m > 0.0:
                    recurse(chosen + [i], prob * m / total)

    recurse([], 1.0)
    return outcomes
