"""Independent references for the curve areas."""

from scipy.integrate import quad


def roc_by_pairs(pos, neg):
    """Fraction of (positive, negative) pairs ranked correctly, ties count half."""
    good = 0.0
    for p in pos:
        for n in neg:
            good += 1.0 if p > n else 0.5 if p == n else 0.0
    return good / (len(pos) * len(neg))


def pr_by_thresholds(pos, neg):
    """PR area from every threshold, interpolating true/false positives linearly
    between consecutive thresholds and integrating precision over recall numerically."""
    thresholds = sorted(set(pos) | set(neg), reverse=True)
    counts = [(0, 0)]
    for t in thresholds:
        counts.append((sum(1 for p in pos if p >= t), sum(1 for n in neg if n >= t)))
    area = 0.0
    for (tp0, fp0), (tp1, fp1) in zip(counts, counts[1:]):
        if tp1 == tp0:
            continue
        slope = (fp1 - fp0) / (tp1 - tp0)

        def precision(x):
            fp = fp0 + slope * (x - tp0)
            return x / (x + fp) if x + fp > 0 else 0.0

        if tp0 + fp0 == 0:
            # precision is constant, 1 / (1 + slope), along a segment from the origin
            val = (tp1 - tp0) / (1.0 + slope)
        else:
            val, _ = quad(precision, tp0, tp1, epsabs=1e-13, epsrel=1e-13)
        area += val / len(pos)
    return area
