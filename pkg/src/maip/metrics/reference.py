"""Loop-based metric implementations used to cross-check the vectorized ones."""

import math

from .quality import C1, C2, gaussian_window


def mssim_naive(pred, truth, window=None):
    w = gaussian_window() if window is None else window
    k = len(w)
    h, wd = len(pred), len(pred[0])
    total, count = 0.0, 0
    for i in range(h - k + 1):
        for j in range(wd - k + 1):
            mp = mg = 0.0
            for a in range(k):
                for b in range(k):
                    mp += w[a][b] * pred[i + a][j + b]
                    mg += w[a][b] * truth[i + a][j + b]
            vp = vg = cov = 0.0
            for a in range(k):
                for b in range(k):
                    dp = pred[i + a][j + b] - mp
                    dg = truth[i + a][j + b] - mg
                    vp += w[a][b] * dp * dp
                    vg += w[a][b] * dg * dg
                    cov += w[a][b] * dp * dg
            total += ((2 * mp * mg + C1) * (2 * cov + C2)) / ((mp * mp + mg * mg + C1) * (vp + vg + C2))
            count += 1
    return total / count


def cc_naive(pred, truth):
    flat_p = [v for row in pred for v in row]
    flat_g = [v for row in truth for v in row]
    n = len(flat_p)
    mp = sum(flat_p) / n
    mg = sum(flat_g) / n
    num = sum((p - mp) * (g - mg) for p, g in zip(flat_p, flat_g))
    sp = math.sqrt(sum((p - mp) ** 2 for p in flat_p))
    sg = math.sqrt(sum((g - mg) ** 2 for g in flat_g))
    return num / (sp * sg)
